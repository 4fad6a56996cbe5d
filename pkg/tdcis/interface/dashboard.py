"""
Console rendering of verification reports with rich tables.

Used by ``tdcis --pretty``. Tables go to stderr so that stdout keeps the
machine-readable summary lines.
"""

from typing import TYPE_CHECKING, Optional, Sequence

try:
    from rich import box
    from rich.console import Console
    from rich.table import Table

    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False
    if TYPE_CHECKING:
        from rich.console import Console

from tdcis.core.verify import VerifyReport


class ReportDashboard:
    """Rich tables for check reports and chart dynamics."""

    def __init__(self, console: Optional["Console"] = None):
        """
        Initialize the dashboard.

        Args:
            console: Console to print to (default: a stderr console)
        """
        self._check_rich()
        self.console = console or Console(stderr=True)

    def _check_rich(self) -> None:
        """Check if rich is available."""
        if not RICH_AVAILABLE:
            raise ImportError(
                "The 'rich' package is required for --pretty output. "
                "Install it with: pip install tdcis-toolkit[dashboard]"
            )

    def show_reports(self, reports: Sequence[VerifyReport], title: str = "Checks") -> None:
        """Display one row per report."""
        if not reports:
            self.console.print("[yellow]No checks were run.[/yellow]")
            return

        table = Table(title=title, box=box.ROUNDED, show_header=True, header_style="bold magenta")
        table.add_column("Check", style="cyan", no_wrap=True)
        table.add_column("Status", justify="center")
        table.add_column("Value", justify="right", style="white")
        table.add_column("Tolerance", justify="right", style="blue")
        table.add_column("Worst point", style="yellow")

        for report in reports:
            status = "[green]PASS[/green]" if report.passed else "[red]FAIL[/red]"
            bound = " (min)" if report.lower_bound else ""
            worst = report.worst_point.describe() if report.worst_point is not None else "-"
            table.add_row(
                report.check_name,
                status,
                f"{report.max_residual:.3e}{bound}",
                f"{report.tolerance:.1e}",
                worst,
            )

        self.console.print(table)

    def show_message(self, message: str, style: str = "bold") -> None:
        """Print a styled one-line message."""
        self.console.print(f"[{style}]{message}[/{style}]")
