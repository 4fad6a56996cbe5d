"""
TDCIS Core Module.

Contains the numerical machinery: phase-space points, exactly differentiated
fields, Poisson brackets, flows, verification, action-angle charts and the
built-in systems.
"""

# Lazy imports to avoid circular dependencies
__all__ = [
    # Points and fields
    "PhasePoint",
    "ExtendedPoint",
    "TangentVector",
    "ScalarField",
    "Gradient",
    "TDSystem",
    # Brackets and vector fields
    "poisson_v",
    "poisson_t",
    "gamma_h",
    "gamma_t",
    "lift_hamiltonian",
    "section_h_r",
    # Flows
    "StepControl",
    "Trajectory",
    "integrate",
    "initial_data_projection",
    "slice_flow",
    # Errors
    "TDCISError",
]
