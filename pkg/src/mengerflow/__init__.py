"""Numerical gradient flow for integral Menger curvature of Fourier knots."""

from .geometry import dot, inv_circumradius, local_curvature, wedge
from .knot import (
    DegenerateKnotError,
    FourierKnot,
    SampleGrid,
    build_grid,
    circle,
    default_samples,
    evaluate,
    fit_fourier,
    fourier_from_polygon,
    load_coefficients,
    load_polygon,
    resample_polygon_arclength,
    save_coefficients,
    scale,
)
from .energy import (
    EnergyReport,
    diagonal_c,
    energy_ep,
    energy_ep_lambda,
    energy_mp,
    lambda_for_target_radius,
    length,
    radius_for_lambda,
    report,
    thickness,
)
from .variation import delta_ep, delta_ep_lambda, delta_length, delta_mp
from .assembly import (
    PairTriples,
    SigmaTables,
    SystemMatrices,
    assemble,
    build_pair_triples,
    build_sigma,
    build_theta,
    pair_index,
    theta_contract,
    triple_index,
)
from .flow import (
    FlowAbortError,
    FlowConfig,
    FlowState,
    adaptive_tau,
    redistribute,
    run_flow,
    solve_step,
    step,
    symmetric_eig_extremes,
)

__version__ = "0.1.0"
