"""Implicit time stepper with adaptive step size and redistribution.

Every step solves three symmetric 2N x 2N systems ``(A + tau*B) c = rhs``
(one per spatial component).  The step size is the largest tau that keeps
``A + tau*B`` positive definite and its spectral condition number within
a factor ``1 + epsilon`` of A's, computed from the eigenvalue extremes of
the two matrices; a hard cap ``tau_max`` is applied last.

The optional redistribution pass refits the Fourier coefficients so that
equidistant parameters become (approximately) equidistant in arclength,
which keeps long flows well conditioned.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import energy as energy_mod
from .assembly import ENERGY_KINDS, assemble, build_pair_triples, triple_geometry
from .knot import (
    DegenerateKnotError,
    FourierKnot,
    build_grid,
    default_samples,
    evaluate,
    fit_fourier,
    resample_polygon_arclength,
    save_coefficients,
)

__all__ = [
    "FlowAbortError",
    "FlowConfig",
    "FlowState",
    "adaptive_tau",
    "symmetric_eig_extremes",
    "solve_step",
    "step",
    "redistribute",
    "run_flow",
]

MAX_HALVINGS = 30


class FlowAbortError(RuntimeError):
    """The stepper could not produce an acceptable step."""


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of one gradient flow run."""

    p: float = 3.0
    energy_kind: str = "ep"
    lam: float | None = None
    m_samples: int | None = None
    steps: int = 1000
    tau_max: float = 0.01
    epsilon: float = 0.05
    redistribute_every: int = 1      # 0 disables redistribution
    initial_redistribution: bool = True
    log_every: int = 10
    frame_every: int = 500

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.energy_kind not in ENERGY_KINDS:
            raise ValueError(f"energy_kind must be one of {ENERGY_KINDS}")
        if self.energy_kind == "ep_lambda" and (self.lam is None or self.lam <= 0):
            raise ValueError("energy_kind 'ep_lambda' needs lambda > 0")
        if self.tau_max <= 0:
            raise ValueError(f"tau_max must be > 0, got {self.tau_max}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.steps < 0 or self.redistribute_every < 0:
            raise ValueError("steps and redistribute_every must be >= 0")

    def samples_for(self, knot: FourierKnot) -> int:
        m = self.m_samples if self.m_samples else default_samples(knot.n_modes)
        if m <= 2 * knot.n_modes:
            raise ValueError(
                f"grid M = {m} must exceed 2N = {2 * knot.n_modes} for an "
                f"{knot.n_modes}-mode knot (trapezoidal exactness threshold)"
            )
        return m


@dataclass(frozen=True)
class FlowState:
    """Current knot plus step counter, accumulated time and diagnostics.

    ``stage`` caches the sampled grid and pair/triple geometry of the
    current knot so consecutive steps scan the triples only once; it is
    internal and always consistent with ``knot``.
    """

    knot: FourierKnot
    step: int = 0
    time: float = 0.0
    last_tau: float = 0.0
    report: energy_mod.EnergyReport | None = None
    stage: tuple | None = field(default=None, repr=False, compare=False)


def symmetric_eig_extremes(mat: np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix."""
    vals = np.linalg.eigvalsh(mat)
    return float(vals[0]), float(vals[-1])


def adaptive_tau(eig_a: tuple[float, float], eig_b: tuple[float, float],
                 epsilon: float, tau_max: float) -> float:
    """Largest admissible step size from the eigenvalue extremes of A and B.

    With T := lb_max*la_min - (1+eps)*la_max*lb_min the rule is: if T > 0
    take eps*la_min*la_max/T, additionally capped by la_min/(-lb_min) when
    lb_max < 0; if T <= 0 any step works and tau_max is used.  The cap by
    tau_max is applied last.  The returned tau keeps A + tau*B positive
    definite with K2(A + tau*B) <= (1+eps) K2(A).
    """
    la_min, la_max = eig_a
    lb_min, lb_max = eig_b
    if la_min <= 0:
        raise ValueError(f"A must be positive definite, got min eigenvalue {la_min}")
    t = lb_max * la_min - (1.0 + epsilon) * la_max * lb_min
    if t > 0.0:
        tau = epsilon * la_min * la_max / t
        if lb_max < 0.0:
            tau = min(tau, la_min / -lb_min)
    else:
        tau = tau_max
    return min(tau, tau_max)


def solve_step(s_mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve S c_l = rhs_l for the three components via Cholesky.

    Raises ``scipy.linalg.LinAlgError`` when S is not positive definite
    (the step-size contract was violated).
    """
    factor = scipy.linalg.cho_factor(s_mat, lower=False)
    return scipy.linalg.cho_solve(factor, rhs.T).T


def _coincident_samples(points: np.ndarray) -> bool:
    dvec = points[:, None, :] - points[None, :, :]
    dn2 = np.sum(dvec * dvec, axis=2)
    np.fill_diagonal(dn2, 1.0)
    return bool(np.any(dn2 == 0.0))


def _stage_from_grid(grid):
    pt = build_pair_triples(grid)
    tg = triple_geometry(grid, pt)
    return grid, pt, tg


def _make_stage(knot: FourierKnot, m: int):
    """Sampled grid plus pair/triple geometry; one triple scan total."""
    return _stage_from_grid(build_grid(knot, m))


def _stage_report(stage, p, lam):
    grid, _, tg = stage
    return energy_mod.report(grid, p, lam, base_w3=(tg.base, tg.w3))


def step(state: FlowState, config: FlowConfig, *, defer_report: bool = False) -> FlowState:
    """One accepted implicit step, with tau halving on degenerate output.

    Assembles the system at the current knot, picks tau adaptively, and
    solves for the next coefficients.  If the resulting grid is
    degenerate the step is rejected and retried with half the step size,
    at most MAX_HALVINGS times.  ``defer_report`` skips the new state's
    energy report and stage (callers that immediately redistribute
    recompute both anyway).
    """
    knot = state.knot
    m = config.samples_for(knot)
    stage = state.stage
    if stage is None or stage[0].m_samples != m:
        stage = _make_stage(knot, m)
    grid, pt, tg = stage
    rep = state.report
    if rep is None or rep.p != config.p or rep.lam != config.lam:
        rep = energy_mod.report(grid, config.p, config.lam, base_w3=(tg.base, tg.w3))
    system = assemble(grid, config.p, config.energy_kind, config.lam, rep=rep, pt=pt, tg=tg)
    eig_a = symmetric_eig_extremes(system.a)
    eig_b = symmetric_eig_extremes(system.b)
    tau = adaptive_tau(eig_a, eig_b, config.epsilon, config.tau_max)

    for _ in range(MAX_HALVINGS + 1):
        coeffs = solve_step(system.s(tau), system.rhs)
        new_knot = FourierKnot(coeffs[:, 0::2].T, coeffs[:, 1::2].T)
        try:
            new_grid = build_grid(new_knot, m)
            if _coincident_samples(new_grid.points):
                raise DegenerateKnotError("coincident samples after step")
            new_rep = None
            new_stage = None
            if not defer_report:
                new_stage = _stage_from_grid(new_grid)
                new_rep = _stage_report(new_stage, config.p, config.lam)
        except DegenerateKnotError:
            tau *= 0.5
            continue
        return FlowState(new_knot, state.step + 1, state.time + tau, tau, new_rep, new_stage)
    raise FlowAbortError(
        f"step {state.step + 1}: no acceptable step after {MAX_HALVINGS} halvings"
    )


def redistribute(knot: FourierKnot, m_poly: int | None = None,
                 n_out: int | None = None) -> FourierKnot:
    """Refit coefficients so equidistant parameters track arclength.

    The knot is sampled into an inscribed polygon at ``m_poly`` equidistant
    parameters; points at equal arc spacing along that polygon are mapped
    back to parameter values by linear interpolation inside their edge,
    and the curve values there are refit with ``n_out`` modes.  Dropping
    the constant term puts the centroid of the new samples at the origin.
    Applied to a circle this reproduces its coefficients.
    """
    if m_poly is None:
        m_poly = default_samples(knot.n_modes)
    if n_out is None:
        n_out = knot.n_modes
    grid = build_grid(knot, m_poly)
    _, params = resample_polygon_arclength(grid.points, m_poly)
    new_points = evaluate(knot, params * (2.0 * np.pi), 0)
    return fit_fourier(new_points, n_out)


def _write_frame(out_dir: str, step_no: int, knot: FourierKnot, m: int) -> None:
    grid = build_grid(knot, m)
    path = os.path.join(out_dir, f"frame_{step_no}.xyz")
    with open(path, "w") as fh:
        for x, y, z in grid.points:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
    save_coefficients(knot, os.path.join(out_dir, f"frame_{step_no}.fcoef"))


def _log_row(state: FlowState) -> list:
    rep = state.report
    return [
        state.step,
        f"{state.time:.17g}",
        f"{state.last_tau:.17g}",
        f"{rep.length:.17g}",
        f"{rep.mp:.17g}",
        f"{rep.ep:.17g}",
        "" if rep.ep_lambda is None else f"{rep.ep_lambda:.17g}",
    ]


def run_flow(initial: FourierKnot, config: FlowConfig,
             out_dir: str | None = None, on_state=None):
    """Iterate the stepper, with redistribution, logging and frame export.

    Returns ``(final_state, rows)`` where rows are the CSV log records
    ``step,time,tau,length,mp,ep,ep_lambda``.  When ``out_dir`` is given,
    ``flow.csv``, periodic ``frame_<step>.xyz``/``.fcoef`` pairs and
    ``final.fcoef`` are written there.  ``on_state`` is called with every
    accepted state (including redistribution refreshes).
    """
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    knot = initial
    if config.initial_redistribution and config.redistribute_every:
        knot = redistribute(knot, config.samples_for(knot))

    m = config.samples_for(knot)
    stage = _make_stage(knot, m)
    state = FlowState(knot, 0, 0.0, 0.0, _stage_report(stage, config.p, config.lam), stage)

    rows = [_log_row(state)]
    if on_state:
        on_state(state)
    if out_dir is not None:
        _write_frame(out_dir, 0, state.knot, m)

    try:
        for step_no in range(1, config.steps + 1):
            redistributing = (bool(config.redistribute_every)
                              and step_no % config.redistribute_every == 0)
            state = step(state, config, defer_report=redistributing)
            if redistributing:
                new_knot = redistribute(state.knot, m)
                new_stage = _make_stage(new_knot, m)
                state = replace(
                    state,
                    knot=new_knot,
                    report=_stage_report(new_stage, config.p, config.lam),
                    stage=new_stage,
                )
            if on_state:
                on_state(state)
            if step_no % config.log_every == 0 or step_no == config.steps:
                rows.append(_log_row(state))
            if out_dir is not None and (step_no % config.frame_every == 0
                                        or step_no == config.steps):
                _write_frame(out_dir, step_no, state.knot, m)
    finally:
        # on abort the partial log and last good coefficients are retained
        if out_dir is not None:
            with open(os.path.join(out_dir, "flow.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["step", "time", "tau", "length", "mp", "ep", "ep_lambda"])
                writer.writerows(rows)
            save_coefficients(state.knot, os.path.join(out_dir, "final.fcoef"))
    return state, rows
