"""Homotopy between a rank-truncated cluster operator and the full one.

The amplitude vector over the full excitation graph is split at rank rho into
a low block t0 (rank <= rho) and a complementary block tp.  The coupled map

    low rows:   <Phi_mu| e^{-T0} H e^{T0} [ 1 + lam (e^{Tp} - 1) ] |ref>
    high rows:  <Phi_mu| e^{-T} H e^{T} |ref>,  T = T0 + Tp

interpolates between a triangular pair of problems at lam = 0 (the truncated
CC equations in t0 alone, then the auxiliary high-rank equations in tp) and
the full CC residuals at lam = 1: operators of rank above the bra's cannot
de-excite it, so <Phi_mu| e^{-Tp} = <Phi_mu| exactly for every low-rank mu,
which makes the lam = 1 low rows equal the full residuals.  Tracking lam
upward carries a truncated-model root to the full-model root it shadows.
"""

from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ccpoly import Workspace, generate_system
from .excitations import AmplitudeSplit, ExcitationGraph, build_graph, full_rank, split
from .model import ModelSpec, SectorError
from .oracle import sigma_min
from .tracker import TrackOptions, solve_all

log = logging.getLogger(__name__)

_ENDPOINT_TOL = 1e-8
_SIGMA_DEGENERATE_TOL = 1e-8
_OVERLAP_WARNING_TOL = 1e-8
_START_RESIDUAL_TOL = 1e-8


@dataclass
class KPState:
    """Point of the coupled map: low/high amplitude blocks at one lam."""

    amplitude_split: AmplitudeSplit
    t_low: np.ndarray
    t_high: np.ndarray
    lam: float

    def __post_init__(self):
        self.t_low = np.asarray(self.t_low, dtype=complex)
        self.t_high = np.asarray(self.t_high, dtype=complex)
        sp = self.amplitude_split
        if self.t_low.shape != (len(sp.low),) or self.t_high.shape != (len(sp.high),):
            raise SectorError("amplitude block sizes do not match the split")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")

    @classmethod
    def from_full(cls, sp: AmplitudeSplit, t: np.ndarray, lam: float) -> "KPState":
        t = np.asarray(t, dtype=complex)
        return cls(sp, t[list(sp.low)], t[list(sp.high)], lam)

    @property
    def t_full(self) -> np.ndarray:
        """Concatenation in graph order (low and high interleave by position)."""
        t = np.zeros(len(self.amplitude_split.graph), dtype=complex)
        t[list(self.amplitude_split.low)] = self.t_low
        t[list(self.amplitude_split.high)] = self.t_high
        return t

    def low_padded(self) -> np.ndarray:
        """The low block alone, zero-padded to the full graph."""
        t = np.zeros(len(self.amplitude_split.graph), dtype=complex)
        t[list(self.amplitude_split.low)] = self.t_low
        return t


@dataclass
class KPProblem:
    """Workspace plus the rank split defining the cluster homotopy."""

    model: ModelSpec
    graph: ExcitationGraph
    amplitude_split: AmplitudeSplit
    ws: Workspace

    @property
    def rho(self) -> int:
        return self.amplitude_split.rho

    @property
    def low(self) -> tuple:
        return self.amplitude_split.low

    @property
    def high(self) -> tuple:
        return self.amplitude_split.high

    def state(self, t: np.ndarray, lam: float) -> KPState:
        return KPState.from_full(self.amplitude_split, t, lam)


def kp_problem(model: ModelSpec, rho: int, rank_max: int | None = None) -> KPProblem:
    """Build the homotopy for a model, defaulting to the full-rank graph."""
    graph = build_graph(model, rank_max if rank_max is not None else full_rank(model))
    sp = split(graph, rho)
    if list(sp.low) != list(range(len(sp.low))):
        raise AssertionError("rank-major graph order expected")
    return KPProblem(model, graph, sp, Workspace(model, graph))


def _check_state(prob: KPProblem, state: KPState) -> None:
    if state.amplitude_split.graph is not prob.graph and (
            state.amplitude_split.low != prob.amplitude_split.low
            or state.amplitude_split.high != prob.amplitude_split.high):
        raise SectorError("state split does not match the problem split")


def _t_ops(prob: KPProblem, t: np.ndarray):
    t = np.asarray(t, dtype=complex)
    t0 = t.copy()
    t0[list(prob.high)] = 0.0
    tp = t - t0
    return prob.ws.t_operator(t0), prob.ws.t_operator(tp)


def _residual(prob: KPProblem, t: np.ndarray, lam: float) -> np.ndarray:
    ws = prob.ws
    T0, Tp = _t_ops(prob, t)
    v = ws.e0 + lam * (ws.expm_apply(Tp, ws.e0) - ws.e0)
    low_vec = ws.expm_apply(-T0, ws.H @ ws.expm_apply(T0, v))
    out = np.empty(len(prob.graph), dtype=complex)
    out[list(prob.low)] = low_vec[ws.target_idx[list(prob.low)]]
    if prob.high:
        full = ws.residual_vector(t)
        out[list(prob.high)] = full[ws.target_idx[list(prob.high)]]
    return out


def _jacobian(prob: KPProblem, t: np.ndarray, lam: float) -> np.ndarray:
    ws = prob.ws
    K = len(prob.graph)
    low, high = list(prob.low), list(prob.high)
    T0, Tp = _t_ops(prob, t)
    J = np.zeros((K, K), dtype=complex)

    r = ws.expm_apply(Tp, ws.e0)
    v = ws.e0 + lam * (r - ws.e0)
    p = ws.expm_apply(T0, v)
    q = ws.expm_apply(-T0, ws.H @ p)
    low_targets = ws.target_idx[low]
    low_set = set(low)
    for nu in range(K):
        Xn = ws.X[nu]
        if nu in low_set:
            col = ws.expm_apply(-T0, ws.H @ (Xn @ p)) - Xn @ q
        else:
            col = lam * ws.expm_apply(-T0, ws.H @ ws.expm_apply(T0, Xn @ r))
        J[low, nu] = col[low_targets]
    if high:
        J[high, :] = ws.jacobian(t)[high, :]
    return J


def _dlam(prob: KPProblem, t: np.ndarray) -> np.ndarray:
    ws = prob.ws
    T0, Tp = _t_ops(prob, t)
    w = ws.expm_apply(Tp, ws.e0) - ws.e0
    vec = ws.expm_apply(-T0, ws.H @ ws.expm_apply(T0, w))
    out = np.zeros(len(prob.graph), dtype=complex)
    out[list(prob.low)] = vec[ws.target_idx[list(prob.low)]]
    return out


def kp_residual(prob: KPProblem, state: KPState) -> np.ndarray:
    """Residual of the coupled map at the state, in graph order."""
    _check_state(prob, state)
    return _residual(prob, state.t_full, state.lam)


def kp_jacobian(prob: KPProblem, state: KPState) -> np.ndarray:
    """Analytic Jacobian of the coupled map with respect to the amplitudes."""
    _check_state(prob, state)
    return _jacobian(prob, state.t_full, state.lam)


def kp_dlam(prob: KPProblem, state: KPState) -> np.ndarray:
    """Derivative of the coupled map with respect to lam (high rows vanish)."""
    _check_state(prob, state)
    return _dlam(prob, state.t_full)


def _newton(fun, jac, x0, tol=1e-12, max_iters=60):
    x = np.asarray(x0, dtype=complex).copy()
    for _ in range(max_iters):
        r = fun(x)
        if float(np.abs(r).max(initial=0.0)) <= tol * max(1.0, float(np.abs(x).max(initial=0.0))):
            return x, True
        try:
            dx = np.linalg.solve(jac(x), -r)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(jac(x), -r, rcond=None)[0]
        if not np.all(np.isfinite(dx)):
            return x, False
        x = x + dx
    r = fun(x)
    return x, float(np.abs(r).max(initial=0.0)) <= tol * max(1.0, float(np.abs(x).max(initial=0.0)))


def _two_stage(prob: KPProblem, low_start: np.ndarray, high_start: np.ndarray,
               tol: float) -> np.ndarray | None:
    """Triangular lam = 0 solve: truncated equations, then auxiliary ones."""
    low, high = list(prob.low), list(prob.high)

    def low_fun(t0):
        t = np.zeros(len(prob.graph), dtype=complex)
        t[low] = t0
        return _residual(prob, t, 0.0)[low]

    def low_jac(t0):
        t = np.zeros(len(prob.graph), dtype=complex)
        t[low] = t0
        return _jacobian(prob, t, 0.0)[np.ix_(low, low)]

    t0, ok0 = _newton(low_fun, low_jac, low_start, tol)
    if not ok0:
        return None
    t = np.zeros(len(prob.graph), dtype=complex)
    t[low] = t0
    if high:
        def high_fun(tp):
            tt = t.copy()
            tt[high] = tp
            return _residual(prob, tt, 0.0)[high]

        def high_jac(tp):
            tt = t.copy()
            tt[high] = tp
            return _jacobian(prob, tt, 0.0)[np.ix_(high, high)]

        tp, okp = _newton(high_fun, high_jac, high_start, tol)
        if not okp:
            return None
        t[high] = tp
    return t


def refine_lambda0(prob: KPProblem, guess: KPState,
                   tol: float = 1e-12) -> KPState | None:
    """Two-stage lam = 0 Newton from an arbitrary start state, or None."""
    _check_state(prob, guess)
    t = _two_stage(prob, guess.t_low, guess.t_high, tol)
    return None if t is None else prob.state(t, 0.0)


def solve_lambda0(prob: KPProblem, use_homotopy_starts: bool = False,
                  tol: float = 1e-12,
                  track_options: TrackOptions | None = None) -> list:
    """All lam = 0 states reachable from the chosen stage-1 starts.

    Stage 1 solves the truncated CC equations in t0: a single Newton run
    from t0 = 0 by default, or one run from every homotopy root of the
    truncated polynomial system when `use_homotopy_starts` is set.  Stage 2
    completes each stage-1 root through the auxiliary equations (Newton in
    tp from 0; the lam = 0 high rows are square in tp once t0 is fixed).
    Distinct converged states are returned sorted by Re of the CC energy;
    per-candidate Newton failures are logged and dropped.
    """
    low = list(prob.low)
    starts = [np.zeros(len(low), dtype=complex)]
    if use_homotopy_starts:
        sub_cc = generate_system(prob.model, build_graph(prob.model, prob.rho))
        sol = solve_all(sub_cc.polynomials, track_options or TrackOptions())
        starts = [s.x for s in sol.solutions]

    states = []
    for i, s0 in enumerate(starts):
        t = _two_stage(prob, s0, np.zeros(len(prob.high), dtype=complex), tol)
        if t is None:
            log.info("lam=0 Newton failed from start %d", i)
            continue
        if any(np.abs(t - other.t_full).max(initial=0.0) < 1e-8 for other in states):
            continue
        states.append(prob.state(t, 0.0))
    states.sort(key=lambda s: (round(prob.ws.energy(s.t_full).real, 10),
                               round(prob.ws.energy(s.t_full).imag, 10)))
    return states


@dataclass
class KPTrajectory:
    """Accepted continuation samples plus the refined lam = 1 endpoint.

    `endpoint_status` is "reached_full" only when the final full-residual
    max-norm is below 1e-8; the smallest singular value of the full CC
    Jacobian at the endpoint certifies (non)degeneracy.
    """

    samples: list = field(default_factory=list)   # (lam, t_low, t_high)
    endpoint_status: str = "failed"               # reached_full | diverged | failed
    endpoint: KPState | None = None
    endpoint_residual: float = float("inf")
    endpoint_energy: complex = complex("nan")
    jacobian_sigma_min: float = float("nan")
    degenerate: bool = False
    steps: int = 0


def kp_track(prob: KPProblem, state0: KPState,
             options: TrackOptions | None = None) -> KPTrajectory:
    """Continue one lam = 0 state to lam = 1 and polish on the full residuals.

    Euler predictor on the Davidenko system, Newton corrector at fixed lam,
    adaptive step halving/growth; samples are recorded at every accepted
    step, so lam is strictly increasing across them.
    """
    _check_state(prob, state0)
    r0 = float(np.abs(_residual(prob, state0.t_full, state0.lam)).max(initial=0.0))
    if r0 > _START_RESIDUAL_TOL:
        raise ValueError(f"start state residual {r0:.3e} exceeds {_START_RESIDUAL_TOL:.0e}")

    options = options or TrackOptions()
    ws = prob.ws
    sp = prob.amplitude_split
    t = state0.t_full
    lam = float(state0.lam)
    traj = KPTrajectory(samples=[(lam, t[list(sp.low)].copy(), t[list(sp.high)].copy())])

    step = options.step_init
    successes = 0
    while lam < 1.0:
        traj.steps += 1
        if traj.steps > options.max_steps:
            return traj
        lam_next = min(lam + step, 1.0)
        ok = False
        try:
            dt = np.linalg.solve(_jacobian(prob, t, lam), -_dlam(prob, t))
            tc = t + dt * (lam_next - lam)
            for _ in range(options.corrector_max_iters):
                delta = np.linalg.solve(_jacobian(prob, tc, lam_next),
                                        -_residual(prob, tc, lam_next))
                tc = tc + delta
                if float(np.abs(delta).max(initial=0.0)) <= options.corrector_tol * max(
                        1.0, float(np.abs(tc).max(initial=0.0))):
                    ok = True
                    break
        except np.linalg.LinAlgError:
            ok = False
        if ok and np.all(np.isfinite(tc)):
            t = tc
            lam = lam_next
            traj.samples.append((lam, t[list(sp.low)].copy(), t[list(sp.high)].copy()))
            log.debug("lam=%.6f displacement from start %.3e", lam,
                      float(np.abs(t - state0.t_full).max(initial=0.0)))
            successes += 1
            if successes >= 3:
                step = min(step * 1.5, options.step_max)
                successes = 0
        else:
            step *= 0.5
            successes = 0
            if step < options.step_min:
                return traj
        if float(np.abs(t).max(initial=0.0)) > options.divergence_norm:
            traj.endpoint_status = "diverged"
            return traj

    t, _ = _newton(ws.residuals, ws.jacobian, t, options.refine_tol,
                   options.refine_max_iters)
    res = float(np.abs(ws.residuals(t)).max(initial=0.0))
    traj.endpoint = prob.state(t, 1.0)
    traj.endpoint_residual = res
    traj.endpoint_energy = ws.energy(t)
    if res < _ENDPOINT_TOL:
        traj.endpoint_status = "reached_full"
        traj.jacobian_sigma_min = sigma_min(ws.jacobian(t))
        traj.degenerate = bool(traj.jacobian_sigma_min < _SIGMA_DEGENERATE_TOL)
    return traj


def overlap(model: ModelSpec, t_a: np.ndarray, t_b: np.ndarray,
            graph_a: ExcitationGraph | None = None,
            graph_b: ExcitationGraph | None = None) -> complex:
    """Inner product of two exponentially parameterized states.

    Evaluates <e^{T(t_a)} ref | e^{T(t_b)} ref> by the finite nilpotent
    series, conjugating the left factor.  Graphs default to the full-rank
    graph of the model; both must live over the model's particle sector.
    """
    if graph_a is None and graph_b is None:
        graph_a = graph_b = build_graph(model, full_rank(model))
    elif graph_a is None:
        graph_a = build_graph(model, full_rank(model))
    elif graph_b is None:
        graph_b = build_graph(model, full_rank(model))
    t_a = np.asarray(t_a, dtype=complex)
    t_b = np.asarray(t_b, dtype=complex)
    if t_a.shape != (len(graph_a),) or t_b.shape != (len(graph_b),):
        raise SectorError("amplitude length does not match its graph")
    ws_a = Workspace(model, graph_a)
    ws_b = ws_a if graph_b is graph_a else Workspace(model, graph_b)
    ua = ws_a.expm_apply(ws_a.t_operator(t_a), ws_a.e0)
    ub = ws_b.expm_apply(ws_b.t_operator(t_b), ws_b.e0)
    return complex(np.vdot(ua, ub))


@dataclass
class EnergyErrorBundle:
    """Diagnostic comparing a lam = 0 state with a full-cluster root."""

    delta_e: complex        # E_CC(low block alone) - E_CC(t_full)
    t_perp_norm: float      # Euclidean norm of the auxiliary-equation block
    overlap: complex        # <e^{T(low block)} ref | e^{T(t_full)} ref>
    orthogonal: bool        # |overlap| below the representability tolerance

    def as_dict(self) -> dict:
        return {
            "delta_e": [self.delta_e.real, self.delta_e.imag],
            "t_perp_norm": self.t_perp_norm,
            "overlap": [self.overlap.real, self.overlap.imag],
            "orthogonal": self.orthogonal,
        }


def energy_error_bundle(prob: KPProblem, state_low: KPState,
                        t_full: np.ndarray) -> EnergyErrorBundle:
    """Truncation-energy error, auxiliary-block norm, and state overlap.

    `state_low` should solve the lam = 0 equations and `t_full` the full CC
    equations.  A (near-)zero overlap means the two exponential states are
    orthogonal — they represent different eigenstates and the energy
    difference carries no meaning — so a RuntimeWarning is emitted and the
    `orthogonal` flag set.
    """
    _check_state(prob, state_low)
    ws = prob.ws
    t_full = np.asarray(t_full, dtype=complex)
    t_low = state_low.low_padded()
    ua = ws.expm_apply(ws.t_operator(t_low), ws.e0)
    ub = ws.expm_apply(ws.t_operator(t_full), ws.e0)
    ov = complex(np.vdot(ua, ub))
    orthogonal = bool(abs(ov) < _OVERLAP_WARNING_TOL)
    if orthogonal:
        warnings.warn(
            "truncated and full cluster states are numerically orthogonal; "
            "the energy comparison is not meaningful", RuntimeWarning,
            stacklevel=2)
    return EnergyErrorBundle(
        delta_e=ws.energy(t_low) - ws.energy(t_full),
        t_perp_norm=float(np.linalg.norm(state_low.t_high)),
        overlap=ov,
        orthogonal=orthogonal,
    )


def trajectory_csv(prob: KPProblem, traj: KPTrajectory) -> str:
    """Render a trajectory as CSV.

    Columns: lam, re/im of every amplitude (graph order), the max-norm of
    the coupled-map residual, the energy of the low block alone, and the
    energy of the full amplitude vector.  The energy columns hold complex
    literals in Python syntax ("(a+bj)"), parseable with complex().
    """
    sp = prob.amplitude_split
    names = prob.graph.names()
    header = ["lambda"]
    for name in names:
        header += [f"re({name})", f"im({name})"]
    header += ["residual_norm", "energy_low", "energy_full"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for lam, t_low, t_high in traj.samples:
        state = KPState(sp, t_low, t_high, lam)
        t = state.t_full
        res = float(np.abs(_residual(prob, t, lam)).max(initial=0.0))
        e_low = complex(prob.ws.energy(state.low_padded()))
        e_full = complex(prob.ws.energy(t))
        row = [repr(lam)]
        for k in range(len(names)):
            row += [repr(t[k].real), repr(t[k].imag)]
        row += [repr(res), repr(e_low), repr(e_full)]
        writer.writerow(row)
    return buf.getvalue()
