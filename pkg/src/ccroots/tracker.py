"""All-roots polynomial homotopy continuation.

The target system F is deformed into a total-degree start system
G_i = x_i^{d_i} - 1 through H(x, lam) = (1 - lam) F(x) + gamma lam G(x),
tracked from lam = 1 to lam = 0 along every start root.  A random complex
gamma on the unit circle makes the paths smooth away from lam = 0 with
probability one; endpoints are polished against F itself and merged into
distinct solutions with multiplicities.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .ccpoly import Polynomial, PolynomialSystem, poly_from_json_terms

_MAX_PATHS = 1_000_000


class PathBudgetError(ValueError):
    """Start-system size exceeds the tracking budget."""


@dataclass(frozen=True)
class TrackOptions:
    """Continuation controls; defaults suit the desk-scale bundled models."""

    step_init: float = 0.05
    step_min: float = 1e-9
    step_max: float = 0.1
    corrector_tol: float = 1e-10
    corrector_max_iters: int = 5
    divergence_norm: float = 1e8
    at_infinity_norm: float = 1e4
    endgame_growth: float = 10.0
    endgame_start: float = 0.01
    endgame_factor: float = 0.5
    endpoint_lambda: float = 1e-12
    refine_tol: float = 1e-12
    refine_max_iters: int = 50
    dedupe_radius: float = 1e-6
    real_tol: float = 1e-8
    rng_seed: int = 0
    workers: int = 1
    max_steps: int = 20000
    record_trace: bool = False


@dataclass
class PathResult:
    index: int
    status: str                 # converged | clustered | diverged | failed
    x: np.ndarray
    lambda_reached: float
    steps: int
    residual: float
    trace: list | None = None   # accepted (lam, x) samples when recorded


@dataclass
class Solution:
    x: np.ndarray
    path_index: int
    multiplicity: int
    is_real: bool
    residual: float
    energy: complex | None


@dataclass
class SolutionSet:
    system: PolynomialSystem
    options: TrackOptions
    gamma: complex
    n_paths: int
    paths: list
    solutions: list

    def status_counts(self) -> dict:
        counts = {"converged": 0, "clustered": 0, "diverged": 0, "failed": 0}
        for p in self.paths:
            counts[p.status] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "variables": list(self.system.var_names),
            "metadata": self.system.metadata,
            "gamma": [self.gamma.real, self.gamma.imag],
            "seed": self.options.rng_seed,
            # execution-only knobs (worker count, trace recording) do not
            # affect the mathematics and are kept out of the artifact
            "options": {k: v for k, v in asdict(self.options).items()
                        if k not in ("workers", "record_trace")},
            "degrees": [int(d) for d in self.system.degrees()],
            "bound_used": self.n_paths,
            "n_paths": self.n_paths,
            "status_counts": self.status_counts(),
            "solutions": [
                {
                    "x": [[float(v.real), float(v.imag)] for v in s.x],
                    "path": s.path_index,
                    "multiplicity": s.multiplicity,
                    "is_real": s.is_real,
                    "residual": float(s.residual),
                    "energy": (None if s.energy is None
                               else [s.energy.real, s.energy.imag]),
                }
                for s in self.solutions
            ],
        }


def gamma_from_seed(seed: int) -> complex:
    """Deterministic random point on the unit circle."""
    u = np.random.default_rng(seed).uniform()
    return complex(np.exp(2j * np.pi * u))


def start_root(degrees, path_index: int) -> np.ndarray:
    """Root of the total-degree start system for one path, mixed-radix order."""
    x = np.empty(len(degrees), dtype=complex)
    p = path_index
    for i, d in enumerate(degrees):
        p, r = divmod(p, d)
        x[i] = np.exp(2j * np.pi * r / d)
    return x


def _start_values(x, degrees):
    return x ** degrees - 1.0


def _start_jacobian(x, degrees):
    return np.diag(degrees * x ** (degrees - 1))


def newton_refine(system: PolynomialSystem, x, tol: float = 1e-12,
                  max_iters: int = 50):
    """Polish x against the system; returns (x, converged, iterations, residual).

    Performs zero iterations when x already satisfies the tolerance.  Near a
    multiple root convergence is linear, hence the generous iteration budget.
    """
    x = np.asarray(x, dtype=complex).copy()
    for it in range(max_iters + 1):
        r = system.evaluate(x)
        res = float(np.abs(r).max())
        if res <= tol * max(1.0, float(np.abs(x).max())):
            return x, True, it, res
        if it == max_iters:
            break
        J = system.jacobian(x)
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(delta)):
            break
        x = x + delta
    r = system.evaluate(x)
    return x, False, max_iters, float(np.abs(r).max())


def track_path(system: PolynomialSystem, degrees: np.ndarray, path_index: int,
               gamma: complex, options: TrackOptions) -> PathResult:
    """Track one start root from lam = 1 to 0 and polish the endpoint."""
    x = start_root(degrees, path_index)
    lam = 1.0
    step = options.step_init
    successes = 0
    n_steps = 0
    trace = [(lam, x.copy())] if options.record_trace else None

    def h_and_jac(xv, lv):
        f = system.evaluate(xv)
        g = _start_values(xv, degrees)
        h = (1.0 - lv) * f + gamma * lv * g
        J = (1.0 - lv) * system.jacobian(xv) + gamma * lv * _start_jacobian(xv, degrees)
        return h, J, f, g

    norm_at_endgame = None

    def stalled(status_if_finite):
        # paths escaping to infinity grow like a (possibly small) negative
        # power of lam, so a hard norm threshold alone cannot classify them;
        # sustained growth across the endgame's thousandfold lam reduction is
        # the reliable sign
        nx = float(np.abs(x).max())
        if nx > options.at_infinity_norm:
            return "diverged"
        if norm_at_endgame is not None and nx > options.endgame_growth * max(
                1.0, norm_at_endgame):
            return "diverged"
        return status_if_finite

    def finish(from_stall=False):
        nonlocal x
        if stalled("endpoint") == "diverged":
            return PathResult(path_index, "diverged", x, lam, n_steps, math.inf, trace)
        x_before = x
        x, converged, _, res = newton_refine(system, x, options.refine_tol,
                                             options.refine_max_iters)
        if not np.all(np.isfinite(x)) or float(np.abs(x).max()) > options.divergence_norm:
            return PathResult(path_index, "diverged", x, lam, n_steps, math.inf, trace)
        if from_stall and converged:
            # a stalled path is only polished in place; a polish that travels
            # a macroscopic distance has jumped into another path's basin and
            # must not claim that root (it would inflate its multiplicity)
            moved = float(np.abs(x - x_before).max())
            if moved > 0.05 * max(1.0, float(np.abs(x_before).max())):
                converged = False
        status = "converged" if converged else "failed"
        if trace is not None:
            if trace[-1][0] == 0.0:
                trace[-1] = (0.0, x.copy())
            else:
                trace.append((0.0, x.copy()))
        return PathResult(path_index, status, x, lam, n_steps, res, trace)

    while lam > options.endpoint_lambda:
        n_steps += 1
        if n_steps > options.max_steps:
            return PathResult(path_index, stalled("failed"), x, lam, n_steps, math.inf,
                              trace)
        dlam = min(step, lam)
        if lam <= options.endgame_start:
            dlam = min(dlam, lam * (1.0 - options.endgame_factor))
        elif lam - dlam < options.endgame_start:
            # never leap over the endgame region: land on its boundary so the
            # geometric shrink above takes over (a single stride to lam = 0
            # degenerates into an unguided Newton run on the target system,
            # which can hop between basins)
            dlam = lam - options.endgame_start
        lam_next = lam - dlam
        ok = False
        try:
            _, J, f, g = h_and_jac(x, lam)
            # Davidenko predictor: J dx/dlam = -(dH/dlam) = f - gamma*g
            dxdlam = np.linalg.solve(J, f - gamma * g)
            x_pred = x + dxdlam * (lam_next - lam)
            xc = x_pred
            for _ in range(options.corrector_max_iters):
                h, J, _, _ = h_and_jac(xc, lam_next)
                delta = np.linalg.solve(J, -h)
                xc = xc + delta
                if float(np.abs(delta).max()) <= options.corrector_tol * max(
                        1.0, float(np.abs(xc).max())):
                    ok = True
                    break
        except np.linalg.LinAlgError:
            ok = False
        if ok and np.all(np.isfinite(xc)):
            x = xc
            lam = lam_next
            if trace is not None:
                trace.append((lam, x.copy()))
            if norm_at_endgame is None and lam <= options.endgame_start:
                norm_at_endgame = float(np.abs(x).max())
            successes += 1
            if successes >= 3:
                step = min(step * 1.5, options.step_max)
                successes = 0
        else:
            step *= 0.5
            successes = 0
            if step < options.step_min:
                if lam <= options.endgame_start:
                    # near-singular endings (multiple roots) stall the fixed
                    # corrector budget; the endpoint polish decides whether
                    # the path actually arrived
                    return finish(from_stall=True)
                return PathResult(path_index, stalled("failed"), x, lam, n_steps, math.inf,
                                  trace)
        if float(np.abs(x).max()) > options.divergence_norm:
            return PathResult(path_index, "diverged", x, lam, n_steps, math.inf, trace)

    return finish()


def _solution_sort_key(sol: Solution):
    return tuple(v for xi in sol.x for v in (round(xi.real, 8), round(xi.imag, 8)))


def solve_all(system: PolynomialSystem, options: TrackOptions | None = None) -> SolutionSet:
    """Track every total-degree path of the system and merge the endpoints.

    The number of paths is the product of the actual equation degrees.  Every
    path is accounted for: converged endpoints are deduplicated within
    `dedupe_radius` (max norm); non-representative members of a cluster are
    relabelled "clustered" and counted in the representative's multiplicity.
    Results are deterministic for a fixed seed, independent of `workers`.
    """
    options = options or TrackOptions()
    degrees = np.array(system.degrees(), dtype=np.int64)
    if system.n_eqs != system.n_vars:
        raise ValueError(
            f"square system required: {system.n_eqs} equations, {system.n_vars} variables")
    if np.any(degrees < 1):
        raise ValueError("every equation must have degree >= 1 for a total-degree start")
    n_paths = int(np.prod([int(d) for d in degrees], dtype=object))
    if n_paths > _MAX_PATHS:
        raise PathBudgetError(
            f"{n_paths} start paths exceed the tracking budget {_MAX_PATHS}")
    gamma = gamma_from_seed(options.rng_seed)

    def run(idx):
        return track_path(system, degrees, idx, gamma, options)

    if options.workers > 1:
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            paths = list(pool.map(run, range(n_paths)))
    else:
        paths = [run(i) for i in range(n_paths)]

    energy_poly = None
    if "energy" in system.metadata:
        energy_poly = poly_from_json_terms(system.metadata["energy"], system.var_names)

    solutions = []
    for p in paths:
        if p.status != "converged":
            continue
        for s in solutions:
            if float(np.abs(p.x - s.x).max()) < options.dedupe_radius:
                s.multiplicity += 1
                p.status = "clustered"
                break
        else:
            en = None if energy_poly is None else energy_poly.evaluate(p.x)
            solutions.append(Solution(
                x=p.x.copy(), path_index=p.index, multiplicity=1,
                is_real=bool(np.abs(p.x.imag).max() < options.real_tol),
                residual=p.residual, energy=en))
    solutions.sort(key=_solution_sort_key)
    return SolutionSet(system, options, gamma, n_paths, paths, solutions)
