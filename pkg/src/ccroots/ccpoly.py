"""Projected coupled-cluster equations as exact polynomial systems.

For amplitudes t over an excitation graph, the similarity-transformed
Hamiltonian H(t) = e^{-T} H e^{T} is evaluated through the terminating
commutator sum sum_{k<=4} (1/k!) ad_T^k(H) (exact for a two-body H), and the
projected residuals r_mu(t) = <Phi_mu| H(t) |Phi_0> are extracted as exact
polynomials of total degree <= 4.  A CCSD-type system can be rewritten as an
equivalent quadratic system on the pair-product variety by introducing one
auxiliary variable per double excitation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .excitations import AmplitudeSplit, ExcitationGraph, build_graph, excitation_matrix
from .model import ModelSpec, assemble_hamiltonian, enumerate_determinants

_BCH_ORDER = 4          # nested commutators of a two-body H vanish past this
_PRUNE_REL = 1e-14      # coefficient prune threshold, relative per equation


class QuadratizationError(RuntimeError):
    """A degree >= 3 monomial resisted rewriting through pair auxiliaries."""


# --- monomials ---------------------------------------------------------------
# A monomial is a tuple of (variable, exponent) pairs sorted by variable.

def mono_degree(mono) -> int:
    return sum(e for _, e in mono)


def mono_mul_var(mono, var):
    d = dict(mono)
    d[var] = d.get(var, 0) + 1
    return tuple(sorted(d.items()))


def mono_mul(m1, m2):
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_sort_key(mono, n_vars):
    exps = [0] * n_vars
    for v, e in mono:
        exps[v] = e
    return (mono_degree(mono), tuple(exps))


class Polynomial:
    """Sparse multivariate polynomial: monomial -> complex coefficient."""

    def __init__(self, terms: dict | None = None):
        self.terms = dict(terms) if terms else {}

    def degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def evaluate(self, x) -> complex:
        x = np.asarray(x)
        total = 0j
        for mono, c in self.terms.items():
            p = c
            for v, e in mono:
                p = p * x[v] ** e
            total += p
        return total

    def diff(self, var) -> "Polynomial":
        out = {}
        for mono, c in self.terms.items():
            d = dict(mono)
            e = d.get(var, 0)
            if not e:
                continue
            d[var] -= 1
            if d[var] == 0:
                del d[var]
            m2 = tuple(sorted(d.items()))
            out[m2] = out.get(m2, 0j) + c * e
        return Polynomial(out)

    def pruned(self, rel_tol: float = _PRUNE_REL) -> "Polynomial":
        if not self.terms:
            return Polynomial()
        cut = rel_tol * max(abs(c) for c in self.terms.values())
        return Polynomial({m: c for m, c in self.terms.items() if abs(c) > cut})

    def sorted_terms(self, n_vars: int):
        return sorted(self.terms.items(), key=lambda mc: mono_sort_key(mc[0], n_vars))

    def add_scaled(self, other: "Polynomial", factor: complex) -> None:
        if factor == 0:
            return
        for mono, c in other.terms.items():
            self.terms[mono] = self.terms.get(mono, 0j) + factor * c

    def mul(self, other: "Polynomial") -> "Polynomial":
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                out[m] = out.get(m, 0j) + c1 * c2
        return Polynomial(out)


class PolynomialSystem:
    """Square system of polynomials with named variables and metadata."""

    def __init__(self, equations: list, var_names: list, metadata: dict | None = None):
        self.equations = list(equations)
        self.var_names = list(var_names)
        self.metadata = dict(metadata or {})
        self._compiled = None

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_eqs(self) -> int:
        return len(self.equations)

    def degrees(self) -> list:
        return [eq.degree() for eq in self.equations]

    def _compile(self):
        if self._compiled is None:
            eqs = []
            nv = self.n_vars
            for eq in self.equations:
                terms = eq.sorted_terms(nv)
                nt = max(len(terms), 1)
                coeffs = np.zeros(nt, dtype=complex)
                exps = np.zeros((nt, nv), dtype=np.int64)
                for i, (mono, c) in enumerate(terms):
                    coeffs[i] = c
                    for v, e in mono:
                        exps[i, v] = e
                dcoeffs = coeffs[:, None] * exps                      # (nt, nv)
                dexps = np.maximum(exps[:, None, :] - np.eye(nv, dtype=np.int64)[None], 0)
                eqs.append((coeffs, exps, dcoeffs, dexps))
            self._compiled = eqs
        return self._compiled

    def evaluate(self, x) -> np.ndarray:
        """Evaluate at x of shape (n_vars,) or batched (..., n_vars)."""
        x = np.asarray(x, dtype=complex)
        out = np.empty(x.shape[:-1] + (self.n_eqs,), dtype=complex)
        for j, (coeffs, exps, _, _) in enumerate(self._compile()):
            powers = x[..., None, :] ** exps                          # (..., nt, nv)
            out[..., j] = powers.prod(axis=-1) @ coeffs
        return out

    def jacobian(self, x) -> np.ndarray:
        """Jacobian at x; batched like evaluate, result (..., n_eqs, n_vars)."""
        x = np.asarray(x, dtype=complex)
        out = np.empty(x.shape[:-1] + (self.n_eqs, self.n_vars), dtype=complex)
        for j, (_, _, dcoeffs, dexps) in enumerate(self._compile()):
            powers = x[..., None, None, :] ** dexps                   # (..., nt, nv, nv)
            out[..., j, :] = np.einsum("...tv,tv->...v", powers.prod(axis=-1), dcoeffs)
        return out

    # serialization: term order is graded lexicographic in the exponent vector
    def to_dict(self) -> dict:
        eqs = []
        for eq in self.equations:
            terms = []
            for mono, c in eq.sorted_terms(self.n_vars):
                terms.append([c.real, c.imag, {self.var_names[v]: e for v, e in mono}])
            eqs.append(terms)
        return {"variables": list(self.var_names), "equations": eqs,
                "metadata": self.metadata}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), indent=2, **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "PolynomialSystem":
        names = list(data["variables"])
        pos = {n: i for i, n in enumerate(names)}
        eqs = []
        for terms in data["equations"]:
            poly = {}
            for re_c, im_c, mono in terms:
                key = tuple(sorted((pos[n], int(e)) for n, e in mono.items()))
                poly[key] = poly.get(key, 0j) + complex(re_c, im_c)
            eqs.append(Polynomial(poly))
        return cls(eqs, names, data.get("metadata"))

    @classmethod
    def from_json(cls, text: str) -> "PolynomialSystem":
        return cls.from_dict(json.loads(text))


# --- evaluation workspace ----------------------------------------------------

class Workspace:
    """Matrices of one (model, graph) pair: basis, H, excitation operators."""

    def __init__(self, model: ModelSpec, graph: ExcitationGraph):
        self.model = model
        self.graph = graph
        self.basis = enumerate_determinants(model.n_so, model.n_up, model.n_dn)
        self.index = {d: i for i, d in enumerate(self.basis)}
        self.dim = len(self.basis)
        self.ref_idx = self.index[model.reference]
        self.h_op = assemble_hamiltonian(model, self.basis)
        self.H = self.h_op.csr()
        self.X = [excitation_matrix(graph, mu, self.basis).csr() for mu in graph.indices]
        self.target_idx = np.array([self.index[mu.target(model.reference)]
                                    for mu in graph.indices])
        self.n_elec = model.n_elec
        self.e0 = np.zeros(self.dim, dtype=complex)
        self.e0[self.ref_idx] = 1.0

    def t_operator(self, t) -> sp.csr_matrix:
        T = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for tk, Xk in zip(np.asarray(t, dtype=complex), self.X):
            if tk != 0:
                T = T + tk * Xk
        return T

    def expm_apply(self, T: sp.csr_matrix, v: np.ndarray) -> np.ndarray:
        """e^T v through the nilpotent series (T raises excitation rank)."""
        w = v.astype(complex)
        term = w
        for k in range(1, self.n_elec + 1):
            term = T @ term / k
            if not np.any(term):
                break
            w = w + term
        return w

    def residual_vector(self, t, path: str = "bch") -> np.ndarray:
        """Components of e^{-T} H e^{T} |ref> on the determinant basis.

        path "bch" sums the terminating nested-commutator series; "expm"
        multiplies out the nilpotent exponentials and is kept as an
        independent cross-check.
        """
        T = self.t_operator(t)
        if path == "bch":
            A = self.H
            w = A @ self.e0
            for k in range(1, _BCH_ORDER + 1):
                A = A @ T - T @ A
                if A.nnz == 0:
                    break
                w = w + A @ self.e0 / math.factorial(k)
            return w
        if path == "expm":
            u = self.expm_apply(T, self.e0)
            return self.expm_apply(-T, self.H @ u)
        raise ValueError(f"unknown path {path!r}")

    def residuals(self, t) -> np.ndarray:
        return self.residual_vector(t)[self.target_idx]

    def energy(self, t) -> complex:
        return complex(self.residual_vector(t)[self.ref_idx])

    def jacobian(self, t) -> np.ndarray:
        """Analytic d r_mu / d t_nu = <Phi_mu| e^{-T} [H, X_nu] e^{T} |ref>."""
        T = self.t_operator(t)
        u = self.expm_apply(T, self.e0)
        hu = self.H @ u
        cols = []
        for Xk in self.X:
            y = self.H @ (Xk @ u) - Xk @ hu
            cols.append(self.expm_apply(-T, y)[self.target_idx])
        return np.array(cols).T

    def ad_power_applied(self, t, order: int) -> np.ndarray:
        """ad_T^order(H) |ref> -- vanishes identically for order > 4."""
        T = self.t_operator(t)
        A = self.H
        for _ in range(order):
            A = A @ T - T @ A
        return A @ self.e0


@dataclass
class CCSystem:
    """Generated CC polynomial system plus its provenance."""

    model: ModelSpec
    graph: ExcitationGraph
    polynomials: PolynomialSystem
    energy_poly: Polynomial
    _ws: Workspace | None = field(default=None, repr=False)

    @property
    def workspace(self) -> Workspace:
        if self._ws is None:
            self._ws = Workspace(self.model, self.graph)
        return self._ws


def _workspace_of(obj) -> Workspace:
    if isinstance(obj, Workspace):
        return obj
    if isinstance(obj, CCSystem):
        return obj.workspace
    raise TypeError(f"expected CCSystem or Workspace, got {type(obj).__name__}")


def residuals(cc, t) -> np.ndarray:
    """Projected residuals <Phi_mu| e^{-T} H e^{T} |ref> in graph order."""
    return _workspace_of(cc).residuals(t)


def energy(cc, t) -> complex:
    """CC energy <ref| e^{-T} H e^{T} |ref> (includes any core energy)."""
    return _workspace_of(cc).energy(t)


def jacobian(cc, t) -> np.ndarray:
    """Analytic Jacobian of the residual map at t."""
    return _workspace_of(cc).jacobian(t)


# --- exact polynomial extraction ---------------------------------------------

def _apply_level(ws: Workspace, level: dict, k: int, sign: float, cap: int) -> dict:
    """One T-application: level_k = sign * T(level_{k-1}) / k, degree-capped."""
    out = {}
    for mono, vec in level.items():
        if mono_degree(mono) >= cap:
            continue
        for nu, Xk in enumerate(ws.X):
            w = Xk @ vec
            if not np.any(w):
                continue
            m2 = mono_mul_var(mono, nu)
            acc = out.get(m2)
            out[m2] = (sign / k) * w if acc is None else acc + (sign / k) * w
    return {m: v for m, v in out.items() if np.any(v)}


def generate_system(model: ModelSpec, graph: ExcitationGraph) -> CCSystem:
    """Extract every projected residual as an exact polynomial in t.

    The vector-valued polynomial e^{-T} H e^{T}|ref> is expanded over
    square-free excitation subsets; monomials above total degree 4 are never
    formed, which is exact because the commutator series of a two-body H
    terminates there.  Coefficients below 1e-14 of each equation's largest
    are pruned.
    """
    ws = Workspace(model, graph)
    cap = _BCH_ORDER

    psi = {(): ws.e0.copy()}
    level = psi
    k = 1
    while level:
        level = _apply_level(ws, level, k, 1.0, cap)
        for m, v in level.items():
            psi[m] = psi.get(m, 0) + v
        k += 1

    hpsi = {}
    for m, v in psi.items():
        w = ws.H @ v
        if np.any(w):
            hpsi[m] = w
    out = dict(hpsi)
    level = hpsi
    k = 1
    while level:
        level = _apply_level(ws, level, k, -1.0, cap)
        for m, v in level.items():
            out[m] = out.get(m, 0) + v
        k += 1

    n_vars = len(graph)
    eqs = []
    for row, idx in enumerate(ws.target_idx):
        terms = {m: v[idx] for m, v in out.items() if v[idx] != 0}
        eqs.append(Polynomial(terms).pruned())
    energy_terms = {m: v[ws.ref_idx] for m, v in out.items() if v[ws.ref_idx] != 0}
    energy_poly = Polynomial(energy_terms).pruned()

    names = graph.names()
    meta = {
        "kind": "cc",
        "model": model.label,
        "rank_max": graph.rank_max,
        "rank_counts": {str(r): c for r, c in sorted(graph.rank_counts().items())},
        "reference": [q for q in range(model.n_so) if model.reference >> q & 1],
        "energy": _poly_terms_for_json(energy_poly, names),
    }
    bounds = root_bounds(graph)
    meta["bounds"] = bounds.as_dict()
    system = PolynomialSystem(eqs, names, meta)
    return CCSystem(model, graph, system, energy_poly, ws)


def _poly_terms_for_json(poly: Polynomial, names: list) -> list:
    return [[c.real, c.imag, {names[v]: e for v, e in mono}]
            for mono, c in poly.sorted_terms(len(names))]


def poly_from_json_terms(terms: list, names: list) -> Polynomial:
    pos = {n: i for i, n in enumerate(names)}
    out = {}
    for re_c, im_c, mono in terms:
        key = tuple(sorted((pos[n], int(e)) for n, e in mono.items()))
        out[key] = out.get(key, 0j) + complex(re_c, im_c)
    return Polynomial(out)


# --- root-count bounds --------------------------------------------------------

@dataclass(frozen=True)
class RootBounds:
    """Exact integer bounds on the number of CC roots (multiplicity counted)."""

    n_amplitudes: int
    n_singles: int
    n_doubles: int
    bezout_total: int
    bezout_sd: int | None
    quadratic: int | None

    def as_dict(self) -> dict:
        return {"n_amplitudes": self.n_amplitudes, "n_singles": self.n_singles,
                "n_doubles": self.n_doubles, "bezout_total": str(self.bezout_total),
                "bezout_sd": None if self.bezout_sd is None else str(self.bezout_sd),
                "quadratic": None if self.quadratic is None else str(self.quadratic)}


def root_bounds(obj) -> RootBounds:
    """Bezout-type bounds: 4^K always; 3^{n_s} 4^{n_d} and 2^{n_s + 2 n_d}
    for CCSD-type graphs (exact big integers)."""
    graph = obj.graph if isinstance(obj, CCSystem) else obj
    counts = graph.rank_counts()
    k = len(graph)
    n_s = counts.get(1, 0)
    n_d = counts.get(2, 0)
    total = 4 ** k
    if set(counts) <= {1, 2}:
        return RootBounds(k, n_s, n_d, total, 3 ** n_s * 4 ** n_d, 2 ** (n_s + 2 * n_d))
    return RootBounds(k, n_s, n_d, total, None, None)


# --- quadratization ------------------------------------------------------------

class _PairBlocks:
    """Pair-minor bookkeeping for the quadratization of a CCSD-type graph.

    The auxiliary variable of the double [i,j -> a,b] (indices sorted) is

        y[i,j->a,b] = t[i->a] t[j->b] - t[i->b] t[j->a]

    where a pairing that fails to conserve spin is not a graph variable and
    contributes zero.  For a hole pair and particle pair, `block` returns the
    auxiliary plus a reference matching such that the sum of both matched
    single products equals sign * y on the lift; phases of operator products
    are read off the actual excitation matrices, so no separate sign rules
    are needed.
    """

    def __init__(self, cc: CCSystem):
        graph = cc.graph
        self.ws = cc.workspace
        counts = graph.rank_counts()
        if set(counts) != {1, 2}:
            raise QuadratizationError(
                "quadratization needs a CCSD-type graph (ranks 1 and 2)")
        self.n_s, self.n_d = counts[1], counts[2]
        self.by_hp = {(mu.holes[0], mu.particles[0]): k
                      for k, mu in enumerate(graph.indices) if mu.rank == 1}
        self.double_pos = {(mu.holes, mu.particles): k
                           for k, mu in enumerate(graph.indices) if mu.rank == 2}
        # functional form of each excitation operator: src index -> (dst, phase)
        self.xmap = []
        for Xk in self.ws.X:
            coo = Xk.tocoo()
            self.xmap.append({int(c): (int(r), int(round(v.real)))
                              for r, c, v in zip(coo.row, coo.col, coo.data)})

    def seq_phase(self, ops) -> tuple[int, int]:
        """Apply graph operators in sequence to the reference; return
        (basis index reached, accumulated phase +-1)."""
        idx, ph = self.ws.ref_idx, 1
        for k in ops:
            idx, p = self.xmap[k][idx]
            ph *= p
        return idx, ph

    def block(self, holes, particles):
        """Auxiliary of the 2x2 block, or None if no matching conserves spin.

        Returns (aux graph position, reference matching ops, sign) with
        sum over matchings m of phase(m) * product(m) = phase(ref) * sign * y
        on the lift.
        """
        (i, j), (a, b) = holes, particles
        direct = (self.by_hp.get((i, a)), self.by_hp.get((j, b)))
        crossed = (self.by_hp.get((i, b)), self.by_hp.get((j, a)))
        if None not in direct:
            kd = self.double_pos[(holes, particles)]
            return kd, direct, 1
        if None not in crossed:
            kd = self.double_pos[(holes, particles)]
            return kd, crossed, -1
        return None

    def aux_var(self, double_pos: int) -> int:
        return self.n_s + self.n_d + (double_pos - self.n_s)

    def defining_polys(self) -> list:
        out = []
        for k in sorted(self.double_pos.values()):
            mu = self.ws.graph.indices[k]
            (i, j), (a, b) = mu.holes, mu.particles
            terms = {((self.aux_var(k), 1),): 1.0 + 0j}
            d = (self.by_hp.get((i, a)), self.by_hp.get((j, b)))
            c = (self.by_hp.get((i, b)), self.by_hp.get((j, a)))
            if None not in d:
                key = tuple(sorted(((d[0], 1), (d[1], 1))))
                terms[key] = terms.get(key, 0j) - 1.0
            if None not in c:
                key = tuple(sorted(((c[0], 1), (c[1], 1))))
                terms[key] = terms.get(key, 0j) + 1.0
            out.append(Polynomial(terms))
        return out


def _pairs2(seq):
    return [((seq[i], seq[j]), tuple(x for n, x in enumerate(seq) if n not in (i, j)))
            for i in range(len(seq)) for j in range(i + 1, len(seq))]


def _wave_expansion(blocks: _PairBlocks) -> dict:
    """Coefficient of each determinant of rank <= 4 in e^T|ref>, written as a
    polynomial of degree <= 2 in the extended variables x = (t, y).

    Each rank-r coefficient is a sum over square-free excitation subsets;
    grouping the single-excitation matchings of a 2x2 block collapses them
    into one pair auxiliary (a Laplace expansion of the matching determinant
    along fixed hole rows), so the result is quadratic by construction.
    """
    ws = blocks.ws
    ref = ws.model.reference
    psi = {}
    for d_idx, det in enumerate(ws.basis):
        hol = [q for q in range(ws.model.n_so) if (ref >> q & 1) and not (det >> q & 1)]
        par = [q for q in range(ws.model.n_so) if (det >> q & 1) and not (ref >> q & 1)]
        r = len(par)
        if r > 4:
            continue
        poly = Polynomial()
        if r == 0:
            poly.terms[()] = 1.0 + 0j
        elif r == 1:
            s = blocks.by_hp.get((hol[0], par[0]))
            if s is not None:
                poly.terms[((s, 1),)] = 1.0 + 0j
        elif r == 2:
            key = (tuple(hol), tuple(par))
            kd = blocks.double_pos.get(key)
            if kd is not None:
                poly.terms[((kd, 1),)] = 1.0 + 0j
            blk = blocks.block(tuple(hol), tuple(par))
            if blk is not None:
                kd2, ops, sign = blk
                idx, ph = blocks.seq_phase(ops)
                assert idx == d_idx
                poly.terms[((blocks.aux_var(kd2), 1),)] = complex(ph * sign)
        elif r == 3:
            # single + double splits
            for i in range(3):
                for j in range(3):
                    s = blocks.by_hp.get((hol[i], par[j]))
                    if s is None:
                        continue
                    dh = tuple(x for x in hol if x != hol[i])
                    dp = tuple(x for x in par if x != par[j])
                    kd = blocks.double_pos.get((dh, dp))
                    if kd is None:
                        continue
                    idx, ph = blocks.seq_phase((s, kd))
                    assert idx == d_idx
                    m = mono_mul(((s, 1),), ((kd, 1),))
                    poly.terms[m] = poly.terms.get(m, 0j) + ph
            # three singles: expand along the smallest hole
            h1 = hol[0]
            for j in range(3):
                s = blocks.by_hp.get((h1, par[j]))
                if s is None:
                    continue
                blk = blocks.block((hol[1], hol[2]),
                                   tuple(x for x in par if x != par[j]))
                if blk is None:
                    continue
                kd, ops, sign = blk
                idx, ph = blocks.seq_phase((s,) + ops)
                assert idx == d_idx
                m = mono_mul(((s, 1),), ((blocks.aux_var(kd), 1),))
                poly.terms[m] = poly.terms.get(m, 0j) + ph * sign
        elif r == 4:
            ha, hb = (hol[0], hol[1]), (hol[2], hol[3])
            # two doubles: the block holding the smallest hole is canonical
            for j in range(1, 4):
                dh_a = (hol[0], hol[j])
                dh_b = tuple(x for x in hol[1:] if x != hol[j])
                for pa, pb in _pairs2(par):
                    ka = blocks.double_pos.get((dh_a, pa))
                    kb = blocks.double_pos.get((dh_b, pb))
                    if ka is None or kb is None:
                        continue
                    idx, ph = blocks.seq_phase((ka, kb))
                    assert idx == d_idx
                    m = mono_mul(((ka, 1),), ((kb, 1),))
                    poly.terms[m] = poly.terms.get(m, 0j) + ph
            # two singles + one double, grouped by the singles' 2x2 block
            for sh, dh in _pairs2(hol):
                for sp, dp in _pairs2(par):
                    blk = blocks.block(sh, sp)
                    kd = blocks.double_pos.get((dh, dp))
                    if blk is None or kd is None:
                        continue
                    ka, ops, sign = blk
                    idx, ph = blocks.seq_phase(ops + (kd,))
                    assert idx == d_idx
                    m = mono_mul(((blocks.aux_var(ka), 1),), ((kd, 1),))
                    poly.terms[m] = poly.terms.get(m, 0j) + ph * sign
            # four singles: Laplace expansion along the two smallest holes
            for pa, pb in _pairs2(par):
                blk_a = blocks.block(ha, pa)
                blk_b = blocks.block(hb, pb)
                if blk_a is None or blk_b is None:
                    continue
                ka, ops_a, sign_a = blk_a
                kb, ops_b, sign_b = blk_b
                idx, ph = blocks.seq_phase(ops_a + ops_b)
                assert idx == d_idx
                m = mono_mul(((blocks.aux_var(ka), 1),), ((blocks.aux_var(kb), 1),))
                poly.terms[m] = poly.terms.get(m, 0j) + ph * sign_a * sign_b
        psi[d_idx] = poly
    return psi


def quadratize(cc: CCSystem) -> PolynomialSystem:
    """Rewrite a CCSD-type system as an equivalent degree <= 2 system.

    The amplitude vector is extended by one auxiliary per double excitation,
    y[i,j->a,b] = t[i->a] t[j->b] - t[i->b] t[j->a].  In the extended
    variables the coefficient of every determinant in e^T|ref> has degree
    <= 2, so the energy-subtracted projections

        <Phi_mu| (H - E(t)) e^T |ref> = 0,   E(t) = <ref| H e^T |ref>

    form a quadratic system.  These equations generate the same polynomial
    ideal as the residuals r_mu (the change of form is an invertible
    unipotent combination), hence the same roots with the same
    multiplicities.  The n_d defining equations are appended: the output has
    n_s + 2 n_d variables and equations, all of degree <= 2.
    """
    graph = cc.graph
    blocks = _PairBlocks(cc)
    ws = cc.workspace
    psi = _wave_expansion(blocks)

    energy = Polynomial()
    row = ws.H.getrow(ws.ref_idx).tocoo()
    for d_idx, hval in zip(row.col, row.data):
        energy.add_scaled(psi[int(d_idx)], hval)

    eqs = []
    for k in range(len(graph)):
        mu_idx = int(ws.target_idx[k])
        f = Polynomial()
        row = ws.H.getrow(mu_idx).tocoo()
        for d_idx, hval in zip(row.col, row.data):
            f.add_scaled(psi[int(d_idx)], hval)
        f.add_scaled(energy.mul(psi[mu_idx]), -1.0)
        eqs.append(f.pruned())
    eqs.extend(blocks.defining_polys())

    n_s, n_d = blocks.n_s, blocks.n_d
    names = graph.names() + [graph.indices[k].name().replace("t[", "y[", 1)
                             for k in range(n_s, n_s + n_d)]
    meta = dict(cc.polynomials.metadata)
    meta["kind"] = "cc-quadratized"
    meta["n_original_vars"] = len(graph)
    meta["aux"] = {names[blocks.aux_var(k)]: graph.indices[k].name()
                   for k in range(n_s, n_s + n_d)}
    meta["energy"] = _poly_terms_for_json(energy, names)
    meta["bounds"] = root_bounds(graph).as_dict()
    return PolynomialSystem(eqs, names, meta)


def cc_system_for_rank(model: ModelSpec, rank_max: int) -> CCSystem:
    """Convenience: build the graph and generate the system in one step."""
    return generate_system(model, build_graph(model, rank_max))
