"""Newton-iteration basins of attraction on a complex window.

Every pixel of the window is a Newton start; converged pixels are assigned to
a root registry that is filled in deterministic row-major scan order (or
pre-seeded, e.g. from a homotopy solution set, so colors match its root
numbering).  For multivariate systems a one-complex-dimensional slice
x = base + z * direction is scanned by Newton on the direction-projected
residual; that reduction is a heuristic diagnostic, not an all-roots method.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .ccpoly import PolynomialSystem

_DEFAULT_MAX_ITERS = 64
_DEFAULT_TOL = 1e-12
_DEFAULT_MATCH_RADIUS = 1e-6

# color palette for root indices (cycled); brightness encodes iteration count
_PALETTE = [
    (220, 60, 60),    # red
    (70, 90, 230),    # blue
    (70, 200, 90),    # green
    (230, 200, 60),   # yellow
    (200, 80, 220),   # magenta
    (70, 210, 220),   # cyan
]


class PolynomialParseError(ValueError):
    """Raised with the offending token and position for bad polynomial text."""


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<cnum>\(\s*[-+]?[\d.]+(?:[eE][-+]?\d+)?\s*[-+]\s*[\d.]+(?:[eE][-+]?\d+)?[jJ]\s*\))
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?[jJ]?)
  | (?P<var>[A-Za-z_]\w*)
  | (?P<pow>\^|\*\*)
  | (?P<mul>\*)
  | (?P<sign>[-+])
""", re.VERBOSE)


def parse_univariate(text: str):
    """Parse e.g. "z^3 - 1" or "(1+2j)*w^2 + 0.5*w" into ascending coefficients.

    Returns (coeffs, variable name); raises PolynomialParseError pointing at
    the offending token.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PolynomialParseError(
                f"unexpected character {text[pos]!r} at position {pos}")
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    if not tokens:
        raise PolynomialParseError("empty polynomial")

    var_name = None
    coeffs: dict[int, complex] = {}
    i = 0
    n = len(tokens)
    while i < n:
        sign = 1.0
        while i < n and tokens[i][0] == "sign":
            if tokens[i][1] == "-":
                sign = -sign
            i += 1
        if i >= n:
            raise PolynomialParseError("dangling sign at end of polynomial")
        coeff = complex(sign)
        exp = 0
        saw_factor = False
        expect_factor = True
        while i < n and (tokens[i][0] != "sign" or expect_factor):
            kind, tok, at = tokens[i]
            if kind in ("num", "cnum"):
                try:
                    value = complex(tok.replace(" ", "").strip("()")
                                    if kind == "cnum" else tok)
                except ValueError:
                    raise PolynomialParseError(
                        f"bad numeric literal {tok!r} at position {at}") from None
                coeff *= value
                i += 1
            elif kind == "var":
                if var_name is None:
                    var_name = tok
                elif tok != var_name:
                    raise PolynomialParseError(
                        f"second variable {tok!r} at position {at} "
                        f"(already using {var_name!r})")
                power = 1
                i += 1
                if i < n and tokens[i][0] == "pow":
                    i += 1
                    if i >= n or tokens[i][0] != "num" or not tokens[i][1].isdigit():
                        got = tokens[i][1] if i < n else "end of input"
                        raise PolynomialParseError(f"expected integer exponent, got {got!r}")
                    power = int(tokens[i][1])
                    i += 1
                exp += power
            elif kind == "mul":
                i += 1
                expect_factor = True
                continue
            else:
                raise PolynomialParseError(
                    f"unexpected token {tok!r} at position {at}")
            saw_factor = True
            expect_factor = False
        if not saw_factor:
            raise PolynomialParseError("empty term")
        coeffs[exp] = coeffs.get(exp, 0j) + coeff
    out = np.zeros(max(coeffs) + 1, dtype=complex)
    for e, c in coeffs.items():
        out[e] = c
    return out, (var_name or "z")


@dataclass
class BasinGrid:
    """Pixelwise Newton outcome on a window (row 0 = top, Im max)."""

    window: tuple               # (re_min, re_max, im_min, im_max)
    nx: int
    ny: int
    root_index: np.ndarray      # (ny, nx) int32, -1 where not converged
    iterations: np.ndarray      # (ny, nx) int32
    roots: list                 # registry, index order
    max_iters: int
    label: str = ""

    def pixel_centers(self) -> np.ndarray:
        re_min, re_max, im_min, im_max = self.window
        xs = re_min + (np.arange(self.nx) + 0.5) * (re_max - re_min) / self.nx
        ys = im_max - (np.arange(self.ny) + 0.5) * (im_max - im_min) / self.ny
        return xs[None, :] + 1j * ys[:, None]

    def root_pixel(self, z: complex):
        """Pixel (row, col) containing z, or None when outside the window."""
        re_min, re_max, im_min, im_max = self.window
        if not (re_min <= z.real <= re_max and im_min <= z.imag <= im_max):
            return None
        col = min(int((z.real - re_min) / (re_max - re_min) * self.nx), self.nx - 1)
        row = min(int((im_max - z.imag) / (im_max - im_min) * self.ny), self.ny - 1)
        return row, col


def _resolution(resolution) -> tuple:
    if isinstance(resolution, int):
        return resolution, resolution
    nx, ny = resolution
    return int(nx), int(ny)


def _registry_assign(z_final, converged, roots, match_radius):
    """Row-major scan: match converged endpoints against the registry,
    appending unseen roots, so indices do not depend on worker scheduling."""
    ny, nx = z_final.shape
    idx = np.full((ny, nx), -1, dtype=np.int32)
    for r in range(ny):
        for c in range(nx):
            if not converged[r, c]:
                continue
            z = z_final[r, c]
            for k, root in enumerate(roots):
                if abs(z - root) < match_radius:
                    idx[r, c] = k
                    break
            else:
                roots.append(complex(z))
                idx[r, c] = len(roots) - 1
    return idx


def basin_scan(poly, window, resolution, roots=None,
               max_iters: int = _DEFAULT_MAX_ITERS, tol: float = _DEFAULT_TOL,
               match_radius: float = _DEFAULT_MATCH_RADIUS,
               label: str = "") -> BasinGrid:
    """Newton basins of a univariate polynomial (ascending coefficients)."""
    coeffs = np.asarray(poly, dtype=complex)
    if coeffs.ndim != 1 or len(coeffs) < 2:
        raise ValueError("need a univariate polynomial of degree >= 1")
    dcoeffs = coeffs[1:] * np.arange(1, len(coeffs))
    desc = coeffs[::-1]
    ddesc = dcoeffs[::-1]
    nx, ny = _resolution(resolution)
    grid = BasinGrid(tuple(window), nx, ny, None, None,
                     list(map(complex, roots or [])), max_iters, label)
    z = grid.pixel_centers().copy()
    iters = np.zeros((ny, nx), dtype=np.int32)
    active = np.ones((ny, nx), dtype=bool)
    for it in range(max_iters):
        if not active.any():
            break
        za = z[active]
        fz = np.polyval(desc, za)
        dfz = np.polyval(ddesc, za)
        with np.errstate(divide="ignore", invalid="ignore"):
            dz = fz / dfz
        bad = ~np.isfinite(dz)
        dz[bad] = 0.0
        za = za - dz
        z[active] = za
        done = (np.abs(dz) <= tol * np.maximum(1.0, np.abs(za))) & ~bad
        iters_active = iters[active]
        iters_active[done] = it + 1
        iters[active] = iters_active
        mask = active.copy()
        sub = active[mask]
        sub[done] = False
        active[mask] = sub
    converged = ~active & np.isfinite(z)
    iters[~converged] = max_iters
    grid.root_index = _registry_assign(z, converged, grid.roots, match_radius)
    grid.iterations = iters
    return grid


def slice_scan(system: PolynomialSystem, base, direction, window, resolution,
               roots=None, max_iters: int = _DEFAULT_MAX_ITERS,
               tol: float = _DEFAULT_TOL,
               match_radius: float = _DEFAULT_MATCH_RADIUS,
               label: str = "") -> BasinGrid:
    """Heuristic basins of a multivariate system on a complex line.

    Newton runs on g(z) = <direction, F(base + z direction)> / |direction|^2;
    its roots need not correspond to roots of the full system.
    """
    base = np.asarray(base, dtype=complex)
    direction = np.asarray(direction, dtype=complex)
    if base.shape != (system.n_vars,) or direction.shape != (system.n_vars,):
        raise ValueError("base and direction must have one entry per variable")
    nrm2 = np.vdot(direction, direction)
    if abs(nrm2) == 0:
        raise ValueError("direction must be nonzero")
    nx, ny = _resolution(resolution)
    grid = BasinGrid(tuple(window), nx, ny, None, None,
                     list(map(complex, roots or [])), max_iters,
                     label or "slice")
    z = grid.pixel_centers().copy()
    iters = np.zeros((ny, nx), dtype=np.int32)
    active = np.ones((ny, nx), dtype=bool)
    for it in range(max_iters):
        if not active.any():
            break
        za = z[active]
        x = base[None, :] + za[:, None] * direction[None, :]
        g = (system.evaluate(x) @ direction.conj()) / nrm2
        dg = ((system.jacobian(x) @ direction) @ direction.conj()) / nrm2
        with np.errstate(divide="ignore", invalid="ignore"):
            dz = g / dg
        bad = ~np.isfinite(dz)
        dz[bad] = 0.0
        za = za - dz
        z[active] = za
        done = (np.abs(dz) <= tol * np.maximum(1.0, np.abs(za))) & ~bad
        iters_active = iters[active]
        iters_active[done] = it + 1
        iters[active] = iters_active
        mask = active.copy()
        sub = active[mask]
        sub[done] = False
        active[mask] = sub
    converged = ~active & np.isfinite(z)
    iters[~converged] = max_iters
    grid.root_index = _registry_assign(z, converged, grid.roots, match_radius)
    grid.iterations = iters
    return grid


def render_ppm(grid: BasinGrid) -> bytes:
    """Binary P6 image: hue = root index, brightness = iteration count
    (linear, fast convergence bright), black = not converged, white = pixels
    containing a registered root."""
    ny, nx = grid.ny, grid.nx
    img = np.zeros((ny, nx, 3), dtype=np.uint8)
    idx = grid.root_index
    iters = grid.iterations
    brightness = 1.0 - 0.75 * np.minimum(iters, grid.max_iters) / grid.max_iters
    for k in range(len(grid.roots)):
        color = np.array(_PALETTE[k % len(_PALETTE)], dtype=float)
        mask = idx == k
        img[mask] = (color[None, :] * brightness[mask][:, None]).astype(np.uint8)
    for root in grid.roots:
        px = grid.root_pixel(root)
        if px is not None:
            img[px[0], px[1]] = (255, 255, 255)
    header = f"P6\n{nx} {ny}\n255\n".encode()
    return header + img.tobytes()


def write_ppm(grid: BasinGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(render_ppm(grid))
