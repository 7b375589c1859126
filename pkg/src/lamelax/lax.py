"""Linear problems dPhi/du^k = A_k Phi, their zero-curvature residuals, and
transport of Phi around closed loops.

Phi is ordered (phi_1..phi_N, auxiliary components).  Every variant shares
the same skeleton: for i != k, (A_k)_{ik} = (s_i/s_k) beta_ik; row k holds
-(s_m/s_k) beta_mk and the coupling c to each auxiliary component, whose
own row holds -c.  The variants differ only in the scale factors s_i and
the couplings:

  ========== ====================== =========================================
  variant    s_i                    auxiliary couplings (row k)
  ========== ====================== =========================================
  BASE       sqrt(eps_i)            sqrt(e_a) H^a_{2,k} / s_k
  FULL       sqrt(eps_i (l + f_i))  sqrt(e_a l) H^a_{2,k}/s_k, sqrt(e_b) H^b_{1,k}/s_k
  LOCAL      sqrt(l + f_i)          none
  DARBOUX    1                      none
  CC         sqrt(eps_i)            sqrt(K2) H_k / s_k
  CC_PENCIL  sqrt(eps_i (l + f_i))  sqrt(l K2 + K1) H_k / s_k
  ========== ====================== =========================================

Ratios are always formed as sqrt(a)/sqrt(b) with principal roots.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingCurvature, MissingPencil, SpectralPole
from .expr import LAMBDA, coord, evaluate, principal_sqrt
from .fields import (ClosedForm, FDBackend, GridSpec, SymbolicBackend, fmt_point, fsqrt,
                     make_backend, partial, values_on)
from .geometry import _mul, check_frame, rotation_coefficients
from .report import fmt_complex, fmt_value
from .residuals import ProblemSpec

VARIANTS = ("BASE", "FULL", "LOCAL", "DARBOUX", "CC", "CC_PENCIL")
SPECTRAL = ("FULL", "LOCAL", "CC_PENCIL")
POLE_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class LaxConnection:
    variant: str
    problem: ProblemSpec
    backend: object
    A: list | None  # A[k][row][col]; None for a spectral fd connection awaiting lambda
    dim: int
    K1: complex = 0j
    K2: complex = 0j

    @property
    def N(self) -> int:
        return self.problem.N

    @property
    def spectral(self) -> bool:
        return self.variant in SPECTRAL


def _curvatures(variant, p: ProblemSpec, K1, K2):
    if K2 is None:
        K2 = p.nl2.curvature()
        if K2 is None:
            raise MissingCurvature(f"{variant} needs K2: give it explicitly or use the nonlocal2K shortcut")
    if K1 is None:
        K1 = p.nl1_or_empty.curvature()
        if K1 is None:
            raise MissingCurvature(f"{variant} needs K1: give it explicitly or use the nonlocal1K shortcut")
    return complex(K1), complex(K2)


def build_connection(variant: str, p: ProblemSpec, backend="symbolic", K1=None, K2=None) -> LaxConnection:
    """Matrices A_k of the requested linear problem.

    On the symbolic backend spectral variants keep lambda as a free
    variable.  A finite-difference backend without a fixed lambda yields an
    unassembled connection (A is None) that is rebuilt per lambda sample.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    if isinstance(backend, str):
        backend = make_backend(backend, p.grid)
    if variant in SPECTRAL and p.pencil is None:
        raise MissingPencil(f"{variant} needs a pencil section")
    k1, k2 = (0j, 0j)
    if variant in ("CC", "CC_PENCIL"):
        k1, k2 = _curvatures(variant, p, K1, K2)

    N, eps = p.N, p.frame.eps2
    L2, L1 = len(p.nl2.expand(p.frame.H)), len(p.nl1_or_empty.expand(p.frame.H))
    dim = N + {"BASE": L2, "FULL": L2 + L1, "CC": 1, "CC_PENCIL": 1}.get(variant, 0)
    if variant in SPECTRAL and isinstance(backend, FDBackend) and backend.fixed_lam is None:
        return LaxConnection(variant, p, backend, None, dim, k1, k2)
    beta = rotation_coefficients(p.frame, backend, dict(p.perturb))
    H = [backend.lift(h) for h in p.frame.H]
    lam = backend.lam if variant in SPECTRAL else None
    if variant in SPECTRAL:
        f = [backend.lift(fi) for fi in p.pencil.f]
        shift = [lam + fi for fi in f]

    if variant in ("BASE", "CC"):
        s = [complex(principal_sqrt(e)) for e in eps]
    elif variant == "DARBOUX":
        s = [1] * N
    elif variant == "LOCAL":
        s = [fsqrt(x) for x in shift]
    else:
        s = [fsqrt(e * x) for e, x in zip(eps, shift)]

    # couplings[a][k]: entry (k, N+a) of A_k, mirrored with a minus sign
    couplings = []
    if variant == "BASE":
        for e, hs in p.nl2.expand(p.frame.H):
            couplings.append([_mul(complex(principal_sqrt(e)), backend.lift(hs[k]), 1 / _f(s[k]))
                              for k in range(N)])
    elif variant == "FULL":
        for e, hs in p.nl2.expand(p.frame.H):
            root = fsqrt(e * lam)
            couplings.append([_mul(root, backend.lift(hs[k]), 1 / s[k]) for k in range(N)])
        for e, hs in p.nl1_or_empty.expand(p.frame.H):
            root = complex(principal_sqrt(e))
            couplings.append([_mul(root, backend.lift(hs[k]), 1 / s[k]) for k in range(N)])
    elif variant == "CC":
        root = complex(principal_sqrt(k2))
        couplings.append([_mul(root, H[k], 1 / _f(s[k])) for k in range(N)])
    elif variant == "CC_PENCIL":
        root = fsqrt(lam * k2 + k1) if not (k1 == 0 and k2 == 0) else 0
        couplings.append([_mul(root, H[k], 1 / s[k]) for k in range(N)])

    D = N + len(couplings)
    A = []
    for k in range(N):
        Ak = [[0] * D for _ in range(D)]
        for i in range(N):
            if i != k:
                Ak[i][k] = _mul(s[i], 1 / _f(s[k]), beta[i][k])
                Ak[k][i] = _mul(-1, s[i], 1 / _f(s[k]), beta[i][k])
        for a, c in enumerate(couplings):
            Ak[k][N + a] = c[k]
            Ak[N + a][k] = _mul(-1, c[k])
        A.append(Ak)
    return LaxConnection(variant, p, backend, A, dim, k1, k2)


def _f(x):
    # numbers in the sqrt tables are complex; keep 1/x well-typed for ints
    return complex(x) if isinstance(x, int) else x


# -- zero curvature ----------------------------------------------------------

def fmt_lambda(lam) -> str:
    return "none" if lam is None else fmt_complex(lam)


def _lam_key(lam):
    return (0.0, 0.0) if lam is None else (lam.real, lam.imag)


@dataclass
class CurvatureRow:
    lam: complex | None
    pair: tuple  # 1-based (k, m), k < m
    max: float
    at: tuple


@dataclass
class CurvatureReport:
    variant: str
    rows: list = field(default_factory=list)

    def max(self) -> float:
        return max((r.max for r in self.rows), default=0.0)

    def lines(self) -> list:
        rows = sorted(self.rows, key=lambda r: (_lam_key(r.lam), r.pair))
        return [f"ZC {self.variant} lambda={fmt_lambda(r.lam)} max={fmt_value(r.max)} "
                f"at={fmt_point(r.at)} pair=({r.pair[0]},{r.pair[1]})" for r in rows]


def check_spectral(c: LaxConnection, lam, grid: GridSpec) -> None:
    """SpectralPole unless |lambda + f^i| > 1e-6 at every node."""
    if not c.spectral:
        return
    for i, fi in enumerate(c.problem.pencil.f):
        vals = np.abs(values_on(SymbolicBackend().lift(fi), grid) + complex(lam))
        if np.any(vals <= POLE_MARGIN):
            node = grid.point(np.unravel_index(int(np.argmin(vals)), grid.shape))
            raise SpectralPole(f"lambda={fmt_complex(lam)} hits -f^{i + 1} at node {fmt_point(node)}")


def _matrix_values(A, grid, lam):
    return np.stack([np.stack([np.stack([values_on(x, grid, lam) for x in row]) for row in Ak])
                     for Ak in A])


def connection_values(c: LaxConnection, grid: GridSpec, lam=None):
    """(A, dA) on the grid: A[k] is D x D, dA[s][k] = d_s A_k."""
    N = c.N
    dA = [[[[partial(x, s) for x in row] for row in Ak] for Ak in c.A] for s in range(N)]
    evlam = lam if isinstance(c.backend, SymbolicBackend) else None
    A_vals = _matrix_values(c.A, grid, evlam)
    dA_vals = np.stack([_matrix_values(dAs, grid, evlam) for dAs in dA])
    return A_vals, dA_vals


def curvature_fields(c: LaxConnection, grid: GridSpec, lam=None) -> dict:
    """F_km = d_k A_m - d_m A_k + A_m A_k - A_k A_m for k < m (0-based keys)."""
    A, dA = connection_values(c, grid, lam)
    out = {}
    for k, m in itertools.combinations(range(c.N), 2):
        out[(k, m)] = (dA[k, m] - dA[m, k]
                       + np.einsum("ab...,bc...->ac...", A[m], A[k])
                       - np.einsum("ab...,bc...->ac...", A[k], A[m]))
    return out


def zero_curvature_residual(c: LaxConnection, lams, grid: GridSpec | None = None) -> CurvatureReport:
    """Max Frobenius norm of F_km over nodes, per lambda sample and pair.

    Connections without a spectral parameter are evaluated once and
    reported with lambda = None, whatever ``lams`` holds.
    """
    grid = grid or c.problem.grid
    check_frame(c.problem.frame, grid)
    report = CurvatureReport(c.variant)
    lams = [complex(x) for x in lams] if c.spectral else [None]
    for lam in lams:
        if lam is not None:
            check_spectral(c, lam, grid)
        if isinstance(c.backend, SymbolicBackend):
            fields_ = curvature_fields(c, grid, lam)
        else:
            conn = c
            if c.A is None or grid != c.problem.grid:
                backend = FDBackend(grid, lam)
                conn = build_connection(c.variant, c.problem.with_grid(grid), backend, c.K1, c.K2)
            fields_ = curvature_fields(conn, grid)
        for (k, m), F in fields_.items():
            norm = np.sqrt(np.sum(np.abs(F) ** 2, axis=(0, 1)))
            flat = int(np.argmax(norm))
            report.rows.append(CurvatureRow(lam, (k + 1, m + 1), float(norm.flat[flat]),
                                            grid.point(np.unravel_index(flat, grid.shape))))
    return report


def default_lambda_samples(p: ProblemSpec, count: int = 16, margin: float = 0.1) -> list:
    """16 real samples off [-max f, -min f] (inflated by ``margin``) plus 4 imaginary.

    Half of the real samples lie below the excluded interval, where
    lambda + f^i < 0 and every square root is on the branch cut.
    """
    if p.pencil is not None:
        vals = np.concatenate([values_on(SymbolicBackend().lift(fi), p.grid).ravel().real
                               for fi in p.pencil.f])
        lo, hi = -vals.max() - margin, -vals.min() + margin
    else:
        lo, hi = -margin, margin
    half = count // 2
    below = np.linspace(lo - 10.0, lo - 0.5, half)
    above = np.linspace(hi + 0.5, hi + 10.0, count - half)
    imag = [0.5j, 1j, 2j, 4j]
    return [complex(x) for x in below] + [complex(x) for x in above] + imag


# -- transport ---------------------------------------------------------------

def connection_at_points(c: LaxConnection, points: np.ndarray, lam=None) -> np.ndarray:
    """A_k at arbitrary points (shape (P, N)); returns (N, D, D, P)."""
    if not isinstance(c.backend, SymbolicBackend):
        raise ValueError("transport needs a closed-form connection (symbolic backend)")
    env = {coord(a).name: points[:, a] for a in range(points.shape[1])}
    if lam is not None:
        env[LAMBDA.name] = complex(lam)
    n = points.shape[0]

    def ev(x):
        if isinstance(x, ClosedForm):
            return np.broadcast_to(np.asarray(evaluate(x.expr, env), dtype=complex), (n,))
        return np.full(n, complex(x))

    return np.array([[[ev(x) for x in row] for row in Ak] for Ak in c.A])


def _check_path(c: LaxConnection, points: np.ndarray, lam) -> None:
    if not c.spectral:
        return
    env = {coord(a).name: points[:, a] for a in range(points.shape[1])}
    for i, fi in enumerate(c.problem.pencil.f):
        vals = np.abs(np.broadcast_to(evaluate(fi, env), (points.shape[0],)) + complex(lam))
        if np.any(vals <= POLE_MARGIN):
            j = int(np.argmin(vals))
            raise SpectralPole(f"lambda={fmt_complex(lam)} hits -f^{i + 1} at {fmt_point(points[j])}")


def transport(c: LaxConnection, path, lam, phi0, steps: int):
    """Integrate dPhi/dt = sum_k A_k du^k/dt Phi along a polyline with RK4.

    ``steps`` fixed steps per segment; ``phi0`` may be a vector or a matrix
    whose columns are transported together.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    if c.spectral and lam is None:
        raise ValueError(f"{c.variant} transport needs a spectral parameter")
    path = np.asarray(path, dtype=float)
    phi = np.array(phi0, dtype=complex)
    lam = None if lam is None else complex(lam)
    for p0, p1 in zip(path[:-1], path[1:]):
        delta = p1 - p0
        t = np.linspace(0.0, 1.0, 2 * steps + 1)
        pts = p0[None, :] + t[:, None] * delta[None, :]
        _check_path(c, pts, lam)
        A = connection_at_points(c, pts, lam)
        M = np.einsum("kabp,k->pab", A, delta.astype(complex))
        h = 1.0 / steps
        for n in range(steps):
            m0, mh, m1 = M[2 * n], M[2 * n + 1], M[2 * n + 2]
            k1 = m0 @ phi
            k2 = mh @ (phi + 0.5 * h * k1)
            k3 = mh @ (phi + 0.5 * h * k2)
            k4 = m1 @ (phi + h * k3)
            phi = phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return phi


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle in the (u^i, u^j) plane, 0-based axes.

    Coordinates outside the plane are held at ``base`` (defaults to the
    midpoint of the problem's box).
    """

    axes: tuple
    lower: tuple
    upper: tuple
    base: tuple | None = None

    def corners(self, grid: GridSpec) -> list:
        base = list(self.base) if self.base is not None else [
            0.5 * (lo + hi) for lo, hi, _ in grid.axes]
        (i, j), (a, c), (b, d) = self.axes, self.lower, self.upper
        pts = []
        for x, y in ((a, c), (b, c), (b, d), (a, d), (a, c)):
            p = list(base)
            p[i], p[j] = x, y
            pts.append(p)
        return pts

    def inside(self, grid: GridSpec) -> bool:
        return all(grid.axes[ax][0] <= lo and hi <= grid.axes[ax][1] and lo < hi
                   for ax, lo, hi in zip(self.axes, self.lower, self.upper))


def monodromy_defect(c: LaxConnection, rect: Rectangle, lam, steps: int, reverse: bool = False) -> float:
    """max |loop transport of the identity - identity| around ``rect``."""
    grid = c.problem.grid
    if not rect.inside(grid):
        raise ValueError("rectangle leaves the problem domain")
    path = rect.corners(grid)
    if reverse:
        path = path[::-1]
    M = transport(c, path, lam, np.eye(c.dim, dtype=complex), steps)
    return float(np.max(np.abs(M - np.eye(c.dim))))


def mono_line(variant: str, lam, steps: int, defect: float) -> str:
    return f"MONO {variant} lambda={fmt_lambda(lam)} steps={steps} defect={fmt_value(defect)}"
