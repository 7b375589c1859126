"""Diagonal metrics, their connections and curvature, metric pencils, and
the coefficient conditions of nonlocal hydrodynamic-type brackets.

Tensors are nested lists of fields (or plain numbers for structural zeros)
indexed 0-based in the order the indices are written: ``gamma[j][s][k]``
is the Christoffel symbol with upper index j, ``b[i][j][k]`` is
b^{ij}_k, ``riemann[i][j][k][l]`` is R^{ij}_{kl}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (DegenerateSecondMetric, PoleOnGrid, SingularCombination,
                     ZeroEigenvalue, ZeroEigenvalueGap)
from .expr import Expr, as_expr, coord, diff, evaluate, free_variables, principal_sqrt, sqrt
from .fields import (GridSpec, SymbolicBackend, fmt_point, is_zero,
                     partial, values_on)
from .report import ResidualReport, fmt_complex, fmt_value, residual_entry

SIGNS = (1, -1)
MARGIN = 1e-8


# -- data --------------------------------------------------------------------

@dataclass(frozen=True)
class LameFrame:
    """Diagonal metric ds^2 = sum eps2[i] * H[i]^2 (du^i)^2."""

    eps2: tuple
    H: tuple

    def __post_init__(self):
        object.__setattr__(self, "eps2", tuple(int(s) for s in self.eps2))
        object.__setattr__(self, "H", tuple(as_expr(h) for h in self.H))
        if len(self.H) < 2:
            raise ValueError("dimension must be at least 2")
        if len(self.eps2) != len(self.H):
            raise ValueError("need one sign per Lamé coefficient")
        if any(s not in SIGNS for s in self.eps2):
            raise ValueError("signs must be +1 or -1")

    @property
    def N(self) -> int:
        return len(self.H)

    def contravariant(self) -> list:
        """g^i = eps^i / H_i^2 as expressions."""
        return [s / (h * h) for s, h in zip(self.eps2, self.H)]


@dataclass(frozen=True)
class PencilSpec:
    """Second metric f^i(u^i) g^i of a nonsingular pair, with signs eps1."""

    f: tuple
    eps1: tuple

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(as_expr(x) for x in self.f))
        object.__setattr__(self, "eps1", tuple(int(s) for s in self.eps1))
        if len(self.f) != len(self.eps1):
            raise ValueError("need one sign per eigenvalue function")
        if any(s not in SIGNS for s in self.eps1):
            raise ValueError("signs must be +1 or -1")

    @property
    def N(self) -> int:
        return len(self.f)

    def is_single_variable(self) -> bool:
        return all(free_variables(fi) <= {coord(i).name} for i, fi in enumerate(self.f))

    def derivative(self, i: int) -> Expr:
        """(f^i)' with respect to u^i."""
        return diff(self.f[i], coord(i))


@dataclass(frozen=True)
class NonlocalSet:
    """Affinor data {eps_alpha, H^alpha_i}, or the constant-curvature shortcut K."""

    entries: tuple = ()
    K: complex | None = None

    def __post_init__(self):
        entries = tuple((int(s), tuple(as_expr(h) for h in hs)) for s, hs in self.entries)
        if any(s not in SIGNS for s, _ in entries):
            raise ValueError("nonlocal signs must be +1 or -1")
        if self.K is not None and entries:
            raise ValueError("the K shortcut excludes explicit nonlocal entries")
        object.__setattr__(self, "entries", entries)
        if self.K is not None:
            object.__setattr__(self, "K", complex(self.K))

    @property
    def L(self) -> int:
        return 1 if self.K is not None else len(self.entries)

    def expand(self, H) -> list:
        """(sign, [H^alpha_i]) pairs; the shortcut gives (+1, sqrt(K) H_i)."""
        if self.K is not None:
            root = complex(principal_sqrt(self.K))
            return [(1, [root * as_expr(h) for h in H])]
        return [(s, list(hs)) for s, hs in self.entries]

    def curvature(self):
        """Constant curvature carried by the set, if determinable."""
        if self.K is not None:
            return self.K
        if not self.entries:
            return 0j
        return None


# -- small tensor helpers ----------------------------------------------------

def _mul(*xs):
    if any(is_zero(x) for x in xs):
        return 0
    out = xs[0]
    for x in xs[1:]:
        out = out * x
    return out


def _sum(terms):
    out = 0
    for t in terms:
        if is_zero(t):
            continue
        out = t if is_zero(out) else out + t
    return out


def tensor_values(t, grid: GridSpec, lam=None) -> np.ndarray:
    """Evaluate a nested list of fields to an array; grid axes come last."""
    if isinstance(t, (list, tuple)):
        return np.stack([tensor_values(x, grid, lam) for x in t])
    return values_on(t, grid, lam)


def tensor_partials(t, N: int):
    """d[s] = partial of every entry of ``t`` along axis s."""
    def walk(x, s):
        if isinstance(x, (list, tuple)):
            return [walk(y, s) for y in x]
        return partial(x, s)
    return [walk(t, s) for s in range(N)]


def _check_nonvanishing(values: np.ndarray, grid: GridSpec, what: str, exc=PoleOnGrid):
    mag = np.abs(values)
    if np.any(mag <= MARGIN):
        index = np.unravel_index(int(np.argmin(mag)), grid.shape)
        raise exc(f"{what} vanishes at node {fmt_point(grid.point(index))}")


def check_frame(frame: LameFrame, grid: GridSpec) -> None:
    """Raise PoleOnGrid unless every |H_i| > 1e-8 at all nodes."""
    if grid.ndim != frame.N:
        raise ValueError(f"grid has {grid.ndim} axes but the frame has dimension {frame.N}")
    for i, h in enumerate(frame.H):
        _check_nonvanishing(values_on(SymbolicBackend().lift(h), grid), grid, f"H_{i + 1}")


def check_pencil(pencil: PencilSpec, grid: GridSpec) -> None:
    """Single-variable f^i, pairwise distinct with margin 1e-8 at every node."""
    if not pencil.is_single_variable():
        raise ValueError("each pencil function f^i must depend on u^i only")
    vals = [values_on(SymbolicBackend().lift(fi), grid) for fi in pencil.f]
    for i, j in itertools.combinations(range(pencil.N), 2):
        _check_nonvanishing(vals[j] - vals[i], grid, f"f^{j + 1} - f^{i + 1}", ZeroEigenvalueGap)


# -- rotation coefficients and reduction -------------------------------------

def rotation_coefficients(frame: LameFrame, backend=None, perturb=None) -> list:
    """beta[i][k] = (1/H_i) dH_k/du^i for i != k; diagonal entries are 0.

    ``perturb`` maps 0-based (i, k) pairs to expressions added on top of the
    derived value; it exists to build deliberately inconsistent data.
    """
    backend = backend or SymbolicBackend()
    H = [backend.lift(h) for h in frame.H]
    N = frame.N
    beta = [[0] * N for _ in range(N)]
    for i, k in itertools.permutations(range(N), 2):
        beta[i][k] = _mul(partial(H[k], i), 1 / H[i])
    for (i, k), extra in dict(perturb or {}).items():
        beta[i][k] = beta[i][k] + backend.lift(extra)
    return beta


def reduced_frame(frame: LameFrame, pencil: PencilSpec, backend=None, grid: GridSpec | None = None):
    """Lamé data of the metric f^i g^i: (frame with H_i / sqrt(eps1 f^i), beta~)."""
    if pencil.N != frame.N:
        raise ValueError("pencil and frame dimensions differ")
    if grid is not None:
        for i, fi in enumerate(pencil.f):
            _check_nonvanishing(values_on(SymbolicBackend().lift(fi), grid), grid, f"f^{i + 1}",
                                ZeroEigenvalue)
    roots = [sqrt(e * fi) for e, fi in zip(pencil.eps1, pencil.f)]
    tilde = LameFrame(tuple(a * b for a, b in zip(pencil.eps1, frame.eps2)),
                      tuple(h / r for h, r in zip(frame.H, roots)))
    backend = backend or SymbolicBackend()
    beta = rotation_coefficients(frame, backend)
    lifted = [backend.lift(r) for r in roots]
    N = frame.N
    beta_t = [[0] * N for _ in range(N)]
    for i, k in itertools.permutations(range(N), 2):
        beta_t[i][k] = _mul(lifted[i] / lifted[k], beta[i][k])
    return tilde, beta_t


# -- Levi-Civita connection and curvature ------------------------------------

def christoffel_diagonal(G: list, N: int) -> list:
    """Gamma^j_{sk} of the covariant diagonal metric diag(G)."""
    dG = [[partial(G[m], s) for s in range(N)] for m in range(N)]
    gamma = [[[0] * N for _ in range(N)] for _ in range(N)]
    for j, s, k in itertools.product(range(N), repeat=3):
        terms = []
        if j == k:
            terms.append(dG[j][s])
        if j == s:
            terms.append(dG[j][k])
        if s == k:
            terms.append(_mul(-1, dG[s][j]))
        total = _sum(terms)
        gamma[j][s][k] = _mul(0.5, total, 1 / G[j]) if not is_zero(total) else 0
    return gamma


def riemann_diagonal(G: list, N: int) -> list:
    """R^{ij}_{kl} = g^{jj} R^i_{jlk}, normalised so constant curvature K gives
    K (delta^i_l delta^j_k - delta^i_k delta^j_l)."""
    gam = christoffel_diagonal(G, N)
    dgam = tensor_partials(gam, N)

    def mixed(i, m, k, l):
        # R^i_{mkl} = d_k Gamma^i_{lm} - d_l Gamma^i_{km} + Gamma^i_{kp} Gamma^p_{lm} - Gamma^i_{lp} Gamma^p_{km}
        terms = [dgam[k][i][l][m], _mul(-1, dgam[l][i][k][m])]
        for p in range(N):
            terms.append(_mul(gam[i][k][p], gam[p][l][m]))
            terms.append(_mul(-1, gam[i][l][p], gam[p][k][m]))
        return _sum(terms)

    R = [[[[0] * N for _ in range(N)] for _ in range(N)] for _ in range(N)]
    for i, j, k, l in itertools.product(range(N), repeat=4):
        R[i][j][k][l] = _mul(1 / G[j], mixed(i, j, l, k))
    return R


def _covariant(frame: LameFrame, backend) -> list:
    return [backend.lift(s * h * h) for s, h in zip(frame.eps2, frame.H)]


def levi_civita(frame: LameFrame, backend=None) -> list:
    backend = backend or SymbolicBackend()
    return christoffel_diagonal(_covariant(frame, backend), frame.N)


def riemann_curvature(frame: LameFrame, backend=None) -> list:
    backend = backend or SymbolicBackend()
    return riemann_diagonal(_covariant(frame, backend), frame.N)


def contravariant_christoffel(G: list, N: int) -> list:
    """Gamma^{ij}_k = g^{is} Gamma^j_{sk} for diagonal G."""
    gam = christoffel_diagonal(G, N)
    return [[[_mul(1 / G[i], gam[j][i][k]) for k in range(N)] for j in range(N)] for i in range(N)]


# -- pencils -----------------------------------------------------------------

def pencil_eigenvalues(g1, g2, point) -> list:
    """Roots of det(g1 - lambda g2) = 0 for diagonal metrics at ``point``.

    ``g1`` and ``g2`` are the diagonal entries (expressions or numbers).
    Roots are sorted by real part, then imaginary part.
    """
    env = {coord(a).name: float(x) for a, x in enumerate(point)}
    a = [evaluate(as_expr(x), env) for x in g1]
    b = [evaluate(as_expr(x), env) for x in g2]
    if any(abs(x) == 0 for x in b):
        raise DegenerateSecondMetric(f"second metric is degenerate at {fmt_point(point)}")
    return sorted((x / y for x, y in zip(a, b)), key=lambda z: (z.real, z.imag))


def generalized_eigenvalues(G1, G2) -> list:
    """Roots of det(G1 - lambda G2) = 0 for full matrices, same ordering."""
    G2 = np.asarray(G2, dtype=complex)
    if abs(np.linalg.det(G2)) == 0:
        raise DegenerateSecondMetric("second metric is degenerate")
    roots = scipy.linalg.eigvals(np.asarray(G1, dtype=complex), G2)
    return sorted((complex(z) for z in roots), key=lambda z: (z.real, z.imag))


def is_nonsingular(roots, margin: float = MARGIN) -> bool:
    return all(abs(a - b) > margin for a, b in itertools.combinations(roots, 2))


@dataclass
class CompatibilityRow:
    lam: complex
    gamma: float
    riemann: float
    at: tuple


@dataclass
class CompatibilityReport:
    rows: list = field(default_factory=list)

    def max(self) -> float:
        return max((max(r.gamma, r.riemann) for r in self.rows), default=0.0)

    def lines(self) -> list:
        return [f"COMPAT lambda={fmt_complex(r.lam)} gamma={fmt_value(r.gamma)} "
                f"riemann={fmt_value(r.riemann)} at={fmt_point(r.at)}" for r in self.rows]


def metric_compatibility_check(frame2: LameFrame, pencil: PencilSpec, lams, grid: GridSpec,
                               backend=None) -> CompatibilityReport:
    """Linearity of Gamma^{ij}_k and R^{ij}_{kl} along g1 + lambda g2.

    g2^i = eps2^i / H_i^2 comes from ``frame2`` and g1^i = f^i g2^i.  The
    pencil is not required to be single-variable here: that is exactly what
    a failing check detects.
    """
    backend = backend or SymbolicBackend()
    N = frame2.N
    g2 = frame2.contravariant()
    g1 = [fi * gi for fi, gi in zip(pencil.f, g2)]

    def tensors(contra):
        G = [backend.lift(1 / gi) for gi in contra]
        return (tensor_values(contravariant_christoffel(G, N), grid),
                tensor_values(riemann_diagonal(G, N), grid))

    c1, r1 = tensors(g1)
    c2, r2 = tensors(g2)
    report = CompatibilityReport()
    for lam in lams:
        lam = complex(lam)
        for i, fi in enumerate(pencil.f):
            vals = values_on(SymbolicBackend().lift(fi + lam), grid)
            _check_nonvanishing(vals, grid, f"f^{i + 1} + lambda (lambda={fmt_complex(lam)})", SingularCombination)
        cc, rc = tensors([(fi + lam) * gi for fi, gi in zip(pencil.f, g2)])
        dc = np.abs(cc - c1 - lam * c2).reshape(-1, *grid.shape).max(axis=0)
        dr = np.abs(rc - r1 - lam * r2).reshape(-1, *grid.shape).max(axis=0)
        worst = np.maximum(dc, dr)
        at = grid.point(np.unravel_index(int(np.argmax(worst)), grid.shape))
        report.rows.append(CompatibilityRow(lam, float(dc.max()), float(dr.max()), at))
    return report


# -- bracket coefficients and the Lemma conditions ----------------------------

@dataclass
class BracketCoefficients:
    """g^{ij}, b^{ij}_k and affinors (w^alpha)^i_j with signs eps_alpha."""

    g: list
    b: list
    w: list = field(default_factory=list)
    eps: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.g)


def diagonal_bracket(ginv: list, affinors: list, backend) -> BracketCoefficients:
    """Bracket generated by the contravariant diagonal metric ``ginv``.

    ``affinors`` is a list of (sign, diagonal entries) pairs; b^{ij}_k is the
    Levi-Civita choice -g^{is} Gamma^j_{sk}.
    """
    N = len(ginv)
    ginv = [backend.lift(x) if isinstance(x, Expr) else x for x in ginv]
    G = [1 / x for x in ginv]
    gam = christoffel_diagonal(G, N)
    g = [[ginv[i] if i == j else 0 for j in range(N)] for i in range(N)]
    b = [[[_mul(-1, ginv[i], gam[j][i][k]) for k in range(N)] for j in range(N)] for i in range(N)]
    w, eps = [], []
    for sign, diag in affinors:
        diag = [backend.lift(x) if isinstance(x, Expr) else x for x in diag]
        w.append([[diag[i] if i == j else 0 for j in range(N)] for i in range(N)])
        eps.append(sign)
    return BracketCoefficients(g, b, w, eps)


def assemble_bracket_coefficients(frame: LameFrame, nl: NonlocalSet, backend=None) -> BracketCoefficients:
    """g^{ij} = eps^i/H_i^2 delta^{ij}, b from Levi-Civita, w^alpha = diag(H^alpha_i / H_i)."""
    backend = backend or SymbolicBackend()
    affinors = [(s, [ha / h for ha, h in zip(hs, frame.H)]) for s, hs in nl.expand(frame.H)]
    return diagonal_bracket(frame.contravariant(), affinors, backend)


def pencil_bracket(frame: LameFrame, pencil: PencilSpec, nl1: NonlocalSet | None,
                   nl2: NonlocalSet, lam, backend=None) -> BracketCoefficients:
    """Coefficients of {,}_1 + lambda {,}_2 formed term by term.

    Bracket 2 has metric g^i and affinors H^alpha_2/H; bracket 1 has metric
    f^i g^i and affinors H^beta_1/H.  The combined nonlocal tail carries the
    bracket-1 affinors and sqrt(lambda) times the bracket-2 affinors.
    """
    backend = backend or SymbolicBackend()
    lam = complex(lam)
    b2 = assemble_bracket_coefficients(frame, nl2, backend)
    g2 = frame.contravariant()
    aff1 = [(s, [ha / h for ha, h in zip(hs, frame.H)]) for s, hs in (nl1 or NonlocalSet()).expand(frame.H)]
    b1 = diagonal_bracket([fi * gi for fi, gi in zip(pencil.f, g2)], aff1, backend)
    N = frame.N

    def comb(x, y):
        return _sum([x, _mul(lam, y)])

    g = [[comb(b1.g[i][j], b2.g[i][j]) for j in range(N)] for i in range(N)]
    b = [[[comb(b1.b[i][j][k], b2.b[i][j][k]) for k in range(N)] for j in range(N)] for i in range(N)]
    root = complex(principal_sqrt(lam))
    w = list(b1.w) + [[[_mul(root, x) for x in row] for row in wa] for wa in b2.w]
    return BracketCoefficients(g, b, w, list(b1.eps) + list(b2.eps))


CONDITIONS = ("01", "02", "03", "04", "05", "06", "07")


def bracket_condition_residuals(bc: BracketCoefficients, grid: GridSpec, backend=None, lam=None,
                                normalization: str = "raw") -> ResidualReport:
    """Residuals of conditions (01)-(07) on every node.

    With ``normalization="lame"`` the (07) components are rescaled by
    h_i^2 h_j h_k, h_i = |g^{ii}|^{-1/2}: for a diagonal metric this turns the
    Gauss-equation components into the Lamé form, where a curvature mismatch
    dK shows up as dK * H_a * H_b.  It requires a diagonal metric.
    """
    backend = backend or SymbolicBackend()
    N, L = bc.N, len(bc.w)
    g = tensor_values(bc.g, grid, lam)
    dg = tensor_values(tensor_partials(bc.g, N), grid, lam)
    b = tensor_values(bc.b, grid, lam)
    db = tensor_values(tensor_partials(bc.b, N), grid, lam)
    if L:
        w = tensor_values(bc.w, grid, lam)
        dw = tensor_values(tensor_partials(bc.w, N), grid, lam)
    else:
        w = np.zeros((0, N, N) + grid.shape, dtype=complex)
        dw = np.zeros((N, 0, N, N) + grid.shape, dtype=complex)
    eps = np.asarray(bc.eps, dtype=float).reshape((L,) + (1,) * (4 + grid.ndim)) if L else 0.0

    es = np.einsum
    r = {}
    r["01"] = g - np.swapaxes(g, 0, 1)
    r["02"] = np.moveaxis(dg, 0, 2) - b - np.swapaxes(b, 0, 1)
    gb = es("is...,jks...->ijk...", g, b)
    r["03"] = gb - np.swapaxes(gb, 0, 1)
    gw = es("is...,ajs...->aij...", g, w)
    r["04"] = gw - np.swapaxes(gw, 1, 2)
    ww = es("ais...,bsj...->abij...", w, w)
    r["05"] = ww - np.swapaxes(ww, 0, 1)
    A = (es("is...,jr...,sakr...->aijk...", g, g, dw)
         - es("jr...,iks...,asr...->aijk...", g, b, w))
    r["06"] = A - np.swapaxes(A, 1, 2)
    curl = db - np.swapaxes(db, 0, 3)  # [s, j, k, r] -> d_s b^{jk}_r - d_r b^{jk}_s
    lhs = (es("is...,sjkr...->ijkr...", g, curl)
           + es("iks...,sjr...->ijkr...", b, b)
           - es("ijs...,skr...->ijkr...", b, b))
    if L:
        wsq = es("ajs...,akr...->ajskr...", w, w)
        rhs = (eps * (es("is...,ajskr...->aijkr...", g, wsq)
                      - es("is...,ajrks...->aijkr...", g, wsq))).sum(axis=0)
    else:
        rhs = 0
    r["07"] = lhs - rhs
    if normalization == "lame":
        r["07"] = r["07"] * _lame_weights(bc, g, grid)
    elif normalization != "raw":
        raise ValueError(f"unknown normalization {normalization!r}")

    entries = {}
    for tag, arr in r.items():
        lead = arr.ndim - grid.ndim
        arrays = {tuple(i + 1 for i in idx): arr[idx]
                  for idx in itertools.product(*(range(n) for n in arr.shape[:lead]))}
        entries[tag] = residual_entry(tag, arrays, grid)
    spacing = tuple(grid.spacing(a) for a in range(grid.ndim))
    return ResidualReport(entries, spacing, backend.name)


def _lame_weights(bc, g, grid):
    N = bc.N
    for i, j in itertools.permutations(range(N), 2):
        if not is_zero(bc.g[i][j]):
            raise ValueError("Lamé normalisation needs a diagonal metric")
    h = np.abs(np.stack([g[i, i] for i in range(N)])) ** -0.5
    return (h[:, None, None, None] ** 2 * h[None, :, None, None] * h[None, None, :, None]
            * np.ones((1, 1, 1, N) + (1,) * grid.ndim))
