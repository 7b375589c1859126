"""Pointwise residuals of the nonlinear systems for compatible nonsingular
pairs of nonlocal brackets.

Tags:
  lamx0  dH^a_{2,j}/du^i - beta_ij H^a_{2,i}                         (i != j)
  lamx1  dbeta_ij/du^k - beta_ik beta_kj                   (i, j, k distinct)
  lamx2  Gauss equation of the second metric                          (i != j)
  lam3   Gauss equation of the first metric in terms of beta, f       (i != j)
  lam00  dH^b_{1,j}/du^i - beta_ij H^b_{1,i}                          (i != j)
  resolved  dbeta_ij/du^i minus its value solved from lamx2 and lam3

``resolved`` is obtained by eliminating dbeta_ji/du^j between lamx2 and
lam3 (multiply lamx2 by f^j and subtract lam3).  In that elimination the
bracket-2 sum carries H^a_{2,i} H^a_{2,j}; its residual equals
(f^j * lamx2 - lam3) / (eps^i (f^j - f^i)) identically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import MissingPencil, ZeroEigenvalueGap
from .expr import as_expr
from .fields import GridSpec, make_backend, partial, values_on
from .geometry import (LameFrame, NonlocalSet, PencilSpec, _check_nonvanishing, _mul, _sum,
                       check_frame, check_pencil, rotation_coefficients)
from .report import ResidualReport, build_report

SYSTEM_TAGS = ("lamx0", "lamx1", "lamx2")
PENCIL_TAGS = ("lam3", "lam00")


@dataclass(frozen=True)
class ProblemSpec:
    """Unknowns of the system on a concrete box.

    ``perturb`` is a tuple of ((i, j), expression) pairs, 0-based, added to
    the derived rotation coefficients.
    """

    frame: LameFrame
    grid: GridSpec
    nl2: NonlocalSet = field(default_factory=NonlocalSet)
    pencil: PencilSpec | None = None
    nl1: NonlocalSet | None = None
    perturb: tuple = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        # canonical form: nl1 is a (possibly empty) set iff a pencil is present
        if self.pencil is not None and self.nl1 is None:
            object.__setattr__(self, "nl1", NonlocalSet())
        if self.pencil is None and self.nl1 is not None and not self.nl1.L:
            object.__setattr__(self, "nl1", None)
        object.__setattr__(self, "perturb", tuple(((int(i), int(j)), as_expr(e))
                                                  for (i, j), e in self.perturb))
        N = self.frame.N
        if self.grid.ndim != N:
            raise ValueError(f"grid has {self.grid.ndim} axes, dimension is {N}")
        if self.pencil is not None and self.pencil.N != N:
            raise ValueError("pencil size differs from the dimension")
        if self.pencil is None and self.nl1 is not None and self.nl1.L:
            raise ValueError("bracket-1 nonlocal data requires a pencil")
        for nl in (self.nl2, self.nl1):
            for _, hs in (nl.entries if nl is not None else ()):
                if len(hs) != N:
                    raise ValueError("each nonlocal entry needs N field expressions")
        for (i, j), _ in self.perturb:
            if i == j or not (0 <= i < N and 0 <= j < N):
                raise ValueError(f"bad perturbation index ({i + 1}, {j + 1})")

    @property
    def N(self) -> int:
        return self.frame.N

    @property
    def nl1_or_empty(self) -> NonlocalSet:
        return self.nl1 if self.nl1 is not None else NonlocalSet()

    def with_grid(self, grid: GridSpec) -> "ProblemSpec":
        return ProblemSpec(self.frame, grid, self.nl2, self.pencil, self.nl1, self.perturb, self.name)

    def with_perturbation(self, i: int, j: int, expr) -> "ProblemSpec":
        return ProblemSpec(self.frame, self.grid, self.nl2, self.pencil, self.nl1,
                           self.perturb + (((i, j), expr),), self.name)


class _Data:
    """Lifted unknowns shared by the residual formulas."""

    def __init__(self, p: ProblemSpec, backend):
        self.N = p.N
        self.eps = p.frame.eps2
        self.beta = rotation_coefficients(p.frame, backend, dict(p.perturb))
        self.dbeta = [[[partial(x, s) for x in row] for row in self.beta] for s in range(self.N)]
        self.h2 = [(s, [backend.lift(h) for h in hs]) for s, hs in p.nl2.expand(p.frame.H)]
        self.h1 = [(s, [backend.lift(h) for h in hs]) for s, hs in p.nl1_or_empty.expand(p.frame.H)]
        if p.pencil is not None:
            self.f = [backend.lift(fi) for fi in p.pencil.f]
            # (f^i)' is differentiated exactly on either backend
            self.df = [backend.lift(p.pencil.derivative(i)) for i in range(self.N)]


def _backend(p: ProblemSpec, backend):
    if isinstance(backend, str):
        return make_backend(backend, p.grid)
    return backend


def system_residuals(p: ProblemSpec, backend="symbolic", tags=None) -> ResidualReport:
    """Evaluate the requested equation tags at every grid node."""
    backend = _backend(p, backend)
    if tags is None:
        tags = SYSTEM_TAGS + (PENCIL_TAGS if p.pencil is not None else ())
    if p.pencil is None and any(t in PENCIL_TAGS for t in tags):
        raise MissingPencil("lam3/lam00 need a pencil section")
    check_frame(p.frame, p.grid)
    d = _Data(p, backend)
    N, beta, dbeta = d.N, d.beta, d.dbeta
    pairs = list(itertools.permutations(range(N), 2))
    out = {}

    def hfields(sets):
        return {(a + 1, i + 1, j + 1): _sum([hs[j].partial(i), _mul(-1, beta[i][j], hs[i])])
                for a, (_, hs) in enumerate(sets) for i, j in pairs}

    for tag in tags:
        if tag == "lamx0":
            res = hfields(d.h2)
        elif tag == "lam00":
            res = hfields(d.h1)
        elif tag == "lamx1":
            res = {(i + 1, j + 1, k + 1): _sum([dbeta[k][i][j], _mul(-1, beta[i][k], beta[k][j])])
                   for i, j, k in itertools.permutations(range(N), 3)}
        elif tag == "lamx2":
            res = {(i + 1, j + 1): _lamx2(d, i, j) for i, j in pairs}
        elif tag == "lam3":
            res = {(i + 1, j + 1): _lam3(d, i, j) for i, j in pairs}
        else:
            raise ValueError(f"unknown tag {tag!r}")
        out[tag] = {idx: values_on(v, p.grid) for idx, v in res.items()}
    return build_report(out, p.grid, backend.name)


def _lamx2(d: _Data, i: int, j: int):
    eps, beta, dbeta = d.eps, d.beta, d.dbeta
    terms = [_mul(eps[i], dbeta[i][i][j]), _mul(eps[j], dbeta[j][j][i])]
    terms += [_mul(eps[s], beta[s][i], beta[s][j]) for s in range(d.N) if s not in (i, j)]
    terms += [_mul(sign, hs[i], hs[j]) for sign, hs in d.h2]
    return _sum(terms)


def _lam3(d: _Data, i: int, j: int):
    eps, beta, dbeta, f, df = d.eps, d.beta, d.dbeta, d.f, d.df
    terms = [_mul(eps[i], f[i], dbeta[i][i][j]), _mul(0.5 * eps[i], df[i], beta[i][j]),
             _mul(eps[j], f[j], dbeta[j][j][i]), _mul(0.5 * eps[j], df[j], beta[j][i])]
    terms += [_mul(eps[s], f[s], beta[s][i], beta[s][j]) for s in range(d.N) if s not in (i, j)]
    terms += [_mul(sign, hs[i], hs[j]) for sign, hs in d.h1]
    return _sum(terms)


def resolved_beta_residuals(p: ProblemSpec, backend="symbolic") -> ResidualReport:
    """dbeta_ij/du^i minus its explicit expression, for all ordered i != j."""
    if p.pencil is None:
        raise MissingPencil("the resolved equation divides by f^j - f^i and needs a pencil")
    backend = _backend(p, backend)
    check_frame(p.frame, p.grid)
    check_pencil(p.pencil, p.grid)
    d = _Data(p, backend)
    N, eps, beta, dbeta, f, df = d.N, d.eps, d.beta, d.dbeta, d.f, d.df
    res = {}
    for i, j in itertools.permutations(range(N), 2):
        gap = f[j] - f[i]
        _check_nonvanishing(values_on(gap, p.grid), p.grid, f"f^{j + 1} - f^{i + 1}", ZeroEigenvalueGap)
        inv = 1 / gap
        rhs = [_mul(0.5, df[i], inv, beta[i][j]),
               _mul(0.5 * eps[i] * eps[j], df[j], inv, beta[j][i])]
        rhs += [_mul(-eps[i] * eps[s], f[j] - f[s], inv, beta[s][i], beta[s][j])
                for s in range(N) if s not in (i, j)]
        rhs += [_mul(eps[i] * sign, inv, hs[i], hs[j]) for sign, hs in d.h1]
        rhs += [_mul(-eps[i] * sign, f[j], inv, hs[i], hs[j]) for sign, hs in d.h2]
        res[(i + 1, j + 1)] = values_on(_sum([dbeta[i][i][j], _mul(-1, _sum(rhs))]), p.grid)
    return build_report({"resolved": res}, p.grid, backend.name)


def verify_problem(p: ProblemSpec, backend="symbolic") -> ResidualReport:
    """Every applicable tag, including the resolved equation when a pencil is present.

    The resolved equation divides by f^j - f^i; where eigenvalues collide on
    the grid (e.g. f = (u1, u2) on a square box) it is skipped with a reason
    rather than failing the whole verification.
    """
    report = system_residuals(p, backend)
    if p.pencil is not None:
        try:
            report = report.merged(resolved_beta_residuals(p, backend))
        except ZeroEigenvalueGap as exc:
            report.skipped["resolved"] = str(exc)
    return report
