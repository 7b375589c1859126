"""Built-in examples with known residual behaviour."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownExample
from .expr import parse
from .fields import GridSpec
from .geometry import LameFrame, NonlocalSet, PencilSpec
from .residuals import ProblemSpec

EXACT = (0.0, 1e-10)
DELTA = 1e-3


@dataclass(frozen=True)
class CatalogEntry:
    """A problem and the residual range each tag must land in.

    Tags missing from ``expected`` default to ``EXACT``.
    """

    name: str
    problem: ProblemSpec
    expected: dict = field(default_factory=dict)
    notes: str = ""

    def bounds(self, tag: str) -> tuple:
        return self.expected.get(tag, EXACT)


def _frame(signs, *H):
    return LameFrame(signs, tuple(parse(h) for h in H))


def _pencil(signs, *f):
    return PencilSpec(tuple(parse(x) for x in f), signs)


def _grid(*axes, nodes=9):
    return GridSpec(tuple((lo, hi, nodes) for lo, hi in axes))


def _entries():
    sphere_box = _grid((0.2, 1.4), (0.0, 2.0))
    sphere = ProblemSpec(_frame((1, 1), "1", "sin(u1)"), sphere_box, NonlocalSet(K=1), name="sphere")
    out = [
        CatalogEntry("cartesian", ProblemSpec(_frame((1, 1), "1", "1"), _grid((0, 1), (0, 1)),
                                              name="cartesian"),
                     notes="Euclidean plane; every term vanishes identically."),
        CatalogEntry("polar", ProblemSpec(_frame((1, 1), "1", "u1"), _grid((0.5, 1.5), (0, 2)),
                                          name="polar"),
                     notes="Flat plane in polar coordinates: beta_12 = 1, beta_21 = 0."),
        CatalogEntry("sphere", sphere,
                     notes="Unit sphere with the constant-curvature nonlocal term K = 1; "
                           "d(cos u1)/du1 + H_1 H_2 = 0."),
        CatalogEntry("flat_pencil_const",
                     ProblemSpec(_frame((1, 1), "1", "1"), _grid((1, 2), (1, 2)),
                                 pencil=_pencil((1, 1), "2", "5"), name="flat_pencil_const"),
                     notes="Constant eigenvalues: both metrics flat, beta = 0."),
        CatalogEntry("flat_pencil_sqrt",
                     ProblemSpec(_frame((1, 1), "1", "1"), _grid((1, 2), (1, 2)),
                                 pencil=_pencil((1, 1), "u1", "u2"), name="flat_pencil_sqrt"),
                     notes="f = (u1, u2); the first metric sum (du^i)^2/u^i is flat via v = 2 sqrt(u). "
                           "The eigenvalues meet on the diagonal u1 = u2, so the resolved "
                           "equation (which divides by f^2 - f^1) is skipped."),
        CatalogEntry("sphere_perturbed",
                     ProblemSpec(sphere.frame, sphere_box, sphere.nl2,
                                 perturb=(((0, 1), parse(f"{DELTA}*u1")),), name="sphere_perturbed"),
                     expected={"lamx2": (1e-4, 1e-2), "lamx0": (1e-4, 1e-2)},
                     notes="beta_12 += 1e-3 u1. A constant shift would cancel in lamx2 "
                           "(only d beta_12/du1 enters), so the shift grows linearly; "
                           "lamx2 = 1e-3 exactly and lamx0 = 1e-3 u1."),
        CatalogEntry("polar_pencil",
                     ProblemSpec(_frame((1, -1), "1", "u1"), _grid((0.5, 1.5), (0, 2)),
                                 pencil=_pencil((-1, 1), "-1", "u2+1"), name="polar_pencil"),
                     notes="Indefinite flat metric du1^2 - u1^2 du2^2 with a single-variable "
                           "pencil; mixed signs exercise the branch of every square root."),
        CatalogEntry("sphere_pencil",
                     ProblemSpec(sphere.frame, sphere_box, sphere.nl2,
                                 pencil=_pencil((1, 1), "2", "u2+3"), nl1=NonlocalSet(K=2),
                                 name="sphere_pencil"),
                     notes="Sphere with a pencil and both nonlocal sets; lam3 holds because "
                           "f^1 is constant and beta_21 = 0."),
    ]
    return {e.name: e for e in out}


CATALOG = _entries()
NAMES = tuple(CATALOG)


def get_example(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownExample(name) from None
