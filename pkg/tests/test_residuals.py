import numpy as np
import pytest
import sympy as sp

import oracles
from lamelax.catalog import get_example
from lamelax.errors import MissingPencil, ZeroEigenvalueGap
from lamelax.expr import parse
from lamelax.fields import FDBackend, GridSpec
from lamelax.geometry import LameFrame, NonlocalSet, PencilSpec
from lamelax.residuals import ProblemSpec, resolved_beta_residuals, system_residuals, verify_problem

SPHERE = LameFrame((1, 1), (parse("1"), parse("sin(u1)")))
# f = (u1, u2) with u2 well above u1, so the eigenvalues never meet
FORCED_BOX = GridSpec(((0.2, 1.4, 9), (2.0, 3.0, 9)))


def forced_sphere(nl2=NonlocalSet(K=1)):
    return ProblemSpec(SPHERE, FORCED_BOX, nl2, pencil=PencilSpec((parse("u1"), parse("u2")), (1, 1)))


def grid_max(expr, grid):
    f = sp.lambdify((oracles.u1, oracles.u2), expr, "numpy")
    u1, u2 = grid.mesh()
    return float(np.max(np.abs(np.broadcast_to(f(u1, u2), grid.shape))))


def test_cartesian_all_zero():
    rep = system_residuals(get_example("cartesian").problem)
    assert rep.tags == ["lamx0", "lamx1", "lamx2"]
    assert rep.max() == 0


def test_sphere_lamx2_and_lamx0():
    p = get_example("sphere").problem
    rep = system_residuals(p)
    assert rep["lamx2"].max <= 1e-10
    # the K shortcut turns lamx0 into the defining relation of beta
    assert rep["lamx0"].max <= 1e-15
    assert rep.lines()[2].startswith("RESID lamx2 max=")


def test_flat_pencil_sqrt():
    p = get_example("flat_pencil_sqrt").problem
    rep = system_residuals(p)
    assert all(rep[t].max == 0 for t in ("lamx1", "lamx2", "lam3"))
    rep = verify_problem(p)
    assert "resolved" not in rep and "f^2 - f^1" in rep.skipped["resolved"]
    assert rep.lines()[-1].startswith("SKIP resolved")
    shifted = p.with_grid(GridSpec(((1, 2, 9), (3, 4, 9))))
    assert resolved_beta_residuals(shifted).max() == 0


def test_lamx1_needs_three_dimensions():
    grid = GridSpec(((0.5, 1.0, 5), (0.3, 0.9, 5), (0.2, 0.8, 5)))
    spherical = LameFrame((1, 1, 1), (parse("1"), parse("u1"), parse("u1*sin(u2)")))
    rep = system_residuals(ProblemSpec(spherical, grid))
    assert rep["lamx1"].max <= 1e-12 and rep["lamx2"].max <= 1e-12
    assert len(rep["lamx1"].per_index) == 6
    bent = LameFrame((1, 1, 1), (parse("1"), parse("u1 + u3^2"), parse("u1*u2 + 1")))
    assert system_residuals(ProblemSpec(bent, grid))["lamx1"].max > 1e-2


def test_perturbation_sensitivity():
    p = get_example("sphere").problem
    for delta in (1e-3, "1e-3*u1"):
        rep = system_residuals(p.with_perturbation(0, 1, parse(str(delta))))
        if isinstance(delta, float):
            # a constant shift only enters through derivatives and products that vanish here
            assert rep["lamx2"].max <= 1e-10
        else:
            assert 1e-4 <= rep["lamx2"].max <= 1e-2
    with pytest.raises(ValueError):
        p.with_perturbation(1, 1, parse("1"))


def test_missing_pencil():
    p = get_example("sphere").problem
    with pytest.raises(MissingPencil):
        system_residuals(p, tags=("lam3",))
    with pytest.raises(MissingPencil):
        resolved_beta_residuals(p)
    with pytest.raises(ValueError):
        ProblemSpec(SPHERE, FORCED_BOX, nl1=NonlocalSet(K=1))


def test_zero_gap():
    p = ProblemSpec(SPHERE, GridSpec(((0.2, 1.4, 9), (0.2, 1.4, 9))),
                    pencil=PencilSpec((parse("u1"), parse("u2")), (1, 1)))
    with pytest.raises(ZeroEigenvalueGap):
        resolved_beta_residuals(p)


def test_resolved_matches_sympy_elimination():
    # the oracle solves lamx2 and lam3 for d beta_12/du1 symbolically
    rhs, s = oracles.resolved_rhs_n2()
    u1, u2 = oracles.u1, oracles.u2
    data = {s["e1"]: 1, s["e2"]: 1, s["a2"]: 1, s["a1"]: 0, s["f1"]: u1, s["f2"]: u2, s["df1"]: 1, s["df2"]: 1,
            s["b12"]: sp.cos(u1), s["b21"]: 0, s["h21"]: 1, s["h22"]: sp.sin(u1), s["h11"]: 0, s["h12"]: 0}
    resid12 = -sp.sin(u1) - rhs.subs(data)
    rep = resolved_beta_residuals(forced_sphere())
    assert rep["resolved"].per_index[(1, 2)] == pytest.approx(grid_max(resid12, FORCED_BOX), rel=1e-12)
    # frozen: max at (1.4, 2.0) of (u1 sin u1 - cos(u1)/2)/(u2 - u1)
    assert rep["resolved"].per_index[(1, 2)] == pytest.approx(2.157743417556206, rel=1e-12)


def test_resolved_identity_with_lamx2_and_lam3():
    # resolved_ij = (f^j lamx2_ij - lam3_ij) / (eps^i (f^j - f^i)) on forced data
    u1, u2 = oracles.u1, oracles.u2
    lamx2 = -sp.sin(u1) + 1 * sp.sin(u1)
    lam3 = u1 * -sp.sin(u1) + sp.cos(u1) / 2
    p = forced_sphere()
    rep = resolved_beta_residuals(p).merged(system_residuals(p))
    assert rep["lamx2"].max <= 1e-12
    assert rep["lam3"].per_index[(1, 2)] == pytest.approx(grid_max(lam3, FORCED_BOX), rel=1e-12)
    for (i, j), (fi, fj) in {(1, 2): (u1, u2), (2, 1): (u2, u1)}.items():
        want = grid_max((fj * lamx2 - lam3) / (fj - fi), FORCED_BOX)
        assert rep["resolved"].per_index[(i, j)] == pytest.approx(want, rel=1e-12)


def test_co_vanishing():
    good = get_example("sphere_pencil").problem
    rep = verify_problem(good)
    assert rep.max() <= 1e-9
    bad = verify_problem(good.with_perturbation(0, 1, parse("1e-3*u1")))
    assert bad["resolved"].max >= 1e-5
    assert max(bad["lamx2"].max, bad["lam3"].max) >= 1e-5


def test_problem_spec_normalises_optional_sets():
    p = forced_sphere()
    assert p.nl1 == NonlocalSet()
    assert ProblemSpec(SPHERE, FORCED_BOX, nl1=NonlocalSet()).nl1 is None
    with pytest.raises(ValueError):
        ProblemSpec(SPHERE, GridSpec(((0, 1, 3),)))


@pytest.mark.parametrize("name,tags", [("sphere_perturbed", ("lamx2", "lamx0")),
                                       ("sphere_pencil", ("lamx2", "lam3", "resolved"))])
def test_fd_richardson(name, tags):
    p = get_example(name).problem
    errs = {t: [] for t in tags}
    for n in (9, 17):
        q = p.with_grid(p.grid.with_nodes(n))
        fd = verify_problem(q, FDBackend(q.grid))
        ex = verify_problem(q)
        for t in tags:
            errs[t].append(max(abs(fd[t].per_index[k] - ex[t].per_index[k]) for k in ex[t].per_index))
    for t in tags:
        if errs[t][0] <= 1e-11:
            continue  # FD is exact on this data
        assert 3.5 <= errs[t][0] / errs[t][1] <= 4.5, (t, errs[t])
