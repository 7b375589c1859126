import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lamelax.errors import PoleOnGrid
from lamelax.expr import parse
from lamelax.fields import (ClosedForm, FDBackend, GridSampled, GridSpec, SymbolicBackend, fd_partial, fsqrt,
                            make_backend, partial, sample, values_on)


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(((1, 0, 5),))
    with pytest.raises(ValueError):
        GridSpec(((0, 1, 1),))
    g = GridSpec(((0, 1, 5), (0, 2, 3)))
    assert g.shape == (5, 3)
    assert g.spacing(0) == 0.25 and g.spacing(1) == 1.0
    assert g.refined().shape == (9, 5)
    assert g.point((4, 1)) == (1.0, 1.0)


def test_sample_examples():
    g = GridSpec(((0, 1, 3),))
    assert np.allclose(sample(parse("u1"), g).values, [0, 0.5, 1])
    g2 = GridSpec(((0, 1, 2), (0, 1, 2)))
    assert np.allclose(sample(parse("u1*u2"), g2).values, [[0, 0], [0, 1]])
    with pytest.raises(PoleOnGrid, match=r"\(0.5\)"):
        sample(parse("1/(u1 - 0.5)"), g)


def test_fd_examples():
    g = GridSpec(((0.9, 1.1, 3),))
    d = fd_partial(sample(parse("u1^2"), g), 0)
    assert d.values[1] == pytest.approx(2.0, abs=1e-12)
    d = fd_partial(sample(parse("u1^3"), g), 0)
    assert d.values[1] == pytest.approx(3.01, abs=1e-12)
    d = fd_partial(sample(parse("7"), GridSpec(((0, 1, 4), (0, 1, 5)))), 1)
    assert np.all(d.values == 0)
    with pytest.raises(ValueError):
        fd_partial(sample(parse("u1"), GridSpec(((0, 1, 2),))), 0)


def test_fd_exact_on_quadratics_including_boundary():
    g = GridSpec(((0, 1, 7), (-1, 1, 5)))
    f = sample(parse("3*u1^2 - u1*u2 + u2^2 + 2"), g)
    assert np.allclose(fd_partial(f, 0).values, values_on(ClosedForm(parse("6*u1 - u2")), g), atol=1e-12)
    assert np.allclose(fd_partial(f, 1).values, values_on(ClosedForm(parse("2*u2 - u1")), g), atol=1e-12)


def test_fd_boundary_error_matches_interior():
    # the leading error (h^2/6) f''' holds at the end nodes too
    g = GridSpec(((0, 1, 33),))
    h = g.spacing(0)
    err = fd_partial(sample(parse("exp(u1)"), g), 0).values - np.exp(g.nodes(0))
    assert np.allclose(err, h ** 2 / 6 * np.exp(g.nodes(0)), rtol=1e-2)


def test_nested_fd_is_second_order_everywhere():
    errs = []
    for n in (9, 17):
        g = GridSpec(((0.2, 1.4, n),))
        f = sample(parse("sin(u1)"), g)
        errs.append(np.max(np.abs(fd_partial(fd_partial(f, 0), 0).values + np.sin(g.nodes(0)))))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_fd_linearity(a, b):
    g = GridSpec(((0, 1, 6), (0, 2, 4)))
    f, h = sample(parse("sin(u1*u2)"), g), sample(parse("exp(u2) + u1^3"), g)
    lhs = fd_partial(a * f + b * h, 1).values
    rhs = a * fd_partial(f, 1).values + b * fd_partial(h, 1).values
    assert np.allclose(lhs, rhs, atol=1e-9)


@pytest.mark.parametrize("text", ["sin(u1)*u2^3", "sqrt(1 + u1*u2)", "exp(u1 - u2)", "cos(u1*u2)"])
def test_backend_agreement_richardson(text):
    errs = []
    for n in (9, 17):
        g = GridSpec(((0.5, 1.5, n), (0.2, 1.2, n)))
        for axis in (0, 1):
            fd = partial(FDBackend(g).lift(parse(text)), axis)
            ex = partial(SymbolicBackend().lift(parse(text)), axis)
            errs.append(np.max(np.abs(values_on(fd, g) - values_on(ex, g))))
    for a in (0, 1):
        assert errs[a] <= 20 * 0.125 ** 2
        assert 3.5 <= errs[a] / errs[a + 2] <= 4.5


def test_backends_share_arithmetic():
    g = GridSpec(((1, 2, 5), (1, 2, 5)))
    for backend in (SymbolicBackend(), FDBackend(g, 2.0)):
        x = backend.lift(parse("u1"))
        y = fsqrt(backend.lam + x) * 2 - 1 / x
        assert np.allclose(values_on(y, g, 2.0), 2 * np.sqrt(2 + g.mesh()[0]) - 1 / g.mesh()[0])
    assert make_backend("symbolic", g).name == "symbolic"
    with pytest.raises(ValueError):
        make_backend("spectral", g)
    with pytest.raises(ValueError):
        FDBackend(g).lam


def test_grid_sampled_pole():
    g = GridSpec(((0, 1, 3),))
    with pytest.raises(PoleOnGrid):
        1 / sample(parse("u1"), g)
    with pytest.raises(TypeError):
        sample(parse("u1"), g) + ClosedForm(parse("u1"))
    assert isinstance(sample(parse("u1"), g) * 2, GridSampled)
