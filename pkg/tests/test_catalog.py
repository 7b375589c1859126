import pytest

from lamelax import problemfile
from lamelax.catalog import CATALOG, EXACT, NAMES, get_example
from lamelax.errors import ProblemFileError, UnknownExample
from lamelax.residuals import verify_problem

REQUIRED = ("cartesian", "polar", "sphere", "flat_pencil_const", "flat_pencil_sqrt", "sphere_perturbed")


def test_required_entries_present():
    assert set(REQUIRED) <= set(NAMES)
    with pytest.raises(UnknownExample, match="torus"):
        get_example("torus")


def test_entry_shapes():
    c = get_example("cartesian")
    assert c.problem.N == 2 and c.problem.pencil is None and c.bounds("lamx2") == EXACT
    s = get_example("sphere").problem
    assert s.nl2.K == 1 and s.grid.axes == ((0.2, 1.4, 9), (0.0, 2.0, 9))
    f = get_example("flat_pencil_sqrt").problem
    assert f.grid.axes == ((1.0, 2.0, 9), (1.0, 2.0, 9))
    assert get_example("sphere_perturbed").bounds("lamx2") == (1e-4, 1e-2)


@pytest.mark.parametrize("name", NAMES)
def test_expected_bounds_hold(name):
    entry = CATALOG[name]
    rep = verify_problem(entry.problem)
    for tag in rep.tags:
        lo, hi = entry.bounds(tag)
        assert lo <= rep[tag].max <= hi, (tag, rep[tag].max)


def test_catalog_has_a_failing_entry():
    assert any(entry.bounds(t)[0] > 0 for entry in CATALOG.values() for t in entry.expected)


@pytest.mark.parametrize("name", NAMES)
def test_dump_round_trip(name):
    p = get_example(name).problem
    text = problemfile.dump(p)
    q = problemfile.parse(text)
    assert q == p
    assert problemfile.dump(q) == text


def test_parse_sections_in_any_order(tmp_path):
    text = "lame 1 ; u1\nsigns2 +1 -1\n# comment\ndomain u1 0.5 1.5 5 ; u2 0 2 5\ndimension 2\n"
    p = problemfile.parse(text)
    assert p.frame.eps2 == (1, -1) and p.grid.shape == (5, 5)
    path = tmp_path / "polar.txt"
    path.write_text(text)
    assert problemfile.read(path) == p
    with pytest.raises(ProblemFileError):
        problemfile.read(tmp_path / "missing.txt")


@pytest.mark.parametrize("text,match", [
    ("dimension 2\n", "missing"),
    ("dimension 1\ndomain u1 0 1 3\nsigns2 +1\nlame 1\n", "dimension"),
    ("dimension 2\ndomain u1 0 1 3 ; u2 0 1 3\nsigns2 +1 +2\nlame 1 ; 1\n", "sign"),
    ("dimension 2\ndomain u1 0 1 3 ; u2 0 1 3\nsigns2 +1 +1\nlame 1 ; sin(\n", "lame"),
    ("dimension 2\ndomain u1 0 1 3 ; u2 0 1 3\nsigns2 +1 +1\nlame 1 ; 1\nlame 1 ; 1\n", "lame"),
    ("dimension 2\ndomain u1 0 1 3 ; u2 0 1 3\nsigns2 +1 +1\nlame 1 ; 1\ncolour blue\n", "colour"),
    ("dimension 2\ndomain u1 0 1 3 ; u2 0 1 3\nsigns2 +1 +1\nlame 1 ; 1\nsigns1 +1 +1\n", "pencil"),
])
def test_parse_errors(text, match):
    with pytest.raises(ProblemFileError, match=match):
        problemfile.parse(text)
