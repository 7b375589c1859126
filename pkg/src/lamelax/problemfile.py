"""Line-oriented problem files.

    # sphere
    dimension 2
    domain u1 0.2 1.4 9 ; u2 0 2 9
    signs2 +1 +1
    lame 1 ; sin(u1)
    nonlocal2K 1

Sections may appear in any order; ``dump`` writes them in a fixed order so
that dump(parse(dump(p))) reproduces the bytes.  Besides the core keywords
(dimension, domain, signs2, lame, pencil, signs1, nonlocal2, nonlocal2K,
nonlocal1) the format accepts ``nonlocal1K <K>`` and
``perturb <i> <j> ; <expr>``, which adds ``expr`` to beta_ij.  A comment on
the first line names the problem.
"""

from __future__ import annotations

from .errors import LameLaxError, ProblemFileError
from .expr import ExpressionParseError, parse as parse_expr, to_text
from .fields import GridSpec
from .geometry import LameFrame, NonlocalSet, PencilSpec
from .residuals import ProblemSpec

SINGLE = ("dimension", "domain", "signs2", "lame", "pencil", "signs1", "nonlocal2K", "nonlocal1K")
REPEATED = ("nonlocal2", "nonlocal1", "perturb")


def _number(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ProblemFileError(f"{what}: expected a number, got {text!r}") from None


def _sign(text: str, what: str) -> int:
    if text not in ("+1", "-1", "1"):
        raise ProblemFileError(f"{what}: signs must be +1 or -1, got {text!r}")
    return -1 if text == "-1" else 1


def _exprs(text: str, what: str) -> list:
    parts = [s.strip() for s in text.split(";")]
    if any(not s for s in parts):
        raise ProblemFileError(f"{what}: empty expression")
    return [_expr(s, what) for s in parts]


def _expr(text: str, what: str):
    try:
        return parse_expr(text)
    except ExpressionParseError as exc:
        raise ProblemFileError(f"{what}: {exc}") from None


def _complex(text: str, what: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ProblemFileError(f"{what}: expected a number, got {text!r}") from None


def parse(text: str) -> ProblemSpec:
    """ProblemSpec from file contents; ProblemFileError on any defect."""
    single, repeated = {}, {k: [] for k in REPEATED}
    name = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if lineno == 1:
                name = line[1:].strip()
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        where = f"line {lineno} ({key})"
        if key in SINGLE:
            if key in single:
                raise ProblemFileError(f"{where}: section given twice")
            single[key] = (rest, where)
        elif key in REPEATED:
            repeated[key].append((rest, where))
        else:
            raise ProblemFileError(f"line {lineno}: unknown keyword {key!r}")
    for key in ("dimension", "domain", "signs2", "lame"):
        if key not in single:
            raise ProblemFileError(f"missing required section {key!r}")
    try:
        return _build(single, repeated, name)
    except ProblemFileError:
        raise
    except (LameLaxError, ValueError) as exc:
        raise ProblemFileError(str(exc)) from None


def _build(single: dict, repeated: dict, name: str) -> ProblemSpec:
    text, where = single["dimension"]
    try:
        N = int(text)
    except ValueError:
        raise ProblemFileError(f"{where}: expected an integer, got {text!r}") from None
    if N < 2:
        raise ProblemFileError(f"{where}: dimension must be at least 2, got {N}")

    text, where = single["domain"]
    axes = []
    for a, part in enumerate(text.split(";")):
        fields = part.split()
        if len(fields) != 4 or fields[0] != f"u{a + 1}":
            raise ProblemFileError(f"{where}: expected 'u{a + 1} <lo> <hi> <nodes>', got {part.strip()!r}")
        try:
            nodes = int(fields[3])
        except ValueError:
            raise ProblemFileError(f"{where}: node count must be an integer") from None
        axes.append((_number(fields[1], where), _number(fields[2], where), nodes))
    if len(axes) != N:
        raise ProblemFileError(f"{where}: {len(axes)} axes for dimension {N}")

    def signs(key):
        text, where = single[key]
        out = tuple(_sign(s, where) for s in text.split())
        if len(out) != N:
            raise ProblemFileError(f"{where}: expected {N} signs, got {len(out)}")
        return out

    def exprs(key):
        text, where = single[key]
        out = _exprs(text, where)
        if len(out) != N:
            raise ProblemFileError(f"{where}: expected {N} expressions, got {len(out)}")
        return tuple(out)

    frame = LameFrame(signs("signs2"), exprs("lame"))
    pencil = None
    if "pencil" in single:
        if "signs1" not in single:
            raise ProblemFileError("a pencil section needs signs1")
        pencil = PencilSpec(exprs("pencil"), signs("signs1"))
    elif "signs1" in single:
        raise ProblemFileError("signs1 given without a pencil section")

    def nonlocal_set(key, short):
        lines = repeated[key]
        if short in single and lines:
            raise ProblemFileError(f"{short} and {key} lines are mutually exclusive")
        if short in single:
            text, where = single[short]
            return NonlocalSet(K=_complex(text, where))
        entries = []
        for text, where in lines:
            head, _, tail = text.partition(";")
            hs = _exprs(tail, where) if tail.strip() else []
            if len(hs) != N:
                raise ProblemFileError(f"{where}: expected a sign and {N} expressions")
            entries.append((_sign(head.strip(), where), tuple(hs)))
        return NonlocalSet(tuple(entries))

    nl2 = nonlocal_set("nonlocal2", "nonlocal2K")
    nl1 = nonlocal_set("nonlocal1", "nonlocal1K")
    if nl1.L and pencil is None:
        raise ProblemFileError("bracket-1 nonlocal data requires a pencil section")

    perturb = []
    for text, where in repeated["perturb"]:
        head, _, tail = text.partition(";")
        idx = head.split()
        if len(idx) != 2 or not tail.strip():
            raise ProblemFileError(f"{where}: expected 'perturb <i> <j> ; <expr>'")
        try:
            i, j = (int(x) - 1 for x in idx)
        except ValueError:
            raise ProblemFileError(f"{where}: indices must be integers") from None
        perturb.append(((i, j), _expr(tail.strip(), where)))

    return ProblemSpec(frame, GridSpec(tuple(axes)), nl2, pencil, nl1, tuple(perturb), name)


def _num(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _cnum(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return _num(z.real)
    return repr(z).strip("()")


def _sgn(s: int) -> str:
    return "+1" if s > 0 else "-1"


def dump(p: ProblemSpec) -> str:
    """Canonical text of ``p``; parse(dump(p)) == p."""
    N = p.N
    out = []
    if p.name:
        out.append(f"# {p.name}")
    out.append(f"dimension {N}")
    out.append("domain " + " ; ".join(f"u{a + 1} {_num(lo)} {_num(hi)} {n}"
                                      for a, (lo, hi, n) in enumerate(p.grid.axes)))
    out.append("signs2 " + " ".join(_sgn(s) for s in p.frame.eps2))
    out.append("lame " + " ; ".join(to_text(h) for h in p.frame.H))
    if p.pencil is not None:
        out.append("pencil " + " ; ".join(to_text(f) for f in p.pencil.f))
        out.append("signs1 " + " ".join(_sgn(s) for s in p.pencil.eps1))
    for key, nl in (("nonlocal2", p.nl2), ("nonlocal1", p.nl1_or_empty)):
        if nl.K is not None:
            out.append(f"{key}K {_cnum(nl.K)}")
        for s, hs in nl.entries:
            out.append(f"{key} {_sgn(s)} ; " + " ; ".join(to_text(h) for h in hs))
    for (i, j), e in p.perturb:
        out.append(f"perturb {i + 1} {j + 1} ; {to_text(e)}")
    return "\n".join(out) + "\n"


def read(path) -> ProblemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    return parse(text)
