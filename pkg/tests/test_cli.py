import subprocess
import sys

import pytest

from lamelax import problemfile
from lamelax.catalog import NAMES, get_example
from lamelax.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out.splitlines()


def test_verify_sphere(capsys):
    code, out = run(capsys, "verify", "--example", "sphere", "--tol", "1e-9")
    assert code == 0
    assert [line.split()[1] for line in out] == ["lamx0", "lamx1", "lamx2"]
    assert all(line.startswith("RESID ") and " at=(" in line for line in out)


def test_verify_perturbed_fails(capsys):
    code, out = run(capsys, "verify", "--example", "sphere_perturbed", "--tol", "1e-9")
    assert code == 1
    line = next(x for x in out if x.startswith("RESID lamx2"))
    assert float(line.split("max=")[1].split()[0]) >= 1e-4


def test_verify_from_file(capsys, tmp_path):
    path = tmp_path / "sphere.txt"
    path.write_text(problemfile.dump(get_example("sphere").problem))
    code, out = run(capsys, "verify", "--problem", str(path))
    assert code == 0
    _, fd9 = run(capsys, "verify", "--problem", str(path), "--backend", "fd", "--tol", "1")
    _, fd17 = run(capsys, "verify", "--problem", str(path), "--backend", "fd", "--tol", "1", "--grid", "17")
    assert fd9[2] != fd17[2]


def test_verify_dimension_one(capsys, tmp_path):
    path = tmp_path / "line.txt"
    path.write_text("dimension 1\ndomain u1 0 1 5\nsigns2 +1\nlame 1\n")
    code, out = run(capsys, "verify", "--problem", str(path))
    assert code == 2 and out[0].startswith("ERROR ") and len(out) == 1


def test_verify_skip_line(capsys):
    code, out = run(capsys, "verify", "--example", "flat_pencil_sqrt")
    assert code == 0
    assert out[-1].startswith("SKIP resolved ")


def test_lax_examples(capsys):
    code, out = run(capsys, "lax", "--example", "sphere", "--variant", "CC")
    assert code == 0 and len(out) == 1 and out[0].startswith("ZC CC lambda=none ")
    code, out = run(capsys, "lax", "--example", "flat_pencil_sqrt", "--variant", "FULL",
                    "--lambda-min", "0.5", "--lambda-max", "10", "--lambda-samples", "16")
    assert code == 0 and len(out) == 16
    code, out = run(capsys, "lax", "--example", "flat_pencil_sqrt", "--variant", "FULL",
                    "--lambda-min", "-3", "--lambda-max", "0")
    assert code == 2 and out[0].startswith("ERROR lambda range")
    code, out = run(capsys, "lax", "--example", "flat_pencil_sqrt", "--variant", "FULL")
    assert code == 0 and len(out) == 20


def test_lax_missing_pencil(capsys):
    code, out = run(capsys, "lax", "--example", "sphere", "--variant", "FULL")
    assert code == 2 and "pencil" in out[0]


def test_transport_examples(capsys):
    rect = ("--rect", "u1", "0.3", "1.2", "u2", "0.5", "1.5")
    code, out = run(capsys, "transport", "--example", "sphere", "--variant", "CC", *rect, "--steps", "256")
    assert code == 0 and out[0].startswith("MONO CC lambda=none steps=256 defect=")
    code, out = run(capsys, "transport", "--example", "sphere_perturbed", "--variant", "CC", *rect)
    assert code == 1 and float(out[0].split("defect=")[1]) >= 1e-5
    code, out = run(capsys, "transport", "--example", "sphere", "--variant", "CC", "--steps", "0")
    assert code == 2
    code, out = run(capsys, "transport", "--example", "sphere", "--variant", "CC",
                    "--rect", "u1", "0", "1.2", "u2", "0.5", "1.5")
    assert code == 2 and "domain" in out[0]


def test_pencil_examples(capsys):
    code, out = run(capsys, "pencil", "--example", "flat_pencil_sqrt",
                    "--lambda", "0.5", "--lambda", "1", "--lambda", "2")
    assert code == 0
    assert out[0].startswith("EIG max_deviation=0.00000e+00")
    assert sum(line.startswith("PENCIL ") for line in out) == 21
    code, out = run(capsys, "pencil", "--example", "sphere")
    assert code == 2
    code, out = run(capsys, "pencil", "--example", "flat_pencil_const", "--lambda", "-2")
    assert code == 2 and out[-1].startswith("ERROR ")


def test_dump_and_list(capsys):
    code, out = run(capsys, "dump", "--example", "sphere")
    assert code == 0 and out[0] == "# sphere"
    assert problemfile.parse("\n".join(out) + "\n") == get_example("sphere").problem
    code, out = run(capsys, "list")
    assert tuple(out) == NAMES


def test_fd_backend(capsys):
    code, out = run(capsys, "verify", "--example", "sphere", "--backend", "fd", "--tol", "1e-2")
    assert code == 0 and len(out) == 3
    code, _ = run(capsys, "verify", "--example", "sphere", "--grid", "2")
    assert code == 2


def test_unknown_example(capsys):
    code, out = run(capsys, "verify", "--example", "torus")
    assert code == 2 and "torus" in out[0]


def test_argparse_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["verify"])
    assert exc.value.code == 2


def test_console_script_is_deterministic():
    cmd = [sys.executable, "-m", "lamelax.cli", "lax", "--example", "sphere_pencil", "--variant", "FULL"]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True)
    b = subprocess.run(cmd, capture_output=True, text=True, check=True)
    assert a.stdout == b.stdout and a.stdout
    lams = [line.split("lambda=")[1].split()[0] for line in a.stdout.splitlines()]
    assert len(lams) == 20
