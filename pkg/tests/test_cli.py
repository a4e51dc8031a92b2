import io
import subprocess
import sys
from pathlib import Path

import pytest

from physarum_scn import builtin_example
from physarum_scn.cli import main
from physarum_scn.io import dump_instance, parse_instance, read_trajectory

GOLDEN = Path(__file__).parent / "golden"
CYCLIC = """\
[meta]
source = 0

[nodes]
count = 4

[[nodes.retail]]
id = 3
demand = 1.0

[[links]]
id = 0
tail = 0
head = 1
op_cost = [0.0, 1.0]
inv_cost = [0.0, 1.0]

[[links]]
id = 1
tail = 1
head = 2
op_cost = [0.0, 1.0]
inv_cost = [0.0, 1.0]

[[links]]
id = 2
tail = 2
head = 1
op_cost = [0.0, 1.0]
inv_cost = [0.0, 1.0]

[[links]]
id = 3
tail = 2
head = 3
op_cost = [0.0, 1.0]
inv_cost = [0.0, 1.0]
"""


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def test_solve_example1_with_trajectory(tmp_path):
    traj = tmp_path / "t.csv"
    code, out = run("solve", "--example", "1", "--trajectory", str(traj))
    assert code == 0
    obj = float(next(ln for ln in out.splitlines() if ln.startswith("objective ")).split()[1])
    assert obj == pytest.approx(16125.65, rel=1e-3)
    assert "removed 13" in out
    iters = int(next(ln for ln in out.splitlines() if ln.startswith("iterations ")).split()[1])
    assert read_trajectory(traj.read_text()).shape == (iters, 17)


def test_solve_golden(tmp_path):
    out_file = tmp_path / "sol.csv"
    code, _ = run("solve", "--example", "1", "--seed", "3", "--out", str(out_file))
    assert code == 0
    assert out_file.read_text() == (GOLDEN / "example1_seed3.csv").read_text()


def test_output_byte_stable():
    assert run("solve", "--example", "2", "--seed", "5") == run("solve", "--example", "2", "--seed", "5")


def test_non_convergence_exit_code():
    code, out = run("solve", "--example", "1", "--max-iters", "3")
    assert code == 3 and "converged false" in out


def test_validate_cyclic(tmp_path, capsys):
    path = tmp_path / "cyc.toml"
    path.write_text(CYCLIC)
    code, _ = run("validate", str(path))
    assert code == 2
    assert "Cycle" in capsys.readouterr().err


def test_validate_exported_example(tmp_path):
    path = tmp_path / "ex3.toml"
    code, text = run("export", "3")
    assert code == 0
    path.write_text(text)
    assert run("validate", str(path)) == (0, "ok\n")
    assert parse_instance(text) == builtin_example(3)


def test_missing_file_is_io_error(tmp_path):
    code, _ = run("solve", str(tmp_path / "nope.toml"))
    assert code == 4


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[meta\nsource = 0\n")
    assert run("validate", str(path))[0] == 4
    assert "line 1" in capsys.readouterr().err


def test_solve_from_file_matches_example(tmp_path):
    path = tmp_path / "ex1.toml"
    path.write_text(dump_instance(builtin_example(1)))
    assert run("solve", str(path))[1] == run("solve", "--example", "1")[1]


def test_oracle_subcommand():
    code, out = run("oracle", "--example", "3")
    assert code == 0
    obj = float(next(ln for ln in out.splitlines() if ln.startswith("objective ")).split()[1])
    assert obj == pytest.approx(10726.48, rel=1e-3)


def test_compare_example3():
    code, out = run("compare", "--example", "3")
    assert code == 0
    rel = float(next(ln for ln in out.splitlines() if ln.startswith("# objective_rel_err")).split(",")[1])
    assert rel <= 0.02


def test_mode_flags_reach_footer():
    code, out = run("solve", "--example", "1", "--mode", "accumulate", "--cond", "raw", "--max-iters", "20")
    assert code == 3
    assert "# cost_update,accumulate" in out and "# conductivity_update,raw" in out


def test_argparse_rejects_bad_example():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--example", "4"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "physarum_scn", "export", "1"], capture_output=True, text=True, check=True
    )
    assert proc.stdout == dump_instance(builtin_example(1))
