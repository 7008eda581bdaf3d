import json

from convexlab.cli import parse_and_dispatch


def run(argv):
    return parse_and_dispatch(argv)


def test_mesh_command_writes_file(tmp_path):
    out = tmp_path / "ball.json"
    assert run(["mesh", "--domain", "ball", "--dim", "3", "--refine", "2",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["family"]["tag"] == "Ball"


def test_usage_error_exit_1():
    assert run(["mesh", "--domain", "dodecahedron"]) == 1
    assert run(["frobnicate"]) == 1
    assert run(["convergence", "--domain", "ball", "--levels", "2",
                "--quantity", "volume"]) == 1


def test_solver_failure_exit_2():
    # inadmissible support body: rolling-ball constraint violated
    assert run(["mesh", "--domain", "support", "--coeffs", '{"2,0": 0.3}',
                "--refine", "1"]) == 2


def test_spectrum_command(tmp_path, capsys):
    mesh_file = tmp_path / "disc.json"
    run(["mesh", "--domain", "ball", "--dim", "2", "--refine", "4",
         "--out", str(mesh_file)])
    out = tmp_path / "spec.json"
    assert run(["spectrum", str(mesh_file), "-k", "2", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["command"] == "spectrum"
    assert abs(doc["result"]["eigenvalues"][1] - 1.0) < 0.01


def test_verify_command_exit_codes(tmp_path):
    mesh_file = tmp_path / "ball.json"
    run(["mesh", "--domain", "ball", "--refine", "2", "--out", str(mesh_file)])
    out = tmp_path / "rep.json"
    assert run(["verify", str(mesh_file), "--suite", "all",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["checks"] and doc["config"]["suite"] == "all"


def test_verify_csv(tmp_path):
    mesh_file = tmp_path / "ball.json"
    run(["mesh", "--domain", "ball", "--refine", "1", "--out", str(mesh_file)])
    out = tmp_path / "rep.csv"
    run(["verify", str(mesh_file), "--suite", "topology",
         "--format", "csv", "--out", str(out)])
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config:")
    assert lines[1].startswith("check_id,")


def test_nonlinear_byte_identical(tmp_path):
    mesh_file = tmp_path / "disc.json"
    run(["mesh", "--domain", "ball", "--dim", "2", "--refine", "3",
         "--out", str(mesh_file)])
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert run(["nonlinear", str(mesh_file), "--q", "2", "--starts", "2",
                    "--seed", "7", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_byte_identical(tmp_path):
    mesh_file = tmp_path / "ball.json"
    run(["mesh", "--domain", "ball", "--refine", "2", "--out", str(mesh_file)])
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        run(["verify", str(mesh_file), "--suite", "all", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_convergence_command(tmp_path):
    out = tmp_path / "conv.json"
    assert run(["convergence", "--domain", "ball", "--dim", "3",
                "--levels", "1,2,3", "--quantity", "volume",
                "--out", str(out)]) == 0
    rows = json.loads(out.read_text())["result"]["rows"]
    assert rows[-1]["observed_order"] > 1.5
    errors = [r["error"] for r in rows]
    assert errors == sorted(errors, reverse=True)


def test_convergence_constant_energy(tmp_path):
    out = tmp_path / "conv.json"
    assert run(["convergence", "--domain", "ball", "--dim", "2",
                "--levels", "1,2", "--quantity", "constant-energy",
                "--out", str(out)]) == 0
    rows = json.loads(out.read_text())["result"]["rows"]
    assert all(r["error"] < 1e-10 for r in rows)


def test_solve_command(tmp_path):
    mesh_file = tmp_path / "disc.json"
    run(["mesh", "--domain", "ball", "--dim", "2", "--refine", "3",
         "--out", str(mesh_file)])
    out = tmp_path / "run.json"
    assert run(["solve", str(mesh_file), "--lambda", "1.0",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["classification"] == "Constant"
