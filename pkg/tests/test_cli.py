import csv
import io
import json

import numpy as np
import pytest

from monodec.algebra import restrict_to_line
from monodec.cli import EXIT_CONFIG, EXIT_IO, ConfigError, RunConfig, bench, main, solve
from monodec.problems import make_problem
from monodec.serialize import (
    CSV_COLUMNS,
    ProblemFileError,
    SolutionReport,
    instance_to_json,
    load_report,
    parse_problem_file,
    write_problem_file,
    write_stats_csv,
)


def run_json(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- list ---------------------------------------------------------------------------------


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    lines = {line.split()[0]: line.split() for line in out.splitlines()[1:]}
    assert lines["cyclic(5)"][3] == "70"
    assert "power(n)" in lines
    assert lines["gaussian(2)"][4] == "9"


# -- solve ----------------------------------------------------------------------------------


def test_solve_cyclic5_decomposable(tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", "--problem", "cyclic5", "--mode", "decomposable", "--rng-seed", "7", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["stats"]["classes_found"] == 7
    assert report["complete"] is True
    assert len(report["points"]) == 7
    assert report["degrees"] == [10, 7]


def test_solve_power10_standard(capsys):
    report = run_json(capsys, "solve", "--problem", "power", "--n", "10", "--mode", "standard")
    assert len(report["points"]) == 20
    assert report["degrees"] == [10, 2]
    assert sorted(len(c) for c in report["classes"]) == [10, 10]


def test_solve_mixedvol_decomposable(capsys):
    report = run_json(capsys, "solve", "--problem", "mixedvol", "--mode", "decomposable")
    assert report["stats"]["classes_found"] == 2


def test_incomplete_run_exits_zero(capsys):
    report = run_json(capsys, "solve", "--problem", "cyclic5", "--max-loops", "1")
    assert report["complete"] is False
    assert report["degrees"] is None
    assert report["stats"]["loops_taken"] == 1


def test_classes_partition_points(capsys):
    report = run_json(capsys, "solve", "--problem", "gaussian2", "--rng-seed", "3")
    idx = sorted(i for c in report["classes"] for i in c)
    assert idx == list(range(len(report["points"])))


def test_solve_is_reproducible():
    cfg = RunConfig(problem="cyclic5", mode="decomposable", seed=12)
    a, b = solve(cfg).to_json(), solve(cfg).to_json()
    a["stats"].pop("wall_ms")
    b["stats"].pop("wall_ms")
    assert a == b


def test_report_round_trip_is_bit_identical(tmp_path):
    report = solve(RunConfig(problem="power", n=3, seed=1))
    path = tmp_path / "r.json"
    path.write_text(report.dumps())
    loaded = load_report(path)
    assert len(loaded.points) == len(report.points)
    for p, q in zip(report.points, loaded.points):
        assert np.array_equal(p, q)
    assert loaded.classes == report.classes
    assert loaded.degrees == report.degrees


def test_reloaded_points_verify_independently(tmp_path):
    cfg = RunConfig(problem="gaussian2", seed=5)
    path = tmp_path / "r.json"
    path.write_text(solve(cfg).dumps())
    loaded = load_report(path)
    # rebuild the curve from the reported line rather than reusing solver state
    system = make_problem("gaussian2", np.random.default_rng(0)).system
    curve = restrict_to_line(system, loaded.line_base, loaded.line_direction)
    assert loaded.points
    for p in loaded.points:
        assert curve.residual_norm(p, loaded.base) < 1e-8


def test_env_seed_and_flag_override(monkeypatch, capsys):
    monkeypatch.setenv("MONODEC_SEED", "4")
    from_env = run_json(capsys, "solve", "--problem", "mixedvol", "--mode", "decomposable")
    assert from_env["seed"] == 4
    flagged = run_json(capsys, "solve", "--problem", "mixedvol", "--mode", "decomposable", "--rng-seed", "9")
    assert flagged["seed"] == 9


def test_stats_csv_from_solve(tmp_path, capsys):
    path = tmp_path / "s.csv"
    run_json(capsys, "solve", "--problem", "power", "--n", "2", "--stats-csv", str(path))
    rows = read_csv(path)
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0]["problem"] == "power" and rows[0]["mode"] == "standard"


# -- configuration and I/O errors --------------------------------------------------------------


def test_bad_problem_name(capsys):
    assert main(["solve", "--problem", "nope"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_bad_env_seed(monkeypatch):
    monkeypatch.setenv("MONODEC_SEED", "seven")
    assert main(["solve", "--problem", "power"]) == EXIT_CONFIG


def test_missing_input_file(tmp_path):
    assert main(["solve", "--input", str(tmp_path / "missing.json")]) == EXIT_IO


def test_problem_and_input_are_exclusive(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["solve", "--problem", "power", "--input", str(tmp_path / "x.json")])
    assert info.value.code == EXIT_CONFIG


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig()
    with pytest.raises(ConfigError):
        RunConfig(problem="power", seed=-1)
    with pytest.raises(ConfigError):
        RunConfig(problem="power", threads=0)


def test_decomposable_needs_alpha(tmp_path):
    P = make_problem("cyclic5", np.random.default_rng(1))
    data = instance_to_json(P)
    del data["alpha"]
    path = tmp_path / "noalpha.json"
    path.write_text(json.dumps(data))
    assert main(["solve", "--input", str(path), "--mode", "decomposable"]) == EXIT_CONFIG


# -- problem files ----------------------------------------------------------------------------


def test_problem_file_round_trip(tmp_path):
    P = make_problem("cyclic5", np.random.default_rng(2))
    path = tmp_path / "c5.json"
    write_problem_file(P, path)
    Q = parse_problem_file(path)
    assert Q.system == P.system
    assert Q.alpha.components == P.alpha.components
    assert np.array_equal(Q.line_base, P.line_base)
    assert np.array_equal(Q.line_direction, P.line_direction)
    assert Q.known_degree == 70


def test_bad_seed_rejected(tmp_path):
    data = instance_to_json(make_problem("cyclic5", np.random.default_rng(3)))
    data["seed"]["x"][0][0] += 0.1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ProblemFileError, match="residual"):
        parse_problem_file(path)
    assert main(["solve", "--input", str(path)]) == EXIT_CONFIG


def test_missing_line_drawn_from_run_seed(tmp_path):
    data = instance_to_json(make_problem("cyclic5", np.random.default_rng(4)))
    u_star = data["line"]["base"]
    del data["line"]
    data["seed"] = {"x": data["seed"]["x"], "u": u_star}
    path = tmp_path / "noline.json"
    path.write_text(json.dumps(data))
    a = parse_problem_file(path, np.random.default_rng(1))
    b = parse_problem_file(path, np.random.default_rng(1))
    c = parse_problem_file(path, np.random.default_rng(2))
    assert np.array_equal(a.line_direction, b.line_direction)
    assert not np.array_equal(a.line_direction, c.line_direction)
    assert np.allclose(a.line_base, [complex(*z) for z in u_star])
    assert a.base == 0


def strip_line_and_seed(P, path):
    data = instance_to_json(P)
    del data["line"]
    del data["seed"]
    path.write_text(json.dumps(data))
    return path


def test_missing_seed_solved_from_affine_parameters(tmp_path):
    path = strip_line_and_seed(make_problem("cyclic5", np.random.default_rng(5)), tmp_path / "noseed.json")
    P = parse_problem_file(path, np.random.default_rng(6))
    assert P.curve.residual_norm(P.seed_x, P.base) < 1e-9


def test_missing_seed_needs_parameters_in_every_equation(tmp_path):
    # the weight constraint a1 + a2 = 1 has no parameter to absorb a random point
    path = strip_line_and_seed(make_problem("gaussian2", np.random.default_rng(5)), tmp_path / "noseed.json")
    with pytest.raises(ProblemFileError, match="seed"):
        parse_problem_file(path, np.random.default_rng(6))


def test_alpha_with_parameters_rejected(tmp_path):
    P = make_problem("mixedvol", np.random.default_rng(7))
    data = instance_to_json(P)
    # x1 + u1, written over variables and parameters
    data["alpha"] = [[{"coeff": [1.0, 0.0], "exps": [1, 0, 0, 0, 0, 0, 0]}, {"coeff": [1.0, 0.0], "exps": [0, 0, 1, 0, 0, 0, 0]}]]
    path = tmp_path / "alpha.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ProblemFileError, match="parameters"):
        parse_problem_file(path)


def test_malformed_file(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    with pytest.raises(ProblemFileError):
        parse_problem_file(path)
    path.write_text(json.dumps({"variables": ["x"], "parameters": [], "equations": [[{"coeff": [1, 0], "exps": [1, 2]}]]}))
    with pytest.raises(ProblemFileError):
        parse_problem_file(path)


def test_solve_from_file(tmp_path, capsys):
    P = make_problem("mixedvol", np.random.default_rng(8))
    path = tmp_path / "mv.json"
    write_problem_file(P, path)
    report = run_json(capsys, "solve", "--input", str(path), "--max-loops", "40")
    # the saturation filter is not part of the file, so points on x1 x2 = 0 may appear too
    assert len(report["points"]) >= 4


# -- bench ---------------------------------------------------------------------------------------


def test_bench_single_repeat_summary_is_flat():
    rows, summary = bench(RunConfig(problem="power", n=3, seed=2), ["standard"], 1)
    assert len(rows) == 1 and len(summary) == 4
    for col in ("loops_taken", "paths_tracked"):
        assert len({r[col] for r in summary}) == 1
        assert summary[0][col] == rows[0][col]


def test_bench_power5_both_modes(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--problem", "power", "--n", "5", "--mode", "both", "--repeat", "3", "--rng-seed", "10", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert tuple(rows[0]) == CSV_COLUMNS
    runs = [r for r in rows if r["seed"].isdigit()]
    assert [int(r["seed"]) for r in runs] == [10, 11, 12, 10, 11, 12]
    assert all(int(r["classes_found"]) == 2 for r in runs if r["mode"] == "decomposable")
    labels = [r["seed"] for r in rows if not r["seed"].isdigit()]
    assert labels == ["best", "average", "median", "worst"] * 2


def test_bench_rejects_zero_repeat():
    with pytest.raises(ConfigError):
        bench(RunConfig(problem="power"), ["standard"], 0)


def test_write_stats_csv_to_stream():
    buf = io.StringIO()
    write_stats_csv([{"problem": "p", "mode": "standard", "seed": 1, "loops_taken": 2}], buf)
    header, row = buf.getvalue().splitlines()
    assert header == ",".join(CSV_COLUMNS)
    assert row.startswith("p,standard,1,2")


def test_report_from_json_defaults():
    r = SolutionReport("p", "standard", 0, np.zeros(1), np.ones(1), 0j, [np.ones(1)], [[0]], {})
    again = SolutionReport.from_json(json.loads(r.dumps()))
    assert again.degrees is None and again.points[0][0] == 1
