import json
import math
import subprocess
import sys

import pytest

from trunclap.cli import ConfigError, _pool_size, build_parser, config_from_args, main
from trunclap.mesh import RadialProfile


def _json(path):
    return json.loads(path.read_text())


def test_eigen_fem_example(tmp_path):
    assert main(["eigen", "--k", "3", "--gamma", "0", "--method", "fem", "--n", "2000",
                 "--out", str(tmp_path)]) == 0
    out = _json(tmp_path / "eigen.json")
    assert abs(out["lambda"] - math.pi**2) < 1e-3
    assert out["method"] == "fem" and out["profile"] == "profile.csv"
    prof = RadialProfile.from_csv(tmp_path / "profile.csv")
    assert prof.u[-1] == 0.0 and max(prof.u) == 1.0
    assert (tmp_path / "profile.csv").read_text().splitlines()[0] == "r,u,du,d2u"


def test_eigen_to_stdout(capsys):
    assert main(["eigen", "--k", "3", "--method", "shooting", "--bracket", "5", "15"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["lambda"] - math.pi**2) < 1e-6
    assert "profile" not in out


def test_eigen_closed_form(tmp_path):
    assert main(["eigen", "--k", "4", "--gamma", "2", "--method", "closed-form",
                 "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "eigen.json")["lambda"] == 1.0


def test_solve_classify_verify_chain(tmp_path, capsys):
    solve = tmp_path / "solve"
    assert main(["solve", "--op", "pkm", "--k", "2", "--mu", "8", "--p", "3", "--r0", "0.5",
                 "--u0", "auto-c0", "--out", str(solve)]) == 0
    sol = _json(solve / "solution.json")
    assert sol["solution"]["family"] == "pkm_case3"
    assert sol["limit"]["constant"] == pytest.approx(math.sqrt(6.0), rel=1e-12)
    assert _json(solve / "events.json") == []

    cls_dir = tmp_path / "cls"
    assert main(["classify", "--in", str(solve / "profile.csv"), "--out", str(cls_dir)]) == 0
    cls = _json(cls_dir / "classification.json")
    assert cls["tag"] == "exp_scaling" and cls["exponent"] == pytest.approx(1.0)

    capsys.readouterr()
    assert main(["verify", "--in", str(solve / "profile.csv"), "--checks", "consistency,convexity"]) == 0
    table = capsys.readouterr().out
    assert "convexity_structure" in table and "PASS" in table


def test_verify_fails_with_exit_1(tmp_path, capsys):
    prof = RadialProfile([0.1, 0.2, 0.4, 1.0], [-2.3, -1.6, -0.9, 0.0],
                         [10.0, 5.0, 2.5, 1.0], [-100.0, -25.0, -6.25, -1.0])
    path = tmp_path / "log.csv"
    prof.to_csv(path)
    assert main(["verify", "--in", str(path), "--out", str(tmp_path)]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert _json(tmp_path / "verify.json")[0]["passed"] is False


def test_solve_pkp_event_log(tmp_path):
    assert main(["solve", "--op", "pkp", "--k", "4", "--mu", "0.75", "--p", "3", "--r0", "0.5",
                 "--u0", "1", "--du0", "-0.5", "--out", str(tmp_path)]) == 0
    events = [e["event"] for e in _json(tmp_path / "events.json")]
    assert events == ["branch_crossing", "u_zero"]
    assert _json(tmp_path / "solution.json")["status"] == "u_zero"


def test_solve_pkp_recipe_and_json_format(tmp_path):
    assert main(["solve", "--op", "pkp", "--k", "4", "--mu", "0.75", "--p", "6", "--r0", "0.5",
                 "--recipe", "scaling", "--format", "json", "--out", str(tmp_path)]) == 0
    prof = RadialProfile.from_json((tmp_path / "profile.json").read_text())
    assert prof.r[0] == pytest.approx(1e-4)
    assert main(["classify", "--in", str(tmp_path / "profile.json"), "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "classification.json")["tag"] == "exp_scaling"


def test_solve_picard_and_supersolution(tmp_path):
    assert main(["solve", "--op", "picard", "--k", "3", "--mu", "5", "--n", "500",
                 "--out", str(tmp_path / "a")]) == 0
    assert _json(tmp_path / "a" / "solution.json")["status"] == "converged"
    assert main(["solve", "--op", "pkm-super", "--k", "2", "--mu", "4",
                 "--out", str(tmp_path / "b")]) == 0
    assert _json(tmp_path / "b" / "solution.json")["solution"]["family"] == "pkm_supersolution"


def test_determinism(tmp_path):
    args = ["solve", "--op", "pkm", "--k", "2", "--mu", "4", "--p", "2", "--c", "0.3"]
    for d in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / d)]) == 0
    for name in ("solution.json", "profile.csv", "events.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = _json(tmp_path / "a" / "run_meta.json")
    assert "finished" in meta and "finished" not in _json(tmp_path / "a" / "solution.json")


@pytest.mark.parametrize("argv", [
    ["eigen", "--k", "2", "--gamma", "2"],
    ["eigen", "--k", "3", "--gamma", "2.5"],
    ["eigen", "--k", "3", "--n", "0"],
    ["solve", "--op", "pkm", "--k", "2", "--mu", "8"],
    ["solve", "--op", "pkp", "--k", "4", "--mu", "0.75", "--p", "3", "--r0", "0.5", "--u0", "0",
     "--du0", "1"],
    ["eigen", "--k", "3", "--method", "shooting", "--bracket", "1", "5"],
    ["sweep", "--k", "3,x"],
    ["eigen", "--bogus"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_degenerate_flag(tmp_path):
    assert main(["eigen", "--k", "3", "--gamma", "2.5", "--allow-degenerate", "--r-min", "1e-3",
                 "--n", "500", "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "eigen.json")["lambda"] > 0


def test_sweep_keeps_grid_order(tmp_path, monkeypatch):
    monkeypatch.setenv("TRUNCLAP_THREADS", "2")
    assert main(["sweep", "--k", "4,2,3", "--gamma", "0,1", "--n", "400", "--r-min", "1e-6",
                 "--out", str(tmp_path), "--format", "json"]) == 0
    rows = _json(tmp_path / "sweep.json")["rows"]
    assert [(r["k"], r["gamma"]) for r in rows] == [(4, 0.0), (4, 1.0), (2, 0.0), (2, 1.0),
                                                     (3, 0.0), (3, 1.0)]
    assert rows[4]["lam"] == pytest.approx(math.pi**2, rel=1e-3)
    serial = tmp_path / "serial"
    monkeypatch.setenv("TRUNCLAP_THREADS", "1")
    assert main(["sweep", "--k", "4,2,3", "--gamma", "0,1", "--n", "400", "--r-min", "1e-6",
                 "--out", str(serial), "--format", "json"]) == 0
    assert (serial / "sweep.json").read_bytes() == (tmp_path / "sweep.json").read_bytes()


def test_sweep_pkp_csv(tmp_path):
    assert main(["sweep", "--kind", "pkp", "--k", "4", "--mu", "0.75", "--p", "2,6",
                 "--recipe", "scaling", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3 and "tag" in lines[0]
    assert all("exp_scaling" in line for line in lines[1:])


def test_pool_size_cap(monkeypatch):
    monkeypatch.setenv("TRUNCLAP_THREADS", "3")
    assert _pool_size(8) == 3
    monkeypatch.delenv("TRUNCLAP_THREADS")
    assert _pool_size(5) == 5


def test_config_validation_direct():
    args = build_parser().parse_args(["eigen", "--k", "3", "--grading", "1.5"])
    with pytest.raises(ConfigError):
        config_from_args(args)


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "trunclap", "eigen", "--k", "1", "--n", "800"],
                         capture_output=True, text=True, check=True)
    assert abs(json.loads(out.stdout)["lambda"] - math.pi**2 / 4) < 1e-4
