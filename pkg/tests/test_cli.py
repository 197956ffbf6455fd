import json
import subprocess
import sys

import pytest

from robustqi.cli import ConfigError, JobConfig, dumps, jsonable, main


def write(tmp_path, cfg, name="job.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def run(tmp_path, cfg, *extra):
    out = tmp_path / "out"
    code = main(["--config", str(write(tmp_path, cfg)), "--out", str(out), *extra])
    return code, out


EX61_CERT = {"construction": "ex61", "job": "certify-pingpong",
             "sampling": {"seed": "3", "samples": "4", "syllable_cap": "2"}}


def test_certify_writes_report(tmp_path):
    code, out = run(tmp_path, EX61_CERT)
    assert code == 0
    rep = json.loads((out / "ex61-certify-pingpong.json").read_text())
    assert rep["status"] == "0" and rep["anchor"] == "ex61:certify-pingpong"
    (cert,) = rep["certificates"]
    assert cert["passed"] and cert["failures"] == "0" and cert["samples"] == "4"
    assert cert["label"] == "ex61:pingpong"


def test_reports_are_deterministic(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    _, out1 = run(tmp_path / "a", EX61_CERT)
    _, out2 = run(tmp_path / "b", EX61_CERT)
    a = (out1 / "ex61-certify-pingpong.json").read_bytes()
    b = (out2 / "ex61-certify-pingpong.json").read_bytes()
    assert a == b


def test_threads_do_not_change_results(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    _, o1 = run(tmp_path / "a", EX61_CERT)
    _, o2 = run(tmp_path / "b", EX61_CERT, "--threads", "3")
    assert (o1 / "ex61-certify-pingpong.json").read_text() == (o2 / "ex61-certify-pingpong.json").read_text()


def test_missing_seed_is_a_config_error(tmp_path, capsys):
    cfg = {"construction": "ex61", "job": "build"}
    code, _ = run(tmp_path, cfg)
    assert code == 2
    assert "seed" in capsys.readouterr().err
    code, _ = run(tmp_path, cfg, "--seed", "1")
    assert code == 0


@pytest.mark.parametrize("cfg", [
    {"construction": "nope", "job": "build", "sampling": {"seed": "1"}},
    {"construction": "ex61", "job": "fly", "sampling": {"seed": "1"}},
    {"construction": "matrix", "job": "perturb-sample", "sampling": {"seed": "1"},
     "field": {"kind": "padic", "prime": "3", "precision": "64"}, "params": {"C": ["1", "3/x"]}},
    {"construction": "matrix", "job": "build", "sampling": {"seed": "1"}},
    {"construction": "ex61", "job": "build", "sampling": {"seed": 1.5}},
    {"construction": "thm1", "job": "build", "sampling": {"seed": "1"}, "params": {"nu": "1/4"}},
    {"construction": "thm3", "job": "build", "sampling": {"seed": "1"}, "params": {"profile": "huge"}},
    {"construction": "ex61", "job": "gap-scan", "sampling": {"seed": "1"}, "scan": {"measure": "time"}},
])
def test_bad_configs_exit_2(tmp_path, cfg):
    code, _ = run(tmp_path, cfg)
    assert code == 2


def test_unreadable_config_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["--config", str(p), "--out", str(tmp_path)]) == 2
    assert main(["--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_perturb_sample_matrix(tmp_path):
    cfg = {"construction": "matrix", "job": "perturb-sample",
           "field": {"kind": "padic", "prime": "3", "precision": "64"},
           "params": {"C": ["1", "2", "4"], "eps": "1/9"},
           "sampling": {"seed": "5", "samples": "6"}}
    code, out = run(tmp_path, cfg)
    assert code == 0
    rep = json.loads((out / "matrix-perturb-sample.json").read_text())
    (cert,) = rep["certificates"]
    assert cert["passed"] and cert["samples"] == "6"


def test_gap_scan_csv(tmp_path):
    cfg = {"construction": "ex61", "job": "gap-scan", "sampling": {"seed": "1"},
           "scan": {"L": "3", "js": ["1", "2"], "measure": "word"},
           "outputs": {"json": "scan.json", "csv": "scan.csv"}}
    code, out = run(tmp_path, cfg)
    assert code == 0
    lines = (out / "scan.csv").read_text().splitlines()
    assert lines[0] == "length,j,min_log_gap,max_log_gap,count"
    assert len(lines) == 1 + 3 * 3
    rep = json.loads((out / "scan.json").read_text())
    assert set(rep["series"][0]["fits"]) == {"1", "2", "qi"}


def test_cor54_gap_scan_one_csv_per_member(tmp_path):
    cfg = {"construction": "cor54", "job": "gap-scan", "sampling": {"seed": "1"},
           "params": {"ratios": ["4", "1"]},
           "scan": {"L": "2", "js": ["1"], "measure": "word", "cap": "2"}}
    code, out = run(tmp_path, cfg)
    assert code == 0
    assert sorted(p.name for p in out.glob("*.csv")) == [
        "cor54-gap-scan-ratio=1.csv", "cor54-gap-scan-ratio=4.csv"]


def test_verdict_exit_zero_even_when_refuted(tmp_path):
    cfg = {"construction": "thm3", "job": "anosov-verdict", "sampling": {"seed": "1"},
           "scan": {"L": "3", "js": ["1"], "cap": "2"}}
    code, out = run(tmp_path, cfg)
    assert code == 0
    rep = json.loads((out / "thm3-anosov-verdict.json").read_text())
    assert rep["verdicts"][0]["verdicts"]["1"]["status"] == "REFUTED-BY-WITNESS"


def test_thm3_build_reports_inadmissible_desk(tmp_path):
    cfg = {"construction": "thm3", "job": "build", "sampling": {"seed": "1"}}
    code, out = run(tmp_path, cfg, "--profile", "desk")
    assert code == 0
    rep = json.loads((out / "thm3-build.json").read_text())
    assert rep["admissible"] is False and rep["profile"] == "desk"


def test_certification_failure_exits_1(tmp_path):
    cfg = {"construction": "ex62", "job": "build", "sampling": {"seed": "1"}}
    code, out = run(tmp_path, cfg)
    # the two h-norm checks fail, so the build report is a failure
    assert code == 1
    rep = json.loads((out / "ex62-build.json").read_text())
    assert rep["checks"]["C(h) <= 2^5"]["ok"] is False


def test_config_object_parsing():
    cfg = JobConfig({"construction": "thm1", "job": "verify-claim",
                     "sampling": {"seed": "7", "powers": "2"}})
    assert cfg.powers == [-2, -1, 1, 2] and cfg.seed == 7
    with pytest.raises(ConfigError):
        JobConfig({"construction": "thm1", "job": "build", "sampling": {"seed": "1/2"}})
    with pytest.raises(ConfigError):
        JobConfig([])


def test_jsonable_forms():
    from fractions import Fraction
    import mpmath
    assert jsonable({"a": Fraction(1, 3), "b": 5, "c": 0.5, "d": True}) == \
        {"a": "1/3", "b": "5", "c": "0.5", "d": True}
    assert jsonable(mpmath.mpf(2)) == "2.0"
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_console_entry_point(tmp_path):
    p = write(tmp_path, {"construction": "ex61", "job": "build", "sampling": {"seed": "1"}})
    res = subprocess.run([sys.executable, "-m", "robustqi.cli", "--config", str(p),
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "o" / "ex61-build.json").exists()
