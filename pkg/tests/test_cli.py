"""CLI contract tests: exit codes, output files, replay, config precedence.

These drive ``liouville.cli.main`` in-process with tiny sample counts; the
statistical quality of the estimates is covered by test_estimators.py, so
here we only check plumbing.
"""

import filecmp
import json
import math

import pytest

from liouville.cli import main

GOLDEN_DOZZ_18 = 0.9980272846602821  # c_dozz at gamma=1, mu=1, (1.8,1.8,1.8)


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def test_eval_upsilon_at_q_half(capsys):
    rc, out, _ = run(capsys, "eval", "upsilon", "--gamma", "1", "--z", "1.25,0")
    assert rc == 0
    rec = json.loads(out)
    assert rec["value"] == pytest.approx(1.0, abs=1e-10)
    assert rec["err_bound"] >= 0


def test_eval_rdozz_at_q(capsys):
    rc, out, _ = run(capsys, "eval", "rdozz", "--gamma", "1", "--mu", "1",
                     "--alpha", "2.5")
    assert rc == 0
    assert json.loads(out)["value"] == pytest.approx(-1.0, abs=1e-10)


def test_eval_dozz_json_and_csv(capsys):
    rc, out, _ = run(capsys, "eval", "dozz", "--gamma", "1", "--mu", "1",
                     "--alphas", "1.8,1.8,1.8")
    assert rc == 0
    assert json.loads(out)["value"] == pytest.approx(GOLDEN_DOZZ_18, rel=1e-9)

    rc, out, _ = run(capsys, "eval", "dozz", "--gamma", "1", "--mu", "1",
                     "--alphas", "1.8,1.8,1.8", "--csv")
    assert rc == 0
    header, row = out.strip().splitlines()
    assert header.startswith("quantity,gamma,mu,")
    assert row.split(",")[0] == "dozz"


def test_eval_coefficients_run(capsys):
    for argv in (
        ("eval", "coefB", "--gamma", "1", "--alpha", "1.7"),
        ("eval", "coefA", "--gamma", "1", "--chi", "0.5",
         "--alphas", "1.8,1.9,2.0"),
        ("eval", "coefT", "--gamma", "1", "--alpha-prime", "1.9",
         "--eps", "0.8", "--alpha", "1.7"),
        ("eval", "coefTtilde", "--gamma", "1", "--alpha", "1.7",
         "--eps", "0.8", "--alpha-prime", "1.9"),
    ):
        rc, out, _ = run(capsys, *argv)
        assert rc == 0, argv
        assert math.isfinite(json.loads(out)["value"])


def test_eval_missing_parameter_exits_2(capsys):
    rc, _, err = run(capsys, "eval", "rdozz", "--gamma", "1")
    assert rc == 2
    assert "--alpha" in err


def test_eval_pole_exits_2(capsys):
    # r_dozz pole: alpha = 2/gamma - (n-1) gamma/2 = 2.0 at gamma = 1
    rc, _, err = run(capsys, "eval", "rdozz", "--gamma", "1", "--alpha", "2.0")
    assert rc == 2
    assert err.strip()  # one-line diagnostic


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def test_check_specfun_passes(capsys):
    rc, out, _ = run(capsys, "check", "--suite", "specfun", "--gamma", "1.4",
                     "--points", "3")
    assert rc == 0
    assert "0 failures" in out


def test_check_impossible_tolerance_fails(capsys):
    rc, out, _ = run(capsys, "check", "--suite", "specfun", "--gamma", "1.0",
                     "--points", "3", "--tol", "1e-16")
    assert rc == 1
    assert "FAIL" in out


# ---------------------------------------------------------------------------
# mc
# ---------------------------------------------------------------------------


def test_mc_three_point_files_and_summary(tmp_path, capsys):
    out_base = str(tmp_path / "tp")
    rc, out, _ = run(capsys, "mc", "three-point", "--alphas", "1.8,1.8,1.8",
                     "--samples", "80", "--seed", "11", "--batch", "40",
                     "--out", out_base, "--csv")
    assert rc == 0
    assert "mean" in out and "z=" in out
    rec = json.loads((tmp_path / "tp.jsonl").read_text())
    assert rec["quantity"] == "three-point"
    assert rec["dozz_value"] == pytest.approx(GOLDEN_DOZZ_18, rel=1e-9)
    assert abs(rec["z_score"]) < 10
    manifest = json.loads((tmp_path / "tp.manifest.json").read_text())
    assert manifest["params"]["samples"] == 80
    assert manifest["hash"]
    header = (tmp_path / "tp.csv").read_text().splitlines()[0]
    assert header == ("quantity,gamma,mu,alpha1,alpha2,alpha3,"
                      "mean,stderr,n,dozz_value,z_score,seed")


def test_mc_replay_is_byte_identical(tmp_path, capsys):
    a = str(tmp_path / "a")
    rc, _, _ = run(capsys, "mc", "three-point", "--alphas", "1.8,1.8,1.8",
                   "--samples", "80", "--seed", "3", "--batch", "40",
                   "--out", a)
    assert rc == 0
    b = str(tmp_path / "b")
    rc, _, _ = run(capsys, "mc", "--replay", a + ".manifest.json", "--out", b)
    assert rc == 0
    assert filecmp.cmp(a + ".jsonl", b + ".jsonl", shallow=False)


def test_mc_workers_do_not_change_output(tmp_path, capsys):
    one = str(tmp_path / "w1")
    two = str(tmp_path / "w2")
    args = ("mc", "three-point", "--alphas", "1.8,1.8,1.8", "--samples", "80",
            "--seed", "3", "--batch", "40")
    rc, _, _ = run(capsys, *args, "--out", one, "--workers", "1")
    assert rc == 0
    rc, _, _ = run(capsys, *args, "--out", two, "--workers", "2")
    assert rc == 0
    assert filecmp.cmp(one + ".jsonl", two + ".jsonl", shallow=False)


def test_mc_bounds_violation_exits_2(tmp_path, capsys):
    rc, _, err = run(capsys, "mc", "three-point", "--alphas", "2.6,1.8,1.8",
                     "--samples", "10", "--out", str(tmp_path / "x"))
    assert rc == 2
    assert "Q" in err  # names the violated bound
    assert not (tmp_path / "x.jsonl").exists()


def test_mc_variance_flag_exits_3_but_writes(tmp_path, capsys):
    out_base = str(tmp_path / "v")
    rc, _, err = run(capsys, "mc", "three-point", "--alphas", "2.1,2.1,0.25",
                     "--samples", "24", "--batch", "12", "--out", out_base)
    assert rc == 3
    assert "variance" in err
    rec = json.loads((tmp_path / "v.jsonl").read_text())
    assert rec["variance_ok"] is False


def test_mc_insufficient_tail_exits_3(tmp_path, capsys):
    rc, _, err = run(capsys, "mc", "tail", "--alpha", "2.0", "--z", "4,0",
                     "--rbar", "12.45", "--samples", "500",
                     "--out", str(tmp_path / "t"))
    assert rc == 3
    assert err.strip()


def test_mc_reflection_runs(tmp_path, capsys):
    out_base = str(tmp_path / "r")
    rc, out, _ = run(capsys, "mc", "reflection", "--gamma", "1",
                     "--alpha", "2.1", "--samples", "60", "--batch", "30",
                     "--seed", "5", "--out", out_base)
    assert rc == 0
    rec = json.loads((tmp_path / "r.jsonl").read_text())
    assert rec["dozz_value"] == pytest.approx(-37.19442, rel=1e-5)


def test_mc_two_point_limit_rows(tmp_path, capsys):
    out_base = str(tmp_path / "tpl")
    rc, out, _ = run(capsys, "mc", "two-point-limit", "--gamma", "1",
                     "--alpha", "2.1", "--eps", "0.3,0.2", "--samples", "60",
                     "--batch", "30", "--out", out_base, "--csv")
    assert rc == 3  # per-sample variance is infinite in this regime
    rows = [json.loads(line)
            for line in (tmp_path / "tpl.jsonl").read_text().splitlines()]
    assert len(rows) == 3  # two eps rows + extrapolated
    assert rows[-1]["eps"] == 0.0
    assert rows[-1]["dozz_value"] == pytest.approx(4 * -37.19442, rel=1e-5)


def test_mc_four_point_runs(tmp_path, capsys):
    out_base = str(tmp_path / "fp")
    rc, out, _ = run(capsys, "mc", "four-point", "--gamma", "1",
                     "--alphas", "1.8,1.9,1.9", "--alpha0", "-0.5",
                     "--z", "0.3,0", "--samples", "60", "--batch", "30",
                     "--out", out_base)
    assert rc == 0
    rec = json.loads((tmp_path / "fp.jsonl").read_text())
    assert rec["dozz_value"] == pytest.approx(12.9555, rel=1e-3)
    assert rec["z_re"] == 0.3


def test_mc_moments_rows(tmp_path, capsys):
    out_base = str(tmp_path / "m")
    rc, out, _ = run(capsys, "mc", "moments", "--gamma", "1", "--alpha", "0.5",
                     "--p-list", "1,2", "--eps", "0.25,0.45",
                     "--samples", "60", "--batch", "30", "--out", out_base)
    assert rc == 0
    rows = [json.loads(line)
            for line in (tmp_path / "m.jsonl").read_text().splitlines()]
    kinds = {(r["kind"], r["p"]) for r in rows}
    assert kinds == {("plain", 1.0), ("plain", 2.0),
                     ("weighted", 1.0), ("weighted", 2.0)}


def test_mc_grid_override(tmp_path, capsys):
    out_base = str(tmp_path / "g")
    rc, _, _ = run(capsys, "mc", "three-point", "--alphas", "1.8,1.8,1.8",
                   "--samples", "40", "--batch", "20",
                   "--grid", "half_width=10", "--grid", "levels=5",
                   "--out", out_base)
    assert rc == 0
    manifest = json.loads((tmp_path / "g.manifest.json").read_text())
    assert manifest["grid"]["s_max"] == 10.0


def test_mc_config_file_precedence(tmp_path, capsys):
    conf = tmp_path / "conf.txt"
    conf.write_text("samples = 40\nseed = 9\n")
    out_base = str(tmp_path / "c")
    rc, _, _ = run(capsys, "mc", "three-point", "--alphas", "1.8,1.8,1.8",
                   "--config", str(conf), "--samples", "50", "--batch", "25",
                   "--out", out_base)
    assert rc == 0
    rec = json.loads((tmp_path / "c.jsonl").read_text())
    assert rec["n"] == 50  # flag beats config file
    assert rec["seed"] == 9  # config file beats default
