import json
import os

import pytest

from orientedcp import moments
from orientedcp.cli import main
from orientedcp.reporting import read_csv


def _run(tmp_path, name, *sets, out=None, extra=()):
    out = out or str(tmp_path / name.replace("-", "_"))
    argv = [name, "--out", out]
    for kv in sets:
        argv += ["--set", kv]
    argv += list(extra)
    rc = main(argv)
    return rc, out


def _manifest(out):
    with open(os.path.join(out, "manifest.json")) as fh:
        return json.load(fh)


def test_simulate_decay_without_transmission(tmp_path):
    rc, out = _run(tmp_path, "simulate", "lambda=0.0", "reps=2", "box.L=3",
                   "horizon=2.0")
    assert rc == 0
    digest, header, rows = read_csv(os.path.join(out, "trace.csv"))
    assert header == ["run_id", "t", "n_infected", "rho_weighted_occupancy"]
    man = _manifest(out)
    assert man["manifest_hash"] == digest
    assert man["outputs"] == ["trace.csv"]
    per_run = {}
    for run_id, t, n, occ in rows:
        per_run.setdefault(run_id, []).append((float(t), int(n)))
    assert len(per_run) == 2
    for series in per_run.values():
        assert series == sorted(series)
        counts = [n for _, n in series]
        assert counts == sorted(counts, reverse=True)


def test_fdecay_reports_exact_time_zero(tmp_path):
    rc, out = _run(tmp_path, "f-decay", "box.d=2", "lambda=0.1", "reps=300",
                   "times=0,1", "dist.kind=two_point", "dist.p=0.7")
    assert rc == 0
    _, header, rows = read_csv(os.path.join(out, "fdecay.csv"))
    assert header == ["t", "f_hat", "se", "envelope", "ok"]
    t0 = rows[0]
    assert float(t0[0]) == 0.0
    assert float(t0[1]) == pytest.approx(0.7)
    assert float(t0[2]) == 0.0
    assert all(r[4] == "true" for r in rows)


def test_duality_cli_smoke(tmp_path):
    rc, out = _run(tmp_path, "duality", "lambda=0.8", "box.L=4", "horizon=2.0",
                   "reps=150", "dist.kind=two_point", "dist.p=0.7")
    assert rc == 0
    _, _, rows = read_csv(os.path.join(out, "duality.csv"))
    got = {r[0]: r[1] for r in rows}
    assert float(got["per_realization_agreement"]) == 1.0
    assert int(got["disagreements"]) == 0
    assert 0.0 <= float(got["p_forward_all"]) <= 1.0


def test_zeta_cli_smoke(tmp_path):
    rc, out = _run(tmp_path, "zeta-check", "lambda=1.0", "box.L=4",
                   "horizon=2.0", "reps=150")
    assert rc == 0
    _, _, rows = read_csv(os.path.join(out, "zeta.csv"))
    got = {r[0]: r[1] for r in rows}
    assert int(got["reps"]) == 150
    assert int(got["violations"]) == 0


def test_moments_cli_exact_column(tmp_path):
    rc, out = _run(tmp_path, "moments", "d=2", "n=1,2", "lambda=0.5",
                   "walk_samples=500")
    assert rc == 0
    _, header, rows = read_csv(os.path.join(out, "moments.csv"))
    assert header[:5] == ["d", "n", "lambda", "dist_id", "expected_count_exact"]
    assert len(rows) == 2
    from orientedcp.weights import WeightDistribution
    for row in rows:
        n = int(row[1])
        want = moments.expected_path_count(WeightDistribution.constant(1.0),
                                           2, 0.5, n)
        assert float(row[4]) == pytest.approx(want)
        assert 0.0 <= float(row[7]) <= 1.0


def test_ratio_cli_exact_route(tmp_path):
    rc, out = _run(tmp_path, "ratio", "d=2", "n=2", "lambda=1.0")
    assert rc == 0
    with open(os.path.join(out, "ratio.json")) as fh:
        payload = json.load(fh)
    assert payload["method"] == "exact"
    assert payload["ratio"] >= 1.0
    assert payload["ratio_se"] == 0.0
    assert os.path.exists(os.path.join(out, "ratio.csv"))


def test_walks_cli(tmp_path):
    rc, out = _run(tmp_path, "walks", "d=2,3", "horizon=200", "samples=2000")
    assert rc == 0
    _, header, rows = read_csv(os.path.join(out, "walks.csv"))
    assert header == ["d", "horizon", "samples", "tau_ge2_prob", "se",
                      "d2_scaled", "censored_frac"]
    assert [int(r[0]) for r in rows] == [2, 3]
    for r in rows:
        q, scaled = float(r[3]), float(r[5])
        assert 0.0 < q < 1.0
        assert scaled == pytest.approx(q * int(r[0]) ** 2)


def test_functional_cli(tmp_path):
    rc, out = _run(tmp_path, "functional", "d=3", "lambda=0.3", "samples=400",
                   "horizon=128")
    assert rc == 0
    with open(os.path.join(out, "functional.json")) as fh:
        payload = json.load(fh)
    assert payload["value"] > 0.0
    assert sum(s for _, s in payload["m_sums"]) == pytest.approx(payload["value"])


def test_critscan_cli(tmp_path):
    rc, out = _run(tmp_path, "critscan", "d=2", "L=5", "horizon=6.0",
                   "reps_per_probe=150", "tol=0.1", "check_box=false")
    assert rc == 0
    _, header, rows = read_csv(os.path.join(out, "probes.csv"))
    assert header == ["d", "dist_id", "lambda", "p_hat", "se", "L", "horizon",
                      "reps"]
    assert len(rows) >= 3
    with open(os.path.join(out, "critscan.json")) as fh:
        (summary,) = json.load(fh)
    assert summary["status"] in ("converged", "statistically_limited")
    assert summary["scaled"] > 0.0
    with open(os.path.join(out, "critscan.svg")) as fh:
        svg = fh.read()
    assert svg.startswith("<svg") and "</svg>" in svg


def test_report_cli_aggregates_runs(tmp_path):
    _, out_a = _run(tmp_path, "walks", "d=2", "horizon=50", "samples=200")
    _, out_b = _run(tmp_path, "ratio", "d=2", "n=1", "lambda=1.0")
    rc, out = _run(tmp_path, "report", f"dirs={out_a},{out_b}")
    assert rc == 0
    with open(os.path.join(out, "report.json")) as fh:
        payload = json.load(fh)
    assert [e["subcommand"] for e in payload["runs"]] == ["walks", "ratio"]
    with open(os.path.join(out, "report.md")) as fh:
        text = fh.read()
    assert "walks" in text and "ratio" in text


def test_unknown_key_exits_2(tmp_path, capsys):
    rc, _ = _run(tmp_path, "walks", "d=2", "bogus=1")
    assert rc == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_missing_required_exits_2(tmp_path, capsys):
    rc, _ = _run(tmp_path, "ratio", "d=2", "n=1")
    assert rc == 2
    assert "lambda" in capsys.readouterr().err


def test_bad_dist_kind_exits_2(tmp_path, capsys):
    rc, _ = _run(tmp_path, "duality", "lambda=0.5", "reps=5", "dist.kind=gamma")
    assert rc == 2
    assert "dist.kind" in capsys.readouterr().err


def test_bad_set_pair_exits_2(tmp_path, capsys):
    rc, _ = _run(tmp_path, "walks", "novalue")
    assert rc == 2
    assert "K=V" in capsys.readouterr().err


def test_table_dist_requires_both_keys(tmp_path, capsys):
    rc, _ = _run(tmp_path, "duality", "lambda=0.5", "reps=5",
                 "dist.kind=table", "dist.values=1,2")
    assert rc == 2
    assert "dist.probs" in capsys.readouterr().err


def test_resource_limit_exits_3(tmp_path, capsys):
    rc, _ = _run(tmp_path, "simulate", "lambda=0.1", "box.d=12", "box.L=31")
    assert rc == 3
    assert "resource limit" in capsys.readouterr().err


def test_unbracketable_scan_exits_2(tmp_path, capsys):
    # a 3x3 box drains long before a horizon of 50 at any rate, so the
    # supercritical end can never be found
    rc, _ = _run(tmp_path, "critscan", "d=2", "L=2", "horizon=50",
                 "reps_per_probe=100", "threshold=0.5", "check_box=false")
    assert rc == 2
    err = capsys.readouterr().err
    assert "scan failed" in err and "probed rate=" in err


def test_jobs_validation(tmp_path, capsys):
    rc, _ = _run(tmp_path, "walks", "d=2", extra=("--jobs", "0"))
    assert rc == 2
    assert "--jobs" in capsys.readouterr().err


def test_manifest_rerun_is_byte_identical(tmp_path):
    rc, out_a = _run(tmp_path, "f-decay", "box.d=2", "lambda=0.15", "reps=200",
                     "times=0,1,2", "dist.kind=two_point", "dist.p=0.6",
                     "seed=5")
    assert rc == 0
    out_b = str(tmp_path / "rerun")
    rc = main(["f-decay", "--config", os.path.join(out_a, "manifest.json"),
               "--out", out_b])
    assert rc == 0
    for name in ("fdecay.csv", "manifest.json"):
        with open(os.path.join(out_a, name), "rb") as fh:
            a = fh.read()
        with open(os.path.join(out_b, name), "rb") as fh:
            b = fh.read()
        assert a == b, name


def test_seed_flag_wins_over_config(tmp_path):
    _, out_a = _run(tmp_path, "walks", "d=2", "horizon=20", "samples=100",
                    "seed=1", out=str(tmp_path / "a"))
    _, out_b = _run(tmp_path, "walks", "d=2", "horizon=20", "samples=100",
                    "seed=1", out=str(tmp_path / "b"), extra=("--seed", "2"))
    man_a, man_b = _manifest(out_a), _manifest(out_b)
    assert man_a["seed"] == 1 and man_b["seed"] == 2
    assert man_a["manifest_hash"] != man_b["manifest_hash"]


def test_config_file_with_comments_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# pure-death smoke\n"
        "lambda = 0.0\n"
        "reps = 1\n"
        "box.L = 3\n"
        "horizon = 1.0\n")
    out = str(tmp_path / "cfgrun")
    rc = main(["simulate", "--config", str(cfg), "--set", "reps=2",
               "--out", out])
    assert rc == 0
    man = _manifest(out)
    assert man["config"]["reps"] == 2
    assert man["config"]["lambda"] == 0.0
    assert man["config"]["box.L"] == 3


def test_jobs_do_not_change_results(tmp_path):
    _, out_a = _run(tmp_path, "zeta-check", "lambda=0.8", "box.L=3",
                    "horizon=1.5", "reps=80", out=str(tmp_path / "j1"))
    out_b = str(tmp_path / "j2")
    rc = main(["zeta-check", "--set", "lambda=0.8", "--set", "box.L=3",
               "--set", "horizon=1.5", "--set", "reps=80", "--out", out_b,
               "--jobs", "2"])
    assert rc == 0
    with open(os.path.join(out_a, "zeta.csv"), "rb") as fh:
        a = fh.read()
    with open(os.path.join(out_b, "zeta.csv"), "rb") as fh:
        b = fh.read()
    assert a == b
