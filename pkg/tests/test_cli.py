import json
import math

import pytest

from selberg_lab import cli


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    rc = cli.main([*argv, "--out", str(out)])
    data = json.loads(out.read_text()) if out.exists() else None
    return rc, data


def test_transforms_table(tmp_path):
    rc, d = run(tmp_path, "transforms", "--window", "0.5,5", "--t", "1", "--family", "H", "--grid", "12")
    assert rc == 0
    part = d["payload"]["result"]["parts"][0]
    assert part["g0"] == pytest.approx((math.sqrt(4.75) - 0.5) / math.pi, abs=1e-14)
    assert part["dual_path"]["K_max_rel_delta"] < 1e-7
    assert part["dual_path"]["g_max_abs_delta"] < 1e-8
    assert set(d["metadata"]) >= {"version", "threads", "elapsed_s"}


def test_family_B_wide_window_rejected(tmp_path, capsys):
    rc, d = run(tmp_path, "transforms", "--window", "0,2", "--family", "B")
    assert rc == 3
    assert "b <= 1" in capsys.readouterr().err


def test_seed_required(tmp_path):
    rc, _ = run(tmp_path, "trace", "--window", "0.5,5", "--family", "H")
    assert rc == 3


def test_usage_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["trace", "--samples", "many"])
    assert exc.value.code == 3


def test_family_B_trace_certification_failure(tmp_path):
    rc, _ = run(tmp_path, "trace", "--window", "0.3,0.8", "--family", "B", "--t", "1", "--samples", "200", "--seed", "1")
    assert rc == 2


def test_trace_with_synthetic_spectrum(tmp_path):
    from selberg_lab import fuchsian as fu
    from selberg_lab import traceformula as tfm
    from selberg_lab import transforms as tr

    tf = tr.TestFunction.H(0.5, 5.0, 0.5)
    spec = tfm.synthetic_spectrum(tf, 2.0, 4 * math.pi)
    p = tmp_path / "s.json"
    tfm.save_spectrum(spec, p)
    rc, d = run(tmp_path, "trace", "--window", "0.5,5", "--family", "H", "--t", "0.5", "--samples", "500", "--seed", "3", "--spectrum", str(p))
    assert rc == 0
    res = d["payload"]["result"]
    assert math.isfinite(res["residual_total"])
    assert res["parts"][0]["residual_sigma"] > 0


def test_count_and_csv(tmp_path, capsys):
    sp = tmp_path / "sp.json"
    sp.write_text(json.dumps([0, 0.5, 1.2, 3.0]))
    rc, d = run(tmp_path, "count", "--spectrum", str(sp), "--genus", "100")
    assert rc == 0
    r = d["payload"]["result"]
    assert r["count"] == 3
    assert r["c"] == 2.0**-15
    assert cli.main(["count", "--window", "0,2", "--genus", "1000", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("a,b,count")


def test_bs_rows(tmp_path):
    rc, d = run(tmp_path, "bs", "--L", "1.0,1.6", "--samples", "1000", "--seed", "1")
    assert rc == 0
    rows = d["payload"]["result"]["rows"]
    assert rows[0]["estimate"]["certified_zero"]
    assert rows[1]["bound"]["count"] == 12
    assert all(r["verdict"] == "pass" for r in rows)


def test_missing_surface(tmp_path):
    rc, _ = run(tmp_path, "bs", "--surface", "/nope.json", "--seed", "1")
    assert rc == 3


def test_clean_non_finite():
    assert cli.clean({"x": math.inf, "y": [1.0, math.nan]}) == {"x": "inf", "y": [1.0, "nan"]}
