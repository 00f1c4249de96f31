import json
import math
import subprocess
import sys
from pathlib import Path

import pytest


def run_cli(*args: str, env_extra: dict | None = None) -> subprocess.CompletedProcess:
    import os
    env = os.environ.copy()
    if env_extra:
        env.update(env_extra)
    cmd = [sys.executable, "-m", "taubnut", *args]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


def test_version_and_help():
    cp = run_cli("--version")
    assert cp.returncode == 0
    assert "0.1.0" in cp.stdout
    cp = run_cli("--help")
    assert cp.returncode == 0
    for sub in ("eval", "geodesic", "contour", "energy", "volume",
                "blowdown", "verify"):
        assert sub in cp.stdout


# ----------------------------------------------------------------------- eval

def test_eval_example():
    cp = run_cli("eval", "--family", "generalized", "--M", "1.41421356",
                 "--k", "0.5", "--chart", "uv", "--point", "1,1")
    assert cp.returncode == 0, cp.stderr
    doc = json.loads(cp.stdout)
    assert doc["version"] == "0.1.0"
    assert doc["params"]["family"] == "GeneralizedTN"
    assert doc["quantities"]["conformal_factor"] == pytest.approx(6.0,
                                                                  rel=1e-7)


def test_eval_defaults_standard_scale():
    cp = run_cli("eval", "--point", "2,3")
    doc = json.loads(cp.stdout)
    assert doc["params"]["M"] == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert doc["params"]["k"] == 0
    assert doc["quantities"]["conformal_factor"] == pytest.approx(28.0,
                                                                  rel=1e-12)


def test_eval_moment_chart_roundtrip():
    cp1 = run_cli("eval", "--k", "0.5", "--chart", "uv", "--point", "1,1")
    q = json.loads(cp1.stdout)["quantities"]
    cp2 = run_cli("eval", "--k", "0.5", "--chart", "moment", "--point",
                  f"{q['moment_1']!r},{q['moment_2']!r}".replace("'", ""))
    doc2 = json.loads(cp2.stdout)
    assert doc2["point"]["u"] == pytest.approx(1.0, rel=1e-9)
    assert doc2["point"]["v"] == pytest.approx(1.0, rel=1e-9)


def test_eval_out_file(tmp_path: Path):
    out = tmp_path / "point.json"
    cp = run_cli("eval", "--point", "1,1", "--out", str(out))
    assert cp.returncode == 0
    assert cp.stdout == ""
    doc = json.loads(out.read_text())
    assert "quantities" in doc


def test_eval_deterministic():
    a = run_cli("eval", "--k", "0.9", "--point", "0.3,2.7").stdout
    b = run_cli("eval", "--k", "0.9", "--point", "0.3,2.7").stdout
    assert a == b


@pytest.mark.parametrize("args", [
    ("eval", "--family", "nosuch", "--point", "1,1"),
    ("eval", "--k", "1.5", "--point", "1,1"),
    ("eval", "--point", "1"),
    ("eval", "--point", "1,b"),
    ("eval", "--family", "exceptional", "--M", "2", "--point", "1,1"),
    ("nosuchcommand",),
])
def test_bad_arguments_exit_2(args):
    cp = run_cli(*args)
    assert cp.returncode == 2
    assert cp.stdout == "" or "usage" in cp.stderr.lower() \
        or "error" in cp.stderr.lower()


# ------------------------------------------------------------------- geodesic

def test_geodesic_csv():
    cp = run_cli("geodesic", "--k", "0.5", "--eta", "0.7", "--R", "5")
    assert cp.returncode == 0, cp.stderr
    lines = cp.stdout.strip().splitlines()
    assert lines[0] == "t,u,v,R,distance_residual,unparam_residual"
    first = lines[1].split(",")
    assert [float(x) for x in first] == [0.0] * 6
    last = lines[-1].split(",")
    assert float(last[0]) == 5.0
    assert abs(float(last[3]) - 5.0) < 1e-8
    assert float(last[4]) < 1e-8 and float(last[5]) < 1e-8


# -------------------------------------------------------------------- contour

def test_contour_level0_origin_only():
    cp = run_cli("contour", "--family", "generalized", "--k", "0.5",
                 "--eta", "0", "--levels", "8")
    assert cp.returncode == 0, cp.stderr
    lines = cp.stdout.strip().splitlines()
    assert lines[0] == "curve,kind,param,u,v,value"
    zero_rows = [l for l in lines[1:] if l.startswith("level-0,")]
    assert len(zero_rows) == 1
    _, _, _, u, v, val = zero_rows[0].split(",")
    assert float(u) == float(v) == float(val) == 0.0
    assert any(l.startswith("geodesic-") for l in lines[1:])


def test_contour_svg(tmp_path: Path):
    out = tmp_path / "c.svg"
    cp = run_cli("contour", "--family", "halfplane", "--R", "2",
                 "--format", "svg", "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    text = out.read_text()
    assert text.startswith("<svg")
    assert "<polyline" in text


# --------------------------------------------------------------------- energy

def test_energy_json():
    cp = run_cli("energy", "--k", "0.5")
    doc = json.loads(cp.stdout)
    assert doc["l2_ricci_closed"] == pytest.approx(
        4.0 * math.pi ** 2 * 0.25 / 0.75, rel=1e-12)
    assert doc["rel_error"] < 1e-6
    assert doc["l2_riemann"] == pytest.approx(
        32.0 * math.pi ** 2 + 4.0 * doc["l2_ricci_closed"], rel=1e-12)


def test_energy_divergent_family_csv():
    cp = run_cli("energy", "--family", "exceptional", "--format", "csv")
    lines = cp.stdout.strip().splitlines()
    assert lines[0] == "quantity,value"
    table = dict(l.split(",", 1) for l in lines[1:])
    assert table["l2_ricci_closed"] == "inf"
    assert float(table["growth_exponent"]) == pytest.approx(2.0, abs=0.05)


# --------------------------------------------------------------------- volume

def test_volume_csv_with_small_radius():
    cp = run_cli("volume", "--k", "0", "--R", "5,50,100")
    lines = cp.stdout.strip().splitlines()
    assert lines[0] == "R,vol,bracket_lo,bracket_hi"
    r5 = lines[1].split(",")
    assert r5[2] == "" and r5[3] == ""      # bracket needs R >= 10
    r50 = lines[2].split(",")
    assert float(r50[2]) < float(r50[1]) < float(r50[3])


def test_volume_json_growth():
    cp = run_cli("volume", "--family", "exceptional",
                 "--R", "50,100,200,400", "--format", "json")
    doc = json.loads(cp.stdout)
    assert doc["growth_exponent"] == pytest.approx(4.0, abs=0.05)
    assert len(doc["volumes"]) == 4


# ------------------------------------------------------------------- blowdown

@pytest.mark.parametrize("construction", ["conifold", "second",
                                          "exceptional", "pointed"])
def test_blowdown_residuals_monotone(construction):
    cp = run_cli("blowdown", "--construction", construction,
                 "--format", "json")
    assert cp.returncode == 0, cp.stderr
    doc = json.loads(cp.stdout)
    assert doc["residuals_monotone"] is True


def test_blowdown_csv():
    cp = run_cli("blowdown", "--construction", "conifold", "--k", "0.5")
    lines = cp.stdout.strip().splitlines()
    assert lines[0] == "parameter,leaf_residual,fiber_residual"
    leafs = [float(l.split(",")[1]) for l in lines[1:]]
    assert all(b < a for a, b in zip(leafs, leafs[1:]))


# --------------------------------------------------------------------- verify

def test_verify_single_suite():
    cp = run_cli("verify", "--suite", "metrics")
    assert cp.returncode == 0, cp.stdout + cp.stderr
    assert "3/3 checks passed" in cp.stdout
    assert all(l.startswith("ok ") or "checks passed" in l
               for l in cp.stdout.strip().splitlines())


def test_verify_all_and_thread_determinism():
    serial = run_cli("verify", "--suite", "all")
    assert serial.returncode == 0, serial.stdout + serial.stderr
    assert "30/30 checks passed" in serial.stdout
    threaded = run_cli("verify", "--suite", "all",
                       env_extra={"INSTANTON_THREADS": "4"})
    assert threaded.returncode == 0
    assert threaded.stdout == serial.stdout


def test_verify_bad_suite_and_bad_threads():
    assert run_cli("verify", "--suite", "nosuch").returncode == 2
    cp = run_cli("verify", "--suite", "metrics",
                 env_extra={"INSTANTON_THREADS": "abc"})
    assert cp.returncode == 2
    cp = run_cli("verify", "--suite", "metrics",
                 env_extra={"INSTANTON_THREADS": "0"})
    assert cp.returncode == 2
