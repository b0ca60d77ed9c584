import json
import time
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from nlphase import cli
from nlphase.metrics import nonlinear_variance
from nlphase.statesim import AncillaSpec, load_state, make_ancilla, required_grid

ROOT = Path(__file__).resolve().parents[1]
CUBIC = ROOT / "configs" / "cubic_default.json"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def small_config(tmp_path, **over):
    data = json.loads(CUBIC.read_text())
    data.update(trajectories=8, **over)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p


def test_dumps_17_significant_digits():
    text = cli.dumps({"b": 0.1, "a": [1, 2.5e-7, None, True], "c": Fraction(1, 3)}, indent=None)
    assert text == '{"a": [1, 2.4999999999999999e-07, null, true], "b": 0.10000000000000001, "c": "1/3"}'
    assert json.loads(text)["b"] == 0.1
    with pytest.raises(ValueError):
        cli.dumps(float("nan"))


def test_certify_cubic_passes(capsys):
    code, out, err = run(["certify", "--order", 3], capsys)
    assert code == 0 and "PASS" in err
    assert "z(3)^3 = chi(3)" in json.loads(out)["conditions"]


def test_certify_with_rational_outcomes(tmp_path, capsys):
    rng = np.random.default_rng(7)
    q = {str(k): f"{rng.integers(-9, 10)}/{rng.integers(1, 8)}" for k in range(2, 5)}
    path = tmp_path / "o.json"
    path.write_text(json.dumps({"q": q}))
    code, out, _ = run(["certify", "--order", 4, "--outcomes", path, "--chi", "1/2", "--allow-complex"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["zero"]
    assert max(rep["numeric_residual"]) < 1e-9


def test_certify_usage_errors(capsys):
    assert run(["certify", "--order", 2], capsys)[0] == 2
    assert run(["certify", "--order", 3, "--scheme", "nope"], capsys)[0] == 2
    assert run(["simulate"], capsys)[0] == 2


def test_certify_complex_policy(tmp_path, capsys):
    path = tmp_path / "o.json"
    path.write_text(json.dumps({"q": {"2": 0, "3": 0, "4": 0}}))
    code, _, err = run(["certify", "--order", 4, "--outcomes", path, "--chi", "-1"], capsys)
    assert code == 2 and "equation 3" in err
    code, out, _ = run(["certify", "--order", 4, "--outcomes", path, "--chi", "-1", "--allow-complex"], capsys)
    assert code == 0 and "non-real" in json.loads(out)["flags"]


def test_certify_quartic_report(capsys):
    code, out, _ = run(["certify", "--order", 4, "--scheme", "quartic-optical"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["x_zero"] and rep["p_zero"]


def test_simulate_outputs_and_schemas(tmp_path, capsys):
    out = tmp_path / "run"
    t = time.perf_counter()
    code, _, _ = run(["simulate", "--config", CUBIC, "--out", out], capsys)
    assert time.perf_counter() - t < 60
    assert code == 0
    for name in ("trajectories.jsonl", "summary.json", "fidelity_vs_squeezing.csv", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    summary = json.loads((out / "summary.json").read_text())
    jsonschema.validate(manifest, cli.load_schema("manifest"))
    jsonschema.validate(summary, cli.load_schema("summary"))
    traj_schema = cli.load_schema("trajectory")
    lines = (out / "trajectories.jsonl").read_text().splitlines()
    assert len(lines) == 5 * 200
    for line in lines[:50]:
        jsonschema.validate(json.loads(line), traj_schema)
    listed = {f["path"] for f in manifest["files"]}
    assert listed == {"trajectories.jsonl", "summary.json", "fidelity_vs_squeezing.csv"}
    header = (out / "fidelity_vs_squeezing.csv").read_text().splitlines()[0]
    assert header.split(",") == cli.CSV_COLUMNS


def test_manifest_config_reproduces_summary(tmp_path, capsys):
    cfg = small_config(tmp_path)
    run(["simulate", "--config", cfg, "--out", tmp_path / "a"], capsys)
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    again = tmp_path / "again.json"
    again.write_text(json.dumps(manifest["config"]))
    run(["simulate", "--config", again, "--out", tmp_path / "b"], capsys)
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_simulate_deterministic_across_threads(tmp_path, capsys):
    cfg = small_config(tmp_path)
    run(["simulate", "--config", cfg, "--out", tmp_path / "a"], capsys)
    run(["--threads", 3, "simulate", "--config", cfg, "--out", tmp_path / "b"], capsys)
    a = (tmp_path / "a" / "trajectories.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "trajectories.jsonl").read_bytes()
    run(["--seed", 5, "simulate", "--config", cfg, "--out", tmp_path / "c"], capsys)
    assert a != (tmp_path / "c" / "trajectories.jsonl").read_bytes()


def test_simulate_zero_trajectories(tmp_path, capsys):
    code, out, _ = run(["simulate", "--config", CUBIC, "--out", tmp_path, "--trajectories", 0], capsys)
    assert code == 0
    pts = json.loads(out)["points"]
    assert all(p["n"] == 0 and p["mean_fidelity"] is None for p in pts)


def test_simulate_invalid_config_reports_field(tmp_path, capsys):
    cfg = small_config(tmp_path, grid={"n_points": 8, "half_width": 8.0})
    code, _, err = run(["simulate", "--config", cfg, "--out", tmp_path / "x"], capsys)
    assert code == 2 and "grid/n_points" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gate": "cubic", "ancillas": [{"order": 4, "chi": 0.1}]}))
    assert run(["simulate", "--config", bad, "--out", tmp_path / "y"], capsys)[0] == 2


def test_ancilla_vacuum(tmp_path, capsys):
    code, out, _ = run(["ancilla", "--order", 0, "--db", 0, "--out", tmp_path / "v.bin"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["x_variance"] == 0.5
    assert rep["variance"]["value"] == pytest.approx(0.5, rel=1e-9)
    jsonschema.validate(rep, cli.load_schema("ancilla"))


def test_ancilla_quartic_matches_metrics(tmp_path, capsys):
    code, out, _ = run(["ancilla", "--order", 4, "--chi", 0.02, "--db", 10, "--out", tmp_path / "a.bin"], capsys)
    rep = json.loads(out)
    spec = AncillaSpec(4, 0.02, 10.0)
    ref = nonlinear_variance(make_ancilla(spec, required_grid(spec)), 4, 0.02).value
    assert code == 0 and rep["variance"]["value"] == pytest.approx(ref, rel=1e-12)
    st = load_state(tmp_path / "a.bin")
    assert nonlinear_variance(st, 4, 0.02).value == pytest.approx(ref, rel=1e-4)


def test_ancilla_aliasing_exit(tmp_path, capsys):
    code, _, err = run(["ancilla", "--order", 3, "--chi", 5, "--db", 10, "--n-points", 64,
                        "--out", tmp_path / "x.bin"], capsys)
    assert code == 2 and "n_points=" in err
