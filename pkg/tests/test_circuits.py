import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlphase import circuits, gains
from nlphase.algebra import HeisenbergFrame, QuadPoly, Symbol, measure_x, qnd_apply, substitute_ancilla_nonlinearity
from nlphase.metrics import fidelity, moments
from nlphase.statesim import AncillaSpec, GridSpec, diagonal_phase, gaussian

T0 = T4 = 0.9
R0 = R4 = math.sqrt(1 - 0.81)


def cubic_cfg(db=25.0, chi=0.05, **kw):
    return circuits.CircuitConfig(gate="cubic", chi=chi, ancillas=[AncillaSpec(3, 0.05, db)],
                                  grid=GridSpec(512, 8.0), **kw)


def quartic_cfg(db=25.0, **kw):
    return dataclasses.replace(circuits.CircuitConfig(gate="quartic", **kw).with_squeezing(db), **kw)


# oracle ---------------------------------------------------------------------


def test_oracle_identity_and_commutation():
    s = gaussian(GridSpec(512, 8.0), 0.4, 0.3, 0.2)
    assert fidelity(circuits.oracle(s, 0.0, 3), s) == pytest.approx(1.0, abs=1e-12)
    ph = 0.3 * s.grid.x ** 2
    a = diagonal_phase(circuits.oracle(s, 0.05, 3), ph)
    b = circuits.oracle(diagonal_phase(s, ph), 0.05, 3)
    assert np.abs(a.amplitudes - b.amplitudes).max() < 1e-12


@pytest.mark.parametrize("N,chi", [(3, 0.05), (4, 0.02)])
def test_oracle_momentum_shift(N, chi):
    g = GridSpec(512, 8.0)
    s = gaussian(g, 0.5, 0.4)
    w = np.abs(s.amplitudes) ** 2 * g.dx
    shift = moments(circuits.oracle(s, chi, N))["mean"][1] - moments(s)["mean"][1]
    assert shift == pytest.approx(-N * chi * np.sum(w * g.x ** (N - 1)), abs=1e-9)


# config ---------------------------------------------------------------------


def test_config_invariants():
    with pytest.raises(ValueError):
        circuits.CircuitConfig(gate="cubic", ancillas=[AncillaSpec(4, 0.02, 10)])
    with pytest.raises(ValueError):
        circuits.CircuitConfig(gate="quartic", ancillas=[AncillaSpec(3, 0.1, 10)])
    with pytest.raises(ValueError):
        circuits.CircuitConfig(gate="quartic", backend="grid")
    with pytest.raises(ValueError):
        circuits.CircuitConfig(gate="cubic", carrier=AncillaSpec(3, 0.1, 10))


def test_config_dict_roundtrip():
    cfg = quartic_cfg(12.0, trajectories=7, seed=3)
    cfg = dataclasses.replace(cfg, sweep={"squeezing_db": [5, 10], "targets": [3]})
    back = circuits.CircuitConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back == cfg


def test_sweep_targets_only_named_orders():
    cfg = dataclasses.replace(quartic_cfg(25.0), sweep={"squeezing_db": [5.0], "targets": [3]})
    (_, pt), = cfg.sweep_points()
    assert pt.ancilla(3).squeezing_db == 5.0
    assert pt.ancilla(4).squeezing_db == 25.0 and pt.carrier.squeezing_db == 25.0


# cubic ----------------------------------------------------------------------


def test_cubic_corrections_follow_heisenberg_relation():
    """Shear and displacement remove every outcome-dependent term of the single-stage relation."""
    chi_a, z, q = QuadPoly.sym(Symbol("chi", 3)), QuadPoly.sym(Symbol("z", 3)), QuadPoly.sym(Symbol("q", 3))
    f = qnd_apply(HeisenbergFrame.fresh(["s", "A3"]), "s", "A3", z)
    f = measure_x(f, "A3", Symbol("q", 3))
    f = substitute_ancilla_nonlinearity(f, 3, 3 * chi_a)
    x = QuadPoly.sym(Symbol("x_in"))
    shear = -6 * chi_a * z * z * q
    disp = -3 * chi_a * z * q * q
    p_out = f.p("s") + shear * x + disp
    assert p_out == QuadPoly.sym(Symbol("p_in")) + 3 * chi_a * z ** 3 * x ** 2
    num = circuits.cubic_corrections(0.05, -1.0, 0.7)
    assert num["shear"] == pytest.approx(-6 * 0.05 * 0.7)
    assert num["p_disp"] == pytest.approx(3 * 0.05 * 0.49)


def test_cubic_gain_realizes_target():
    z = circuits.cubic_gain(0.05, 0.1)
    assert 0.1 * z ** 3 == pytest.approx(-0.05)


def test_cubic_null_gate():
    cfg = cubic_cfg(5.0, chi=0.0, trajectories=10)
    for r in circuits.run_many(cfg):
        assert r.fidelity >= 0.999


@pytest.mark.parametrize("db", [10.0, 25.0])
def test_cubic_forced_zero_outcome(db):
    cfg = cubic_cfg(db)
    r = circuits.run_cubic(cfg.input_state(), cfg, forced_q=0.0)
    z = circuits.cubic_gain(cfg.chi, 0.05)
    bound = z * z * cfg.ancilla(3).noise_variance
    assert 1 - r.fidelity <= 10 * bound
    assert "forced-outcome" in r.flags


@pytest.mark.parametrize("q", [0.0, 1.3, -2.0])
def test_cubic_backends_agree(q):
    cfg = cubic_cfg(10.0)
    s = cfg.input_state()
    a = circuits.run_cubic(s, cfg, forced_q=q)
    b = circuits.run_cubic(s, dataclasses.replace(cfg, backend="grid"), forced_q=q)
    assert fidelity(a.output, b.output) == pytest.approx(1.0, abs=1e-9)
    assert a.fidelity == pytest.approx(b.fidelity, abs=1e-9)


def test_cubic_grid_backend_samples():
    cfg = dataclasses.replace(cubic_cfg(10.0, trajectories=3), backend="grid")
    recs = circuits.run_many(cfg)
    assert all(0.0 <= r.fidelity <= 1.0 for r in recs)


def test_cubic_nonvacuum_input():
    cfg = dataclasses.replace(cubic_cfg(25.0, trajectories=20),
                              input={"kind": "gaussian", "var_x": 0.3, "mean_x": 0.5, "mean_p": -0.3})
    f = [r.fidelity for r in circuits.run_many(cfg)]
    assert np.mean(f) > 0.99


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3))
def test_cubic_fidelity_in_unit_interval(q):
    cfg = cubic_cfg(15.0)
    r = circuits.run_cubic(cfg.input_state(), cfg, forced_q=q)
    assert 0.0 <= r.fidelity <= 1.0
    assert r.output.norm == pytest.approx(1.0, abs=1e-9)


def test_mixture_quantile_against_exact_cdf():
    from scipy.stats import norm
    pts, w = np.array([0.0, 1.0, 2.5]), np.array([0.2, 0.5, 0.3])
    for u in (0.001, 0.25, 0.5, 0.8, 0.999):
        q = circuits.mixture_quantile(pts, w, 0.6, u)
        assert float(np.sum(w * norm.cdf((q - pts) / 0.6))) == pytest.approx(u, abs=1e-4)


# quartic --------------------------------------------------------------------


def test_quartic_null_gate():
    cfg = dataclasses.replace(circuits.CircuitConfig(
        gate="quartic", ancillas=[AncillaSpec(4, 0.0, 25.0), AncillaSpec(3, 0.01, 25.0)]), trajectories=20)
    for r in circuits.run_many(cfg):
        assert r.fidelity >= 0.99


@pytest.mark.parametrize("db", [10.0, 25.0])
def test_quartic_forced_zero_outcomes(db):
    cfg = quartic_cfg(db)
    r = circuits.run_quartic(cfg.input_state(), cfg, forced={"q4": 0.0, "q3": 0.0, "theta": 0.0, "y": 0.0})
    bound = (R0 ** 2 * cfg.carrier.x_variance
             + (R0 * R4 / (T0 * T4)) ** 2 * cfg.ancilla(4).noise_variance
             + (R0 / (T0 * T4)) ** 2 * cfg.ancilla(3).noise_variance)
    assert 1 - r.fidelity <= 10 * bound


def test_quartic_forced_outcomes_reproduce_sampled_trajectory():
    cfg = quartic_cfg(15.0, trajectories=4)
    s = cfg.input_state()
    r = circuits.run_quartic(s, cfg, 2)
    forced = dict(r.outcomes, theta=r.feedforward["theta"])
    f = circuits.run_quartic(s, cfg, 2, forced=forced)
    assert fidelity(r.output, f.output) == pytest.approx(1.0, abs=1e-10)


def test_quartic_effective_strength():
    assert circuits.quartic_effective_chi(0.02, T0, T4) == pytest.approx(-0.02 * (R0 * R4 / (T0 * T4)) ** 4)


def test_quartic_output_moments_follow_operator_contract():
    """Unconditional x and p variances against the Heisenberg output operators."""
    cfg = quartic_cfg(5.0, trajectories=400)
    recs = circuits.run_many(cfg)
    ms = [moments(r.output) for r in recs]
    means = np.array([m["mean"] for m in ms])
    covs = np.array([m["cov"] for m in ms])
    var_x = covs[:, 0, 0].mean() + means[:, 0].var()
    var_p = covs[:, 1, 1].mean() + means[:, 1].var()
    v0, nv4, nv3 = cfg.carrier.x_variance, cfg.ancilla(4).noise_variance, cfg.ancilla(3).noise_variance
    # x_out - x_in = -r0 x_A0
    assert (var_x - 0.5) / (R0 ** 2 * v0) == pytest.approx(1.0, abs=0.10)
    rho2 = np.mean([r.feedforward["r3_over_t3"] ** 2 for r in recs])
    c = 4 * cfg.ancilla(4).chi * R0 * R4 ** 4 / (T0 * T4 ** 4)
    s2 = R0 ** 2 * 0.5 / T0 ** 2 + T0 ** 2 * v0
    excess = (R0 * R4 / (T0 * T4)) ** 2 * nv4 + rho2 * (R0 / (T0 * T4)) ** 2 * nv3 + 15 * c * c * s2 ** 3
    assert (var_p - 0.5) / excess == pytest.approx(1.0, abs=0.15)


def test_quartic_readout_statistics():
    cfg = quartic_cfg(5.0, trajectories=300)
    q4 = np.array([circuits.run_quartic(cfg.input_state(), cfg, i).outcomes["q4"] for i in range(0, 300, 3)])
    v0, v4 = cfg.carrier.x_variance, cfg.ancilla(4).x_variance
    expected = T4 ** 2 * v4 + R4 ** 2 * (T0 ** 2 * v0 + R0 ** 2 * 0.5 / T0 ** 2)
    # stratified draws: every third stratum is still a near-uniform cover
    assert np.var(q4) == pytest.approx(expected, rel=0.1)


def test_rotation_guard_resamples(monkeypatch):
    real = circuits.run_quartic
    calls = []

    def flaky(state, config, index=0, forced=None, attempt=0):
        calls.append(attempt)
        if attempt < 2:
            raise gains.RotationGuardError("rotation too close to pi/2")
        return real(state, config, index, forced, attempt)

    monkeypatch.setattr(circuits, "run_quartic", flaky)
    cfg = quartic_cfg(25.0, trajectories=1)
    r = circuits.run_trajectory(cfg, 0)
    assert r.resamples == 2 and calls == [0, 1, 2]
    monkeypatch.setattr(circuits, "run_quartic",
                        lambda *a, **k: (_ for _ in ()).throw(gains.RotationGuardError("x")))
    with pytest.raises(circuits.CircuitError):
        circuits.run_trajectory(dataclasses.replace(cfg, resample_budget=1), 0)


# determinism ----------------------------------------------------------------


@pytest.mark.parametrize("gate", ["cubic", "quartic"])
def test_records_bit_identical_across_threads(gate):
    cfg = cubic_cfg(15.0, trajectories=6) if gate == "cubic" else quartic_cfg(15.0, trajectories=6)
    a = [json.dumps(r.to_json(), sort_keys=True) for r in circuits.run_many(cfg)]
    b = [json.dumps(r.to_json(), sort_keys=True) for r in circuits.run_many(cfg, threads=3)]
    c = [json.dumps(r.to_json(), sort_keys=True) for r in circuits.run_many(cfg)]
    assert a == b == c


def test_independent_sampling_mode():
    cfg = dataclasses.replace(cubic_cfg(15.0, trajectories=50), sampling="independent")
    f = [r.fidelity for r in circuits.run_many(cfg)]
    assert 0.95 < np.mean(f) <= 1.0


def test_summary_empty_and_bootstrap():
    s = circuits.summarize([], 0)
    assert s["n"] == 0 and s["mean_fidelity"] is None and s["ci95"] is None
    lo, hi = circuits.bootstrap_ci([0.9, 0.95, 1.0, 0.97], seed=1)
    assert 0.9 <= lo <= hi <= 1.0


# symbolic -------------------------------------------------------------------


def test_symbolic_cubic_condition():
    rep = circuits.symbolic_run(3, "qnd-inline")
    assert rep["zero"] and rep["residual"] == "0"
    assert "z(3)^3 = chi(3)" in rep["conditions"]


@pytest.mark.parametrize("scheme", ["qnd-measurement-induced", "beamsplitter"])
def test_symbolic_other_schemes(scheme):
    assert circuits.symbolic_run(4, scheme)["zero"]


def test_symbolic_quartic_noise_prefactor():
    rep = circuits.symbolic_run(4, "quartic-optical")
    assert rep["zero"]
    assert QuadPoly.from_text(rep["noise_A4_coefficient"]) == QuadPoly.from_text("t(0)^-1*t(4)^-1*r(0)*r(4)")


def test_symbolic_order_guard():
    with pytest.raises(Exception):
        circuits.symbolic_run(3, "quartic-optical")
    with pytest.raises(Exception):
        circuits.symbolic_run(2, "qnd-inline")
