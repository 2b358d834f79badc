import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roominv.core import CUBE_DIMS, ImpulseResponse
from roominv.evaluation import (
    EmptyIntegrationRegion,
    EvalConfig,
    EvalReport,
    LevelNeverReached,
    OutOfRange,
    ZeroEnergy,
    ZeroRmsInterval,
    decay_time,
    dereverberation_ratio,
    evaluate_output,
    impulse_snr,
    local_mse,
    reflection_from_absorptivity,
    remainder_reverberation_time,
    residual_energy,
    sabine_absorptivity,
    schroeder_curve,
)

FS = 1000.0


def ir(x, fs=FS):
    return ImpulseResponse(np.asarray(x, float), fs)


def decaying_noise(n=4000, tau=0.3, seed=0, fs=FS):
    rng = np.random.default_rng(seed)
    return ir(rng.standard_normal(n) * np.exp(-np.arange(n) / (fs * tau)), fs)


# local MSE


def test_mse_identical_is_zero():
    g = decaying_noise()
    curve = local_mse(g, g, 100)
    assert curve.shape == (40, 2)
    assert np.all(curve[:, 1] == 0)
    np.testing.assert_array_equal(curve[:, 0], np.arange(40) * 100)


def test_mse_scale_cancels():
    g = decaying_noise()
    curve = local_mse(ir(2 * g.samples), g, 100)
    np.testing.assert_allclose(curve[:, 1], 0, atol=1e-28)


def test_mse_independent_noise_tends_to_two():
    rng = np.random.default_rng(11)
    a, b = rng.standard_normal(200_000), rng.standard_normal(200_000)
    curve = local_mse(ir(a), ir(b), 50_000)
    np.testing.assert_allclose(curve[:, 1], 2.0, atol=0.03)


@settings(max_examples=20)
@given(st.lists(st.floats(0.01, 100), min_size=10, max_size=10))
def test_mse_invariant_to_per_interval_scaling(scales):
    a, b = decaying_noise(seed=1).samples[:1000], decaying_noise(seed=2).samples[:1000]
    base = local_mse(ir(a), ir(b), 100)[:, 1]
    scaled = (a.reshape(10, 100) * np.array(scales)[:, None]).ravel()
    np.testing.assert_allclose(local_mse(ir(scaled), ir(b), 100)[:, 1], base, rtol=1e-9, atol=1e-12)


def test_mse_errors():
    g = ir(np.r_[np.zeros(100), np.ones(100)])
    with pytest.raises(ZeroRmsInterval) as info:
        local_mse(g, g, 100)
    assert info.value.start == 0
    with pytest.raises(ValueError):
        local_mse(g, g, 1)
    with pytest.raises(ValueError):
        local_mse(g, ir(np.ones(10)), 5)


# dereverberation ratio


def test_dr_perfect_output_is_infinite():
    g = decaying_noise()
    cfg = EvalConfig(modeling_delay=0.5)
    x_hat = ir(np.eye(1, 2000, 500).ravel())
    assert dereverberation_ratio(g, x_hat, cfg) == math.inf
    assert dereverberation_ratio(g, x_hat, cfg, 0.1) == math.inf


def test_dr_self_comparison_is_zero_db():
    g = decaying_noise()
    cfg = EvalConfig(modeling_delay=0.0)
    assert dereverberation_ratio(g, g, cfg) == 0.0
    assert dereverberation_ratio(g, g, cfg, 0.1) == 0.0


@settings(max_examples=25)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_dr_scaling(common, alpha):
    g = decaying_noise(seed=3)
    x = decaying_noise(seed=4, tau=0.1)
    cfg = EvalConfig(modeling_delay=0.2)
    base = dereverberation_ratio(g, x, cfg)
    both = dereverberation_ratio(ir(common * g.samples), ir(common * x.samples), cfg)
    only_x = dereverberation_ratio(g, ir(alpha * x.samples), cfg)
    assert both == pytest.approx(base, abs=1e-9)
    assert only_x == pytest.approx(base - 20 * math.log10(alpha), abs=1e-9)


def test_dr_regions():
    # Residual counts only where t_min < |t - D| < horizon.
    x = np.zeros(1000)
    x[500] = 1.0  # the target itself
    x[501] = 5.0  # within t_min of D: ignored
    x[520] = 1.0  # 20 ms after D: counted
    x[700] = 1.0  # beyond a 100 ms horizon
    cfg = EvalConfig(t_min=0.0025, modeling_delay=0.5)
    assert residual_energy(ir(x), 0.5, 0.0025) == pytest.approx(2 / FS)
    assert residual_energy(ir(x), 0.5, 0.0025, 0.1) == pytest.approx(1 / FS)
    g = ir(np.r_[0, 0, 0, 0, 1.0, np.zeros(995)])
    assert dereverberation_ratio(g, ir(x), cfg) == pytest.approx(10 * math.log10(0.5))


def test_dr_empty_region():
    cfg = EvalConfig(t_min=0.0025, modeling_delay=0.0)
    with pytest.raises(EmptyIntegrationRegion):
        dereverberation_ratio(ir([1.0, 0, 0]), ir([1.0, 0, 0]), cfg)
    with pytest.raises(EmptyIntegrationRegion):
        dereverberation_ratio(ir(np.r_[1.0, np.zeros(99)]), ir(np.ones(100)), cfg)


def test_impulse_snr():
    x = np.zeros(100)
    x[10] = 1.0
    assert impulse_snr(ir(x), 0.010) == math.inf
    x[50] = 0.1
    assert impulse_snr(ir(x), 0.010) == pytest.approx(20.0)


# Schroeder integration and decay times


def test_schroeder_of_delta():
    curve = schroeder_curve(ir([1.0, 0, 0, 0]))
    assert curve[0] == 0.0
    assert np.all(np.isneginf(curve[1:]))


@pytest.mark.parametrize("tau_d", [0.05, 0.2, 0.5])
def test_schroeder_exponential(tau_d):
    fs = 8000.0
    n = np.arange(int(6 * tau_d * fs))
    g = ImpulseResponse(np.exp(-n / (tau_d * fs)), fs)
    curve = schroeder_curve(g)
    slope = np.diff(curve[: n.size // 4]).mean()
    assert slope == pytest.approx(-20 / (tau_d * fs * math.log(10)), rel=1e-3)
    assert decay_time(g) == pytest.approx(6.9078 * tau_d, rel=0.01)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_schroeder_non_increasing_from_zero(seed):
    g = decaying_noise(n=500, seed=seed)
    curve = schroeder_curve(g)
    assert curve[0] == 0.0
    assert np.all(np.diff(curve) <= 0)


def test_schroeder_zero_energy():
    with pytest.raises(ZeroEnergy):
        schroeder_curve(ir(np.zeros(10)))
    with pytest.raises(ZeroEnergy):
        decay_time(ir([1.0, 0.0]))


# remainder reverberation time


def test_remainder_of_self_matches_schroeder_crossing():
    g = decaying_noise()
    t10 = remainder_reverberation_time(g, g, 10)
    curve = schroeder_curve(g)
    assert t10 == np.flatnonzero(curve <= -10)[0] / FS


def test_remainder_zero_tail():
    g = decaying_noise()
    x = np.zeros(1000)
    x[:300] = 0.01
    assert remainder_reverberation_time(g, ir(x), 200) == 0.3


def test_remainder_measured_from_delay():
    g = decaying_noise()
    x = np.zeros(1000)
    x[500:560] = 0.01
    assert remainder_reverberation_time(g, ir(x), 200, delay=0.5) == pytest.approx(0.06)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_remainder_non_decreasing_in_level(seed):
    g = decaying_noise(seed=seed)
    x = decaying_noise(seed=seed + 1, tau=0.1)
    times = [remainder_reverberation_time(g, x, level) for level in (10, 20, 60)]
    assert times == sorted(times)


def test_remainder_errors():
    g = decaying_noise()
    with pytest.raises(LevelNeverReached):
        remainder_reverberation_time(g, ir(np.ones(100)), 300)
    with pytest.raises(ValueError):
        remainder_reverberation_time(g, g, 0)
    with pytest.raises(ZeroEnergy):
        remainder_reverberation_time(ir(np.zeros(5)), g, 10)


# Sabine


def test_sabine_unit_cube():
    assert sabine_absorptivity((1, 1, 1), 0.161 / 6) == pytest.approx(1.0)
    assert sabine_absorptivity((1, 1, 1), 0.161) == pytest.approx(1 / 6)


def test_sabine_test_cube():
    # Direct evaluation of the formula, not the 0.0407 quoted for this room.
    v = 1.84 * 1.79 * 1.83
    s = 2 * (1.84 * 1.79 + 1.79 * 1.83 + 1.84 * 1.83)
    abar = sabine_absorptivity(CUBE_DIMS, 1.32)
    assert abar == pytest.approx(0.161 * v / (s * 1.32), rel=1e-14)
    assert abar == pytest.approx(0.037, abs=5e-4)


@given(st.floats(0.5, 10), st.floats(0.5, 10), st.floats(0.5, 10), st.floats(0.1, 10), st.floats(0.1, 10))
def test_sabine_homothety(lx, ly, lz, t60, scale):
    base = sabine_absorptivity((lx, ly, lz), t60)
    scaled = sabine_absorptivity((scale * lx, scale * ly, scale * lz), t60)
    assert scaled == pytest.approx(scale * base, rel=1e-12)


def test_sabine_rejects_nonpositive():
    with pytest.raises(ValueError):
        sabine_absorptivity((1, 0, 1), 1.0)
    with pytest.raises(ValueError):
        sabine_absorptivity((1, 1, 1), 0.0)


def test_reflection_from_absorptivity():
    assert reflection_from_absorptivity(0.0) == 1.0
    assert reflection_from_absorptivity(1.0) == 0.0
    assert reflection_from_absorptivity(0.0407) == pytest.approx(0.97945, abs=2e-5)
    with pytest.raises(OutOfRange):
        reflection_from_absorptivity(1.01)
    with pytest.raises(OutOfRange):
        reflection_from_absorptivity(-0.01)


# configuration and report


def test_eval_config_invariants():
    cfg = EvalConfig()
    assert (cfg.t_min, cfg.early_window_T) == (0.0025, 0.1)
    with pytest.raises(ValueError):
        EvalConfig(t_min=0.2, early_window_T=0.1)
    with pytest.raises(ValueError):
        EvalConfig(t_min=0.0)


def test_evaluate_output_report():
    g = decaying_noise(n=3000)
    x = np.zeros(3000)
    x[1000] = 1.0
    x[1050:1060] = 1e-3
    report = evaluate_output(g, ir(x), EvalConfig(modeling_delay=1.0), control_point=2)
    assert report.control_point == 2
    assert report.residual_energy_total == report.residual_energy_early
    assert report.snr == pytest.approx(10 * math.log10(1 / 1e-5))
    assert report.t10_dereverberated == 0.0
    assert report.t10_measured < report.t20_measured < report.t60_measured
    assert len(report.csv_row()) == len(EvalReport.CSV_COLUMNS)


def test_evaluate_output_flags_unreached_levels():
    g = decaying_noise(n=1000)
    x = np.r_[np.zeros(500), np.ones(500)]
    report = evaluate_output(g, ir(x), EvalConfig(modeling_delay=0.5))
    assert report.t60_dereverberated == math.inf
