"""Tests of per-realization reductions and seeded-ensemble aggregation."""
import math

import numpy as np
import pytest

from sfase.ensemble import (
    EnsembleSpec,
    RealizationScalars,
    delay_time,
    detect_spectral_splitting,
    histogram,
    photon_bin_edges,
    pulse_area,
    run_ensemble,
    spectrum,
)
from sfase.solver import NoiseSpec, RunRecord, make_grid, run


def _fake_record(t, omega_plus, omega_minus=None, jp=None):
    n = len(t)
    return RunRecord(
        t=t, omega_plus_out=np.asarray(omega_plus, dtype=complex),
        omega_minus_out=(np.zeros(n, dtype=complex) if omega_minus is None
                         else np.asarray(omega_minus, dtype=complex)),
        jp_out=np.zeros(n) if jp is None else np.asarray(jp, dtype=float),
        master_seed=0, realization_index=0, noise_enabled=False)


# ---------------------------------------------------------------------------
# scalar reductions
# ---------------------------------------------------------------------------

def test_pulse_area_rectangle():
    dt = 0.01
    omega = np.full(100, 2.0 + 0.0j)
    assert pulse_area(omega, dt) == pytest.approx(2.0 * 100 * dt, rel=1e-12)


def test_pulse_area_uses_magnitude():
    dt = 0.5
    omega = np.array([3.0 + 4.0j, -5.0])
    assert pulse_area(omega, dt) == pytest.approx(5.0, rel=1e-12)


def test_spectrum_parseval():
    rng = np.random.default_rng(0)
    dt = 0.004
    omega = rng.normal(size=600) + 1j * rng.normal(size=600)
    w, s = spectrum(omega, dt)
    dw = w[1] - w[0]
    energy_t = float(np.sum(np.abs(omega) ** 2) * dt)
    energy_w = float(np.sum(s) * dw / (2.0 * math.pi))
    assert energy_w == pytest.approx(energy_t, rel=1e-9)


def test_spectrum_frequency_convention():
    # S(w) = |integral Omega e^{iwt} dt|^2: an envelope exp(-i w0 t) must
    # appear at +w0, and its conjugate at -w0
    dt = 0.01
    t = np.arange(2048) * dt
    w0 = 40.0
    w, s = spectrum(np.exp(-1j * w0 * t), dt)
    assert w[np.argmax(s)] == pytest.approx(w0, abs=2 * (w[1] - w[0]))
    w, s = spectrum(np.exp(1j * w0 * t), dt)
    assert w[np.argmax(s)] == pytest.approx(-w0, abs=2 * (w[1] - w[0]))


def test_spectrum_axis_is_padded(toy):
    grid = make_grid(toy)
    omega = np.zeros(grid.nsteps + 1, dtype=complex)
    w, s = spectrum(omega, grid.dt)
    assert len(w) == 4 * len(omega)
    assert np.all(np.diff(w) > 0)


def test_delay_time_zero_for_pump_shaped_pulse():
    t = np.linspace(0.0, 5.0, 501)
    jp = np.exp(-((t - 2.0) ** 2))
    rec = _fake_record(t, omega_plus=np.sqrt(jp), jp=jp)
    assert delay_time(rec, "forward") == 0.0


def test_delay_time_positive_shift():
    t = np.linspace(0.0, 5.0, 501)
    jp = np.exp(-(((t - 1.0) / 0.1) ** 2))
    omega = np.exp(-(((t - 2.5) / 0.2) ** 2))
    rec = _fake_record(t, omega_plus=omega, jp=jp)
    assert delay_time(rec, "forward") == pytest.approx(1.5, abs=0.02)


def test_delay_time_missing_for_dark_run():
    t = np.linspace(0.0, 5.0, 501)
    rec = _fake_record(t, omega_plus=np.zeros(501))
    assert delay_time(rec, "forward") is None
    assert delay_time(rec, "backward") is None


def test_histogram_counts_everything():
    values = np.array([1.0, 2.0, 3.0, 10.0])
    edges = np.array([0.0, 2.5, 20.0])
    counts, e = histogram(values, edges)
    assert counts.sum() == 4
    np.testing.assert_array_equal(e, edges)


def test_photon_bin_edges_log_spaced():
    vals = np.array([1e3, 1e5, 1e9])
    edges = photon_bin_edges(vals, nbins=30)
    assert len(edges) == 31
    ratios = edges[1:] / edges[:-1]
    assert np.allclose(ratios, ratios[0])
    assert edges[0] <= vals.min() and edges[-1] >= vals.max()


# ---------------------------------------------------------------------------
# ensemble aggregation
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def toy_ensemble(toy):
    grid = make_grid(toy)
    spec = EnsembleSpec(scenario=toy, grid=grid, n_realizations=8,
                        master_seed=21, workers=1)
    return spec, run_ensemble(spec)


def test_ensemble_scalar_consistency(toy, toy_ensemble):
    spec, (summary, scalars) = toy_ensemble
    assert summary.n_realizations == 8
    assert summary.n_failed == 0
    assert [s.index for s in scalars] == list(range(8))
    areas = np.array([s.area_fwd for s in scalars])
    assert summary.forward.threshold_probability == pytest.approx(
        float(np.mean(areas >= math.pi / 2)))
    peaks = np.array([s.peak_fwd for s in scalars])
    assert summary.forward.peak_intensity_mean == pytest.approx(
        float(np.mean(peaks)), rel=1e-12)


def test_ensemble_average_matches_reruns(toy, toy_ensemble):
    spec, (summary, _) = toy_ensemble
    grid = spec.grid
    acc = np.zeros(grid.nsteps + 1)
    for k in range(8):
        rec = run(toy, grid, NoiseSpec(master_seed=21, realization_index=k))
        acc += np.abs(rec.omega_plus_out) ** 2
    np.testing.assert_allclose(summary.forward.avg_temporal_intensity,
                               acc / 8, rtol=1e-12)


def test_ensemble_schedule_independence(toy, toy_ensemble):
    spec, (summary1, scalars1) = toy_ensemble
    spec2 = EnsembleSpec(scenario=toy, grid=spec.grid, n_realizations=8,
                         master_seed=21, workers=2)
    summary2, scalars2 = run_ensemble(spec2)
    np.testing.assert_array_equal(summary1.forward.avg_temporal_intensity,
                                  summary2.forward.avg_temporal_intensity)
    np.testing.assert_array_equal(summary1.backward.avg_spectral_intensity,
                                  summary2.backward.avg_spectral_intensity)
    assert [s.area_fwd for s in scalars1] == [s.area_fwd for s in scalars2]
    assert (summary1.forward.threshold_ci
            == summary2.forward.threshold_ci)


def test_ensemble_bootstrap_ci_brackets_mean(toy_ensemble):
    _, (summary, _) = toy_ensemble
    lo, hi = summary.forward.peak_intensity_ci
    assert lo <= summary.forward.peak_intensity_mean <= hi


def test_ensemble_delay_histogram_domain(toy_ensemble):
    spec, (summary, _) = toy_ensemble
    edges = summary.forward.delay_hist_edges
    assert edges[0] == pytest.approx(0.0)
    assert edges[-1] <= spec.grid.t_end


def test_ensemble_spec_validation(toy):
    grid = make_grid(toy)
    with pytest.raises(ValueError):
        EnsembleSpec(scenario=toy, grid=grid, n_realizations=0)
    with pytest.raises(ValueError):
        EnsembleSpec(scenario=toy, grid=grid, workers=0)


def test_realization_scalar_fields_match_dataclass():
    # the CSV column list must track the dataclass exactly
    assert list(RealizationScalars.FIELDS) == list(
        RealizationScalars.__dataclass_fields__)


# ---------------------------------------------------------------------------
# spectral splitting detector
# ---------------------------------------------------------------------------

def test_split_detector_single_lobe():
    w = np.linspace(-50, 50, 2001)
    s = np.exp(-(w / 5.0) ** 2)
    assert not detect_spectral_splitting(w, s, resolution=1.0)


def test_split_detector_double_lobe():
    w = np.linspace(-50, 50, 2001)
    s = np.exp(-(((w - 8) / 3.0) ** 2)) + np.exp(-(((w + 8) / 3.0) ** 2))
    assert detect_spectral_splitting(w, s, resolution=1.0)


def test_split_detector_requires_separation():
    w = np.linspace(-50, 50, 2001)
    s = np.exp(-(((w - 8) / 3.0) ** 2)) + np.exp(-(((w + 8) / 3.0) ** 2))
    assert not detect_spectral_splitting(w, s, resolution=10.0)


def test_split_detector_ignores_small_side_lobes():
    w = np.linspace(-50, 50, 2001)
    s = np.exp(-(w / 3.0) ** 2) + 0.2 * np.exp(-(((w - 20) / 3.0) ** 2))
    assert not detect_spectral_splitting(w, s, resolution=1.0)


def test_split_detector_empty_spectrum():
    w = np.linspace(-50, 50, 101)
    assert not detect_spectral_splitting(w, np.zeros(101), resolution=1.0)
