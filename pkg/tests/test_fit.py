import numpy as np
import pytest

from ptspec.assemble import Truncation
from ptspec.errors import DomainError, FitFailureError
from ptspec.fit import (
    FORM_LOG,
    FORM_NESTED,
    FORM_POWER,
    FrontierPoint,
    evaluate_form,
    fit_frontier,
    frontier,
    nested_exponent_diagnostic,
)
from ptspec.scan import LevelRecord, PointRecord, ScanConfig, ScanResult

# central values of the published power-law and log-law frontier fits
POWER_TRUTH = (2.32, 0.046, -0.615)
LOG_TRUTH = (2.17, 0.054, 1.67)


def make_points(form, params, n=40, g_lo=0.06, g_hi=0.40, noise=0.0, rng=None):
    g = np.linspace(g_lo, g_hi, n)
    f = evaluate_form(form, params, g)
    if noise:
        f = f * (1.0 + noise * rng.standard_normal(n))
    return [FrontierPoint(g=float(a), f=float(b)) for a, b in zip(g, f)]


# ---------------------------------------------------------------------------
# frontier extraction
# ---------------------------------------------------------------------------

def result_with_levels(level_map):
    cfg = ScanConfig(
        model="E2",
        g_min=0.0,
        g_max=0.4,
        g_step=0.1,
        ladder=(Truncation((10, 10)),),
        window=18.0,
    )
    points = []
    for i, g in enumerate(cfg.grid()):
        levels = []
        for re, im in level_map.get(round(float(g), 6), []):
            levels.append(
                LevelRecord(re=re, im=im, rel_change=0.0, residual=0.0, is_complex=im != 0.0)
            )
        points.append(PointRecord(index=i, g=float(g), status="ok", levels=levels))
    return ScanResult(config=cfg, points=points)


def test_frontier_takes_min_real_part():
    res = result_with_levels(
        {
            0.2: [(7.3, 0.2), (7.3, -0.2), (9.0, 0.4), (9.0, -0.4), (5.0, 0.0)],
            0.3: [(6.1, 0.1), (6.1, -0.1)],
        }
    )
    pts = frontier(res)
    assert [p.g for p in pts] == pytest.approx([0.2, 0.3])
    assert [p.f for p in pts] == [7.3, 6.1]


def test_frontier_empty_for_all_real():
    res = result_with_levels({0.2: [(5.0, 0.0)]})
    assert frontier(res) == []


def test_frontier_recovers_generating_curve():
    g_grid = np.arange(0.1, 0.41, 0.01)
    level_map = {}
    for g in g_grid:
        f = evaluate_form(FORM_POWER, POWER_TRUTH, g)
        level_map[round(float(g), 6)] = [(float(f), 0.05), (float(f), -0.05), (float(f) + 2, 0.3), (float(f) + 2, -0.3)]
    cfg = ScanConfig(
        model="E2", g_min=0.1, g_max=0.4, g_step=0.01,
        ladder=(Truncation((10, 10)),), window=18.0,
    )
    points = []
    for i, g in enumerate(cfg.grid()):
        lv = [LevelRecord(re=re, im=im, rel_change=0.0, residual=0.0, is_complex=True)
              for re, im in level_map[round(float(g), 6)]]
        points.append(PointRecord(index=i, g=float(g), status="ok", levels=lv))
    pts = frontier(ScanResult(config=cfg, points=points))
    fit = fit_frontier(pts, FORM_POWER)
    assert np.allclose(fit.params, POWER_TRUTH, atol=1e-6)


# ---------------------------------------------------------------------------
# noiseless recovery
# ---------------------------------------------------------------------------

def test_power_recovery_noiseless():
    pts = make_points(FORM_POWER, POWER_TRUTH)
    fit = fit_frontier(pts, FORM_POWER)
    assert np.allclose(fit.params, POWER_TRUTH, atol=1e-6)
    assert fit.residual_norm < 1e-8
    assert all(s < 1e-6 for s in fit.sigmas)


def test_log_recovery_noiseless():
    pts = make_points(FORM_LOG, LOG_TRUTH)
    fit = fit_frontier(pts, FORM_LOG)
    assert np.allclose(fit.params, LOG_TRUTH, atol=1e-6)


def test_fit_validates_inputs():
    pts = make_points(FORM_POWER, POWER_TRUTH, n=4)
    with pytest.raises(DomainError):
        fit_frontier(pts, FORM_POWER)
    with pytest.raises(DomainError):
        fit_frontier(make_points(FORM_POWER, POWER_TRUTH), "quadratic")
    same_g = [FrontierPoint(g=0.2, f=1.0 + i) for i in range(6)]
    with pytest.raises(DomainError):
        fit_frontier(same_g, FORM_POWER)


# ---------------------------------------------------------------------------
# equivariance
# ---------------------------------------------------------------------------

def test_scale_equivariance():
    pts = make_points(FORM_POWER, POWER_TRUTH)
    kappa = 3.7
    scaled = [FrontierPoint(g=p.g, f=kappa * p.f) for p in pts]
    base = fit_frontier(pts, FORM_POWER)
    scal = fit_frontier(scaled, FORM_POWER)
    assert scal.params[0] == pytest.approx(kappa * base.params[0], rel=1e-8)
    assert scal.params[1] == pytest.approx(base.params[1], abs=1e-8)
    assert scal.params[2] == pytest.approx(base.params[2], abs=1e-8)


def test_shift_equivariance():
    pts = make_points(FORM_POWER, POWER_TRUTH)
    delta = 0.13
    shifted = [FrontierPoint(g=p.g + delta, f=p.f) for p in pts]
    base = fit_frontier(pts, FORM_POWER)
    shif = fit_frontier(shifted, FORM_POWER)
    assert shif.params[1] == pytest.approx(base.params[1] + delta, abs=1e-8)
    assert shif.params[0] == pytest.approx(base.params[0], rel=1e-8)


# ---------------------------------------------------------------------------
# noise robustness (the Monte-Carlo acceptance check runs a reduced version
# here; the full 100-draw version lives in the acceptance suite)
# ---------------------------------------------------------------------------

def test_power_recovery_one_percent_noise_reduced():
    rng = np.random.default_rng(21)
    hits = 0
    for _ in range(20):
        pts = make_points(FORM_POWER, POWER_TRUTH, noise=0.01, rng=rng)
        fit = fit_frontier(pts, FORM_POWER)
        if abs(fit.params[1] - POWER_TRUTH[1]) <= 0.003:
            hits += 1
    assert hits >= 19


def test_nested_form_drives_c_to_zero_on_log_data():
    pts = make_points(FORM_LOG, LOG_TRUTH)
    c, sigma_c = nested_exponent_diagnostic(pts)
    assert abs(c) <= max(2.0 * sigma_c, 5e-4)


def test_fit_failure_diagnostics():
    # wildly invalid data: negative frontier values are rejected up front
    pts = [FrontierPoint(g=0.1 * (i + 1), f=-1.0) for i in range(6)]
    with pytest.raises(DomainError):
        fit_frontier(pts, FORM_POWER)
