"""Tests for the shooting solver and the threshold constants."""

import math

import numpy as np
import pytest

from nlslab.errors import NoBracket, TailDivergence
from nlslab.fields import NlsParams, RadialGrid, energy, mass, random_bumps
from nlslab.ground_state import (
    closed_form_product,
    derive_constants,
    equation_coefficients,
    gn_ratio,
    measured_product,
    shoot_radial_profile,
    solve_ground_state,
    threshold_constants,
)

CUBIC_3D = NlsParams(3, 3.0)


@pytest.fixture(scope="module")
def gs():
    return derive_constants(solve_ground_state(CUBIC_3D, RadialGrid(30.0, 2999)))


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------


def test_equation_coefficients_cubic():
    assert equation_coefficients(CUBIC_3D) == pytest.approx((1.5, 0.5))


def test_standard_state_amplitude():
    # ΔR − R + R³ = 0 in R³ has R(0) ≈ 4.3374
    profile = shoot_radial_profile(3, 3.0)
    assert profile.q0 == pytest.approx(4.3374, rel=1e-4)


def test_amplitude_is_rescaled_standard_state(gs):
    assert gs.q0 == pytest.approx(4.3374 / math.sqrt(2), rel=1e-4)


def test_bisection_history_brackets_the_root(gs):
    shots = gs.shape.history
    over = [q for q, outcome in shots if outcome == "overshoot"]
    under = [q for q, outcome in shots if outcome == "undershoot"]
    assert max(under) <= gs.q0 <= min(over)
    assert min(over) - max(under) < 1e-9


def test_profile_positive_and_decreasing(gs):
    values = gs.profile.values.real
    assert np.all(values > 0)
    assert np.all(np.diff(values) < 0)


def test_no_bracket_without_widening():
    with pytest.raises(NoBracket, match="do not separate"):
        shoot_radial_profile(3, 3.0, 1.5, 0.5, bracket=(5.0, 10.0), attempts=1)


def test_widened_bracket_recovers(caplog):
    profile = shoot_radial_profile(3, 3.0, 1.5, 0.5, bracket=(5.0, 10.0), attempts=2)
    assert profile.q0 == pytest.approx(4.3374 / math.sqrt(2), rel=1e-4)
    assert "Retrying" in caplog.text


def test_tail_divergence_on_short_grid():
    with pytest.raises(TailDivergence, match="r_max"):
        solve_ground_state(CUBIC_3D, RadialGrid(5.0, 499))


def test_mass_critical_rejected():
    with pytest.raises(ValueError, match="mass-supercritical"):
        solve_ground_state(NlsParams(3, 7 / 3 - 0.01), RadialGrid(30.0, 299))


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------


def test_gradient_equals_mass(gs):
    assert math.sqrt(gs.grad_Q_sq / gs.mass_Q) == pytest.approx(1.0, rel=1e-5)


def test_potential_term_equals_half_p_plus_one_mass(gs):
    assert gs.lp1_Q / gs.mass_Q == pytest.approx(2.0, rel=1e-5)


def test_mass_of_ground_state(gs):
    assert gs.mass_Q == pytest.approx(49.2, rel=5e-3)


def test_threshold_identity(gs):
    assert gs.lambda_threshold == pytest.approx(closed_form_product(CUBIC_3D, gs.mass_Q), rel=1e-10)
    assert measured_product(gs) == pytest.approx(gs.lambda_threshold, rel=1e-4)


def test_threshold_constants_closed_forms(gs):
    c_gn, sigma, threshold = threshold_constants(CUBIC_3D, gs.mass_Q)
    assert c_gn == pytest.approx(2 / gs.mass_Q)
    assert sigma == pytest.approx(math.sqrt(2 / 3) * math.sqrt(gs.mass_Q))
    assert threshold == pytest.approx(math.sqrt(1 / 6) * sigma**2)


def test_soliton_energy_matches_scaling(gs):
    u_q = gs.soliton(gs.profile.grid)
    alpha = gs.alpha
    expected = (alpha**2 - 1) / 2 * alpha**-3 * gs.mass_Q
    assert energy(u_q) == pytest.approx(expected, rel=1e-5)
    assert mass(u_q) == pytest.approx(alpha**-3 * gs.mass_Q, rel=1e-6)


@pytest.mark.parametrize("N, p", [(2, 4.0), (3, 4.0), (4, 2.5)])
def test_identities_across_dimensions(N, p):
    params = NlsParams(N, p)
    gs = derive_constants(solve_ground_state(params, RadialGrid(60.0, 5999)))
    assert gs.grad_Q_sq / gs.mass_Q == pytest.approx(1.0, rel=1e-4)
    assert gs.lp1_Q / gs.mass_Q == pytest.approx((p + 1) / 2, rel=1e-4)


def test_to_record_fields(gs):
    record = gs.to_record()
    assert record["N"] == 3
    assert record["s_c"] == pytest.approx(0.5)
    assert record["c_gn"] == gs.c_gn
    assert {"q0", "mass", "grad_sq", "sigma_pn", "lambda_threshold"} <= set(record)


# ---------------------------------------------------------------------------
# Sharp Gagliardo–Nirenberg constant
# ---------------------------------------------------------------------------


def test_ground_state_attains_gn_bound(gs):
    assert gn_ratio(gs.profile, gs) == pytest.approx(1.0, rel=1e-4)


def test_gn_bound_on_random_bumps(gs):
    fields = random_bumps(gs.profile.grid, CUBIC_3D, 20, np.random.default_rng(0))
    ratios = [gn_ratio(u, gs) for u in fields]
    assert max(ratios) <= 1.0 + 1e-6
    assert min(ratios) > 0


def test_gn_ratio_needs_constants():
    raw = solve_ground_state(CUBIC_3D, RadialGrid(30.0, 2999))
    with pytest.raises(ValueError, match="derive_constants"):
        gn_ratio(raw.profile, raw)
