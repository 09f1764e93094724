import io
import math

import numpy as np
import pytest

from bergcomp.carleson import (
    CarlesonSquare,
    CarlesonTrend,
    _c1_ratio,
    _membership,
    derive_C1,
    eta_diagnostic,
    grid_hit_counts,
    lemma1_bound_check,
    pullback_ratio,
    required_samples,
    square_volume,
    theta_grid_values,
    universal_constant,
    vanishing_diagnostic,
    zhu_norm_bound,
)
from bergcomp.fixtures import fixture
from bergcomp.symbols import uniform_polydisc


def test_square_volume_examples():
    assert square_volume(1) == 0.5
    assert square_volume(0.5) == pytest.approx(3 / 16)
    with pytest.raises(ValueError):
        square_volume(0)
    with pytest.raises(ValueError):
        square_volume(1.5)


@pytest.mark.parametrize("r", [0.05, 0.1, 0.5, 1.0])
def test_square_volume_rejection_oracle(r):
    n = 1_000_000
    rng = np.random.default_rng(17)
    pts = rng.uniform(-1, 1, size=(n, 2))
    xi = pts[:, 0] + 1j * pts[:, 1]
    p = CarlesonSquare(r, 0.0).contains(xi).mean()
    est = 4 * p
    sigma = 4 * math.sqrt(p * (1 - p) / n)
    assert abs(est - square_volume(r)) < 3 * sigma


def test_membership_wraps_angle():
    sq = CarlesonSquare(0.2, 2 * np.pi - 0.05)
    assert sq.contains(0.95 * np.exp(0.04j))
    assert not sq.contains(0.95 * np.exp(0.06j))
    assert not sq.contains(1.0)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.8])
@pytest.mark.parametrize("theta", [0.0, 2.0, 5.5])
def test_identity_pullback_is_one(r, theta):
    est = pullback_ratio(fixture("identity1d"), CarlesonSquare(r, theta), 1_000_000, rng_seed=3)
    assert est.reliable
    assert abs(est.ratio - 1) <= 4 * est.ci_halfwidth


def test_pullback_zero_examples(ex_bidisc):
    est = pullback_ratio(ex_bidisc, (CarlesonSquare(0.2), CarlesonSquare(0.2)), 50_000)
    assert est.hits == 0 and est.ratio == 0
    est = pullback_ratio(fixture("half1d"), CarlesonSquare(0.2, 1.0), 50_000)
    assert est.ratio == 0


def test_pullback_rejects_small_samples():
    with pytest.raises(ValueError):
        pullback_ratio(fixture("identity1d"), CarlesonSquare(0.5), samples=1000)


def test_pullback_deterministic():
    a = pullback_ratio(fixture("shift1d"), CarlesonSquare(0.3), 20_000, rng_seed=9)
    b = pullback_ratio(fixture("shift1d"), CarlesonSquare(0.3), 20_000, rng_seed=9)
    assert a == b


def test_rotation_invariance():
    alpha = 0.7
    rot = fixture("rotation1d")
    for theta in (0.0, 1.3):
        a = pullback_ratio(rot, CarlesonSquare(0.3, theta + alpha), 400_000, rng_seed=1)
        b = pullback_ratio(fixture("identity1d"), CarlesonSquare(0.3, theta), 400_000, rng_seed=2)
        assert abs(a.ratio - b.ratio) <= 2 * (a.ci_halfwidth + b.ci_halfwidth)


def test_sparse_counts_match_dense_membership():
    rng = np.random.default_rng(4)
    w = uniform_polydisc(rng, 20_000, 2)
    thetas = theta_grid_values(32)
    for radii in [(0.3, 0.5), (0.05, 1.0), (1.0, 1.0)]:
        dense1 = _membership(w[:, 0], radii[0], thetas).astype(int)
        dense2 = _membership(w[:, 1], radii[1], thetas).astype(int)
        np.testing.assert_array_equal(grid_hit_counts(w, radii, thetas), dense1.T @ dense2)
    one = w[:, :1]
    np.testing.assert_array_equal(
        grid_hit_counts(one, (0.2,), thetas), _membership(one[:, 0], 0.2, thetas).sum(axis=0)
    )


def test_vanishing_identity_not_vanishing():
    table = vanishing_diagnostic(fixture("identity1d"), samples_per_cell=200_000)
    assert np.all(np.abs(table.sup_ratio - 1) < 0.25)
    assert table.trend() is CarlesonTrend.NON_VANISHING


def test_vanishing_sqrt_shift_decreases():
    table = vanishing_diagnostic(fixture("sqrt_shift1d"), samples_per_cell=400_000, rng_seed=1)
    assert table.is_monotone()
    assert table.sup_ratio[-1] < table.sup_ratio[0]


def test_vanishing_ex_bidisc_first_sweep(ex_bidisc):
    table = vanishing_diagnostic(ex_bidisc, samples_per_cell=200_000, sweep="first", fixed_r=0.5)
    assert table.trend() is CarlesonTrend.VANISHING
    assert table.sup_ratio[-1] < 0.1


def test_vanishing_flags_unreliable_cells():
    table = vanishing_diagnostic(fixture("identity2d"), r_ladder=(0.5, 0.02),
                                 samples_per_cell=10_000, sweep="both")
    assert list(table.unreliable) == [False, True]
    assert table.trend() is CarlesonTrend.INCONCLUSIVE
    assert required_samples((0.02, 0.02), 2) > 10_000


def test_vanishing_csv_columns():
    table = vanishing_diagnostic(fixture("half1d"), r_ladder=(0.5, 0.2), theta_grid=16,
                                 samples_per_cell=10_000)
    buf = io.StringIO()
    table.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "r,theta,ratio,ci,flag"
    assert len(lines) == 1 + 2 * 16


def test_c1_ratio_limits():
    assert _c1_ratio(np.array([0.0]))[0] == 1
    assert _c1_ratio(np.array([1.0]))[0] == 5
    # Taylor oracle about a = 1: the ratio is 5 - 6 s + 23 s^2 / 12 + O(s^3), s = 1 - a
    s = np.array([1e-8, 1e-6, 1e-4, 1e-3])
    taylor = 5 - 6 * s + 23 * s**2 / 12
    assert np.all(np.abs(_c1_ratio(1 - s) - taylor) <= 2 * s**3 + 1e-14)


def test_c1_ratio_matches_direct_formula_away_from_one():
    a = np.linspace(0, 0.99, 1000)
    direct = (1 + a**4 - 2 * a**2 * np.cos(1 - a)) / (1 - a) ** 2
    np.testing.assert_allclose(_c1_ratio(a), direct, rtol=1e-10)


def test_derive_c1():
    C1 = derive_C1()
    # the ratio is (1 + a)^2 plus a term at most a^2, so it never exceeds 5
    grid = np.linspace(0, 1, 100_001)
    assert np.all(_c1_ratio(grid) <= 5 + 1e-15)
    assert C1 == 5.0
    assert C1 >= 2


def test_universal_constant():
    assert universal_constant() == pytest.approx(2 * np.pi * 25)
    assert universal_constant(2.0) == pytest.approx(8 * np.pi)


def test_zhu_bound_examples():
    assert zhu_norm_bound(fixture("half1d")) == 1
    assert zhu_norm_bound(fixture("shift1d")) == pytest.approx(3)
    assert zhu_norm_bound(fixture("sqrt_shift1d")) == 1
    with pytest.raises(ValueError):
        zhu_norm_bound(fixture("ex_bidisc"))


def test_lemma1_examples():
    check = lemma1_bound_check(fixture("identity1d"), [CarlesonSquare(0.5)], rng_seed=2)
    assert check.passed and check.max_observed_constant <= check.bound
    squares = [CarlesonSquare(r, th) for r in (0.4, 0.2) for th in (0, 3)]
    check = lemma1_bound_check(fixture("half1d"), squares)
    assert check.max_observed_constant == 0 and check.passed
    check = lemma1_bound_check(fixture("rotation1d"), [CarlesonSquare(0.5, 1.0)], 400_000)
    assert check.passed
    assert check.max_observed_constant == pytest.approx(1, abs=0.02)


def test_eta_ex_bidisc_all_empty(ex_bidisc):
    table = eta_diagnostic(ex_bidisc, [0.4, 0.2, 0.1], theta_grid=16, samples=50_000)
    assert np.all(table.hits == 0)
    assert np.all(np.isnan(table.min_over_theta))


def test_eta_swap_bound():
    eps = [0.4, 0.2, 0.1, 0.05]
    table = eta_diagnostic(fixture("swap_bidisc"), eps, theta_grid=16, samples=200_000)
    m = table.min_over_theta
    assert np.all(np.isfinite(m))
    assert np.all(m >= 1 - np.asarray(eps))
    assert np.all(np.diff(m) > 0)


def test_eta_identity_like():
    with pytest.raises(ValueError, match="torus"):
        eta_diagnostic(fixture("identity_like"), [0.2])
    eps = [0.4, 0.2, 0.1]
    table = eta_diagnostic(fixture("identity_like"), eps, theta_grid=16, samples=100_000,
                           require_condition_a=False)
    finite = np.isfinite(table.eta)
    assert np.all((table.eta >= 1 - np.asarray(eps)[:, None])[finite])
