import json

import numpy as np
import pytest

from bergcomp.carleson import CarlesonTrend
from bergcomp.criteria import (
    DEFAULT_EPSILONS,
    Outcome,
    VerdictConfig,
    aggregate_verdict,
    approach_paths,
    check_geometric,
    condition_a,
    condition_b,
)
from bergcomp.fixtures import POLYNOMIAL_BIDISC_FIXTURES, fixture
from bergcomp.kernels import Trend
from bergcomp.operator import TailTrend

FAST = VerdictConfig(run_carleson=False)


def test_ex_bidisc_geometric(ex_bidisc):
    rep = check_geometric(ex_bidisc)
    assert rep.condition_a.holds
    assert rep.condition_a.margin == pytest.approx(0.5)
    assert rep.condition_b.holds
    for e in DEFAULT_EPSILONS:
        assert rep.condition_b.worst_margin(e) > 0
    assert rep.lipschitz.finite
    assert rep.holds


def test_identity_fails_a(identity2d):
    a = condition_a(identity2d)
    assert not a.holds
    assert a.margin == pytest.approx(0, abs=1e-12)
    np.testing.assert_allclose(np.abs(a.witness), 1)


def test_face_violator_fails_b():
    sym = fixture("face_violator")
    assert condition_a(sym).holds
    b = condition_b(sym)
    assert not b.holds
    np.testing.assert_allclose(b.witness, [1, 0], atol=1e-12)
    np.testing.assert_allclose(np.abs(b.image), [1, 0], atol=1e-12)


def test_sqrt_tensor_fails_a_with_witness():
    sym = fixture("sqrt_tensor2d")
    a = condition_a(sym)
    assert not a.holds
    np.testing.assert_allclose(np.abs(a.image), 1, atol=1e-12)
    rep = check_geometric(sym)
    assert not rep.lipschitz.finite


@pytest.mark.parametrize("name", POLYNOMIAL_BIDISC_FIXTURES + ("sqrt_tensor2d",))
def test_margins_nonincreasing(name):
    b = condition_b(fixture(name))
    for s in ("INTERIOR", "FACE_1", "FACE_2"):
        m = [b.margins[e][s] for e in b.epsilons if s in b.margins[e]]
        assert all(x >= y - 1e-15 for x, y in zip(m, m[1:]))


def test_ex_bidisc_margin_tends_to_zero(ex_bidisc):
    b = condition_b(ex_bidisc)
    worst = [b.worst_margin(e) for e in b.epsilons]
    assert worst[-1] < worst[0]
    assert worst[-1] > 0


def test_requires_bidisc():
    with pytest.raises(ValueError):
        condition_a(fixture("half1d"))


def test_approach_paths_cover_torus_and_faces():
    paths = approach_paths(2)
    assert len(paths) == 16 + 4 * 3 * 2
    targets = np.array([p.target for p in paths])
    assert np.sum(np.all(np.isclose(np.abs(targets), 1), axis=1)) == 16
    assert len(approach_paths(1)) == 16


@pytest.mark.parametrize(
    "name, expected",
    [("ex_bidisc", Outcome.COMPACT), ("identity2d", Outcome.NOT_COMPACT),
     ("face_violator", Outcome.NOT_COMPACT), ("half2d", Outcome.COMPACT),
     ("swap_bidisc", Outcome.COMPACT)],
)
def test_polynomial_verdicts_agree(name, expected):
    v = aggregate_verdict(fixture(name), FAST)
    assert v.verdict is expected
    assert v.geometric is expected
    assert v.kernel_ratio is (Trend.DECAYS_TO_ZERO if expected is Outcome.COMPACT
                              else Trend.BOUNDED_AWAY)
    assert v.spectral is (TailTrend.DECAYING if expected is Outcome.COMPACT else TailTrend.FLAT)
    assert v.consistency == "AGREE"
    assert v.kernel_label == "criterion (Lipschitz bidisc)"


@pytest.mark.parametrize("pre, post", [((0.4, -1.2), (2.0, 0.3)), ((np.pi, 0), (0, np.pi / 2))])
@pytest.mark.parametrize("name", ["ex_bidisc", "face_violator", "identity2d"])
def test_rotation_invariance(name, pre, post):
    base = aggregate_verdict(fixture(name), FAST)
    rot = aggregate_verdict(fixture(name).rotated(pre=pre, post=post), FAST)
    for attr in ("verdict", "geometric", "kernel_ratio", "spectral"):
        assert getattr(rot, attr) is getattr(base, attr)


def test_disc_verdicts():
    assert aggregate_verdict(fixture("half1d"), FAST).verdict is Outcome.COMPACT
    v = aggregate_verdict(fixture("identity1d"), FAST)
    assert v.verdict is Outcome.NOT_COMPACT
    assert v.kernel_label == "criterion (angular derivative, disc)"


@pytest.mark.slow
def test_sqrt_tensor_compact_by_evidence():
    v = aggregate_verdict(fixture("sqrt_tensor2d"))
    assert not v.lipschitz.finite
    assert v.geometric is Outcome.INAPPLICABLE
    assert v.carleson is CarlesonTrend.VANISHING
    assert v.verdict is Outcome.COMPACT_BY_EVIDENCE
    assert v.kernel_label == "necessary-condition evidence"
    assert "sqrt(xi + 1) - 1" in v.explanation
    assert v.geometric_report.condition_a.witness is not None


@pytest.mark.slow
def test_ex_bidisc_full_dossier(ex_bidisc):
    v = aggregate_verdict(ex_bidisc, VerdictConfig(seed=3))
    assert v.verdict is Outcome.COMPACT
    assert v.consistency == "AGREE"
    d = v.to_dict()
    json.dumps(d)
    for key in ("schema_version", "symbol_name", "lipschitz", "geometric", "kernel_ratio",
                "carleson", "spectral", "verdict", "consistency", "seeds", "tolerances"):
        assert key in d
    assert d["verdict"] == "COMPACT"
