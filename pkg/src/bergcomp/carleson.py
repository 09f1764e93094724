"""Carleson squares and Monte Carlo estimates of pullback measures.

The pullback measure of a symbol is ``V_phi(E) = V(phi^{-1}(E))``. All
estimates draw points uniformly from the open polydisc and count the
images landing in a product of Carleson squares. Within one radius level
every square of the theta grid is scored against the same batch of
samples, drawn from a stream seeded by ``(rng_seed, level)``.
"""

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ._validation import check_radius
from .symbols import uniform_polydisc

Z95 = 1.959963984540054
MIN_EXPECTED_HITS = 10


def wrap_angle(x):
    """Map angles to ``(-pi, pi]``."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(y == -np.pi, np.pi, y)


@dataclass(frozen=True)
class CarlesonSquare:
    """``S = {1 - r < |xi| < 1, |arg(xi) - theta| < r/2}``."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "r", check_radius(self.r))
        object.__setattr__(self, "theta", float(np.mod(self.theta, 2 * np.pi)))

    def contains(self, xi):
        xi = np.asarray(xi, dtype=complex)
        mod = np.abs(xi)
        ang = np.abs(wrap_angle(np.angle(xi) - self.theta))
        return (mod > 1 - self.r) & (mod < 1) & (ang < self.r / 2)

    @property
    def volume(self):
        return square_volume(self)


def square_volume(square):
    """Plane area ``r^2 - r^3/2`` of a Carleson square (or of radius ``r``)."""
    r = square.r if isinstance(square, CarlesonSquare) else check_radius(square)
    return r * r - r**3 / 2


@dataclass(frozen=True)
class PullbackEstimate:
    boxes: tuple
    samples: int
    hits: int
    ratio: float
    ci_halfwidth: float
    expected_uniform_hits: float

    @property
    def reliable(self):
        return self.expected_uniform_hits >= MIN_EXPECTED_HITS


def _scale(radii, arity):
    return math.pi**arity / math.prod(square_volume(r) for r in radii)


def _estimate(hits, n, radii, arity):
    scale = _scale(radii, arity)
    p = hits / n
    ci = Z95 * math.sqrt(p * (1 - p) / n) * scale
    expected = n / scale
    return p * scale, ci, expected


def pullback_ratio(symbol, boxes, samples=100_000, rng_seed=0):
    """Estimate ``V_phi(S_1 x ... x S_n) / V(S_1 x ... x S_n)``.

    ``boxes`` holds one :class:`CarlesonSquare` per coordinate. The ratio
    comes with a 95% binomial half-width.
    """
    if isinstance(boxes, CarlesonSquare):
        boxes = (boxes,)
    boxes = tuple(boxes)
    if len(boxes) != symbol.arity:
        raise ValueError("one Carleson square per coordinate is required")
    if samples < 10_000:
        raise ValueError("at least 10^4 samples are required")
    rng = np.random.default_rng(rng_seed)
    w = symbol(uniform_polydisc(rng, samples, symbol.arity))
    inside = np.ones(samples, dtype=bool)
    for j, box in enumerate(boxes):
        inside &= box.contains(w[:, j])
    hits = int(inside.sum())
    ratio, ci, expected = _estimate(hits, samples, [b.r for b in boxes], symbol.arity)
    return PullbackEstimate(boxes, samples, hits, ratio, ci, expected)


def required_samples(radii, arity, hits=MIN_EXPECTED_HITS):
    """Sample count at which a uniform pullback puts ``hits`` points in the box."""
    return math.ceil(hits * _scale(radii, arity))


CHUNK = 1_000_000


def _chunks(total):
    full, rest = divmod(total, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def theta_grid_values(n):
    return 2 * np.pi * np.arange(n) / n


def _membership(w, r, thetas):
    """Boolean matrix (samples x thetas) of ``w in S_r^theta``."""
    mod = np.abs(w)
    ann = (mod > 1 - r) & (mod < 1)
    ang = np.angle(w)[:, None] - thetas[None, :]
    return ann[:, None] & (np.abs(wrap_angle(ang)) < r / 2)


def _sparse_membership(w, r, n_theta):
    """Sparse (samples x thetas) membership for the uniform theta grid.

    Only grid angles within ``r/2 + h`` of a sample's argument can contain
    it, so the exact test runs on a few neighbouring cells per sample.
    """
    h = 2 * np.pi / n_theta
    arg = np.angle(w)
    k0 = np.rint(arg / h).astype(np.int64)
    reach = int(math.ceil(r / 2 / h)) + 1
    offsets = np.arange(-reach, reach + 1)
    cells = np.mod(k0[:, None] + offsets[None, :], n_theta)
    ok = np.abs(wrap_angle(arg[:, None] - cells * h)) < r / 2
    rows = np.broadcast_to(np.arange(len(w))[:, None], cells.shape)
    return sparse.csr_matrix(
        (np.ones(int(ok.sum()), dtype=np.int64), (rows[ok], cells[ok])),
        shape=(len(w), n_theta),
    )


def grid_hit_counts(w, radii, thetas):
    """Hit counts for every square of a theta grid (one grid axis per coordinate)."""
    n_theta = len(thetas)
    if not np.allclose(thetas, theta_grid_values(n_theta)):
        raise ValueError("thetas must be the uniform grid 2 pi k / n")
    mod = np.abs(w)
    keep = np.ones(len(w), dtype=bool)
    for j, r in enumerate(radii):
        keep &= (mod[:, j] > 1 - r) & (mod[:, j] < 1)
    w = w[keep]
    a = _sparse_membership(w[:, 0], radii[0], n_theta)
    if w.shape[1] == 1:
        return np.asarray(a.sum(axis=0)).ravel()
    b = _sparse_membership(w[:, 1], radii[1], n_theta)
    return (a.T @ b).toarray()


class CarlesonTrend(str, enum.Enum):
    VANISHING = "VANISHING"
    NON_VANISHING = "NON_VANISHING"
    INCONCLUSIVE = "INCONCLUSIVE"


#: a sweep vanishes when its smallest-r sup ratio drops below this
VANISHING_FINAL = 0.1
#: and is non-vanishing when it stays at or above this
NON_VANISHING_FINAL = 0.5


@dataclass
class VanishingTable:
    """Sup-over-theta pullback ratios along a decreasing ladder of radii."""

    sweep: str
    fixed_r: float
    r: np.ndarray
    thetas: np.ndarray
    cell_ratio: np.ndarray  # (len(r), theta) ratio maximised over the other theta
    cell_ci: np.ndarray
    sup_ratio: np.ndarray
    sup_ci: np.ndarray
    unreliable: np.ndarray
    samples: int
    rng_seed: int
    extra: dict = field(default_factory=dict)

    def is_monotone(self, noise=2.0):
        v, ci = self.sup_ratio, self.sup_ci
        for i in range(len(v) - 1):
            if v[i + 1] > v[i] + noise * max(ci[i], ci[i + 1]) + 1e-12:
                return False
        return True

    def trend(self):
        final = self.sup_ratio[-1]
        if self.unreliable[-1]:
            return CarlesonTrend.INCONCLUSIVE
        if final >= NON_VANISHING_FINAL:
            return CarlesonTrend.NON_VANISHING
        if final < VANISHING_FINAL and self.is_monotone():
            return CarlesonTrend.VANISHING
        return CarlesonTrend.INCONCLUSIVE

    def to_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["r", "theta", "ratio", "ci", "flag"])
        for i, r in enumerate(self.r):
            flag = "UNRELIABLE" if self.unreliable[i] else ""
            for k, th in enumerate(self.thetas):
                writer.writerow(
                    [repr(float(r)), repr(float(th)), repr(float(self.cell_ratio[i, k])),
                     repr(float(self.cell_ci[i, k])), flag]
                )

    def to_dict(self):
        return {
            "sweep": self.sweep,
            "fixed_r": self.fixed_r,
            "r": [float(x) for x in self.r],
            "sup_ratio": [float(x) for x in self.sup_ratio],
            "sup_ci": [float(x) for x in self.sup_ci],
            "unreliable": [bool(x) for x in self.unreliable],
            "monotone": self.is_monotone(),
            "trend": self.trend().value,
            "samples": self.samples,
            "rng_seed": self.rng_seed,
        }


def vanishing_diagnostic(
    symbol,
    r_ladder=(0.8, 0.4, 0.2, 0.1),
    theta_grid=64,
    samples_per_cell=200_000,
    rng_seed=0,
    sweep="first",
    fixed_r=0.5,
):
    """Sup over a theta grid of the pullback ratio for each radius of a ladder.

    For bidisc symbols ``sweep`` selects which radius shrinks: ``"first"``
    shrinks ``r1`` with ``r2 = fixed_r``, ``"second"`` the reverse, and
    ``"both"`` shrinks them together. The sup runs over both angles.
    """
    r_ladder = np.asarray([check_radius(r) for r in r_ladder], dtype=float)
    if np.any(np.diff(r_ladder) >= 0):
        raise ValueError("r ladder must be strictly decreasing")
    if theta_grid < 16:
        raise ValueError("theta grid must have at least 16 points")
    n = symbol.arity
    if n == 1:
        sweep = "first"
    elif sweep not in ("first", "second", "both"):
        raise ValueError(f"unknown sweep {sweep!r}")
    thetas = theta_grid_values(theta_grid)
    L = len(r_ladder)
    cell_ratio = np.zeros((L, theta_grid))
    cell_ci = np.zeros((L, theta_grid))
    sup_ratio = np.zeros(L)
    sup_ci = np.zeros(L)
    unreliable = np.zeros(L, dtype=bool)
    for i, r in enumerate(r_ladder):
        if n == 1:
            radii = (r,)
        elif sweep == "first":
            radii = (r, fixed_r)
        elif sweep == "second":
            radii = (fixed_r, r)
        else:
            radii = (r, r)
        rng = np.random.default_rng([rng_seed, i])
        counts = 0
        for size in _chunks(samples_per_cell):
            w = symbol(uniform_polydisc(rng, size, n))
            counts = counts + grid_hit_counts(w, radii, thetas)
        if n == 2:
            # report per swept angle, maximised over the other one
            counts = counts.max(axis=1) if sweep != "second" else counts.max(axis=0)
        scale = _scale(radii, n)
        p = counts / samples_per_cell
        cell_ratio[i] = p * scale
        cell_ci[i] = Z95 * np.sqrt(p * (1 - p) / samples_per_cell) * scale
        k = int(np.argmax(cell_ratio[i]))
        sup_ratio[i] = cell_ratio[i, k]
        sup_ci[i] = cell_ci[i, k]
        unreliable[i] = samples_per_cell / scale < MIN_EXPECTED_HITS
    return VanishingTable(
        sweep, float(fixed_r) if n == 2 and sweep != "both" else float("nan"),
        r_ladder, thetas, cell_ratio, cell_ci, sup_ratio, sup_ci, unreliable,
        samples_per_cell, rng_seed,
    )


def _c1_ratio(a):
    """``(1 + a^4 - 2 a^2 cos(1 - a)) / (1 - a)^2`` with its limit at ``a = 1``.

    The numerator equals ``(1 - a^2)^2 + 4 a^2 sin^2(s/2)`` with ``s = 1 - a``,
    so the ratio is ``(1 + a)^2 + a^2 sinc^2(s/2)``, which is free of
    cancellation and tends to 5 as ``a -> 1``.
    """
    a = np.asarray(a, dtype=float)
    s = 1.0 - a
    return (1 + a) ** 2 + a**2 * np.sinc(s / (2 * np.pi)) ** 2


def derive_C1(resolution=1e-5):
    """Smallest ``C1`` with ``1 + a^4 - 2a^2 cos(1-a) <= C1 (1-a)^2`` on ``[0, 1]``.

    The scan maximum is rounded up to three significant digits.
    """
    n = int(round(1.0 / resolution))
    a = np.linspace(0.0, 1.0, n + 1)
    peak = float(_c1_ratio(a).max())
    digits = 2 - int(math.floor(math.log10(peak)))
    return math.ceil(peak * 10**digits) / 10**digits


def universal_constant(C1=None):
    """Constant ``C`` with ``V_phi(S) <= C ||C_phi||^2 V(S)`` for every disc symbol.

    On the square, ``|k_a|^2 >= 1/(pi C1^2 r^2)`` for the Lebesgue-normalised
    kernel, so ``V_phi(S) <= pi C1^2 r^2 ||C_phi||^2``; with
    ``V(S) >= r^2/2`` this gives ``C = 2 pi C1^2``.
    """
    if C1 is None:
        C1 = derive_C1()
    C2 = 1.0 / C1**2
    return 2.0 * math.pi / C2


def zhu_norm_bound(symbol):
    """``(1 + |phi(0)|) / (1 - |phi(0)|)``, an upper bound for ``||C_phi||``."""
    if symbol.arity != 1:
        raise ValueError("norm bound is for disc symbols")
    a = abs(complex(symbol(np.zeros(1))[0]))
    if a >= 1:
        raise ValueError("|phi(0)| = 1: symbol is a unimodular constant")
    return (1 + a) / (1 - a)


@dataclass(frozen=True)
class Lemma1Check:
    max_observed_constant: float
    bound: float
    passed: bool
    per_square: tuple
    unreliable: tuple


def lemma1_bound_check(symbol, squares, samples=100_000, rng_seed=0):
    """Compare ``V_phi(S) / (||C_phi||^2 V(S))`` against the universal constant.

    The operator norm is replaced by its upper bound :func:`zhu_norm_bound`,
    so the observed values are lower estimates of the true constant.
    """
    if symbol.arity != 1:
        raise ValueError("lemma bound check is for disc symbols")
    norm2 = zhu_norm_bound(symbol) ** 2
    observed = []
    flags = []
    for i, sq in enumerate(squares):
        est = pullback_ratio(symbol, (sq,), samples, rng_seed=[rng_seed, i])
        observed.append(est.ratio / norm2)
        flags.append(not est.reliable)
    bound = universal_constant()
    worst = max(observed)
    return Lemma1Check(worst, bound, worst <= bound, tuple(observed), tuple(flags))


@dataclass
class EtaTable:
    epsilons: np.ndarray
    thetas: np.ndarray
    eta: np.ndarray  # nan marks an empty cell
    hits: np.ndarray

    @property
    def min_over_theta(self):
        out = np.full(len(self.epsilons), np.nan)
        for i, row in enumerate(self.eta):
            if np.any(np.isfinite(row)):
                out[i] = np.nanmin(row)
        return out

    def to_dict(self):
        return {
            "epsilon": [float(e) for e in self.epsilons],
            "min_eta": [None if not np.isfinite(v) else float(v) for v in self.min_over_theta],
            "empty_cells": [int((h == 0).sum()) for h in self.hits],
        }


def eta_diagnostic(symbol, epsilon_ladder, theta_grid=64, samples=100_000, rng_seed=0,
                   require_condition_a=True):
    """``eta(eps, theta) = inf |z1|`` over sampled ``z`` with ``phi_1(z)`` in ``S_eps^theta``.

    By default the symbol must keep the closed bidisc away from the torus;
    the smallest ``eta`` over theta should then climb to 1 as ``eps``
    shrinks. ``require_condition_a=False`` skips that check, which is useful
    for symbols like ``(z1, z1 z2)`` where ``eta`` is still informative.
    """
    from .criteria import condition_a

    if symbol.arity != 2:
        raise ValueError("eta diagnostic is for bidisc symbols")
    cond = condition_a(symbol) if require_condition_a else None
    if cond is not None and not cond.holds:
        raise ValueError(
            f"{symbol.name} meets the torus (margin {cond.margin:.3g}); eta is undefined"
        )
    eps = np.asarray([check_radius(e) for e in epsilon_ladder], dtype=float)
    thetas = theta_grid_values(theta_grid)
    eta = np.full((len(eps), theta_grid), np.nan)
    hits = np.zeros((len(eps), theta_grid), dtype=np.int64)
    for i, e in enumerate(eps):
        rng = np.random.default_rng([rng_seed, i])
        z = uniform_polydisc(rng, samples, 2)
        w1 = symbol(z)[:, 0]
        member = _membership(w1, e, thetas)
        hits[i] = member.sum(axis=0)
        r1 = np.abs(z[:, 0])
        for k in np.nonzero(hits[i])[0]:
            eta[i, k] = r1[member[:, k]].min()
    return EtaTable(eps, thetas, eta, hits)
