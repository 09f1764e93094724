"""Bergman kernels of the disc and bidisc and the kernel-ratio diagnostic."""

import csv
import enum
from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, check_points, one_minus_abs2


class Convention(enum.Enum):
    """Measure normalisation of the kernel.

    ``LEBESGUE`` gives ``K_a(z) = 1 / (pi (1 - z conj(a))**2)`` per factor,
    ``NORMALIZED`` drops the ``1/pi``. Ratios do not depend on the choice.
    """

    LEBESGUE = "lebesgue"
    NORMALIZED = "normalized"


class Trend(str, enum.Enum):
    DECAYS_TO_ZERO = "DECAYS_TO_ZERO"
    BOUNDED_AWAY = "BOUNDED_AWAY"
    INCONCLUSIVE = "INCONCLUSIVE"


class SingularKernelError(DomainError):
    pass


def _factor(convention):
    return 1.0 / np.pi if Convention(convention) is Convention.LEBESGUE else 1.0


def kernel_diag(z, convention=Convention.NORMALIZED):
    """``K_z(z)`` for points strictly inside the disc or bidisc."""
    z = check_points(z, closed=False)
    c = _factor(convention)
    return np.prod(c / one_minus_abs2(z) ** 2, axis=-1)


def normalized_kernel_modulus(a, z):
    """``|k_a(z)| = (1 - |a|^2) / |1 - a conj(z)|^2`` on the closed disc."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(a) > 1 + 1e-12) or np.any(np.abs(z) > 1 + 1e-12):
        raise DomainError("points must lie in the closed disc")
    den = np.abs(1 - a * np.conj(z)) ** 2
    if np.any(den == 0):
        raise SingularKernelError("normalized kernel is singular at a = z on the circle")
    return one_minus_abs2(a) / den


def default_parameters(k_max=20):
    return 2.0 ** -np.arange(1, k_max + 1)


@dataclass(frozen=True)
class ApproachPath:
    """Points ``z_k`` approaching a boundary ``target`` as ``t_k -> 0``."""

    target: np.ndarray
    t: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or len(t) < 1:
            raise ValueError("path needs at least one parameter value")
        if np.any(np.diff(t) >= 0) or t[0] > 0.5 or t[-1] <= 0:
            raise ValueError("parameters must be strictly decreasing within (0, 1/2]")
        pts = check_points(self.points, closed=False)
        if pts.shape[0] != len(t):
            raise ValueError("one point per parameter value is required")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "target", np.asarray(self.target, dtype=complex).reshape(-1))

    @classmethod
    def radial(cls, target, t=None):
        """Componentwise radial approach ``z_k = (1 - t_k) * target``."""
        target = check_points(target)
        if not np.any(np.abs(np.abs(target) - 1) < 1e-12):
            raise ValueError("radial paths need a boundary target")
        t = default_parameters() if t is None else np.asarray(t, dtype=float)
        return cls(target, t, (1 - t)[:, None] * target[None, :])

    @property
    def arity(self):
        return self.points.shape[-1]

    def __len__(self):
        return len(self.t)


def _fit_exponent(t, r):
    """Least-squares slope of ``log r`` against ``log t`` over the last half."""
    n = len(t)
    if n < 2:
        return float("nan")
    lo = n // 2 if n >= 4 else 0
    x, y = np.log(t[lo:]), np.log(r[lo:])
    if np.ptp(y) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


#: finite-data thresholds for the limit verdicts
DECAY_EXPONENT = 0.5
DECAY_FINAL = 1e-3
BOUNDED_MIN = 1e-2


@dataclass(frozen=True)
class KernelRatioTrace:
    path: ApproachPath
    ratios: np.ndarray  # nan where flagged
    flags: np.ndarray  # True where phi(z_k) is not inside the open polydisc
    fitted_exponent: float
    verdict: Trend
    coordinate_ratios: np.ndarray  # per-coordinate disc kernel ratios

    def rows(self):
        for t, r, f in zip(self.path.t, self.ratios, self.flags):
            yield {
                "t": float(t),
                "ratio": float(r),
                "log_t": float(np.log(t)),
                "log_ratio": float(np.log(r)) if r > 0 else float("nan"),
                "flag": "OUTSIDE" if f else "",
            }

    def to_csv(self, fh):
        writer = csv.DictWriter(fh, fieldnames=["t", "ratio", "log_t", "log_ratio", "flag"])
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

    def to_dict(self):
        return {
            "target": [[z.real, z.imag] for z in self.path.target],
            "fitted_exponent": self.fitted_exponent,
            "final_ratio": _last_valid(self.ratios),
            "min_ratio": float(np.nanmin(self.ratios)) if np.any(~self.flags) else None,
            "flagged_points": int(self.flags.sum()),
            "verdict": self.verdict.value,
        }


def _last_valid(values):
    good = values[np.isfinite(values)]
    return float(good[-1]) if good.size else None


def classify_trace(ratios, exponent):
    good = ratios[np.isfinite(ratios)]
    if good.size == 0:
        return Trend.INCONCLUSIVE
    if exponent >= DECAY_EXPONENT and good[-1] < DECAY_FINAL:
        return Trend.DECAYS_TO_ZERO
    if good.min() >= BOUNDED_MIN:
        return Trend.BOUNDED_AWAY
    return Trend.INCONCLUSIVE


def kernel_ratio_trace(symbol, path, convention=Convention.NORMALIZED):
    """Sample ``K_{phi(z)}(phi(z)) / K_z(z)`` along an approach path.

    Points whose image is not strictly inside the polydisc are flagged and
    left out of the exponent fit.
    """
    if path.arity != symbol.arity:
        raise ValueError("path and symbol arities differ")
    z = path.points
    w = symbol(z)
    flags = np.any(np.abs(w) >= 1, axis=-1)
    ratios = np.full(len(path), np.nan)
    coord = np.full((len(path), symbol.arity), np.nan)
    ok = ~flags
    if ok.any():
        ratios[ok] = kernel_diag(w[ok], convention) / kernel_diag(z[ok], convention)
        coord[ok] = (one_minus_abs2(z[ok]) / one_minus_abs2(w[ok])) ** 2
    exponent = _fit_exponent(path.t[ok], ratios[ok])
    return KernelRatioTrace(path, ratios, flags, exponent, classify_trace(ratios, exponent), coord)


def weak_nullity_check(a_sequence, test_polynomials):
    """Pairings ``|<f, k_a>| = |f(a)| / sqrt(K_a(a))`` in the normalized convention.

    Returns an array of shape ``(len(test_polynomials), len(a_sequence))``;
    each row should tend to zero as ``a`` approaches the boundary.
    """
    a = np.asarray(a_sequence, dtype=complex)
    if a.ndim <= 1:
        a = a.reshape(-1, 1)
    a = check_points(a, closed=False)
    norm = np.sqrt(kernel_diag(a, Convention.NORMALIZED))
    return np.stack([np.abs(f(a)) / norm for f in test_polynomials])


def maccluer_shapiro_ratio(symbol, path):
    """``(1 - |z|^2) / (1 - |phi(z)|^2)`` along a path; nan where ``|phi| >= 1``."""
    if symbol.arity != 1:
        raise ValueError("the angular-derivative ratio is defined for disc symbols")
    z = path.points[:, 0]
    w = symbol(path.points)[:, 0]
    out = np.full(len(z), np.nan)
    ok = np.abs(w) < 1
    out[ok] = one_minus_abs2(z[ok]) / one_minus_abs2(w[ok])
    return out
