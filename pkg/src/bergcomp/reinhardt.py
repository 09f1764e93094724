"""A smoothly bounded Reinhardt domain inside the bidisc.

The domain is ``{rho < 0}`` with

    rho(z) = lam(u(|z1|)) + lam(u(|z2|)) - lam(1/4),
    lam(t) = exp(-1/t) for t > 0 and 0 otherwise,
    u(r) = (4 r^2 - 1) / 12.

Its boundary contains the flat pieces ``{|z1| <= 1/2, |z2| = 1}`` and
``{|z1| = 1, |z2| <= 1/2}``, where the Levi form vanishes, joined by a
curved arc of strongly pseudoconvex points. Since ``lam`` is
flat to infinite order at 0, Levi eigenvalues just past ``|z| = 1/2`` are
positive but far below double precision; they are therefore also carried
as logarithms and the classification uses the exact sign.

Kernel values use the Lebesgue measure: ``K_z(z) = sum |z^a|^2 / c_a`` with
``c_a = int_Omega |z^a|^2 dV``.
"""

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from ._validation import DomainError
from .symbols import Symbol

LAMBDA_QUARTER = math.exp(-4.0)


def u_of(r):
    """Argument of the cutoff for a coordinate modulus ``r``."""
    r = np.asarray(r, dtype=float)
    return (4 * r * r - 1) / 12


def _positive(t):
    t = np.asarray(t, dtype=float)
    return t > 0, np.where(t > 0, t, 1.0)


def lam(t):
    pos, s = _positive(t)
    return np.where(pos, np.exp(-1 / s), 0.0)


def lam_prime(t):
    pos, s = _positive(t)
    return np.where(pos, np.exp(-1 / s) / s**2, 0.0)


def lam_second(t):
    pos, s = _positive(t)
    return np.where(pos, np.exp(-1 / s) * (1 - 2 * s) / s**4, 0.0)


def log_lam_prime(t):
    """``log lam'(t)``; ``-inf`` where ``t <= 0``."""
    pos, s = _positive(t)
    return np.where(pos, -1 / s - 2 * np.log(s), -np.inf)


class PointClass(str, enum.Enum):
    STRONGLY_PSEUDOCONVEX = "STRONGLY_PSEUDOCONVEX"
    WEAKLY = "WEAKLY"


class DegeneratePointError(ArithmeticError):
    pass


class TruncationUnreliable(UserWarning):
    pass


@dataclass(frozen=True)
class BoundaryClassification:
    point: np.ndarray
    rho: float
    levi_eigenvalue: float
    log_levi: float
    point_class: PointClass

    def to_dict(self):
        return {
            "point": [[float(c.real), float(c.imag)] for c in self.point],
            "rho": self.rho,
            "levi_eigenvalue": self.levi_eigenvalue,
            "log_levi": self.log_levi if math.isfinite(self.log_levi) else "-inf",
            "class": self.point_class.value,
        }


def _radius(r1):
    """Boundary radius on ``[0, 1]``, with the limit ``1/2`` at ``r1 = 1``."""
    y = LAMBDA_QUARTER - lam(u_of(r1))
    out = np.ones_like(r1)
    m = r1 > 0.5
    if np.any(m):
        with np.errstate(divide="ignore"):
            u = -1 / np.log(np.maximum(y[m], 0.0))
        out[m] = np.sqrt((12 * u + 1) / 4)
    return out


class ReinhardtDomain:
    """The domain ``{rho < 0}`` described in the module docstring."""

    def rho(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        return lam(u_of(r[..., 0])) + lam(u_of(r[..., 1])) - LAMBDA_QUARTER

    def contains(self, z):
        return self.rho(z) < 0

    def boundary_radius(self, r1):
        """Modulus ``R`` with ``rho(r1, R) = 0``.

        Solving ``lam(u(R)) = lam(1/4) - lam(u(r1))`` gives
        ``u(R) = -1 / log(lam(1/4) - lam(u(r1)))`` in closed form.
        """
        r1 = np.asarray(r1, dtype=float)
        if np.any(r1 < 0) or np.any(r1 >= 1):
            raise DomainError("boundary radius needs 0 <= r1 < 1")
        out = _radius(r1)
        return out if out.ndim else float(out)

    def diagonal_point(self):
        """The modulus ``t`` with ``rho(t, t) = 0``: ``lam(u(t)) = lam(1/4) / 2``."""
        u = -1 / math.log(LAMBDA_QUARTER / 2)
        return math.sqrt((12 * u + 1) / 4)

    def boundary_moduli(self, n):
        """``n`` modulus pairs on the boundary curve, symmetric under the swap.

        The first coordinate runs uniformly over ``[0, t*]`` (``t*`` the
        diagonal point) and the mirrored half covers the rest.
        """
        if n < 2 or n % 2:
            raise ValueError("n must be a positive even number")
        t = self.diagonal_point()
        r1 = np.linspace(0.0, t, n // 2, endpoint=False) + t / n
        half = np.stack([r1, self.boundary_radius(r1)], axis=-1)
        return np.concatenate([half, half[::-1, ::-1]])

    def boundary_grid(self, n, n_angles=1):
        """Boundary points with moduli from :meth:`boundary_moduli`, rotated by torus angles."""
        mod = self.boundary_moduli(n)
        ang = 2 * np.pi * np.arange(n_angles) / n_angles
        pts = [mod * np.exp(1j * np.array([a, b])) for a in ang for b in ang]
        return np.concatenate(pts)

    def gradient_log(self, z):
        """Log-moduli of ``d rho / d z_i = lam'(u_i) conj(z_i) / 3``."""
        r = np.abs(np.asarray(z, dtype=complex))
        with np.errstate(divide="ignore"):
            return log_lam_prime(u_of(r)) + np.log(r / 3)

    def levi(self, z):
        """Levi form on the complex tangent line, as ``(value, log value)``."""
        z = np.asarray(z, dtype=complex).reshape(2)
        r = np.abs(z)
        u = u_of(r)
        log_g = self.gradient_log(z)
        if not np.any(np.isfinite(log_g)):
            raise DegeneratePointError("gradient of rho vanishes")
        if np.any(~np.isfinite(log_g)):
            # one coordinate sits in the flat region: the tangent line is that axis
            return 0.0, -math.inf
        # H_ii = lam(u) * h_i with h_i > 0 for 0 < u < 1/2
        log_h = -1 / u + np.log((1 - 2 * u) * r**2 / (9 * u**4) + 1 / (3 * u**2))
        log_num = logsumexp([log_h[0] + 2 * log_g[1], log_h[1] + 2 * log_g[0]])
        log_den = logsumexp(2 * log_g)
        log_val = float(log_num - log_den)
        return math.exp(log_val), log_val

    def classify_boundary(self, point, tolerance=1e-10, threshold=None):
        """Classify a boundary point by the sign of its Levi eigenvalue.

        With ``threshold=None`` the exact sign is used (via the log value);
        a float threshold instead compares the double-precision eigenvalue.
        """
        point = np.asarray(point, dtype=complex).reshape(2)
        rho = float(self.rho(point))
        if abs(rho) >= tolerance:
            raise DomainError(f"point is not on the boundary (rho = {rho:.3g})")
        value, log_value = self.levi(point)
        if threshold is None:
            strong = math.isfinite(log_value)
        else:
            strong = value > threshold
        cls = PointClass.STRONGLY_PSEUDOCONVEX if strong else PointClass.WEAKLY
        return BoundaryClassification(point, rho, value, log_value, cls)

    def distance_to_boundary(self, z):
        """Euclidean distance from an interior point to the boundary.

        For a complete Reinhardt domain it equals the distance from
        ``(|z1|, |z2|)`` to the boundary curve in the modulus quadrant.
        """
        z = np.asarray(z, dtype=complex).reshape(2)
        if not self.contains(z):
            raise DomainError("point must lie inside the domain")
        p = np.abs(z)

        def curve(s):
            # s in [0, 2]: s <= 1 walks (s, R(s)), s > 1 walks (R(2 - s), 2 - s)
            s = np.clip(s, 0.0, 2.0)
            a = np.minimum(s, 2 - s)
            b = _radius(a)
            return np.where(s <= 1, a, b), np.where(s <= 1, b, a)

        def dist(s):
            x, y = curve(s)
            return np.hypot(x - p[0], y - p[1])

        grid = np.linspace(0, 2, 4001)
        d = dist(grid)
        k = int(np.argmin(d))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        res = minimize_scalar(dist, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        return float(min(res.fun, d[k]))


@dataclass(frozen=True)
class NormQuadrature:
    nodes: int = 200
    panels: int = 12
    s_max: float = 60.0

    def doubled(self):
        return NormQuadrature(2 * self.nodes, self.panels, self.s_max)

    def rule(self):
        """Nodes in ``r1`` over ``(1/2, 1)`` and weights for ``dr1``.

        Uses ``r1 = 1 - exp(-s)`` on geometrically graded panels so that
        high powers of ``r1`` are resolved near ``r1 = 1``.
        """
        x, w = leggauss(self.nodes)
        base = math.log(2)
        edges = np.concatenate([[base], base + np.geomspace(1e-3, self.s_max, self.panels)])
        s = np.concatenate([(b - a) / 2 * x + (a + b) / 2 for a, b in zip(edges[:-1], edges[1:])])
        ws = np.concatenate([(b - a) / 2 * w for a, b in zip(edges[:-1], edges[1:])])
        return 1 - np.exp(-s), np.exp(-s) * ws


@dataclass(frozen=True)
class MonomialNormTable:
    c: np.ndarray  # c[m, n] = int |z1^m z2^n|^2 dV
    quadrature: NormQuadrature
    doubling_error: float

    @property
    def shape(self):
        return self.c.shape

    @property
    def converged(self):
        return self.doubling_error < 1e-8

    @property
    def volume(self):
        return float(self.c[0, 0])

    def to_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "c_mn"])
        for m in range(self.c.shape[0]):
            for n in range(self.c.shape[1]):
                writer.writerow([m, n, repr(float(self.c[m, n]))])


def _norms(domain, M, N, quad):
    r1, w = quad.rule()
    R = _radius(r1)
    m = np.arange(M + 1)[:, None]
    n = np.arange(N + 1)[:, None]
    A = r1[None, :] ** (2 * m + 1) * w[None, :]
    B = R[None, :] ** (2 * n + 2) / (2 * n + 2)
    inner = 0.5 ** (2 * m + 2) / ((2 * m + 2) * (2 * n.T + 2))
    return (2 * np.pi) ** 2 * (A @ B.T + inner)


def monomial_norms(domain, M, N, quadrature=None):
    """Squared norms of ``z1^m z2^n`` for ``m <= M``, ``n <= N``.

    Over ``|z1| <= 1/2`` the fibre is the full unit circle and the integral
    is elementary; the rest is a one-dimensional quadrature in ``|z1|``
    against the boundary radius. Accuracy is checked by doubling the nodes.
    """
    if M < 0 or N < 0:
        raise ValueError("degrees must be nonnegative")
    quad = quadrature or NormQuadrature()
    c = _norms(domain, M, N, quad)
    c2 = _norms(domain, M, N, quad.doubled())
    err = float(np.max(np.abs(c / c2 - 1)))
    return MonomialNormTable(c, quad, err)


@dataclass(frozen=True)
class KernelValue:
    value: float
    tail_bound: float
    reliable: bool

    @property
    def relative_tail(self):
        return self.tail_bound / self.value


RELIABLE_TAIL = 1e-2


def _edge_tail(edge, q):
    """Sum of geometric tails ``edge * q / (1 - q)`` over the nonzero entries."""
    live = edge > 0
    if not np.any(live):
        return 0.0, 0.0
    q = q[live]
    if np.any(q >= 1):
        return math.inf, math.inf
    return float(np.sum(edge[live] * q / (1 - q))), float(q.max())


def _tail_bound(T, c, a):
    """Bound on the series terms beyond the table.

    The norms are moments of a positive measure, hence log-convex in each
    index, so ``c[m, n-1] / c[m, n]`` decreases in ``n``. Each row's tail is
    therefore bounded by a geometric series with its ratio at the table
    edge, and likewise for each column. The corner beyond both edges uses
    the largest edge ratios. Ratios come from the norms directly so that
    underflowed terms do not distort them.
    """
    M, N = T.shape
    if M < 2 or N < 2:
        return math.inf
    rows, qn = _edge_tail(T[:, -1], a[1] * c[:, -2] / c[:, -1])
    cols, qm = _edge_tail(T[-1, :], a[0] * c[-2, :] / c[-1, :])
    if math.isinf(rows) or math.isinf(cols):
        return math.inf
    return rows + cols + float(T[-1, -1]) * qn * qm / ((1 - qn) * (1 - qm))


def kernel_diag_reinhardt(domain, z, table):
    """``K_z(z)`` from the monomial series with a truncation bound."""
    z = np.asarray(z, dtype=complex).reshape(2)
    if not domain.contains(z):
        raise DomainError("point must lie inside the domain")
    a = np.abs(z) ** 2
    M, N = table.shape
    with np.errstate(under="ignore"):
        p1 = a[0] ** np.arange(M)
        p2 = a[1] ** np.arange(N)
        T = p1[:, None] * p2[None, :] / table.c
    value = float(T.sum())
    bound = _tail_bound(T, table.c, a)
    return KernelValue(value, bound, bound <= RELIABLE_TAIL * value)


@dataclass(frozen=True)
class SlopeFit:
    target: np.ndarray
    distances: np.ndarray
    kernel: np.ndarray
    reliable: np.ndarray
    slope: float

    def to_dict(self):
        return {
            "target": [[float(c.real), float(c.imag)] for c in self.target],
            "distance": [float(x) for x in self.distances],
            "kernel": [float(x) for x in self.kernel],
            "reliable": [bool(x) for x in self.reliable],
            "slope": self.slope,
        }


MIN_FIT_POINTS = 4


def _slope(d, k):
    """Log-log slope over the trailing half of the points (at least four)."""
    if len(d) < MIN_FIT_POINTS:
        return float("nan")
    lo = min(len(d) // 2, len(d) - MIN_FIT_POINTS)
    return float(np.polyfit(np.log(d[lo:]), np.log(k[lo:]), 1)[0])


def hormander_exponent(domain, target, table, t=None):
    """Slope of ``log K`` against ``log d`` along ``(1 - t_k) * target``.

    Points whose truncation bound exceeds 1% are left out; fewer than four
    remaining points give ``nan``. The fit uses the points nearest the
    boundary, where the asymptotic regime applies.
    """
    target = np.asarray(target, dtype=complex).reshape(2)
    t = 2.0 ** -np.arange(1, 9) if t is None else np.asarray(t, dtype=float)
    d, k, ok = [], [], []
    for tk in t:
        z = (1 - tk) * target
        kv = kernel_diag_reinhardt(domain, z, table)
        d.append(domain.distance_to_boundary(z))
        k.append(kv.value)
        ok.append(kv.reliable)
    d, k, ok = np.array(d), np.array(k), np.array(ok)
    return SlopeFit(target, d, k, ok, _slope(d[ok], k[ok]))


class UnitBall:
    """The unit ball of C^2, whose kernel ``2 / (pi^2 (1 - |z|^2)^3)`` is explicit."""

    def kernel_diag(self, z):
        z = np.asarray(z, dtype=complex)
        s = np.sum(np.abs(z) ** 2, axis=-1)
        if np.any(s >= 1):
            raise DomainError("point must lie inside the ball")
        return 2 / (np.pi**2 * (1 - s) ** 3)

    def distance_to_boundary(self, z):
        return 1 - np.sqrt(np.sum(np.abs(np.asarray(z, dtype=complex)) ** 2, axis=-1))

    def hormander_exponent(self, target, t=None):
        """Slope fitted on the last half of ``(1 - t_k) * target``."""
        target = np.asarray(target, dtype=complex).reshape(2)
        t = 2.0 ** -np.arange(1, 31) if t is None else np.asarray(t, dtype=float)
        z = (1 - t)[:, None] * target[None, :]
        d = self.distance_to_boundary(z)
        k = self.kernel_diag(z)
        return SlopeFit(target, d, k, np.ones(len(t), bool), _slope(d, k))


def polydisc_kernel(z, radii=(1.0, 1.0)):
    """Lebesgue-normalised kernel diagonal of a polydisc with the given radii."""
    z = np.asarray(z, dtype=complex)
    r = np.asarray(radii, dtype=float)
    a = np.abs(z) / r
    if np.any(a >= 1):
        raise DomainError("point must lie inside the polydisc")
    return float(np.prod(1 / (np.pi * r**2 * (1 - a**2) ** 2)))


@dataclass(frozen=True)
class MonotonicityRow:
    point: np.ndarray
    k_outer: float  # bidisc
    k_domain: float
    k_inner: float | None  # None outside the inner polydisc
    reliable: bool

    @property
    def passes(self):
        ok = self.k_outer <= self.k_domain
        if self.k_inner is not None:
            ok = ok and self.k_domain <= self.k_inner
        return ok


@dataclass(frozen=True)
class MonotonicityReport:
    rows: tuple

    @property
    def passes(self):
        return all(r.passes for r in self.rows if r.reliable)

    @property
    def n_checked(self):
        return sum(r.reliable for r in self.rows)

    def to_dict(self):
        return {
            "passes": self.passes,
            "checked": self.n_checked,
            "unreliable": len(self.rows) - self.n_checked,
            "failures": [
                [[float(c.real), float(c.imag)] for c in r.point]
                for r in self.rows
                if r.reliable and not r.passes
            ],
        }


def sample_domain(domain, count, rng_seed=0, shrink=0.9):
    """Points drawn uniformly from the bidisc, kept when ``z / shrink`` is in the domain."""
    rng = np.random.default_rng(rng_seed)
    out = []
    while sum(len(b) for b in out) < count:
        r = np.sqrt(rng.random((4 * count, 2)))
        z = r * np.exp(2j * np.pi * rng.random((4 * count, 2)))
        out.append(z[domain.contains(z / shrink)])
    return np.concatenate(out)[:count]


def kernel_monotonicity_check(domain, table, inner_radii=(0.5, 0.5), z_samples=None):
    """Check ``K^{D^2} <= K^Omega`` everywhere and ``K^Omega <= K^P`` on the inner polydisc ``P``."""
    if domain.rho(np.asarray(inner_radii, dtype=complex)) > 0:
        raise ValueError("inner polydisc must lie in the domain")
    if z_samples is None:
        z_samples = sample_domain(domain, 50)
    rows = []
    for z in np.asarray(z_samples, dtype=complex).reshape(-1, 2):
        kv = kernel_diag_reinhardt(domain, z, table)
        inside = np.all(np.abs(z) < np.asarray(inner_radii))
        rows.append(
            MonotonicityRow(
                z,
                polydisc_kernel(z),
                kv.value,
                polydisc_kernel(z, inner_radii) if inside else None,
                kv.reliable,
            )
        )
    return MonotonicityReport(tuple(rows))


@dataclass(frozen=True)
class AvoidanceReport:
    avoids: bool
    checked: int
    near_boundary: int
    witnesses: tuple  # classifications of strongly pseudoconvex image points
    unclassifiable: tuple

    def to_dict(self):
        return {
            "avoids": self.avoids,
            "boundary_samples": self.checked,
            "images_on_boundary": self.near_boundary,
            "witnesses": [w.to_dict() for w in self.witnesses[:10]],
            "unclassifiable": len(self.unclassifiable),
        }


def strong_point_avoidance_check(domain, symbol, boundary_samples=None, tolerance=1e-10):
    """Does the symbol keep boundary images off the strongly pseudoconvex points?"""
    if not isinstance(symbol, Symbol) or symbol.arity != 2:
        raise ValueError("a two-variable symbol is required")
    if boundary_samples is None:
        boundary_samples = domain.boundary_grid(200, 4)
    z = np.asarray(boundary_samples, dtype=complex).reshape(-1, 2)
    if np.any(np.abs(domain.rho(z)) >= tolerance):
        raise DomainError("boundary samples must satisfy |rho| < tolerance")
    w = symbol(z)
    if np.any(domain.rho(w) > tolerance):
        raise DomainError("symbol does not map the sampled boundary into the closed domain")
    near = np.nonzero(domain.rho(w) >= -tolerance)[0]
    witnesses, bad = [], []
    for k in near:
        try:
            c = domain.classify_boundary(w[k], tolerance)
        except DegeneratePointError:
            bad.append(k)
            continue
        if c.point_class is PointClass.STRONGLY_PSEUDOCONVEX:
            witnesses.append(c)
    return AvoidanceReport(not witnesses, len(z), len(near), tuple(witnesses), tuple(bad))


def classification_grid(domain, n=200):
    """Classify ``n`` boundary moduli; rows are ``(|z1|, |z2|, levi, class)``."""
    rows = []
    for r in domain.boundary_moduli(n):
        c = domain.classify_boundary(r.astype(complex))
        rows.append((float(r[0]), float(r[1]), c.levi_eigenvalue, c.point_class.value))
    return rows


def write_classification_csv(rows, fh):
    writer = csv.writer(fh)
    writer.writerow(["abs_z1", "abs_z2", "levi_eigenvalue", "class"])
    for a, b, v, c in rows:
        writer.writerow([repr(a), repr(b), repr(v), c])


def converse_counterexample(domain, table, symbol, j_values=(2, 4, 8, 16)):
    """Boundary avoidance alongside a kernel ratio that stays at 1.

    For ``phi = (z1/2, z2)`` every boundary image avoids the strongly
    pseudoconvex points, yet ``phi`` fixes ``p_j = (0, 1 - 1/j)``, so
    ``K_{phi(p_j)}(phi(p_j)) / K_{p_j}(p_j) = 1`` while ``K_{p_j}(p_j)``
    grows without bound. A compact operator would drive that ratio to 0.
    """
    avoidance = strong_point_avoidance_check(domain, symbol)
    rows = []
    for j in j_values:
        p = np.array([0.0, 1 - 1 / j], dtype=complex)
        k_p = kernel_diag_reinhardt(domain, p, table)
        k_img = kernel_diag_reinhardt(domain, symbol(p), table)
        rows.append({
            "j": int(j),
            "kernel": k_p.value,
            "ratio": k_img.value / k_p.value,
            "reliable": bool(k_p.reliable and k_img.reliable),
        })
    ratios = np.array([r["ratio"] for r in rows])
    kernels = np.array([r["kernel"] for r in rows])
    ratio_is_one = bool(np.all(ratios == 1.0))
    diverging = bool(np.all(np.diff(kernels) > 0))
    verdict = "NOT_COMPACT" if ratio_is_one and diverging else "INCONCLUSIVE"
    return {
        "avoidance": avoidance.to_dict(),
        "path": rows,
        "ratio_identically_one": ratio_is_one,
        "kernel_increasing": diverging,
        "verdict": verdict,
    }
