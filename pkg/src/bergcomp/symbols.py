"""Holomorphic self-maps of the disc and bidisc.

A :class:`Symbol` is a tuple of scalar components, one per output
coordinate. Each component is either a :class:`Polynomial` given by its
monomial terms or the builtin :class:`SqrtShift`, ``xi -> sqrt(xi + 1) - 1``
applied to one coordinate. Both kinds support exact derivatives, which is
all the diagnostics downstream rely on.

Points are complex arrays whose last axis holds the coordinates, so every
routine here is vectorised over leading axes.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import CLOSURE_TOL, check_points, check_seed


class Stratum(enum.Enum):
    INTERIOR = "interior"
    FACE_1 = "face_1"  # |z1| = 1, |z2| < 1
    FACE_2 = "face_2"  # |z1| < 1, |z2| = 1
    TORUS = "torus"  # |z1| = |z2| = 1
    CIRCLE = "circle"  # boundary of the disc


class SingularDerivativeError(ArithmeticError):
    """The derivative of a symbol blows up at the requested point."""


@dataclass(frozen=True)
class Polynomial:
    """Complex polynomial ``sum c * z**e`` in ``nvars`` variables.

    ``terms`` is a tuple of ``(exponents, coefficient)`` pairs with
    distinct exponent tuples and nonzero coefficients; use
    :meth:`from_terms` to build one from arbitrary input.
    """

    nvars: int
    terms: tuple

    @classmethod
    def from_terms(cls, terms, nvars):
        acc = {}
        for exps, coef in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"exponent tuple {exps} does not match {nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            acc[exps] = acc.get(exps, 0j) + complex(coef)
        items = sorted((e, c) for e, c in acc.items() if c != 0)
        return cls(nvars, tuple(items))

    @classmethod
    def variable(cls, j, nvars, coef=1.0):
        exps = [0] * nvars
        exps[j] = 1
        return cls.from_terms([(exps, coef)], nvars)

    @classmethod
    def constant(cls, value, nvars):
        return cls.from_terms([((0,) * nvars, value)], nvars)

    @property
    def degree(self):
        return max((sum(e) for e, _ in self.terms), default=0)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape[:-1], dtype=complex)
        for exps, coef in self.terms:
            term = np.full(z.shape[:-1], coef, dtype=complex)
            for j, k in enumerate(exps):
                if k:
                    term = term * z[..., j] ** k
            out += term
        return out

    def derivative(self, j):
        new = []
        for exps, coef in self.terms:
            k = exps[j]
            if k:
                e = list(exps)
                e[j] = k - 1
                new.append((e, coef * k))
        return Polynomial.from_terms(new, self.nvars)

    def gradient(self, z):
        z = np.asarray(z, dtype=complex)
        return np.stack([self.derivative(j)(z) for j in range(self.nvars)], axis=-1)

    def to_dict(self):
        return {
            "terms": [
                {"exponents": list(e), "re": c.real, "im": c.imag} for e, c in self.terms
            ]
        }


@dataclass(frozen=True)
class SqrtShift:
    """``xi -> sqrt(xi + 1) - 1`` on coordinate ``var``, principal branch.

    Continuous on the closed disc but not Lipschitz: the derivative
    ``1 / (2 sqrt(xi + 1))`` blows up at ``xi = -1``.
    """

    nvars: int
    var: int = 0

    degree = None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.sqrt(z[..., self.var] + 1) - 1

    def gradient(self, z, strict=True):
        z = np.asarray(z, dtype=complex)
        s = np.sqrt(z[..., self.var] + 1)
        singular = s == 0
        if strict and np.any(singular):
            raise SingularDerivativeError("SQRT_SHIFT derivative is singular at xi = -1")
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(singular, np.inf, 1.0 / (2.0 * np.where(singular, 1.0, s)))
        out = np.zeros(z.shape[:-1] + (self.nvars,), dtype=complex)
        out[..., self.var] = d
        return out

    def to_dict(self):
        return {"builtin": "SQRT_SHIFT"}


@dataclass(frozen=True)
class Symbol:
    """A holomorphic self-map of the disc (arity 1) or bidisc (arity 2).

    The self-map property is checked at construction on a stratified grid
    of the closed polydisc; a component exceeding modulus ``1 + 1e-9``
    rejects the symbol.
    """

    components: tuple
    name: str = "symbol"
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        n = len(self.components)
        if n not in (1, 2):
            raise ValueError(f"arity must be 1 or 2, got {n}")
        for c in self.components:
            if c.nvars != n:
                raise ValueError("every component must take as many variables as the arity")
        if self.validate:
            pts = np.concatenate(list(closure_grid(n, 32).values()))
            mod = np.abs(self(pts))
            k = np.unravel_index(np.argmax(mod), mod.shape)
            if mod[k] > 1 + CLOSURE_TOL:
                raise ValueError(
                    f"{self.name} is not a self-map: |phi_{k[-1] + 1}| = {mod[k]:.6g} "
                    f"at {pts[k[0]]}"
                )

    @property
    def arity(self):
        return len(self.components)

    @property
    def is_polynomial(self):
        return all(isinstance(c, Polynomial) for c in self.components)

    @property
    def degree(self):
        if not self.is_polynomial:
            return None
        return max(c.degree for c in self.components)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.stack([c(z) for c in self.components], axis=-1)

    def jacobian_values(self, z, strict=True):
        z = np.asarray(z, dtype=complex)
        rows = []
        for c in self.components:
            if isinstance(c, SqrtShift):
                rows.append(c.gradient(z, strict=strict))
            else:
                rows.append(c.gradient(z))
        return np.stack(rows, axis=-2)

    def rotated(self, pre=None, post=None, name=None):
        """Return ``z -> D_post * phi(D_pre * z)`` for diagonal unitary ``D``.

        ``pre`` and ``post`` are angles per coordinate. Symbols with builtin
        components cannot be rotated.
        """
        n = self.arity
        pre = np.zeros(n) if pre is None else np.asarray(pre, float)
        post = np.zeros(n) if post is None else np.asarray(post, float)
        comps = []
        for i, c in enumerate(self.components):
            if not isinstance(c, Polynomial):
                if np.any(pre != 0) or post[i] != 0:
                    raise ValueError("builtin components cannot be rotated")
                comps.append(c)
                continue
            terms = [
                (e, coef * np.exp(1j * (post[i] + np.dot(pre, e)))) for e, coef in c.terms
            ]
            comps.append(Polynomial.from_terms(terms, n))
        return Symbol(tuple(comps), name or f"{self.name}_rotated")

    def to_dict(self):
        return {
            "arity": self.arity,
            "components": [c.to_dict() for c in self.components],
            "name": self.name,
        }


def polynomial_symbol(components, name="symbol"):
    """Build a polynomial symbol from per-component ``{exponents: coef}`` maps."""
    comps = []
    n = len(components)
    for spec in components:
        items = spec.items() if isinstance(spec, dict) else spec
        comps.append(Polynomial.from_terms(items, n))
    return Symbol(tuple(comps), name)


def sqrt_shift_symbol(arity=1, name=None):
    """The (tensor) SQRT_SHIFT symbol acting coordinatewise."""
    comps = tuple(SqrtShift(arity, j) for j in range(arity))
    return Symbol(comps, name or ("sqrt_shift1d" if arity == 1 else "sqrt_tensor2d"))


def evaluate(symbol, z):
    """Evaluate ``symbol`` at points of the closed polydisc."""
    z = check_points(z, arity=symbol.arity)
    return symbol(z)


def jacobian(symbol, z):
    """Holomorphic derivative matrix ``d phi_i / d z_j``.

    Raises :class:`SingularDerivativeError` at a branch point of a builtin.
    """
    z = check_points(z, arity=symbol.arity)
    return symbol.jacobian_values(z, strict=True)


def _spectral_norm(J):
    if J.shape[-1] == 1:
        return np.abs(J[..., 0, 0])
    # largest singular value of a 2x2 matrix in closed form
    fro2 = np.sum(np.abs(J) ** 2, axis=(-2, -1))
    det = np.abs(J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0])
    disc = np.sqrt(np.maximum(fro2**2 - 4 * det**2, 0.0))
    return np.sqrt((fro2 + disc) / 2)


def _pow2_floor(n):
    return 1 << (int(n).bit_length() - 1)


def _roots_of_unity(n):
    w = np.exp(2j * np.pi * np.arange(n) / n)
    # exact axis points, so that branch points such as -1 are hit exactly
    return np.round(w.real, 15) + 1j * np.round(w.imag, 15)


def _disc_grid(n_radii, n_angles):
    r = np.arange(1, n_radii) / n_radii
    pts = (r[:, None] * _roots_of_unity(n_angles)[None, :]).ravel()
    return np.concatenate([[0j], pts])


def closure_grid(arity, density):
    """Deterministic grid of the closed polydisc, one array per stratum.

    ``density`` is rounded down to a power of two so that grids are nested:
    every point of a coarser grid belongs to every finer one.
    """
    if density < 8:
        raise ValueError("grid density must be at least 8")
    n = _pow2_floor(density)
    circle = _roots_of_unity(n)
    if arity == 1:
        return {
            Stratum.CIRCLE: circle[:, None],
            Stratum.INTERIOR: _disc_grid(n // 4, n)[:, None],
        }
    face_disc = _disc_grid(n // 4, n // 2)
    inner = _disc_grid(n // 8, n // 4)
    torus = np.stack(np.meshgrid(circle, circle, indexing="ij"), axis=-1).reshape(-1, 2)
    f1 = np.stack(np.meshgrid(circle, face_disc, indexing="ij"), axis=-1).reshape(-1, 2)
    f2 = f1[:, ::-1].copy()
    interior = np.stack(np.meshgrid(inner, inner, indexing="ij"), axis=-1).reshape(-1, 2)
    return {
        Stratum.TORUS: torus,
        Stratum.FACE_1: f1,
        Stratum.FACE_2: f2,
        Stratum.INTERIOR: interior,
    }


@dataclass(frozen=True)
class LipschitzEstimate:
    constant: float  # math.inf when the symbol is not Lipschitz
    witness: np.ndarray
    refinement: tuple = ()

    @property
    def finite(self):
        return math.isfinite(self.constant)


DIVERGENCE_THRESHOLD = 1e6
GROWTH_RATIO = 1.2


def lipschitz_estimate(symbol, grid_density=64, max_refinements=48):
    """Sup of the Jacobian operator norm over a stratified grid of the closure.

    The sampled maximiser is used as a witness. If it sits on the boundary,
    the norm is followed along ``(1 - d) * witness`` with ``d`` halving from
    ``1e-2``; once it exceeds ``1e6`` with every step growing by more than
    ``1.2``, the constant is reported as infinite.
    """
    grid = closure_grid(symbol.arity, grid_density)
    pts = np.concatenate(list(grid.values()))
    J = symbol.jacobian_values(pts, strict=False)
    bad = ~np.isfinite(J)
    singular = bad.any(axis=(-2, -1))
    norms = np.full(len(pts), np.inf)
    norms[~singular] = _spectral_norm(J[~singular])
    if singular.any():
        # prefer the point where the most entries blow up
        score = bad.sum(axis=(-2, -1))
        k = int(np.argmax(score))
    else:
        k = int(np.argmax(norms))
    witness = pts[k]

    trail = []
    if np.any(np.abs(witness) > 1 - 1e-12):
        prev = None
        for i in range(max_refinements):
            d = 1e-2 * 2.0**-i
            val = float(_spectral_norm(symbol.jacobian_values((1 - d) * witness, strict=False)))
            trail.append(val)
            if prev is not None and not val > GROWTH_RATIO * prev:
                break
            if val > DIVERGENCE_THRESHOLD:
                return LipschitzEstimate(math.inf, witness, tuple(trail))
            prev = val
    finite_max = float(np.max(norms[~singular])) if (~singular).any() else math.inf
    return LipschitzEstimate(finite_max, witness, tuple(trail))


def uniform_disc(rng, size):
    """Uniform samples of the open unit disc by rejection from ``[-1, 1]**2``."""
    out = np.empty(0, dtype=complex)
    while out.size < size:
        m = int(1.3 * (size - out.size)) + 16
        x = rng.uniform(-1.0, 1.0, m) + 1j * rng.uniform(-1.0, 1.0, m)
        out = np.concatenate([out, x[np.abs(x) < 1]])
    return out[:size]


def uniform_polydisc(rng, size, arity):
    return np.stack([uniform_disc(rng, size) for _ in range(arity)], axis=-1)


def sample_stratum(stratum, count, rng_seed=0, dim=2):
    """Random points of one boundary stratum, deterministic for a seed.

    ``CIRCLE`` is the one-dimensional boundary; ``INTERIOR`` samples the
    open disc or bidisc according to ``dim``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = check_seed(rng_seed)
    stratum = Stratum(stratum)

    def angles():
        return np.exp(1j * rng.uniform(0, 2 * np.pi, count))

    if stratum is Stratum.CIRCLE:
        return angles()[:, None]
    if stratum is Stratum.INTERIOR:
        return uniform_polydisc(rng, count, dim)
    if dim != 2:
        raise ValueError(f"{stratum.name} is a stratum of the bidisc")
    if stratum is Stratum.TORUS:
        a = angles()
        return np.stack([a, angles()], axis=-1)
    face = angles()
    disc = uniform_disc(rng, count)
    if stratum is Stratum.FACE_1:
        return np.stack([face, disc], axis=-1)
    return np.stack([disc, face], axis=-1)


def coordinate_distances(z):
    """Per-coordinate distances ``1 - |z_j|`` to the unit circle."""
    z = check_points(z)
    return 1.0 - np.abs(z)


def distance_to_boundary(z):
    """Euclidean distance to the boundary of the disc or bidisc."""
    return np.min(coordinate_distances(z), axis=-1)


def distance_to_torus(z):
    """Distance from points of the closed bidisc to the torus ``|z1| = |z2| = 1``."""
    z = np.asarray(z, dtype=complex)
    return np.sqrt(np.sum((1.0 - np.abs(z)) ** 2, axis=-1))
