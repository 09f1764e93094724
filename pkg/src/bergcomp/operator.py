"""Finite sections of ``C_phi`` in the orthonormal monomial basis.

Basis functions are ``prod_j sqrt((m_j + 1) / pi) z_j**m_j`` (Lebesgue
measure), ordered by total degree and then lexicographically with
``z1`` first. Matrix entries ``<C_phi e_a, e_b>`` are computed with a
tensor quadrature on each disc factor: Gauss-Legendre in the radius and
the trapezoid rule in the angle. For polynomial symbols the rule can be
chosen exact.
"""

import csv
import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss


def basis_indices(degree_cap, arity):
    """Multi-indices of total degree ``<= degree_cap`` in graded lex order."""
    if degree_cap < 0:
        raise ValueError("degree cap must be nonnegative")
    if arity == 1:
        return [(d,) for d in range(degree_cap + 1)]
    return [(m, d - m) for d in range(degree_cap + 1) for m in range(d, -1, -1)]


def basis_norm(index):
    """Normalising factor of the monomial ``z**index``."""
    return math.prod(math.sqrt((k + 1) / math.pi) for k in index)


@dataclass(frozen=True)
class QuadratureSpec:
    radial: int
    angular: int

    @classmethod
    def exact_for(cls, symbol_degree, degree_cap):
        top = 2 * degree_cap * max(symbol_degree, 1)
        return cls(radial=top // 2 + 1, angular=top + 1)

    def is_exact_for(self, symbol_degree, degree_cap):
        top = 2 * degree_cap * max(symbol_degree, 1)
        return self.angular > top and 2 * self.radial - 1 >= top + 1

    def doubled(self):
        return QuadratureSpec(2 * self.radial, 2 * self.angular)


def disc_rule(spec):
    """Nodes and weights for ``int_D f dA`` on one disc factor."""
    x, w = leggauss(spec.radial)
    r = (x + 1) / 2
    wr = w / 2 * r
    th = 2 * np.pi * np.arange(spec.angular) / spec.angular
    wt = np.full(spec.angular, 2 * np.pi / spec.angular)
    nodes = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    weights = (wr[:, None] * wt[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class OperatorMatrix:
    degree_cap: int
    arity: int
    indices: tuple
    entries: np.ndarray  # entries[row b, column a] = <C_phi e_a, e_b>
    quadrature: QuadratureSpec
    exact: bool

    @property
    def shape(self):
        return self.entries.shape

    def to_csv(self, fh):
        fh.write(f"# degree_cap={self.degree_cap}\n")
        fh.write("# ordering=graded_lex\n")
        fh.write("# convention=LEBESGUE\n")
        fh.write(f"# quadrature_radial={self.quadrature.radial}\n")
        fh.write(f"# quadrature_angular={self.quadrature.angular}\n")
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "row_index", "col_index", "re", "im"])
        for i, b in enumerate(self.indices):
            for j, a in enumerate(self.indices):
                v = self.entries[i, j]
                writer.writerow(
                    [i, j, "-".join(map(str, b)), "-".join(map(str, a)),
                     repr(float(v.real)), repr(float(v.imag))]
                )


def assemble(symbol, degree_cap, quadrature=None):
    """Assemble the truncated matrix of ``C_phi`` up to total degree ``degree_cap``."""
    if not symbol.is_polynomial:
        raise ValueError("matrix assembly supports polynomial symbols only")
    deg = symbol.degree
    if quadrature is None:
        quadrature = QuadratureSpec.exact_for(deg, degree_cap)
    exact = quadrature.is_exact_for(deg, degree_cap)
    if not exact:
        warnings.warn("quadrature below the exactness threshold", RuntimeWarning, stacklevel=2)
    nodes, weights = disc_rule(quadrature)
    idx = basis_indices(degree_cap, symbol.arity)
    norms = np.array([basis_norm(a) for a in idx])
    # V[p, k] = conj(z_p)**k * weight_p for one factor
    V = np.conj(nodes)[:, None] ** np.arange(degree_cap + 1)[None, :] * weights[:, None]
    n = symbol.arity
    if n == 1:
        w = symbol(nodes[:, None])[:, 0]
        pw = w[:, None] ** np.arange(degree_cap + 1)[None, :]
        raw = V.T @ pw  # raw[b, a] = sum_p weight conj(z)^b phi^a
        M = raw[np.ix_([b[0] for b in idx], [a[0] for a in idx])]
    else:
        grid = np.stack(np.meshgrid(nodes, nodes, indexing="ij"), axis=-1)
        w = symbol(grid)
        p1 = w[..., 0][..., None] ** np.arange(degree_cap + 1)
        p2 = w[..., 1][..., None] ** np.arange(degree_cap + 1)
        M = np.zeros((len(idx), len(idx)), dtype=complex)
        rows1 = np.array([b[0] for b in idx])
        rows2 = np.array([b[1] for b in idx])
        for j, (a1, a2) in enumerate(idx):
            f = p1[..., a1] * p2[..., a2]
            proj = V.T @ f @ V  # proj[b1, b2]
            M[:, j] = proj[rows1, rows2]
    M = M * norms[:, None] * norms[None, :]
    return OperatorMatrix(degree_cap, n, tuple(idx), M, quadrature, exact)


def singular_values(matrix, clamp=1e-14):
    """Singular values in descending order; tiny ones relative to the largest are zeroed."""
    M = matrix.entries if isinstance(matrix, OperatorMatrix) else np.asarray(matrix)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size and s[0] > 0:
        s = np.where(s < clamp * s[0], 0.0, s)
    return s


class TailTrend(str, enum.Enum):
    DECAYING = "DECAYING"
    FLAT = "FLAT"
    INCONCLUSIVE = "INCONCLUSIVE"


TAIL_LEVEL = 0.1
PLATEAU_LEVEL = 0.5
DRIFT_LIMIT = 1e-2


@dataclass(frozen=True)
class SpectralEvidence:
    degree_caps: tuple
    spectra: tuple
    stabilized_values: tuple
    drift: float
    plateau_lengths: tuple
    tail_trend: TailTrend
    norm_estimate: float

    def to_dict(self):
        return {
            "degree_caps": list(self.degree_caps),
            "stabilized_values": [float(v) for v in self.stabilized_values],
            "leading_drift": self.drift,
            "plateau_lengths": list(self.plateau_lengths),
            "tail_trend": self.tail_trend.value,
            "norm_estimate": self.norm_estimate,
            "singular_values": {
                str(D): [float(v) for v in s] for D, s in zip(self.degree_caps, self.spectra)
            },
        }


def compactness_evidence(symbol, degree_caps=(4, 6, 8), n_leading=3):
    """Classify the singular-value tail of finite sections as decaying or flat.

    ``DECAYING``: at the largest cap the singular value halfway down the
    spectrum is below 0.1. ``FLAT``: the number of non-leading values at or
    above 0.5 grows with every cap. Leading values must agree across caps
    to a relative drift of 1e-2, otherwise the result is ``INCONCLUSIVE``.
    """
    caps = tuple(sorted(degree_caps))
    if len(caps) < 2:
        raise ValueError("at least two degree caps are required")
    spectra = tuple(singular_values(assemble(symbol, D)) for D in caps)
    drift = 0.0
    for a, b in zip(spectra[:-1], spectra[1:]):
        k = min(n_leading, len(a), len(b))
        drift = max(drift, float(np.max(np.abs(a[:k] - b[:k]) / np.maximum(b[:k], 1e-300))))
    plateau = tuple(int(np.sum(s[1:] >= PLATEAU_LEVEL - 1e-9)) for s in spectra)
    last = spectra[-1]
    if drift > DRIFT_LIMIT:
        trend = TailTrend.INCONCLUSIVE
    elif last[len(last) // 2] < TAIL_LEVEL:
        trend = TailTrend.DECAYING
    elif all(x < y for x, y in zip(plateau[:-1], plateau[1:])):
        trend = TailTrend.FLAT
    else:
        trend = TailTrend.INCONCLUSIVE
    k = min(n_leading, len(last))
    return SpectralEvidence(
        caps, spectra, tuple(last[:k]), drift, plateau, trend, float(last[0])
    )
