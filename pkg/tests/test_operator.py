import io
import math
import warnings

import numpy as np
import pytest

from bergcomp.carleson import zhu_norm_bound
from bergcomp.fixtures import fixture
from bergcomp.operator import (
    QuadratureSpec,
    TailTrend,
    assemble,
    basis_indices,
    basis_norm,
    compactness_evidence,
    singular_values,
)
from bergcomp.symbols import polynomial_symbol


def expand_oracle(symbol, degree_cap):
    """Matrix of ``C_phi`` by multiplying out monomials of a polynomial symbol.

    Each component is expanded as a dict of exponent tuples; products are
    formed term by term, so no quadrature is involved.
    """
    comps = [dict(c.terms) for c in symbol.components]

    def mul(p, q):
        out = {}
        for a, x in p.items():
            for b, y in q.items():
                k = tuple(i + j for i, j in zip(a, b))
                out[k] = out.get(k, 0) + x * y
        return out

    def power(p, k):
        out = {(0,) * symbol.arity: 1.0}
        for _ in range(k):
            out = mul(out, p)
        return out

    idx = basis_indices(degree_cap, symbol.arity)
    pos = {a: i for i, a in enumerate(idx)}
    M = np.zeros((len(idx), len(idx)), dtype=complex)
    for j, a in enumerate(idx):
        image = {(0,) * symbol.arity: 1.0}
        for comp, k in zip(comps, a):
            image = mul(image, power(comp, k))
        for b, c in image.items():
            if b in pos:
                M[pos[b], j] += c * basis_norm(a) / basis_norm(b)
    return M


def test_basis_order():
    assert basis_indices(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert basis_indices(3, 1) == [(0,), (1,), (2,), (3,)]
    assert basis_norm((0, 0)) == pytest.approx(1 / math.pi)


def test_half2d_diagonal():
    mat = assemble(fixture("half2d"), 3)
    expected = np.diag([2.0 ** -sum(a) for a in mat.indices])
    np.testing.assert_allclose(mat.entries, expected, atol=1e-14)
    s = singular_values(mat)
    np.testing.assert_allclose(s, [1, 0.5, 0.5, 0.25, 0.25, 0.25, 0.125, 0.125, 0.125, 0.125],
                               atol=1e-14)


@pytest.mark.parametrize("D", [0, 3, 6])
def test_identity_matrix(identity2d, D):
    mat = assemble(identity2d, D)
    np.testing.assert_allclose(mat.entries, np.eye(mat.shape[0]), atol=1e-13)
    np.testing.assert_allclose(singular_values(mat), 1, atol=1e-13)


def test_ex_bidisc_entry(ex_bidisc):
    mat = assemble(ex_bidisc, 2)
    col = mat.indices.index((0, 1))
    row = mat.indices.index((1, 1))
    # C_phi e_01 = sqrt(2)/pi * z1 z2 = (1/sqrt 2) e_11
    assert abs(mat.entries[row, col]) == pytest.approx(1 / math.sqrt(2), rel=1e-13)
    others = np.delete(mat.entries[:, col], row)
    assert np.all(np.abs(others) < 1e-14)


@pytest.mark.parametrize("name, D", [("ex_bidisc", 4), ("ex_bidisc", 7), ("swap_bidisc", 5),
                                     ("identity_like", 4), ("face_violator", 5), ("shift1d", 9)])
def test_matrix_matches_symbolic_expansion(name, D):
    sym = fixture(name)
    np.testing.assert_allclose(assemble(sym, D).entries, expand_oracle(sym, D), atol=1e-12)


def test_complex_coefficients_match_expansion():
    sym = polynomial_symbol([{(1, 0): 0.3 + 0.4j, (0, 2): 0.2j}, {(1, 1): -0.5, (0, 0): 0.1}], "c")
    np.testing.assert_allclose(assemble(sym, 5).entries, expand_oracle(sym, 5), atol=1e-12)


def test_ex_bidisc_structure(ex_bidisc):
    mat = assemble(ex_bidisc, 8)
    pos = {a: i for i, a in enumerate(mat.indices)}
    for j, (m, n) in enumerate(mat.indices):
        target = pos.get((m + n, n))
        mask = np.ones(mat.shape[0], dtype=bool)
        if target is not None:
            mask[target] = False
            expected = 2.0**-m * basis_norm((m, n)) / basis_norm((m + n, n))
            assert mat.entries[target, j] == pytest.approx(expected, rel=1e-12)
        assert np.all(np.abs(mat.entries[mask, j]) < 1e-13)


@pytest.mark.parametrize("name", ["ex_bidisc", "swap_bidisc", "shift1d"])
def test_doubling_quadrature_is_stable(name):
    sym = fixture(name)
    a = assemble(sym, 6)
    b = assemble(sym, 6, a.quadrature.doubled())
    assert a.exact and b.exact
    assert np.max(np.abs(a.entries - b.entries)) <= 1e-12


def test_reproducing_identity(ex_bidisc):
    """sum_b M[b, a] e_b(w) = e_a(phi(w)) when the image lies inside the basis."""
    D = 8
    mat = assemble(ex_bidisc, D)
    rng = np.random.default_rng(5)
    w = 0.9 * rng.random((7, 2)) * np.exp(2j * np.pi * rng.random((7, 2)))
    phi = ex_bidisc(w)
    candidates = [j for j, a in enumerate(mat.indices) if a[0] + 2 * a[1] <= D]
    for j in rng.choice(candidates, size=5, replace=False):
        a = mat.indices[j]
        lhs = sum(mat.entries[i, j] * basis_norm(b) * w[:, 0] ** b[0] * w[:, 1] ** b[1]
                  for i, b in enumerate(mat.indices))
        rhs = basis_norm(a) * phi[:, 0] ** a[0] * phi[:, 1] ** a[1]
        np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_shift_norm_bounds():
    s = singular_values(assemble(fixture("shift1d"), 12))
    assert 1 - 1e-12 <= s[0] <= zhu_norm_bound(fixture("shift1d"))


def test_ex_bidisc_spectra(ex_bidisc):
    s6 = singular_values(assemble(ex_bidisc, 6))
    s8 = singular_values(assemble(ex_bidisc, 8))
    assert s6[0] == pytest.approx(1, abs=1e-12)
    assert s6[0] <= 3
    assert np.all(s6[10:] < 0.2)
    # the D=6 section is a compression of the D=8 one: its values interlace
    assert np.all(s6 <= s8[: len(s6)] + 1e-12)
    # for this symbol the section is a partial permutation with weights, so the
    # D=6 values appear among the D=8 values
    for v in s6:
        assert np.min(np.abs(s8 - v)) < 1e-12


def test_singular_values_clamped():
    s = singular_values(np.diag([1.0, 1e-15, 0.5]))
    assert list(s) == [1.0, 0.5, 0.0]


def test_evidence_examples(identity2d):
    ev = compactness_evidence(identity2d)
    assert ev.tail_trend is TailTrend.FLAT
    assert ev.norm_estimate == pytest.approx(1)
    ev = compactness_evidence(fixture("half2d"))
    assert ev.tail_trend is TailTrend.DECAYING
    ev = compactness_evidence(fixture("face_violator"))
    assert ev.tail_trend is TailTrend.FLAT
    assert all(a < b for a, b in zip(ev.plateau_lengths, ev.plateau_lengths[1:]))
    # singular values are 2**-n over basis indices (m, n); n <= 1 gives 2D + 1 values >= 1/2
    assert list(ev.plateau_lengths) == [2 * D for D in ev.degree_caps]
    with pytest.raises(ValueError):
        compactness_evidence(identity2d, degree_caps=(4,))


def test_evidence_ex_bidisc(ex_bidisc):
    ev = compactness_evidence(ex_bidisc)
    assert ev.drift <= 1e-2
    assert ev.tail_trend is TailTrend.DECAYING


def test_below_threshold_warns(ex_bidisc):
    with pytest.warns(RuntimeWarning, match="exactness"):
        mat = assemble(ex_bidisc, 6, QuadratureSpec(radial=4, angular=8))
    assert not mat.exact
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert assemble(ex_bidisc, 6).exact


def test_builtin_rejected():
    with pytest.raises(ValueError, match="polynomial"):
        assemble(fixture("sqrt_shift1d"), 4)


def test_csv_header(ex_bidisc):
    buf = io.StringIO()
    assemble(ex_bidisc, 2).to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# degree_cap=2"
    assert "# ordering=graded_lex" in lines
    assert "# convention=LEBESGUE" in lines
    assert "row,col,row_index,col_index,re,im" in lines
    assert len(lines) == 5 + 1 + 36
