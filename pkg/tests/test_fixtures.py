import json

import numpy as np
import pytest

from bergcomp.fixtures import (
    FIXTURE_NAMES,
    POLYNOMIAL_BIDISC_FIXTURES,
    SpecError,
    dump_symbol,
    fixture,
    load_symbol,
    parse_symbol,
)

EX_SPEC = {
    "name": "ex_bidisc",
    "arity": 2,
    "components": [
        {"terms": [{"exponents": [1, 0], "re": 0.5, "im": 0.0}]},
        {"terms": [{"exponents": [1, 1], "re": 1.0, "im": 0.0}]},
    ],
}


def test_parse_matches_fixture():
    sym = parse_symbol(json.dumps(EX_SPEC))
    z = np.array([[0.3 + 0.1j, -0.5j], [1, 1]])
    np.testing.assert_allclose(sym(z), fixture("ex_bidisc")(z))


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_round_trip(name):
    sym = fixture(name)
    back = parse_symbol(dump_symbol(sym))
    rng = np.random.default_rng(0)
    z = 0.9 * rng.random((20, sym.arity)) * np.exp(2j * np.pi * rng.random((20, sym.arity)))
    np.testing.assert_array_equal(back(z), sym(z))


def test_builtin_component():
    spec = {"arity": 1, "components": [{"builtin": "SQRT_SHIFT"}]}
    sym = parse_symbol(json.dumps(spec))
    assert sym([0.0])[0] == 0


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda d: d.update(extra=1), "unknown field"),
        (lambda d: d["components"][0]["terms"][0].update(coef=2), "unknown field"),
        (lambda d: d.update(arity=3), "arity"),
        (lambda d: d["components"].pop(), "components"),
        (lambda d: d["components"][0]["terms"][0].update(exponents=[1]), "exponents"),
        (lambda d: d["components"].__setitem__(0, {"builtin": "EXP"}), "builtin"),
    ],
)
def test_rejects_malformed(mutate, needle):
    spec = json.loads(json.dumps(EX_SPEC))
    mutate(spec)
    with pytest.raises(SpecError, match=needle):
        parse_symbol(json.dumps(spec))


def test_rejects_non_self_map():
    spec = json.loads(json.dumps(EX_SPEC))
    spec["components"][0]["terms"][0]["re"] = 1.5
    with pytest.raises(SpecError, match="self-map"):
        parse_symbol(json.dumps(spec))


def test_syntax_error_reports_position():
    with pytest.raises(SpecError, match=r"line 2, column \d+"):
        parse_symbol('{"arity": 1,\n "components": [}')


def test_load_from_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(EX_SPEC))
    assert load_symbol(p).name == "ex_bidisc"


def test_unknown_fixture_lists_names():
    with pytest.raises(KeyError, match="ex_bidisc"):
        fixture("nope")


def test_bidisc_fixture_list_is_polynomial():
    for name in POLYNOMIAL_BIDISC_FIXTURES:
        sym = fixture(name)
        assert sym.arity == 2 and sym.is_polynomial
