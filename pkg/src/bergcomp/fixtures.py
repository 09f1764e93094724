"""Built-in symbols and the JSON symbol-spec format.

A symbol spec file looks like::

    {
      "name": "ex_bidisc",
      "arity": 2,
      "components": [
        {"terms": [{"exponents": [1, 0], "re": 0.5, "im": 0.0}]},
        {"terms": [{"exponents": [1, 1], "re": 1.0, "im": 0.0}]}
      ]
    }

or ``{"builtin": "SQRT_SHIFT"}`` in place of a component, acting on the
coordinate with the same index. Unknown fields are rejected.
"""

import json

import numpy as np

from .symbols import Polynomial, SqrtShift, Symbol, polynomial_symbol, sqrt_shift_symbol


class SpecError(ValueError):
    """Malformed symbol spec; the message names the offending field or line."""


def _fixtures():
    return {
        "identity1d": lambda: polynomial_symbol([{(1,): 1}], "identity1d"),
        "half1d": lambda: polynomial_symbol([{(1,): 0.5}], "half1d"),
        "shift1d": lambda: polynomial_symbol([{(0,): 0.5, (1,): 0.5}], "shift1d"),
        "rotation1d": lambda: polynomial_symbol([{(1,): np.exp(0.7j)}], "rotation1d"),
        "sqrt_shift1d": lambda: sqrt_shift_symbol(1, "sqrt_shift1d"),
        "identity2d": lambda: polynomial_symbol([{(1, 0): 1}, {(0, 1): 1}], "identity2d"),
        "half2d": lambda: polynomial_symbol([{(1, 0): 0.5}, {(0, 1): 0.5}], "half2d"),
        "ex_bidisc": lambda: polynomial_symbol([{(1, 0): 0.5}, {(1, 1): 1}], "ex_bidisc"),
        "face_violator": lambda: polynomial_symbol(
            [{(1, 0): 1}, {(0, 1): 0.5}], "face_violator"
        ),
        "swap_bidisc": lambda: polynomial_symbol([{(1, 1): 1}, {(1, 0): 0.5}], "swap_bidisc"),
        "identity_like": lambda: polynomial_symbol([{(1, 0): 1}, {(1, 1): 1}], "identity_like"),
        "sqrt_tensor2d": lambda: sqrt_shift_symbol(2, "sqrt_tensor2d"),
        "reinhardt_halfshift": lambda: polynomial_symbol(
            [{(1, 0): 0.5}, {(0, 1): 1}], "reinhardt_halfshift"
        ),
    }


FIXTURE_NAMES = tuple(_fixtures())

#: polynomial bidisc fixtures used for cross-criterion checks
POLYNOMIAL_BIDISC_FIXTURES = (
    "identity2d", "half2d", "ex_bidisc", "face_violator", "swap_bidisc", "identity_like",
    "reinhardt_halfshift",
)


def fixture(name):
    table = _fixtures()
    if name not in table:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(table)}")
    return table[name]()


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected an object")
    extra = set(obj) - set(allowed)
    if extra:
        raise SpecError(f"{where}: unknown field(s) {sorted(extra)}")


def symbol_from_dict(data):
    _check_keys(data, ("arity", "components", "name"), "spec")
    for key in ("arity", "components"):
        if key not in data:
            raise SpecError(f"spec: missing field {key!r}")
    arity = data["arity"]
    if arity not in (1, 2):
        raise SpecError(f"arity: must be 1 or 2, got {arity!r}")
    comps_in = data["components"]
    if not isinstance(comps_in, list) or len(comps_in) != arity:
        raise SpecError(f"components: expected a list of {arity} entries")
    comps = []
    for i, comp in enumerate(comps_in):
        where = f"components[{i}]"
        _check_keys(comp, ("terms", "builtin"), where)
        if ("terms" in comp) == ("builtin" in comp):
            raise SpecError(f"{where}: exactly one of 'terms' or 'builtin' is required")
        if "builtin" in comp:
            if comp["builtin"] != "SQRT_SHIFT":
                raise SpecError(f"{where}.builtin: unknown builtin {comp['builtin']!r}")
            comps.append(SqrtShift(arity, i))
            continue
        terms = []
        for k, term in enumerate(comp["terms"]):
            tw = f"{where}.terms[{k}]"
            _check_keys(term, ("exponents", "re", "im"), tw)
            if "exponents" not in term:
                raise SpecError(f"{tw}: missing field 'exponents'")
            exps = term["exponents"]
            if (
                not isinstance(exps, list)
                or len(exps) != arity
                or not all(isinstance(e, int) and e >= 0 for e in exps)
            ):
                raise SpecError(f"{tw}.exponents: expected {arity} nonnegative integers")
            try:
                coef = complex(float(term.get("re", 0.0)), float(term.get("im", 0.0)))
            except (TypeError, ValueError) as exc:
                raise SpecError(f"{tw}: coefficient must be numeric") from exc
            terms.append((exps, coef))
        comps.append(Polynomial.from_terms(terms, arity))
    try:
        return Symbol(tuple(comps), data.get("name", "symbol"))
    except ValueError as exc:
        raise SpecError(f"spec: {exc}") from exc


def parse_symbol(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return symbol_from_dict(data)


def load_symbol(path):
    with open(path, encoding="utf-8") as fh:
        return parse_symbol(fh.read())


def dump_symbol(symbol):
    return json.dumps(symbol.to_dict(), indent=2)
