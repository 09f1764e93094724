"""Input validation helpers shared by the diagnostics."""

import numpy as np

#: slack allowed beyond the unit modulus for points of the closed polydisc
CLOSURE_TOL = 1e-9


class DomainError(ValueError):
    """A point lies outside the region an operation is defined on."""


def check_points(z, arity=None, closed=True, tol=CLOSURE_TOL):
    """Coerce ``z`` to a complex array of shape ``(..., arity)``.

    A bare scalar is treated as a one-dimensional point. With ``closed``
    the points must lie in the closed polydisc (up to ``tol``); otherwise
    they must lie strictly inside the open polydisc.
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    if arity is not None and z.shape[-1] != arity:
        raise ValueError(
            f"expected points with {arity} coordinate(s), got shape {z.shape}"
        )
    if z.shape[-1] not in (1, 2):
        raise ValueError(f"points must have 1 or 2 coordinates, got {z.shape[-1]}")
    mod = np.abs(z)
    if closed:
        if np.any(mod > 1 + tol):
            raise DomainError("point outside the closed polydisc")
    elif np.any(mod >= 1):
        raise DomainError("point not inside the open polydisc")
    return z


def check_radius(r, name="r"):
    r = float(r)
    if not 0 < r <= 1:
        raise ValueError(f"{name} must lie in (0, 1], got {r}")
    return r


def check_seed(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def one_minus_abs2(w):
    """``1 - |w|**2`` computed as ``(1 - |w|)(1 + |w|)`` to keep digits near the circle."""
    a = np.abs(w)
    return (1.0 - a) * (1.0 + a)
