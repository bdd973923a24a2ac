"""Rational kernels and set notation.

The four kernels used throughout are

    g(u, v) = c / (u - v)
    f(u, v) = (u - v + c) / (u - v)
    h(u, v) = (u - v + c) / c
    t(u, v) = g(u, v) / h(u, v) = c**2 / ((u - v) (u - v + c))

Parameter sets are plain ordered sequences of complex numbers.  Products
over a set follow the usual shorthand: ``kernel_product("f", z, us, c)`` is
the product of ``f(z, u)`` over ``u`` in ``us``, and if both arguments are
sets the double product is taken.  Empty products are 1.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Sequence
from typing import NamedTuple

import numpy as np

from .errors import AmbiguousMatch, BetheError, PoleError

COLLISION_TOL = 1e-10

ParamSet = Sequence[complex]


def as_params(values) -> tuple[complex, ...]:
    """Coerce a scalar-or-sequence into a tuple of Python complex numbers."""
    if np.isscalar(values):
        return (complex(values),)
    return tuple(complex(v) for v in values)


def _check(diff, what, kernel, tol):
    if abs(diff) <= tol:
        raise PoleError(f"{kernel}: |{what}| = {abs(diff):.3g} <= {tol:g}", kernel=kernel, difference=diff)


def g(u, v, c, tol=COLLISION_TOL):
    d = u - v
    _check(d, "u - v", "g", tol)
    return c / d


def f(u, v, c, tol=COLLISION_TOL):
    d = u - v
    _check(d, "u - v", "f", tol)
    return (d + c) / d


def h(u, v, c, tol=COLLISION_TOL):
    return (u - v + c) / c


def t(u, v, c, tol=COLLISION_TOL):
    d = u - v
    _check(d, "u - v", "t", tol)
    _check(d + c, "u - v + c", "t", tol)
    return c * c / (d * (d + c))


KERNELS: dict[str, Callable] = {"g": g, "f": f, "h": h, "t": t}


def kernels(u, v, c, tol=COLLISION_TOL):
    """Return ``(g, f, h, t)`` at ``(u, v)``.

    Raises PoleError if any of the four is singular, which includes
    ``u - v = -c`` where ``t`` blows up.
    """
    u, v, c = complex(u), complex(v), complex(c)
    return g(u, v, c, tol), f(u, v, c, tol), h(u, v, c, tol), t(u, v, c, tol)


def _resolve(kernel):
    if callable(kernel):
        return kernel
    try:
        return KERNELS[kernel]
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}") from None


def kernel_product(kernel, left, right, c, tol=COLLISION_TOL):
    """Product of ``kernel(a, b)`` over ``a`` in ``left`` and ``b`` in ``right``.

    Either argument may be a single number or a set.
    """
    fn = _resolve(kernel)
    left = as_params(left)
    right = as_params(right)
    out = 1.0 + 0.0j
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            try:
                out *= fn(a, b, c, tol)
            except PoleError as exc:
                exc.index = (i, j) if len(left) > 1 else j
                raise PoleError(f"{exc} (element {exc.index})", kernel=exc.kernel,
                                difference=exc.difference, index=exc.index) from None
    return out


def delta_products(us, c, tol=COLLISION_TOL):
    """Return ``(prod_{j<k} g(u_j, u_k), prod_{j>k} g(u_j, u_k))``."""
    us = as_params(us)
    dp = 1.0 + 0.0j
    for j, k in itertools.combinations(range(len(us)), 2):
        dp *= g(us[j], us[k], c, tol)
    n = len(us)
    sign = -1.0 if (n * (n - 1) // 2) % 2 else 1.0
    return dp, sign * dp


def squares(us):
    return tuple(u * u for u in as_params(us))


def negated(us):
    return tuple(-u for u in as_params(us))


class Partition(NamedTuple):
    part_one: tuple
    part_two: tuple
    index_one: tuple
    index_two: tuple


def enumerate_partitions(us, size_one):
    """All splits of ``us`` into a part of ``size_one`` elements and the rest.

    Parts keep the original index order.  The ordering of the returned list
    follows ``itertools.combinations`` on the index set.
    """
    us = as_params(us)
    n = len(us)
    if not 0 <= size_one <= n:
        raise ValueError(f"size_one={size_one} outside [0, {n}]")
    out = []
    for idx in itertools.combinations(range(n), size_one):
        rest = tuple(i for i in range(n) if i not in idx)
        out.append(Partition(tuple(us[i] for i in idx), tuple(us[i] for i in rest), idx, rest))
    return out


def symmetrize(fn: Callable[[tuple], complex], us, max_size: int | None = None):
    """Sum ``fn`` over every ordering of ``us`` (no 1/n! normalisation).

    Permutations are visited in lexicographic order of index tuples so the
    floating-point reduction order is fixed.
    """
    us = as_params(us)
    if max_size is not None and len(us) > max_size:
        raise ValueError(f"symmetrisation over {len(us)} elements exceeds the cap of {max_size}")
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(len(us))):
        args = tuple(us[i] for i in perm)
        try:
            total += fn(args)
        except BetheError as exc:
            exc.permutation = perm
            exc.args = (f"{exc} (while symmetrising, permutation {perm})",) + exc.args[1:]
            raise
    return total


def multiset_match(a, b, tol):
    """Match the elements of ``a`` to those of ``b`` within ``tol``.

    Returns a tuple ``perm`` with ``abs(a[i] - b[perm[i]]) <= tol`` for every
    ``i`` (0-based), or ``None`` when no such bijection exists.  If some
    element of ``a`` lies within ``tol`` of two different elements of ``b``
    the answer would depend on the tolerance, and AmbiguousMatch is raised.
    """
    a = np.asarray(as_params(a), dtype=complex)
    b = np.asarray(as_params(b), dtype=complex)
    if a.shape != b.shape:
        return None
    if a.size == 0:
        return ()
    close = np.abs(a[:, None] - b[None, :]) <= tol
    counts = close.sum(axis=1)
    if np.any(counts > 1):
        i = int(np.argmax(counts > 1))
        raise AmbiguousMatch(f"element {a[i]} is within {tol:g} of {int(counts[i])} targets")
    if np.any(counts == 0):
        return None
    perm = tuple(int(np.argmax(row)) for row in close)
    if len(set(perm)) != len(perm):
        return None
    return perm
