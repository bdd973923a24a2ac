"""The generalized gl(2) model: vacuum eigenvalues, transfer eigenvalues, Bethe equations.

A model is fixed by the coupling ``c``, a boundary mode and a realization of
the two vacuum eigenvalue functions.  The default realization is the
inhomogeneous XXX chain

    lambda_1(u) = prod_k (u - theta_k + c),   lambda_2(u) = prod_k (u - theta_k),

which is what the dense oracle in :mod:`bethe.oracle` produces.  A custom
realization takes arbitrary rational functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.polynomial import Polynomial

from .errors import PoleError, ValidationError
from .rat_core import COLLISION_TOL, as_params, f, kernel_product, negated

Mode = Literal["periodic", "reflection"]


class RootProduct:
    """``prod_k (u - r_k)`` evaluated in factored form."""

    def __init__(self, roots):
        self.roots = np.asarray(as_params(roots), dtype=complex)

    def __call__(self, u):
        return np.prod(np.subtract.outer(u, self.roots), axis=-1)

    def deriv(self, u):
        d = np.subtract.outer(u, self.roots)
        if not self.roots.size:
            return np.zeros_like(d[..., 0])
        return np.sum(_loo(d)[1], axis=-1)

    def log_deriv(self, u):
        d = u - self.roots
        if np.any(np.abs(d) <= COLLISION_TOL):
            raise PoleError(f"log-derivative at a zero u={u}", kernel="lambda")
        return complex(np.sum(1.0 / d))


class RationalFunction:
    """``num(u) / den(u)`` with coefficient lists in ascending powers of u."""

    def __init__(self, num, den=(1.0,)):
        self.num = Polynomial(np.asarray(num, dtype=complex))
        self.den = Polynomial(np.asarray(den, dtype=complex))
        if not np.any(self.den.coef):
            raise ValidationError("denominator polynomial is identically zero")
        self._dnum = self.num.deriv()
        self._dden = self.den.deriv()

    def _den(self, u):
        q = self.den(u)
        if np.any(np.abs(q) <= COLLISION_TOL):
            raise PoleError(f"rational lambda has a pole at u={u}", kernel="lambda")
        return q

    def __call__(self, u):
        return self.num(u) / self._den(u)

    def deriv(self, u):
        q = self._den(u)
        return (self._dnum(u) * q - self.num(u) * self._dden(u)) / (q * q)

    def log_deriv(self, u):
        p = complex(self.num(u))
        if abs(p) <= COLLISION_TOL:
            raise PoleError(f"log-derivative at a zero u={u}", kernel="lambda")
        return complex(self._dnum(u)) / p - complex(self._dden(u)) / self._den(u)


@dataclass(frozen=True)
class ModelSpec:
    """Model definition.

    Exactly one of ``theta`` (XXX inhomogeneities) or ``lambdas`` (a pair of
    ``(num, den)`` coefficient lists) is given.  ``xi_minus``/``xi_plus`` are
    required in reflection mode.
    """

    c: complex = 1.0
    mode: Mode = "periodic"
    theta: tuple | None = None
    lambdas: tuple | None = None
    xi_minus: complex | None = None
    xi_plus: complex | None = None
    _l1: object = field(init=False, repr=False, compare=False)
    _l2: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        if abs(self.c) == 0:
            raise ValidationError("coupling c must be non-zero", key="c")
        if self.mode not in ("periodic", "reflection"):
            raise ValidationError(f"unknown mode {self.mode!r}", key="mode")
        if (self.theta is None) == (self.lambdas is None):
            raise ValidationError("give exactly one of theta or lambdas")
        if self.theta is not None:
            th = as_params(self.theta)
            object.__setattr__(self, "theta", th)
            object.__setattr__(self, "_l1", RootProduct([x - self.c for x in th]))
            object.__setattr__(self, "_l2", RootProduct(th))
        else:
            (n1, d1), (n2, d2) = self.lambdas
            object.__setattr__(self, "_l1", RationalFunction(n1, d1))
            object.__setattr__(self, "_l2", RationalFunction(n2, d2))
        if self.mode == "reflection":
            for key in ("xi_minus", "xi_plus"):
                if getattr(self, key) is None:
                    raise ValidationError(f"{key} required in reflection mode", key=key)
                object.__setattr__(self, key, complex(getattr(self, key)))

    @classmethod
    def xxx(cls, theta, c=1.0, mode="periodic", xi_minus=None, xi_plus=None):
        return cls(c=c, mode=mode, theta=tuple(theta), xi_minus=xi_minus, xi_plus=xi_plus)

    @property
    def is_xxx(self):
        return self.theta is not None

    @property
    def n_sites(self):
        return len(self.theta) if self.theta is not None else None

    def lam(self, which, u):
        """lambda_which at ``u``; scalars give a complex, arrays an array."""
        out = (self._l1 if which == 1 else self._l2)(np.asarray(u, dtype=complex))
        return complex(out) if np.ndim(out) == 0 else out

    def dlam(self, which, u):
        out = (self._l1 if which == 1 else self._l2).deriv(np.asarray(u, dtype=complex))
        return complex(out) if np.ndim(out) == 0 else out

    def with_mode(self, mode, **kw):
        return ModelSpec(c=self.c, mode=mode, theta=self.theta, lambdas=self.lambdas,
                         xi_minus=kw.get("xi_minus", self.xi_minus), xi_plus=kw.get("xi_plus", self.xi_plus))


def lambda_eval(model: ModelSpec, which: int, u) -> complex:
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    return model.lam(which, u)


# -- boundary prefactors of the reflection eigenvalue -------------------------

def _refl_a(z, model):
    """Coefficient of the f(u,z)f(-u,z) term, without the (2z+c)/2z factor."""
    c, xp, xm = model.c, model.xi_plus, model.xi_minus
    return (z + xp - c / 2) * (z + xm - c / 2) * model.lam(1, z) * model.lam(2, -z)


def _refl_b(z, model):
    c, xp, xm = model.c, model.xi_plus, model.xi_minus
    return (z - xp + c / 2) * (z - xm + c / 2) * model.lam(1, -z) * model.lam(2, z)


def _refl_da(z, model):
    c, xp, xm = model.c, model.xi_plus, model.xi_minus
    p, q = z + xp - c / 2, z + xm - c / 2
    l1, l2 = model.lam(1, z), model.lam(2, -z)
    return (q + p) * l1 * l2 + p * q * (model.dlam(1, z) * l2 - l1 * model.dlam(2, -z))


def _refl_db(z, model):
    c, xp, xm = model.c, model.xi_plus, model.xi_minus
    p, q = z - xp + c / 2, z - xm + c / 2
    l1, l2 = model.lam(1, -z), model.lam(2, z)
    return (q + p) * l1 * l2 + p * q * (-model.dlam(1, -z) * l2 + l1 * model.dlam(2, z))


def _nonzero(z, what, tol=COLLISION_TOL):
    if abs(z) <= tol:
        raise PoleError(f"{what} vanishes", kernel="tau", difference=z)


# -- eigenvalues --------------------------------------------------------------

def tau_periodic(z, us, model: ModelSpec) -> complex:
    """lambda_1(z) f(u, z) + lambda_2(z) f(z, u)."""
    z, c = complex(z), model.c
    return (model.lam(1, z) * kernel_product("f", us, z, c)
            + model.lam(2, z) * kernel_product("f", z, us, c))


def tau_reflection(z, us, model: ModelSpec) -> complex:
    z, c = complex(z), model.c
    _nonzero(z, "z")
    us = as_params(us)
    mus = negated(us)
    first = (2 * z + c) / (2 * z) * _refl_a(z, model) * kernel_product("f", us, z, c) * kernel_product("f", mus, z, c)
    second = (2 * z - c) / (2 * z) * _refl_b(z, model) * kernel_product("f", z, us, c) * kernel_product("f", z, mus, c)
    return first + second


def tau(z, us, model: ModelSpec) -> complex:
    if model.mode == "periodic":
        return tau_periodic(z, us, model)
    return tau_reflection(z, us, model)


def _residue_terms(j, us, model):
    """``(lead, one, two)`` with residue ``lead * (two - one)``."""
    us = as_params(us)
    c = model.c
    u = us[j]
    rest = us[:j] + us[j + 1:]
    if model.mode == "periodic":
        return c, model.lam(1, u) * kernel_product("f", rest, u, c), model.lam(2, u) * kernel_product("f", u, rest, c)
    _nonzero(u, "u_j")
    mrest = negated(rest)
    lead = c * (2 * u + c) * (2 * u - c) / (4 * u * u)
    one = _refl_a(u, model) * kernel_product("f", rest, u, c) * kernel_product("f", mrest, u, c)
    two = _refl_b(u, model) * kernel_product("f", u, rest, c) * kernel_product("f", u, mrest, c)
    return lead, one, two


def tau_residue(j, us, model: ModelSpec) -> complex:
    """Residue of the eigenvalue ``tau(w | us)`` at ``w = us[j]``, in closed form."""
    lead, one, two = _residue_terms(j, us, model)
    return lead * (two - one)


def tau_residue_scale(j, us, model: ModelSpec) -> float:
    """Size of the two terms that cancel in :func:`tau_residue` on-shell."""
    lead, one, two = _residue_terms(j, us, model)
    return abs(lead) * (abs(one) + abs(two))


def tau_residue_numeric(j, us, model: ModelSpec, eps=1e-6) -> complex:
    """Limit estimate of ``(w - u_j) tau(w|us)``; cross-check for :func:`tau_residue`.

    Symmetric steps cancel the O(eps) term, one Richardson step removes O(eps^2).
    """
    us = as_params(us)
    u = us[j]
    scale = max(1.0, abs(u))

    def sym(e):
        e = e * scale
        return 0.5 * (e * tau(u + e, us, model) - e * tau(u - e, us, model))

    a, b = sym(eps), sym(eps / 2)
    return (4 * b - a) / 3


# -- Bethe equations ----------------------------------------------------------

def _loo(values):
    """Row products and leave-one-out products along the last axis."""
    n = values.shape[-1]
    ones = np.ones(values.shape[:-1] + (1,), dtype=complex)
    prefix = np.concatenate([ones, np.cumprod(values[..., :-1], axis=-1)], axis=-1)
    suffix = np.concatenate([np.cumprod(values[..., :0:-1], axis=-1)[..., ::-1], ones], axis=-1)
    total = prefix[..., -1] * values[..., -1] if n else ones[..., 0]
    return total, prefix * suffix


def _factor_groups(u, model):
    """Cross factors of the cleared residual.

    ``u`` has shape ``(..., n)``; leading axes are independent batches.
    Returns ``(a, da, A, b, db, B)``: ``a``/``b`` the per-root prefactors and
    their derivatives, ``A``/``B`` lists of ``(values, d/du_i, d/du_k)``
    arrays indexed ``[..., i, k]`` whose diagonal is neutral.
    """
    c = model.c
    n = u.shape[-1]
    ui, uk = u[..., :, None], u[..., None, :]
    eye = np.eye(n, dtype=bool)
    one = np.where(eye, 0.0, 1.0).astype(complex)

    def grp(vals, si, sk):
        return np.where(eye, 1.0, vals), si * one, sk * one

    if model.mode == "periodic":
        a, da = model.lam(1, u), model.dlam(1, u)
        b, db = model.lam(2, u), model.dlam(2, u)
        return a, da, [grp(ui - uk - c, 1, -1)], b, db, [grp(ui - uk + c, 1, -1)]
    a, da = _refl_a(u, model), _refl_da(u, model)
    b, db = _refl_b(u, model), _refl_db(u, model)
    return (a, da, [grp(uk - ui + c, -1, 1), grp(c - uk - ui, -1, -1)],
            b, db, [grp(ui - uk + c, 1, -1), grp(ui + uk + c, 1, 1)])


def _side(pref, dpref, groups):
    vals = np.concatenate([np.broadcast_to(gr[0], pref.shape + pref.shape[-1:]) for gr in groups], axis=-1)
    d_i = np.concatenate([gr[1] for gr in groups], axis=-1)
    d_k = np.concatenate([gr[2] for gr in groups], axis=-1)
    prod, loo = _loo(vals)
    n = pref.shape[-1]
    value = pref * prod
    diag = dpref * prod + pref * np.sum(d_i * loo, axis=-1)
    off = (d_k * loo).reshape(loo.shape[:-1] + (len(groups), n)).sum(axis=-2)
    jac = pref[..., None] * off
    idx = np.arange(n)
    jac[..., idx, idx] = diag
    return value, jac, np.abs(pref) * np.prod(np.abs(vals), axis=-1)


def _as_roots(us):
    if isinstance(us, np.ndarray) and us.ndim > 1:
        return us.astype(complex, copy=False)
    return np.asarray(as_params(us), dtype=complex)


def bethe_residual(us, model: ModelSpec) -> np.ndarray:
    """Denominator-cleared Bethe residuals; all vanish iff ``us`` is on-shell.

    periodic:   lambda_1(u_i) prod_{j!=i}(u_i - u_j - c) - lambda_2(u_i) prod_{j!=i}(u_i - u_j + c)
    reflection: a(u_i) prod_{j!=i}(u_j - u_i + c)(c - u_j - u_i)
                - b(u_i) prod_{j!=i}(u_i - u_j + c)(u_i + u_j + c)
    with the boundary-dressed a, b of the reflection eigenvalue.  A 2-d array
    is treated as a batch of root sets, one per row.
    """
    return bethe_residual_and_jacobian(us, model)[0]


def bethe_residual_and_jacobian(us, model: ModelSpec):
    """Cleared residuals and their analytic Jacobian ``d r_i / d u_k``."""
    u = _as_roots(us)
    n = u.shape[-1]
    if n == 0:
        return np.zeros(u.shape, dtype=complex), np.zeros(u.shape + (0,), dtype=complex)
    a, da, A, b, db, B = _factor_groups(u, model)
    va, ja, _ = _side(a, da, A)
    vb, jb, _ = _side(b, db, B)
    return va - vb, ja - jb


def residual_scale(us, model: ModelSpec) -> np.ndarray:
    """Magnitude of the two competing terms of each cleared residual."""
    u = _as_roots(us)
    if u.shape[-1] == 0:
        return np.zeros(u.shape)
    a, da, A, b, db, B = _factor_groups(u, model)
    return _side(a, da, A)[2] + _side(b, db, B)[2]


def log_derivative_X(v, model: ModelSpec) -> complex:
    """d/dz log(lambda_1(z) / lambda_2(z)) at z = v."""
    v = complex(v)
    return model._l1.log_deriv(v) - model._l2.log_deriv(v)


# -- derivatives of tau with respect to the set -------------------------------

def dtau_dx(z, xs, k, model: ModelSpec) -> complex:
    """Analytic partial derivative of ``tau(z | xs)`` with respect to ``xs[k]``."""
    z, c = complex(z), model.c
    xs = as_params(xs)
    x = xs[k]
    rest = xs[:k] + xs[k + 1:]
    if abs(x - z) <= COLLISION_TOL:
        raise PoleError("z coincides with x_k", kernel="tau", difference=x - z, index=k)
    if model.mode == "periodic":
        d1 = -c / (x - z) ** 2
        d2 = c / (z - x) ** 2
        return (model.lam(1, z) * kernel_product("f", rest, z, c) * d1
                + model.lam(2, z) * kernel_product("f", z, rest, c) * d2)
    _nonzero(z, "z")
    if abs(x + z) <= COLLISION_TOL:
        raise PoleError("z coincides with -x_k", kernel="tau", difference=x + z, index=k)
    mrest = negated(rest)
    d_pair1 = -c / (x - z) ** 2 * f(-x, z, c) + f(x, z, c) * c / (x + z) ** 2
    d_pair2 = c / (z - x) ** 2 * f(z, -x, c) - f(z, x, c) * c / (z + x) ** 2
    first = ((2 * z + c) / (2 * z) * _refl_a(z, model)
             * kernel_product("f", rest, z, c) * kernel_product("f", mrest, z, c) * d_pair1)
    second = ((2 * z - c) / (2 * z) * _refl_b(z, model)
              * kernel_product("f", z, rest, c) * kernel_product("f", z, mrest, c) * d_pair2)
    return first + second
