"""Scalar products of on-shell and off-shell Bethe vectors.

Four independent routes to S(x|u), x on-shell, u free:

* :func:`slavnov_det`      determinant of the J-matrix,
* :func:`hny_form`         hybrid sums mixing m J-factors with n - m residues,
* :func:`scalar_sum_form`  symmetrised chain of residues of the eigenvalue,
* :func:`extract_coefficient`  the coefficient of B(x) in t(x_1)...t(x_n) B(u),
  computed by repeatedly applying the single-action formula to a symbolic
  :class:`StateExpansion`.

Reflection boundary conditions have their own determinant
(:func:`reflection_det`); the action engine handles both modes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousMatch, MissingTerm, OffShellError, PoleError, UnstableLimit
from .model import ModelSpec, bethe_residual, dtau_dx, residual_scale, tau, tau_residue
from .rat_core import (
    COLLISION_TOL,
    as_params,
    delta_products,
    g,
    h,
    kernel_product,
    negated,
    symmetrize,
    t,
)

MAX_SYM = 6
ON_SHELL_TOL = 1e-9


def check_on_shell(xs, model: ModelSpec, tol=ON_SHELL_TOL):
    """Raise OffShellError unless every cleared Bethe residual is small.

    The residual is measured relative to the size of the two competing terms,
    so the test does not depend on the overall scale of lambda.
    """
    xs = as_params(xs)
    if not xs:
        return 0.0
    r = np.abs(bethe_residual(xs, model))
    rel = float(np.max(r / np.maximum(residual_scale(xs, model), 1e-300)))
    if rel > tol:
        raise OffShellError(f"parameters are off-shell: relative Bethe residual {rel:.3g} > {tol:g}")
    return rel


def _check_sizes(xs, us):
    if len(xs) != len(us):
        raise ValueError(f"sets must have equal size, got {len(xs)} and {len(us)}")


# -- J-matrix -----------------------------------------------------------------

def j_entry(u, k, xs, model: ModelSpec) -> complex:
    """``lambda_2(u) t(u,x_k) h(u,x) + (-1)^(n-1) lambda_1(u) t(x_k,u) h(x,u)``."""
    xs = as_params(xs)
    c, u, x = model.c, complex(u), xs[k]
    n = len(xs)
    sign = -1.0 if (n - 1) % 2 else 1.0
    return (model.lam(2, u) * t(u, x, c) * kernel_product(h, u, xs, c)
            + sign * model.lam(1, u) * t(x, u, c) * kernel_product(h, xs, u, c))


def j_entry_derivative(u, k, xs, model: ModelSpec) -> complex:
    """``c / g(u, x) * d tau(u|x) / d x_k``, the same quantity via differentiation."""
    xs = as_params(xs)
    return model.c / kernel_product(g, u, xs, model.c) * dtau_dx(u, xs, k, model)


def j_matrix(us, xs, model: ModelSpec) -> np.ndarray:
    us, xs = as_params(us), as_params(xs)
    return np.array([[j_entry(u, k, xs, model) for k in range(len(xs))] for u in us], dtype=complex)


def slavnov_det(xs, us, model: ModelSpec, unchecked=False, on_shell_tol=ON_SHELL_TOL) -> complex:
    """``Delta'(u) Delta(x) det J(u_i, x_k)``."""
    xs, us = as_params(xs), as_params(us)
    _check_sizes(xs, us)
    if not xs:
        return 1.0 + 0.0j
    if not unchecked:
        check_on_shell(xs, model, on_shell_tol)
    dp_u, _ = delta_products(us, model.c)
    _, d_x = delta_products(xs, model.c)
    return complex(dp_u * d_x * np.linalg.det(j_matrix(us, xs, model)))


# -- symmetrised forms --------------------------------------------------------

def _chain_residue(ell, us, xs, model):
    """``res_{z=u_ell} tau(z | u_1..u_ell, x_{ell+1}..x_n)`` (0-based ``ell``)."""
    args = tuple(us[: ell + 1]) + tuple(xs[ell + 1:])
    return tau_residue(ell, args, model)


def hny_form(xs, us, m: int, model: ModelSpec, unchecked=False, on_shell_tol=ON_SHELL_TOL) -> complex:
    """Hybrid representation with ``m`` J-factors and ``n - m`` chained residues, 1 <= m <= n."""
    xs, us = as_params(xs), as_params(us)
    _check_sizes(xs, us)
    n = len(xs)
    if not 1 <= m <= n:
        raise ValueError(f"m={m} outside [1, {n}]")
    if not unchecked:
        check_on_shell(xs, model, on_shell_tol)
    c = model.c
    j_cache = {}

    def J(u, k):
        key = (u, k)
        if key not in j_cache:
            j_cache[key] = j_entry(u, k, xs, model)
        return j_cache[key]

    _, dx = delta_products(xs[:m], c)
    tail = xs[m:]

    def term(perm_us):
        val = 1.0 + 0.0j
        for i in range(m):
            val *= J(perm_us[i], i) * kernel_product(g, perm_us[i], tail, c)
        dp, _ = delta_products(perm_us[:m], c)
        val *= dp * dx
        for ell in range(m, n):
            val *= g(perm_us[ell], xs[ell], c) * _chain_residue(ell, perm_us, xs, model)
        return val

    return symmetrize(term, us, max_size=MAX_SYM) / c ** (n - m)


def scalar_sum_form(xs, us, model: ModelSpec, unchecked=False, on_shell_tol=ON_SHELL_TOL) -> complex:
    """``c^-n Sym_u prod_i g(u_i, x_i) res_{z=u_i} tau(z | u_1..u_i, x_{i+1}..x_n)``."""
    xs, us = as_params(xs), as_params(us)
    _check_sizes(xs, us)
    n = len(xs)
    if not xs:
        return 1.0 + 0.0j
    if not unchecked:
        check_on_shell(xs, model, on_shell_tol)
    c = model.c

    def term(perm_us):
        val = 1.0 + 0.0j
        for i in range(n):
            val *= g(perm_us[i], xs[i], c) * _chain_residue(i, perm_us, xs, model)
        return val

    return symmetrize(term, us, max_size=MAX_SYM) / c ** n


def nu(k, m, us, xs, c) -> complex:
    """``prod_{l<m, l!=k} g(x_k, x_l) / prod_{l<m} g(x_k, u_l)`` (0-based k)."""
    xs, us = as_params(xs), as_params(us)
    others = xs[:k] + xs[k + 1:m]
    return kernel_product(g, xs[k], others, c) / kernel_product(g, xs[k], us[:m], c)


def sum_jm_check(m: int, j: int, us, xs, model: ModelSpec):
    """Both sides of the contour identity relating J-sums to residues.

    ``lhs = sum_{k<m} J(u_j, x_k) nu_k``;
    ``rhs = -res_{z=u_j} tau(z|u_1..u_m, x_{m+1}..x_n) / (c prod_{i<m, i!=j} g(u_j,u_i) prod_{l>=m} g(u_j,x_l))``.
    ``j`` is 0-based, ``m`` counts elements, ``0 <= j < m <= n``.
    """
    us, xs = as_params(us), as_params(xs)
    n = len(xs)
    if not 0 <= j < m <= n:
        raise ValueError(f"need 0 <= j < m <= n, got j={j}, m={m}, n={n}")
    c = model.c
    lhs = sum(j_entry(us[j], k, xs, model) * nu(k, m, us, xs, c) for k in range(m))
    mixed = us[:m] + xs[m:]
    res = tau_residue(j, mixed, model)
    den = c * kernel_product(g, us[j], us[:j] + us[j + 1:m], c) * kernel_product(g, us[j], xs[m:], c)
    return complex(lhs), complex(-res / den)


# -- state expansions and the action of the transfer matrix -------------------

@dataclass
class StateExpansion:
    """Finite linear combination of Bethe vectors keyed by parameter multisets.

    Two keys are the same term when their elements can be paired within
    ``match_tol``.  Elements are interned in a pool as they are seen, so a
    key is looked up through the sorted tuple of its pool ids; an element
    within ``match_tol`` of two pool entries raises AmbiguousMatch.
    """

    mode: str = "periodic"
    terms: list = field(default_factory=list)
    match_tol: float = 1e-9
    _pool: list = field(default_factory=list, repr=False)
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._reindex()

    @classmethod
    def single(cls, us, mode="periodic", coeff=1.0):
        return cls(mode=mode, terms=[(as_params(us), complex(coeff))])

    def _element_id(self, x, create):
        hits = [i for i, p in enumerate(self._pool) if abs(p - x) <= self.match_tol]
        if len(hits) > 1:
            raise AmbiguousMatch(f"element {x} is within {self.match_tol:g} of {len(hits)} parameters")
        if hits:
            return hits[0]
        if not create:
            return None
        self._pool.append(x)
        return len(self._pool) - 1

    def _ids(self, key, create=True):
        ids = [self._element_id(x, create) for x in key]
        return None if None in ids else tuple(sorted(ids))

    def _reindex(self):
        self._index = {}
        for idx, (k, _) in enumerate(self.terms):
            self._index[self._ids(k)] = idx

    def find(self, key):
        ids = self._ids(as_params(key), create=False)
        return None if ids is None else self._index.get(ids)

    def add(self, key, coeff):
        key = as_params(key)
        ids = self._ids(key)
        idx = self._index.get(ids)
        if idx is None:
            self._index[ids] = len(self.terms)
            self.terms.append((key, complex(coeff)))
        else:
            k, old = self.terms[idx]
            self.terms[idx] = (k, old + coeff)

    def coefficient(self, key):
        idx = self.find(as_params(key))
        if idx is None:
            raise MissingTerm(f"no term matches {as_params(key)}")
        return self.terms[idx][1]

    def prune(self, rel_tol=1e-14):
        if not self.terms:
            return self
        cap = max(abs(v) for _, v in self.terms)
        self.terms = [(k, v) for k, v in self.terms if abs(v) >= rel_tol * cap]
        self._reindex()
        return self

    def __len__(self):
        return len(self.terms)


def action_terms(z, us, model: ModelSpec):
    """Single action of the transfer matrix on B(us) as a list of (key, coefficient).

    The first entry is the diagonal term ``tau(z|us) B(us)``; entry ``j + 1``
    is the coefficient of ``B({z, us without u_j})``.
    """
    z, us = complex(z), as_params(us)
    c = model.c
    for j, u in enumerate(us):
        if abs(z - u) <= COLLISION_TOL or (model.mode == "reflection" and abs(z + u) <= COLLISION_TOL):
            raise PoleError(f"z={z} collides with parameter {j} = {u}", kernel="g", index=j)
    out = [(us, tau(z, us, model))]
    for j, u in enumerate(us):
        res = tau_residue(j, us, model)
        if model.mode == "periodic":
            coeff = -g(z, u, c) * res / c
        else:
            coeff = -(2 * u / (c + 2 * u)) * ((c + 2 * z) / c) * g(z, u, c) * g(z, -u, c) * res / c
        out.append(((z,) + us[:j] + us[j + 1:], coeff))
    return out


def apply_transfer(z, state: StateExpansion, model: ModelSpec, prune_tol=1e-14) -> StateExpansion:
    out = StateExpansion(mode=state.mode, match_tol=state.match_tol)
    for key, coeff in state.terms:
        for new_key, a in action_terms(z, key, model):
            out.add(new_key, coeff * a)
    return out.prune(prune_tol)


def extract_coefficient(vs, us, model: ModelSpec, unchecked=False, on_shell_tol=ON_SHELL_TOL,
                        match_tol=1e-9) -> complex:
    """Coefficient of B(vs) in ``t(v_1) ... t(v_n) B(us)``."""
    vs, us = as_params(vs), as_params(us)
    _check_sizes(vs, us)
    if not unchecked and vs:
        check_on_shell(vs, model, on_shell_tol)
    state = StateExpansion.single(us, mode=model.mode)
    state.match_tol = match_tol
    for v in vs:
        state = apply_transfer(v, state, model)
    return state.coefficient(vs)


# -- Gaudin norm --------------------------------------------------------------

def _richardson(values):
    """Two Richardson steps for a sequence at step sizes h, h/2, h/4 with O(h) leading error."""
    a, b, c_ = values
    r1 = 2 * b - a
    r2 = 2 * c_ - b
    return (4 * r2 - r1) / 3


def gaudin_norm(vs, model: ModelSpec, rng=None, draws=3, eps=(1e-4, 5e-5, 2.5e-5), stability=1e-5):
    """Norm S(v|v) as the limit of the determinant at ``(v, v + eps delta)`` for random unit directions.

    The determinant is ``slavnov_det`` or, in reflection mode, ``reflection_det``.
    Each direction is extrapolated to ``eps -> 0``; UnstableLimit is raised if
    the directions disagree by more than ``stability`` relative.
    """
    vs = as_params(vs)
    det = reflection_det if model.mode == "reflection" else slavnov_det
    if not vs:
        return 1.0 + 0.0j
    check_on_shell(vs, model)
    rng = np.random.default_rng(0) if rng is None else rng
    estimates = []
    for _ in range(draws):
        delta = rng.normal(size=len(vs)) + 1j * rng.normal(size=len(vs))
        delta /= np.abs(delta)
        samples = [det(vs, [v + e * d for v, d in zip(vs, delta)], model, unchecked=True) for e in eps]
        estimates.append(_richardson(samples))
    estimates = np.array(estimates)
    value = complex(np.mean(estimates))
    spread = float(np.max(np.abs(estimates - value)) / max(abs(value), 1e-300))
    if spread > stability:
        raise UnstableLimit(f"extrapolated norm varies by {spread:.3g} across directions")
    return value


# -- reflection determinant ---------------------------------------------------

def _pair_delta(values, c, upper):
    """Product of ``g(a, b) g(a, -b)`` over ordered pairs, ``a`` before ``b`` when ``upper``."""
    values = as_params(values)
    out = 1.0 + 0.0j
    for j, k in itertools.combinations(range(len(values)), 2):
        a, b = (values[j], values[k]) if upper else (values[k], values[j])
        out *= g(a, b, c) * g(a, -b, c)
    return out


def reflection_matrix(us, xs, model: ModelSpec) -> np.ndarray:
    """Entries ``(2x_k + c)/(2x_k) c/(2u_j + c) c/(g(u_j,x) g(u_j,-x)) d tau(u_j|x)/dx_k``."""
    us, xs = as_params(us), as_params(xs)
    c = model.c
    mxs = negated(xs)
    M = np.empty((len(us), len(xs)), dtype=complex)
    for j, u in enumerate(us):
        if abs(2 * u + c) <= COLLISION_TOL:
            raise PoleError("u_j = -c/2", kernel="reflection", index=j)
        row_pref = c / (2 * u + c) * c / (kernel_product(g, u, xs, c) * kernel_product(g, u, mxs, c))
        for k, x in enumerate(xs):
            if abs(x) <= COLLISION_TOL:
                raise PoleError("x_k = 0", kernel="reflection", index=k)
            M[j, k] = (2 * x + c) / (2 * x) * row_pref * dtau_dx(u, xs, k, model)
    return M


def reflection_det(xs, us, model: ModelSpec, unchecked=False, on_shell_tol=ON_SHELL_TOL) -> complex:
    """Determinant form of the reflection scalar product.

    ``prod_{j<k} g(u_j,u_k) g(u_j,-u_k) * prod_{j>k} g(x_j,x_k) g(x_j,-x_k) * det reflection_matrix``.
    Note that ``g(a,b) g(a,-b) = c**2 / (a**2 - b**2)``, a function of the squares.
    """
    if model.mode != "reflection":
        raise ValueError("reflection_det needs a reflection-mode model")
    xs, us = as_params(xs), as_params(us)
    _check_sizes(xs, us)
    if not xs:
        return 1.0 + 0.0j
    if not unchecked:
        check_on_shell(xs, model, on_shell_tol)
    c = model.c
    pref = _pair_delta(us, c, upper=True) * _pair_delta(xs, c, upper=False)
    return complex(pref * np.linalg.det(reflection_matrix(us, xs, model)))


def action_residual(z, us, model: ModelSpec) -> float:
    """Largest relative difference between the single-action coefficients and the literal operator action.

    The literal vector ``t(z) B(us)`` is decomposed by least squares onto the
    Bethe vectors appearing in the expansion; the coefficients are compared
    one by one.
    """
    from . import oracle

    terms = action_terms(z, us, model)
    basis = np.column_stack([oracle.bethe_vector(key, model) for key, _ in terms])
    target = oracle.transfer_operator(model, z) @ oracle.bethe_vector(us, model)
    coeffs, *_ = np.linalg.lstsq(basis, target, rcond=None)
    expected = np.array([a for _, a in terms])
    scale = np.maximum(np.abs(expected), np.max(np.abs(expected)) * 1e-3)
    return float(np.max(np.abs(coeffs - expected) / scale))
