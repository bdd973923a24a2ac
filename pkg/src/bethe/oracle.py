"""Brute-force spin-chain oracle.

Everything here is built from dense matrices on the 2**N dimensional chain
space, with no use of Bethe-ansatz formulas.  Site basis: index 0 is spin up
(the vacuum state), index 1 is spin down; site 1 is the most significant
tensor factor.

The monodromy is ``T(u) = L_N(u - theta_N) ... L_1(u - theta_1)`` with
``L_k(w) = w 1 + c P_{a,k}``.  Operator-valued 2x2 matrices are stored as
arrays of shape ``(2, 2, D, D)`` where the leading pair indexes auxiliary
space.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionCap, DimensionMismatch, PoleError
from .model import ModelSpec
from .rat_core import COLLISION_TOL, as_params

MAX_SITES = 12

SIGMA2 = np.array([[0, -1j], [1j, 0]])


def _check_sites(n):
    if n > MAX_SITES:
        raise DimensionCap(f"N={n} exceeds the dense cap of {MAX_SITES} sites")


def _require_xxx(model):
    if not model.is_xxx:
        raise ValueError("the oracle needs an XXX realization (theta)")
    _check_sites(len(model.theta))


def elementary(i, j, d=2):
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def site_operator(op, site, n_sites):
    """Embed a 2x2 matrix acting on ``site`` (0-based) into the chain."""
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_sites):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def permutation_matrix():
    P = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            P[2 * i + j, 2 * j + i] = 1.0
    return P


def build_r_matrix(u, v, c):
    """``R(u, v) = 1 + g(u, v) P`` on C^2 x C^2."""
    d = complex(u) - complex(v)
    if abs(d) <= COLLISION_TOL:
        raise PoleError("R-matrix at u = v", kernel="g", difference=d)
    return np.eye(4, dtype=complex) + complex(c) / d * permutation_matrix()


def l_operator(w, c, site, n_sites):
    """Entries ``L_ij = w delta_ij + c E_ji`` (acting on ``site``) as a (2, 2, D, D) array."""
    D = 2 ** n_sites
    L = np.zeros((2, 2, D, D), dtype=complex)
    eye = np.eye(D)
    for i in range(2):
        for j in range(2):
            L[i, j] = c * site_operator(elementary(j, i), site, n_sites)
            if i == j:
                L[i, j] += w * eye
    return L


def aux_mul(A, B):
    """Product of operator-valued 2x2 matrices, operators multiplied in order A then B."""
    return np.matmul(A[:, :, None], B[None]).sum(axis=1)


def build_monodromy(model: ModelSpec, u):
    _require_xxx(model)
    n = len(model.theta)
    D = 2 ** n
    T = np.zeros((2, 2, D, D), dtype=complex)
    T[0, 0] = T[1, 1] = np.eye(D)
    for k, th in enumerate(model.theta):
        T = aux_mul(l_operator(complex(u) - th, model.c, k, n), T)
    return T


def aux_transpose(T):
    return np.transpose(T, (1, 0, 2, 3))


def scalar_aux(M, T, side="left"):
    """Multiply an operator-valued matrix by a numeric 2x2 matrix in auxiliary space."""
    if side == "left":
        return np.einsum("ik,kjab->ijab", M, T)
    return np.einsum("ikab,kj->ijab", T, M)


def k_matrix(u, xi):
    return np.diag([xi + u, xi - u]).astype(complex)


def build_double_row(model: ModelSpec, u):
    """Reflection monodromy ``T(u) K(u - c/2, xi_-) sigma_2 T^t(-u) sigma_2``."""
    _require_xxx(model)
    u = complex(u)
    c = model.c
    Tu = build_monodromy(model, u)
    Tm = build_monodromy(model, -u)
    hat = scalar_aux(SIGMA2, scalar_aux(SIGMA2, aux_transpose(Tm), "right"), "left")
    return aux_mul(scalar_aux(k_matrix(u - c / 2, model.xi_minus), Tu, "right"), hat)


def transfer_operator(model: ModelSpec, u):
    u = complex(u)
    if model.mode == "periodic":
        T = build_monodromy(model, u)
        return T[0, 0] + T[1, 1]
    c = model.c
    Tr = build_double_row(model, u)
    kp = k_matrix(u + c / 2, model.xi_plus)
    return kp[0, 0] * Tr[0, 0] + kp[1, 1] * Tr[1, 1]


def vacuum(n_sites):
    v = np.zeros(2 ** n_sites, dtype=complex)
    v[0] = 1.0
    return v


def _creation(model, u):
    if model.mode == "periodic":
        return build_monodromy(model, u)[0, 1]
    return build_double_row(model, u)[0, 1]


def _annihilation(model, u):
    if model.mode == "periodic":
        return build_monodromy(model, u)[1, 0]
    return build_double_row(model, u)[1, 0]


def bethe_vector(us, model: ModelSpec):
    """``B(u) = T_12(u_1) ... T_12(u_n)|0>`` (or with the double-row T_12 in reflection mode)."""
    _require_xxx(model)
    us = as_params(us)
    vec = vacuum(len(model.theta))
    for u in reversed(us):
        vec = _creation(model, u) @ vec
    return vec


def dual_bethe_vector(vs, model: ModelSpec):
    """``C(v) = <0| T_21(v_1) ... T_21(v_n)`` as a row of amplitudes."""
    _require_xxx(model)
    vs = as_params(vs)
    vec = vacuum(len(model.theta))
    for v in vs:
        vec = vec @ _annihilation(model, v)
    return vec


def inner_product(dual, vec):
    """Bilinear pairing, no complex conjugation."""
    dual, vec = np.asarray(dual), np.asarray(vec)
    if dual.shape != vec.shape:
        raise DimensionMismatch(f"{dual.shape} vs {vec.shape}")
    return complex(dual @ vec)


def down_spin_count(n_sites):
    idx = np.arange(2 ** n_sites)
    return np.array([bin(i).count("1") for i in idx])


def sector_indices(n_sites, n_down):
    return np.flatnonzero(down_spin_count(n_sites) == n_down)


def sector_support(vec, n_sites, tol=1e-12):
    """Set of down-spin counts carrying non-negligible amplitude."""
    counts = down_spin_count(n_sites)
    scale = max(np.max(np.abs(vec)), 1e-300)
    return sorted(set(counts[np.abs(vec) > tol * scale].tolist()))


# -- algebra checks -----------------------------------------------------------

def _full(T, slot):
    """Operator-valued T as a matrix on aux(1) x aux(2) x chain, acting in ``slot``."""
    D = T.shape[-1]
    out = np.zeros((4 * D, 4 * D), dtype=complex)
    eye2 = np.eye(2)
    for i in range(2):
        for j in range(2):
            E = elementary(i, j)
            aux = np.kron(E, eye2) if slot == 1 else np.kron(eye2, E)
            out += np.kron(aux, T[i, j])
    return out


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300))


def rtt_residual(model, u, v):
    Tu, Tv = build_monodromy(model, u), build_monodromy(model, v)
    D = Tu.shape[-1]
    R = np.kron(build_r_matrix(u, v, model.c), np.eye(D))
    lhs = R @ _full(Tu, 1) @ _full(Tv, 2)
    rhs = _full(Tv, 2) @ _full(Tu, 1) @ R
    return _rel(lhs, rhs)


def _r_of_difference(x, c):
    return build_r_matrix(x, 0.0, c)


def reflection_residuals(c, xi_minus, xi_plus, u1, u2):
    """Residuals of the two reflection equations for the diagonal K-matrices."""
    I = np.eye(2)

    def k1(K):
        return np.kron(K, I)

    def k2(K):
        return np.kron(I, K)

    Km1, Km2 = k_matrix(u1, xi_minus), k_matrix(u2, xi_minus)
    Ra, Rb = _r_of_difference(u1 - u2, c), _r_of_difference(u1 + u2, c)
    minus = _rel(Ra @ k1(Km1) @ Rb @ k2(Km2), k2(Km2) @ Rb @ k1(Km1) @ Ra)
    Kp1, Kp2 = k_matrix(u1 + c, xi_plus), k_matrix(u2 + c, xi_plus)
    Rc, Rd = _r_of_difference(-u1 + u2, c), _r_of_difference(-u1 - u2 - 2 * c, c)
    plus = _rel(Rc @ k1(Kp1) @ Rd @ k2(Kp2), k2(Kp2) @ Rd @ k1(Kp1) @ Rc)
    return minus, plus


def commutator_residual(A, B):
    return float(np.linalg.norm(A @ B - B @ A) / max(np.linalg.norm(A) * np.linalg.norm(B), 1e-300))


def vacuum_residuals(model, u):
    """Relative errors of the vacuum eigenvalue relations (periodic and double-row)."""
    u = complex(u)
    n = len(model.theta)
    vac = vacuum(n)
    T = build_monodromy(model, u)
    l1, l2 = model.lam(1, u), model.lam(2, u)
    scale = max(abs(l1), abs(l2), 1.0)
    out = {
        "T11": float(np.linalg.norm(T[0, 0] @ vac - l1 * vac)) / scale,
        "T22": float(np.linalg.norm(T[1, 1] @ vac - l2 * vac)) / scale,
        "T21": float(np.linalg.norm(T[1, 0] @ vac)) / scale,
    }
    if model.mode == "reflection":
        Tr = build_double_row(model, u)
        e11 = double_row_vacuum_11(u, model)
        e22 = double_row_vacuum_22(u, model)
        s = max(abs(e11), abs(e22), 1.0)
        out["DR11"] = float(np.linalg.norm(Tr[0, 0] @ vac - e11 * vac)) / s
        out["DR22"] = float(np.linalg.norm(Tr[1, 1] @ vac - e22 * vac)) / s
        out["DR21"] = float(np.linalg.norm(Tr[1, 0] @ vac)) / s
    return out


def double_row_vacuum_11(u, model):
    return (u + model.xi_minus - model.c / 2) * model.lam(1, u) * model.lam(2, -u)


def double_row_vacuum_22(u, model):
    """Vacuum eigenvalue of the double-row T_22.

    The second term carries a factor ``c``; for ``c = 1`` this is the usual
    ``(u + xi_- - c/2) / (2u) lambda_1(u) lambda_2(-u)``.
    """
    c, xm = model.c, model.xi_minus
    return ((c - 2 * u) / (2 * u) * (u - xm + c / 2) * model.lam(1, -u) * model.lam(2, u)
            + c * (u + xm - c / 2) / (2 * u) * model.lam(1, u) * model.lam(2, -u))


@dataclass
class AlgebraReport:
    rtt: float
    reflection_minus: float
    reflection_plus: float
    vacuum: dict
    transfer_commutator: float
    reflection_transfer_commutator: float
    action: float | None = None
    reflection_action: float | None = None

    def max_residual(self):
        vals = [self.rtt, self.reflection_minus, self.reflection_plus, self.transfer_commutator,
                self.reflection_transfer_commutator, *self.vacuum.values()]
        vals += [x for x in (self.action, self.reflection_action) if x is not None]
        return max(vals)


def check_algebra(model: ModelSpec, u, v, xi_minus=None, xi_plus=None, action_set=None, z=None):
    """Residual norms of RTT, reflection equations, vacuum relations and transfer commutativity.

    ``model`` must be an XXX realization; boundary parameters default to the
    model's own when it is in reflection mode.
    """
    from .scalar import action_residual

    xm = model.xi_minus if xi_minus is None else xi_minus
    xp = model.xi_plus if xi_plus is None else xi_plus
    per = model.with_mode("periodic")
    ref = model.with_mode("reflection", xi_minus=xm, xi_plus=xp)
    r_minus, r_plus = reflection_residuals(model.c, xm, xp, u, v)
    vac = vacuum_residuals(ref, u)
    report = AlgebraReport(
        rtt=rtt_residual(per, u, v),
        reflection_minus=r_minus,
        reflection_plus=r_plus,
        vacuum=vac,
        transfer_commutator=commutator_residual(transfer_operator(per, u), transfer_operator(per, v)),
        reflection_transfer_commutator=commutator_residual(transfer_operator(ref, u), transfer_operator(ref, v)),
    )
    if action_set is not None:
        zz = u if z is None else z
        report.action = action_residual(zz, action_set, per)
        report.reflection_action = action_residual(zz, action_set, ref)
    return report


# -- debug dump ---------------------------------------------------------------

_MODE_CODE = {"periodic": 0, "reflection": 1}


def dump_array(path, array, n_sites, mode="periodic"):
    """Write a little-endian binary dump: header (magic, N, ndim, dims..., mode) then complex128 row-major."""
    a = np.ascontiguousarray(array, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(b"BETH")
        fh.write(struct.pack("<III", n_sites, a.ndim, _MODE_CODE[mode]))
        fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        fh.write(a.tobytes(order="C"))


def load_array(path):
    with open(path, "rb") as fh:
        if fh.read(4) != b"BETH":
            raise ValueError("not a bethe dump")
        n_sites, ndim, mode = struct.unpack("<III", fh.read(12))
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        data = np.frombuffer(fh.read(), dtype="<c16").reshape(shape)
    return data.astype(complex), n_sites, {v: k for k, v in _MODE_CODE.items()}[mode]
