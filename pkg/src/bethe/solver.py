"""Multistart damped Newton on the cleared Bethe equations."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, ValidationError
from .model import (ModelSpec, bethe_residual, bethe_residual_and_jacobian, residual_scale, tau, tau_residue,
                    tau_residue_scale)
from .rat_core import as_params, multiset_match

log = logging.getLogger(__name__)

MAX_JACOBIAN_COND = 1e8
SPURIOUS_TOL = 1e-8
ORACLE_CHECK_SITES = 10
STEP_FLOOR = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class SolveConfig:
    n_roots: int
    seeds: int = 2048
    seed_box: float = 3.0
    newton_tol: float = 1e-10
    max_iter: int = 100
    dedup_tol: float = 1e-6
    rng_seed: int = 0
    separation: float = 1e-4

    def __post_init__(self):
        if self.n_roots < 0:
            raise ValidationError("n_roots must be >= 0", key="n")
        if not self.newton_tol < self.dedup_tol:
            raise ValidationError("newton_tol must be smaller than dedup_tol", key="newton_tol")
        if self.seeds < 1:
            raise ValidationError("need at least one seed", key="seeds")


@dataclass
class BetheRoots:
    roots: tuple
    mode: str
    residual_norm: float
    converged: bool = True

    def __len__(self):
        return len(self.roots)


@dataclass
class OnShellReport:
    """Absolute maxima plus the relative values the pass flags are based on."""

    max_residual: float
    max_tau_residue: float
    oracle_residual: float | None
    tol: float
    checks: dict = field(default_factory=dict)
    rel_residual: float = 0.0
    rel_tau_residue: float = 0.0

    @property
    def passed(self):
        return all(self.checks.values())


def _solve_rows(jac, rhs):
    """Batched linear solve; rows with a singular matrix get NaN."""
    try:
        return np.linalg.solve(jac, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(rhs.shape, np.nan, dtype=complex)
        for i in range(rhs.shape[0]):
            try:
                out[i] = np.linalg.solve(jac[i], rhs[i])
            except np.linalg.LinAlgError:
                pass
        return out


def _newton(u0, model, cfg):
    """Damped Newton on a batch of starts, one per row of ``u0``.

    Each row is iterated independently with its own backtracking line search.
    Rows stop when the Newton step drops to rounding level or the line search
    stalls.  Returns ``(u, norm, ok)``: final points, max |residual| per row
    and a mask of rows that reached ``newton_tol``.
    """
    u = np.array(u0, dtype=complex, ndmin=2)
    rows = u.shape[0]
    norm = np.full(rows, np.inf)
    live = np.ones(rows, dtype=bool)
    with np.errstate(all="ignore"):
        r, jac = bethe_residual_and_jacobian(u, model)
        norm = np.max(np.abs(r), axis=1)
        live &= np.isfinite(norm)
        for _ in range(cfg.max_iter):
            live &= norm > 0
            idx = np.flatnonzero(live)
            if idx.size == 0:
                break
            step = _solve_rows(jac[idx], r[idx])
            good = np.all(np.isfinite(step), axis=1)
            live[idx[~good]] = False
            idx, step = idx[good], step[good]
            # iterate to the rounding floor; residuals with small terms pass newton_tol early
            tiny = np.max(np.abs(step), axis=1) <= STEP_FLOOR * np.maximum(1.0, np.max(np.abs(u[idx]), axis=1))
            live[idx[tiny]] = False
            idx, step = idx[~tiny], step[~tiny]
            lam = np.ones(idx.size)
            pending = np.ones(idx.size, dtype=bool)
            for _ in range(21):
                p = np.flatnonzero(pending)
                if p.size == 0:
                    break
                trial = u[idx[p]] - lam[p, None] * step[p]
                r_t, j_t = bethe_residual_and_jacobian(trial, model)
                n_t = np.max(np.abs(r_t), axis=1)
                ok = np.isfinite(n_t) & (n_t < norm[idx[p]])
                acc = idx[p[ok]]
                u[acc], r[acc], jac[acc], norm[acc] = trial[ok], r_t[ok], j_t[ok], n_t[ok]
                pending[p[ok]] = False
                lam[p[~ok]] *= 0.5
            live[idx[pending]] = False
    ok = np.isfinite(norm) & (norm < cfg.newton_tol)
    return u, norm, ok


def _reject_reasons(u, model, sep):
    """Per row of ``u``, the reason it is a spurious or singular solution, or None.

    Rejected: coinciding roots, roots differing by ``c``, in reflection mode
    pairs summing to 0 or ``+-c`` and roots at 0 or ``+-c/2``, residuals that
    vanish only through a common zero of both terms, and solutions whose
    Jacobian is singular (non-isolated families, whose Bethe vectors vanish).
    """
    u = np.array(u, dtype=complex, ndmin=2)
    rows, n = u.shape
    c = model.c
    # spurious solutions sit exactly on these points; near-strings only come close
    exact = SPURIOUS_TOL * max(1.0, abs(c))
    reasons = [None] * rows

    def mark(mask, why):
        for i in np.flatnonzero(mask):
            if reasons[i] is None:
                reasons[i] = why

    iu = np.triu_indices(n, 1)
    d = (u[:, :, None] - u[:, None, :])[:, iu[0], iu[1]]
    mark(np.any(np.abs(d) <= sep, axis=1), "degenerate")
    mark(np.any((np.abs(d - c) <= exact) | (np.abs(d + c) <= exact), axis=1), "pair differs by c")
    if model.mode == "reflection":
        sm = (u[:, :, None] + u[:, None, :])[:, iu[0], iu[1]]
        mark(np.any(np.abs(sm) <= sep, axis=1), "pair sums to 0")
        mark(np.any((np.abs(sm - c) <= exact) | (np.abs(sm + c) <= exact), axis=1), "pair sums to +-c")
        mark(np.any(np.abs(u) <= sep, axis=1), "root at 0")
        mark(np.any((np.abs(u - c / 2) <= exact) | (np.abs(u + c / 2) <= exact), axis=1), "root at +-c/2")
    with np.errstate(all="ignore"):
        r, jac = bethe_residual_and_jacobian(u, model)
        scale = np.maximum(residual_scale(u, model), 1e-300)
        mark(np.max(np.abs(r) / scale, axis=1) > 1e-8, "residual vanishes only through a common zero")
        cond = np.linalg.cond(jac / scale[:, :, None])
    mark(~(cond <= MAX_JACOBIAN_COND), "non-isolated solution")
    return reasons


def _solve_seeds(args):
    """Run one batch of starts; returns (roots, norm) for each regular solution."""
    starts, model, cfg = args
    u, norm, ok = _newton(starts, model, cfg)
    u, norm = u[ok], norm[ok]
    reasons = _reject_reasons(u, model, cfg.separation) if len(u) else []
    return [(tuple(complex(x) for x in row), float(nrm))
            for row, nrm, why in zip(u, norm, reasons) if why is None]


def canonical(roots, mode):
    """Sorted representative; in reflection mode each root is flipped to Re >= 0."""
    out = []
    for x in as_params(roots):
        if mode == "reflection" and (x.real < 0 or (x.real == 0 and x.imag < 0)):
            x = -x
        out.append(x)
    return tuple(sorted(out, key=lambda z: (round(z.real, 9), round(z.imag, 9))))


def dedup_roots(candidates, mode, tol):
    """Drop root sets equal up to permutation (and per-root sign flips in reflection mode)."""
    kept = []
    for cand in candidates:
        rep = canonical(cand.roots, mode)
        if any(multiset_match(rep, k.roots, tol) is not None for k in kept):
            continue
        kept.append(BetheRoots(rep, mode, cand.residual_norm, cand.converged))
    return kept


def _starts(model, cfg):
    """Random complex starting points.

    Periodic seeds fill a square of half-width ``seed_box`` around the centre
    of the inhomogeneities.  Reflection equations are invariant under
    ``u_i -> -u_i``, so those seeds sit in the right half of a square around 0.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n, box = cfg.n_roots, cfg.seed_box
    if model.mode == "reflection":
        return [rng.uniform(0, box, n) + 1j * rng.uniform(-box, box, n) for _ in range(cfg.seeds)]
    center = complex(np.mean(model.theta)) if model.is_xxx and model.theta else 0.0
    return [center + rng.uniform(-box, box, n) + 1j * rng.uniform(-box, box, n) for _ in range(cfg.seeds)]


def solve_bethe(model: ModelSpec, cfg: SolveConfig, jobs: int = 1) -> list[BetheRoots]:
    """All distinct regular root sets reached from ``cfg.seeds`` random starts.

    Starts are split into at most ``jobs`` contiguous batches.  Each start is
    iterated independently, and candidates are sorted before deduplication,
    so the result does not depend on ``jobs``.
    """
    if cfg.n_roots == 0:
        return [BetheRoots((), model.mode, 0.0, True)]
    starts = np.array(_starts(model, cfg), dtype=complex)
    batches = [(chunk, model, cfg) for chunk in np.array_split(starts, max(1, min(jobs, len(starts))))]
    if len(batches) > 1:
        with ProcessPoolExecutor(max_workers=len(batches)) as pool:
            results = list(pool.map(_solve_seeds, batches))
    else:
        results = [_solve_seeds(b) for b in batches]
    found = [BetheRoots(canonical(r, model.mode), model.mode, nrm) for chunk in results for r, nrm in chunk]
    log.info("%d of %d seeds converged to regular solutions", len(found), len(starts))
    if not found:
        raise NoConvergence(f"none of {len(starts)} seeds converged to a regular solution")
    found.sort(key=lambda b: tuple((round(z.real, 6), round(z.imag, 6)) for z in b.roots))
    return dedup_roots(found, model.mode, cfg.dedup_tol)


def verify_on_shell(roots, model: ModelSpec, tol=1e-10, oracle=True, rng=None) -> OnShellReport:
    """Check a root set three ways: cleared residual, eigenvalue residues, oracle eigenvector.

    All three are relative: residuals against the size of their two competing
    terms, the oracle check as ``|t(z) B - tau B| / (|tau| |B|)`` at three random z.
    """
    us = as_params(roots.roots if isinstance(roots, BetheRoots) else roots)
    if not us:
        return OnShellReport(0.0, 0.0, 0.0 if oracle else None, tol, {"residual": True, "tau_residue": True})
    r = np.abs(bethe_residual(us, model))
    rel_r = float(np.max(r / np.maximum(residual_scale(us, model), 1e-300)))
    res = [abs(tau_residue(j, us, model)) for j in range(len(us))]
    rel_res = max(x / max(tau_residue_scale(j, us, model), 1e-300) for j, x in enumerate(res))
    checks = {"residual": rel_r < tol, "tau_residue": rel_res < tol}
    orc = None
    if oracle and model.is_xxx and len(model.theta) <= ORACLE_CHECK_SITES:
        from . import oracle as orc_mod

        rng = np.random.default_rng(0) if rng is None else rng
        vec = orc_mod.bethe_vector(us, model)
        nv = np.linalg.norm(vec)
        orc = 0.0
        for _ in range(3):
            z = complex(rng.normal() + 1j * rng.normal())
            ev = tau(z, us, model)
            t_op = orc_mod.transfer_operator(model, z)
            orc = max(orc, float(np.linalg.norm(t_op @ vec - ev * vec) / (nv * max(1.0, abs(ev)))))
        checks["oracle"] = orc < tol
    return OnShellReport(float(np.max(r)), float(max(res)), orc, tol, checks, rel_r, float(rel_res))


def oracle_bethe_state_count(model: ModelSpec, n: int, z=None, tol=1e-8):
    """Eigenvalues of t(z) in the n-down sector that do not already occur in the (n-1)-down sector.

    For the periodic chain these are the highest-weight states, the ones built
    from finite Bethe roots; descendants repeat lower-sector eigenvalues.
    Returns the list of such eigenvalues.
    """
    from . import oracle as orc_mod

    z = complex(0.37 + 0.61j) if z is None else complex(z)
    N = len(model.theta)
    t_op = orc_mod.transfer_operator(model, z)

    def spectrum(k):
        idx = orc_mod.sector_indices(N, k)
        return np.linalg.eigvals(t_op[np.ix_(idx, idx)]) if idx.size else np.zeros(0)

    top = spectrum(n)
    below = spectrum(n - 1) if n > 0 else np.zeros(0)
    scale = max(np.max(np.abs(top)), 1.0)
    return [ev for ev in top if below.size == 0 or np.min(np.abs(below - ev)) > tol * scale]
