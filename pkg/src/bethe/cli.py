"""Command-line front end.

    bethe <solve|scalar|norm|verify|bench> [--config PATH] [--jobs K]
          [--output PATH] [--methods LIST] [--unchecked]

The configuration is an INI file with sections ``[model]``, ``[solver]``,
``[task]`` and ``[output]``; values use Python literal syntax.  Without
``--config`` the packaged ``default.ini`` is used.  Reports are JSON (or a
plain table) in which every complex number is ``{"re": .., "im": ..}`` and
every numeric comparison carries ``lhs, rhs, rel_err, tol, pass``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for a bad
configuration or command line, 3 when a computation raises.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import itertools
import json
import logging
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import oracle, scalar
from .errors import BetheError, ParseError, ValidationError
from .model import ModelSpec, bethe_residual
from .rat_core import kernels
from .solver import SolveConfig, oracle_bethe_state_count, solve_bethe, verify_on_shell

log = logging.getLogger("bethe")

COMMANDS = ("solve", "scalar", "norm", "verify", "bench")
METHODS = ("det", "hny", "sum", "action", "oracle")
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

# key -> kind; kinds are checked in _convert
SCHEMA = {
    "model": {
        "c": "complex", "mode": "str", "theta": "clist",
        "lambda1_num": "clist", "lambda1_den": "clist", "lambda2_num": "clist", "lambda2_den": "clist",
        "xi_minus": "complex", "xi_plus": "complex",
    },
    "solver": {
        "n": "int", "seeds": "int", "seed_box": "float", "newton_tol": "float", "max_iter": "int",
        "dedup_tol": "float", "rng_seed": "int", "separation": "float",
    },
    "task": {
        "methods": "str", "x": "clist", "u": "clist", "offshell_draws": "int", "tol": "float",
        "max_sets": "int", "bench_max_n": "int", "bench_repeat": "int", "verify_sites": "int",
        "verify_max_n_periodic": "int", "verify_max_n_reflection": "int",
    },
    "output": {"format": "str", "path": "str"},
}

TASK_DEFAULTS = {
    "methods": "det,hny,sum,action,oracle",
    "offshell_draws": 5,
    "tol": 1e-8,
    "max_sets": 3,
    "bench_max_n": 6,
    "bench_repeat": 3,
    "verify_sites": 4,
    "verify_max_n_periodic": 3,
    "verify_max_n_reflection": 2,
}
OUTPUT_DEFAULTS = {"format": "json"}
DEFAULT_XI = (0.33 + 0.2j, -0.41 + 0.1j)


# -- configuration --------------------------------------------------------------

@dataclass
class RunConfig:
    model: ModelSpec
    solver: SolveConfig
    task: dict
    output: dict
    raw: dict = field(default_factory=dict)

    def resolved(self):
        """Every setting after defaults, in a JSON-ready form."""
        m = self.model
        model = {"c": num(m.c), "mode": m.mode}
        if m.is_xxx:
            model["theta"] = [num(x) for x in m.theta]
        else:
            model["lambdas"] = [[[num(x) for x in part] for part in pair] for pair in m.lambdas]
        if m.xi_minus is not None:
            model["xi_minus"] = num(m.xi_minus)
        if m.xi_plus is not None:
            model["xi_plus"] = num(m.xi_plus)
        s = self.solver
        solver = {"n": s.n_roots, "seeds": s.seeds, "seed_box": s.seed_box, "newton_tol": s.newton_tol,
                  "max_iter": s.max_iter, "dedup_tol": s.dedup_tol, "rng_seed": s.rng_seed,
                  "separation": s.separation}
        task = {k: ([num(x) for x in v] if isinstance(v, tuple) else v) for k, v in sorted(self.task.items())}
        return {"model": model, "solver": solver, "task": task, "output": dict(sorted(self.output.items()))}


def _locate(text):
    """Map ``(section, key)`` to the 1-based line and column where its value starts."""
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        head = re.match(r"\s*\[([^\]]+)\]", line)
        if head:
            section = head.group(1).strip()
            continue
        kv = re.match(r"(\s*)([^=:#;\s][^=:]*?)\s*[=:]\s*", line)
        if kv and section is not None:
            where.setdefault((section, kv.group(2)), (lineno, kv.end() + 1))
    return where


def _parse_error(exc):
    if isinstance(exc, configparser.DuplicateOptionError):
        return ParseError(f"duplicate key {exc.option!r} in section [{exc.section}]", line=exc.lineno, column=1)
    if isinstance(exc, configparser.DuplicateSectionError):
        return ParseError(f"duplicate section [{exc.section}]", line=exc.lineno, column=1)
    if isinstance(exc, configparser.MissingSectionHeaderError):
        return ParseError("key outside of any section", line=exc.lineno, column=1)
    if isinstance(exc, configparser.ParsingError) and exc.errors:
        lineno, _ = exc.errors[0]
        return ParseError("line is neither a section header nor key = value", line=lineno, column=1)
    return ParseError(str(exc))


def _convert(kind, text, qualified, pos):
    line, col = pos
    if kind == "str":
        return text.strip()
    try:
        value = ast.literal_eval(text.strip())
    except (ValueError, SyntaxError) as exc:
        raise ParseError(f"cannot read value of {qualified}: {text.strip()!r}", line=line, column=col) from exc
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"{qualified} must be an integer", key=qualified)
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{qualified} must be a real number", key=qualified)
        return float(value)
    if kind == "complex":
        if isinstance(value, bool) or not isinstance(value, (int, float, complex)):
            raise ValidationError(f"{qualified} must be a number", key=qualified)
        return complex(value)
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)) or not all(
            isinstance(x, (int, float, complex)) and not isinstance(x, bool) for x in value):
        raise ValidationError(f"{qualified} must be a list of numbers", key=qualified)
    return tuple(complex(x) for x in value)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration; defaults are filled in and recorded."""
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"),
                                   empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise _parse_error(exc) from None
    where = _locate(text)
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ValidationError(f"unknown section [{section}]", key=section)
        values[section] = {}
        for key, text_value in cp.items(section):
            qualified = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ValidationError(f"unknown key {qualified}", key=qualified)
            values[section][key] = _convert(SCHEMA[section][key], text_value, qualified,
                                            where.get((section, key), (None, None)))
    return build_config(values)


def build_config(values: dict) -> RunConfig:
    m = values.get("model", {})
    c = m.get("c", 1.0 + 0j)
    mode = m.get("mode", "periodic")
    lam_keys = [k for k in m if k.startswith("lambda")]
    lambdas = None
    if lam_keys:
        for k in ("lambda1_num", "lambda2_num"):
            if k not in m:
                raise ValidationError(f"model.{k} required with a custom lambda realization", key=f"model.{k}")
        lambdas = ((m["lambda1_num"], m.get("lambda1_den", (1.0 + 0j,))),
                   (m["lambda2_num"], m.get("lambda2_den", (1.0 + 0j,))))
    theta = m.get("theta")
    if theta is not None and lambdas is not None:
        raise ValidationError("give either model.theta or custom lambda coefficients, not both", key="model.theta")
    if theta is None and lambdas is None:
        raise ValidationError("model.theta or custom lambda coefficients required", key="model.theta")
    model = ModelSpec(c=c, mode=mode, theta=theta, lambdas=lambdas,
                      xi_minus=m.get("xi_minus"), xi_plus=m.get("xi_plus"))

    s = values.get("solver", {})
    defaults = SolveConfig(n_roots=1)
    solver = SolveConfig(
        n_roots=s.get("n", 1), seeds=s.get("seeds", defaults.seeds), seed_box=s.get("seed_box", defaults.seed_box),
        newton_tol=s.get("newton_tol", defaults.newton_tol), max_iter=s.get("max_iter", defaults.max_iter),
        dedup_tol=s.get("dedup_tol", defaults.dedup_tol), rng_seed=s.get("rng_seed", defaults.rng_seed),
        separation=s.get("separation", defaults.separation))

    task = dict(TASK_DEFAULTS)
    task.update(values.get("task", {}))
    _methods(task["methods"])
    for key in ("x", "u"):
        if key in task and len(task[key]) != solver.n_roots:
            raise ValidationError(f"task.{key} must have n = {solver.n_roots} elements", key=f"task.{key}")
    for key in ("offshell_draws", "max_sets", "bench_repeat", "verify_sites"):
        if task[key] < 1:
            raise ValidationError(f"task.{key} must be positive", key=f"task.{key}")
    if task["offshell_draws"] < 2 and model.mode == "reflection":
        raise ValidationError("task.offshell_draws must be at least 2 in reflection mode", key="task.offshell_draws")
    if not 1 <= task["bench_max_n"] <= scalar.MAX_SYM:
        raise ValidationError(f"task.bench_max_n must lie in 1..{scalar.MAX_SYM}", key="task.bench_max_n")

    output = dict(OUTPUT_DEFAULTS)
    output.update(values.get("output", {}))
    if output["format"] not in ("json", "table"):
        raise ValidationError("output.format must be json or table", key="output.format")
    return RunConfig(model, solver, task, output, values)


def _methods(text):
    out = []
    for item in (x.strip() for x in text.split(",") if x.strip()):
        name, _, arg = item.partition(":")
        if name not in METHODS or (arg and name != "hny"):
            raise ValidationError(f"unknown method {item!r}; choose from det, hny[:m], sum, action, oracle",
                                  key="task.methods")
        if arg and not arg.isdigit():
            raise ValidationError(f"hny order must be a positive integer, got {arg!r}", key="task.methods")
        out.append((name, int(arg) if arg else None))
    if not out:
        raise ValidationError("no methods requested", key="task.methods")
    return out


def load_config(path=None) -> RunConfig:
    if path is None:
        text = resources.files("bethe").joinpath("default.ini").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(text)


# -- report helpers -------------------------------------------------------------

def num(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def rel_err(lhs, rhs):
    lhs, rhs = complex(lhs), complex(rhs)
    scale = abs(rhs) if abs(rhs) > 0 else 1.0
    return abs(lhs - rhs) / scale


def compare(name, lhs, rhs, tol, err=None):
    """One comparison record; ``err`` overrides the default ``|lhs - rhs| / |rhs|``."""
    err = rel_err(lhs, rhs) if err is None else float(err)
    return {"name": name, "lhs": num(lhs), "rhs": num(rhs), "rel_err": err, "tol": tol,
            "pass": bool(math.isfinite(err) and err < tol)}


def _fmt(x):
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj, indent=2, level=0):
    """JSON text with floats written to 17 significant digits."""
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    return _fmt(obj)


def _table(report):
    lines = [f"command: {report['command']}   status: {report['status']}"]
    for chk in _all_checks(report):
        flag = "PASS" if chk["pass"] else "FAIL"
        lines.append(f"{flag}  {chk['name']:<60s} rel_err={chk['rel_err']:.3e}  tol={chk['tol']:.1e}")
    if "timings" in report.get("results", {}):
        lines.append(f"{'n':>3s} {'det [s]':>12s} {'sum [s]':>12s} {'action [s]':>12s}")
        for row in report["results"]["timings"]:
            lines.append(f"{row['n']:>3d} {row['det']:>12.3e} {row['sum']:>12.3e} {row['action']:>12.3e}")
    return "\n".join(lines) + "\n"


def _all_checks(report):
    out = list(report.get("checks", []))
    for inv in report.get("invariants", []):
        out.extend(inv["comparisons"])
    return out


# -- shared pieces ----------------------------------------------------------------

def _random_set(rng, n, scale=0.8):
    return tuple(complex(a, b) for a, b in scale * rng.normal(size=(n, 2)))


def _det_fn(model):
    return scalar.reflection_det if model.mode == "reflection" else scalar.slavnov_det


def _inner(xs, us, model):
    return oracle.inner_product(oracle.dual_bethe_vector(xs, model), oracle.bethe_vector(us, model))


def _lambda2_product(xs, model):
    return complex(np.prod([model.lam(2, x) for x in xs])) if xs else 1.0 + 0j


def _oracle_ok(model):
    return model.is_xxx and len(model.theta) <= oracle.MAX_SITES


def _onshell_sets(cfg, jobs, unchecked):
    if "x" in cfg.task:
        xs = cfg.task["x"]
        if not unchecked:
            scalar.check_on_shell(xs, cfg.model)
        return [xs]
    found = solve_bethe(cfg.model, cfg.solver, jobs=jobs)
    return [b.roots for b in found[: cfg.task["max_sets"]]]


def _offshell_sets(cfg, rng):
    if "u" in cfg.task:
        return [cfg.task["u"]]
    return [_random_set(rng, cfg.solver.n_roots) for _ in range(cfg.task["offshell_draws"])]


# -- commands ---------------------------------------------------------------------

def cmd_solve(cfg, args):
    model = cfg.model
    found = solve_bethe(model, cfg.solver, jobs=args.jobs)
    tol = 1e-9
    sets, checks = [], []
    for idx, b in enumerate(found):
        rep = verify_on_shell(b, model, tol=tol, oracle=_oracle_ok(model))
        sets.append({"roots": [num(x) for x in b.roots], "residual_norm": b.residual_norm,
                     "max_residual": rep.max_residual, "max_tau_residue": rep.max_tau_residue,
                     "oracle_residual": rep.oracle_residual})
        checks.append(compare(f"set {idx}: relative cleared residual", rep.rel_residual, 0.0, tol))
        checks.append(compare(f"set {idx}: relative tau residue", rep.rel_tau_residue, 0.0, tol))
        if rep.oracle_residual is not None:
            checks.append(compare(f"set {idx}: oracle eigenvector residual", rep.oracle_residual, 0.0, tol))
    results = {"sets": sets}
    if model.is_xxx and len(model.theta) <= 10:
        results["oracle_state_count"] = len(oracle_bethe_state_count(model, cfg.solver.n_roots))
        results["found_count"] = len(found)
    return results, checks


def cmd_scalar(cfg, args):
    model = cfg.model
    rng = np.random.default_rng(cfg.solver.rng_seed)
    methods = _methods(args.methods or cfg.task["methods"])
    n, tol = cfg.solver.n_roots, cfg.task["tol"]
    skipped = []
    if model.mode == "reflection":
        skipped = [f"{name}:{m}" if m else name for name, m in methods if name in ("hny", "sum")]
        methods = [(name, m) for name, m in methods if name not in ("hny", "sum")]
    want = {name for name, _ in methods}
    if "oracle" in want and not _oracle_ok(model):
        raise ValidationError("the oracle method needs an XXX model with at most "
                              f"{oracle.MAX_SITES} sites", key="task.methods")
    det = _det_fn(model)
    unchecked = args.unchecked
    entries, checks = [], []
    for si, xs in enumerate(_onshell_sets(cfg, args.jobs, unchecked)):
        kappa_ref = None
        for ui, us in enumerate(_offshell_sets(cfg, rng)):
            ref = det(xs, us, model, unchecked=unchecked)
            values = {"det": ref}
            for name, m in methods:
                if name == "hny":
                    for mm in ([m] if m else range(1, n + 1)):
                        values[f"hny:{mm}"] = scalar.hny_form(xs, us, mm, model, unchecked=unchecked)
                elif name == "sum":
                    values["sum"] = scalar.scalar_sum_form(xs, us, model, unchecked=unchecked)
                elif name == "action":
                    values["action"] = scalar.extract_coefficient(xs, us, model, unchecked=unchecked)
                elif name == "oracle":
                    values["oracle"] = _inner(xs, us, model)
            tag = f"x{si} u{ui}"
            for key, val in values.items():
                if key in ("det", "oracle"):
                    continue
                checks.append(compare(f"{tag}: {key} vs det", val, ref, tol))
            if "oracle" in values:
                if model.mode == "periodic":
                    checks.append(compare(f"{tag}: oracle vs lambda_2(x) det", values["oracle"],
                                          _lambda2_product(xs, model) * ref, tol))
                else:
                    kappa = values["oracle"] / ref
                    if kappa_ref is None:
                        kappa_ref = kappa
                    else:
                        checks.append(compare(f"{tag}: oracle/det ratio vs first draw", kappa, kappa_ref, tol))
            entries.append({"x": [num(v) for v in xs], "u": [num(v) for v in us],
                            "values": {k: num(v) for k, v in values.items()}})
    return {"entries": entries, "skipped_methods": skipped}, checks


def cmd_norm(cfg, args):
    model = cfg.model
    rng = np.random.default_rng(cfg.solver.rng_seed)
    tol = 1e-6
    entries, checks = [], []
    for si, xs in enumerate(_onshell_sets(cfg, args.jobs, False)):
        norm = scalar.gaudin_norm(xs, model, rng=rng)
        entry = {"x": [num(v) for v in xs], "gaudin_norm": num(norm)}
        if _oracle_ok(model):
            self_pair = _inner(xs, xs, model)
            if model.mode == "periodic":
                kappa = _lambda2_product(xs, model)
            else:
                us = _random_set(rng, len(xs))
                kappa = _inner(xs, us, model) / scalar.reflection_det(xs, us, model)
            entry["oracle_self_pairing"] = num(self_pair)
            entry["kappa"] = num(kappa)
            checks.append(compare(f"x{si}: oracle self-pairing vs kappa * gaudin_norm", self_pair, kappa * norm, tol))
        entries.append(entry)
    return {"entries": entries}, checks


def cmd_bench(cfg, args):
    model = cfg.model if cfg.model.mode == "periodic" else cfg.model.with_mode("periodic")
    rng = np.random.default_rng(cfg.solver.rng_seed)
    repeat = cfg.task["bench_repeat"]

    def best(fn):
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    rows, checks = [], []
    for n in range(1, cfg.task["bench_max_n"] + 1):
        xs, us = _random_set(rng, n), _random_set(rng, n)
        row = {"n": n,
               "det": best(lambda: scalar.slavnov_det(xs, us, model, unchecked=True)),
               "sum": best(lambda: scalar.scalar_sum_form(xs, us, model, unchecked=True)),
               "action": best(lambda: scalar.extract_coefficient(xs, us, model, unchecked=True))}
        rows.append(row)
        if n >= 5:
            checks.append(compare(f"n={n}: det time below sum time", row["det"], row["sum"], 1.0,
                                  err=row["det"] / row["sum"]))
    return {"timings": rows, "note": "parameters are random and not on-shell; only cost is measured"}, checks


# -- verify suite -----------------------------------------------------------------

class Suite:
    def __init__(self):
        self.invariants = []

    def add(self, name, comparisons):
        comparisons = list(comparisons)
        self.invariants.append({"name": name, "pass": all(c["pass"] for c in comparisons),
                                "comparisons": comparisons})


def _verify_models(cfg, rng):
    """XXX models for the suite: the configured c and boundary, theta padded from the RNG."""
    c = cfg.model.c
    xm = cfg.model.xi_minus if cfg.model.xi_minus is not None else DEFAULT_XI[0]
    xp = cfg.model.xi_plus if cfg.model.xi_plus is not None else DEFAULT_XI[1]
    base = list(cfg.model.theta) if cfg.model.is_xxx else []
    extra = [complex(x) for x in np.round(0.6 * rng.normal(size=12), 3)]
    theta = (base + extra)

    def make(n_sites, mode):
        return ModelSpec(c=c, mode=mode, theta=tuple(theta[:n_sites]), xi_minus=xm, xi_plus=xp)

    return make


def cmd_verify(cfg, args):
    rng = np.random.default_rng(cfg.solver.rng_seed)
    make = _verify_models(cfg, rng)
    sites = cfg.task["verify_sites"]
    n_per, n_ref = cfg.task["verify_max_n_periodic"], cfg.task["verify_max_n_reflection"]
    c = cfg.model.c
    suite = Suite()

    def solver_cfg(n):
        s = cfg.solver
        return SolveConfig(n_roots=n, seeds=s.seeds, seed_box=s.seed_box, newton_tol=s.newton_tol,
                           max_iter=s.max_iter, dedup_tol=s.dedup_tol, rng_seed=s.rng_seed, separation=s.separation)

    # kernels
    cmp = []
    for _ in range(20):
        u, v = _random_set(rng, 2)
        g, f, h, _t = kernels(u, v, c)
        cmp.append(compare("f = g h", f, g * h, 1e-14))
    suite.add("kernel identity f = g h", cmp)
    g, f, h, t = kernels(3, 1, 2)
    suite.add("kernel values at u=3, v=1, c=2", [compare("g", g, 1, 1e-15), compare("f", f, 2, 1e-15),
                                                 compare("h", h, 2, 1e-15), compare("t", t, 0.5, 1e-15)])

    # algebra
    names = {"rtt": ("RTT relation", 1e-11), "reflection_minus": ("reflection equation for K-", 1e-12),
             "reflection_plus": ("reflection equation for K+", 1e-12),
             "transfer_commutator": ("periodic transfer commutativity", 1e-11),
             "reflection_transfer_commutator": ("reflection transfer commutativity", 1e-11)}
    collected = {k: [] for k in names}
    vac = []
    for draw in range(20):
        model = make(1 + draw % sites, "reflection")
        u, v = _random_set(rng, 2)
        rep = oracle.check_algebra(model, u, v)
        for key in names:
            collected[key].append(compare(f"draw {draw}", getattr(rep, key), 0.0, names[key][1]))
        vac.extend(compare(f"draw {draw}: {k}", val, 0.0, 1e-12) for k, val in sorted(rep.vacuum.items()))
    for key, (label, _) in names.items():
        suite.add(label, collected[key])
    suite.add("vacuum eigenvalues", vac)

    # single action against the literal operator
    cmp = []
    for mode in ("periodic", "reflection"):
        for n in (1, 2):
            model = make(sites, mode)
            us, (z,) = _random_set(rng, n), _random_set(rng, 1)
            cmp.append(compare(f"{mode} n={n}", scalar.action_residual(z, us, model), 0.0, 1e-10))
    suite.add("single action expansion matches the operator", cmp)

    model = make(sites, "periodic")
    us = _random_set(rng, 2)
    vec = oracle.bethe_vector(us, model)
    outside = oracle.down_spin_count(sites) != len(us)
    leak = np.linalg.norm(vec[outside]) / np.linalg.norm(vec)
    suite.add("Bethe vector lives in the n-down sector",
              [compare("weight outside sector", leak, 0.0, 1e-12)])

    # solver
    m2 = ModelSpec(c=c, mode="periodic", theta=(0.0, 0.0))
    found = solve_bethe(m2, solver_cfg(1), jobs=args.jobs)
    suite.add("N=2 homogeneous chain has the single root -c/2",
              [compare("root count", len(found), 1, 0.5), compare("root", found[0].roots[0], -c / 2, 1e-10)])

    onshell = {}
    for mode, top in (("periodic", n_per), ("reflection", n_ref)):
        for n in range(1, top + 1):
            n_sites = max(sites, 2 * n) if mode == "periodic" else sites
            model = make(n_sites, mode)
            found = solve_bethe(model, solver_cfg(n), jobs=args.jobs)
            onshell[(mode, n)] = (model, [b.roots for b in found])
            expected = len(oracle_bethe_state_count(model, n))
            cmp = [compare("root sets vs oracle count", len(found), expected, 0.5)]
            for i, b in enumerate(found):
                rep = verify_on_shell(b, model, tol=1e-9)
                cmp.append(compare(f"set {i} oracle eigenvector residual", rep.oracle_residual, 0.0, 1e-9))
                cmp.append(compare(f"set {i} relative cleared residual", rep.rel_residual, 0.0, 1e-9))
            suite.add(f"solver {mode} N={n_sites} n={n}: complete and on-shell", cmp)
    refl_roots = [r for _, sets in [onshell[("reflection", n)] for n in range(1, n_ref + 1)] for r in sets]
    cmp = []
    for i, r in enumerate(refl_roots):
        gap = min(min(abs(x), abs(x - c / 2), abs(x + c / 2)) for x in r)
        # passes when the closest root keeps a distance of at least 1e-6
        cmp.append(compare(f"set {i}: 1e-6 / distance to 0, +-c/2", 1e-6 / gap, 0.0, 1.0, err=1e-6 / gap))
    suite.add("reflection roots avoid 0 and +-c/2", cmp)

    # J-matrix forms
    cmp = []
    for n in (1, 2, 3):
        model = make(sites, "periodic")
        xs, (u,) = _random_set(rng, n), _random_set(rng, 1)
        for k in range(n):
            cmp.append(compare(f"n={n} k={k}", scalar.j_entry(u, k, xs, model),
                               scalar.j_entry_derivative(u, k, xs, model), 1e-11))
    suite.add("J entry: explicit form equals derivative form", cmp)

    # scalar products, periodic
    draws = cfg.task["offshell_draws"]
    thm2, sumjm, thm1, kap, perm = [], [], [], [], []
    for n in range(1, n_per + 1):
        model, sets = onshell[("periodic", n)]
        for si, xs in enumerate(sets[: cfg.task["max_sets"]]):
            ratios = []
            for ui in range(draws):
                us = _random_set(rng, n)
                tag = f"n={n} x{si} u{ui}"
                det = scalar.slavnov_det(xs, us, model)
                for m in range(1, n + 1):
                    thm2.append(compare(f"{tag} hny m={m}", scalar.hny_form(xs, us, m, model), det, 1e-9))
                thm2.append(compare(f"{tag} sum form", scalar.scalar_sum_form(xs, us, model), det, 1e-9))
                for m in range(1, n + 1):
                    for j in range(m):
                        lhs, rhs = scalar.sum_jm_check(m, j, us, xs, model)
                        sumjm.append(compare(f"{tag} m={m} j={j}", lhs, rhs, 1e-10))
                thm1.append(compare(f"{tag}", scalar.extract_coefficient(xs, us, model), det, 1e-8))
                ratio = _inner(xs, us, model) / det
                ratios.append(ratio)
                kap.append(compare(f"{tag} kappa = lambda_2(x)", ratio, _lambda2_product(xs, model), 1e-8))
                shuffled = tuple(us[::-1])
                perm.append(compare(f"{tag} reversed u", scalar.slavnov_det(xs, shuffled, model), det, 1e-12))
            kap.append(compare(f"n={n} x{si} kappa spread over u", max(ratios, key=lambda r: rel_err(r, ratios[0])),
                               ratios[0], 1e-8))
    suite.add("hybrid forms agree for every m and with the sum form", thm2)
    suite.add("J-sum contour identity", sumjm)
    suite.add("periodic action coefficient equals the determinant", thm1)
    suite.add("oracle normalization is lambda_2(x) and independent of u", kap)
    suite.add("determinant is invariant under permuting u", perm)

    # scalar products, reflection
    refl, rkap = [], []
    for n in range(1, n_ref + 1):
        model, sets = onshell[("reflection", n)]
        for si, xs in enumerate(sets[: cfg.task["max_sets"]]):
            ratios = []
            for ui in range(draws):
                us = _random_set(rng, n)
                det = scalar.reflection_det(xs, us, model)
                refl.append(compare(f"n={n} x{si} u{ui}", scalar.extract_coefficient(xs, us, model), det, 1e-8))
                ratios.append(_inner(xs, us, model) / det)
            rkap.append(compare(f"n={n} x{si} kappa spread over u", max(ratios, key=lambda r: rel_err(r, ratios[0])),
                                ratios[0], 1e-8))
    suite.add("reflection action coefficient equals the reflection determinant", refl)
    suite.add("reflection oracle normalization is independent of u", rkap)

    # orthogonality of distinct on-shell states
    cmp = []
    for (mode, n), (model, sets) in sorted(onshell.items()):
        for a, b in itertools.combinations(range(len(sets)), 2):
            dual, vec = oracle.dual_bethe_vector(sets[a], model), oracle.bethe_vector(sets[b], model)
            val = abs(oracle.inner_product(dual, vec)) / (np.linalg.norm(dual) * np.linalg.norm(vec))
            cmp.append(compare(f"{mode} n={n} sets {a},{b}", val, 0.0, 1e-9))
    suite.add("distinct on-shell states are orthogonal", cmp)

    # norms
    cmp = []
    for mode in ("periodic", "reflection"):
        for n in (1, 2):
            model, sets = onshell[(mode, n)]
            for si, xs in enumerate(sets[:2]):
                norm = scalar.gaudin_norm(xs, model, rng=rng)
                if mode == "periodic":
                    kappa = _lambda2_product(xs, model)
                else:
                    us = _random_set(rng, n)
                    kappa = _inner(xs, us, model) / scalar.reflection_det(xs, us, model)
                cmp.append(compare(f"{mode} n={n} x{si}", _inner(xs, xs, model), kappa * norm, 1e-6))
    suite.add("Gaudin limit matches the oracle self-pairing", cmp)

    # empty sets
    model = make(sites, "periodic")
    suite.add("empty sets", [compare("slavnov_det", scalar.slavnov_det((), (), model), 1, 1e-15),
                             compare("gaudin_norm", scalar.gaudin_norm((), model), 1, 1e-15),
                             compare("residual size", bethe_residual((), model).size, 0, 0.5)])
    return {}, suite.invariants


# -- entry point ------------------------------------------------------------------

def _setup_logging():
    level = os.environ.get("BETHE_LOG", "error").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _error_report(command, exc):
    err = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "column", "key"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    return {"command": command, "status": "error", "error": err}


def _emit(report, fmt, path):
    text = _table(report) if fmt == "table" and report.get("status") != "error" else dumps(report) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser():
    p = argparse.ArgumentParser(prog="bethe", description="Bethe vectors, scalar products and their checks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI configuration (default: the packaged default.ini)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the solver")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--methods", help="comma list from det, hny[:m], sum, action, oracle")
    p.add_argument("--unchecked", action="store_true", help="skip the on-shell check of task.x")
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.methods:
            _methods(args.methods)
        if args.jobs < 1:
            raise ValidationError("--jobs must be positive", key="jobs")
    except (BetheError, OSError) as exc:
        _emit(_error_report(args.command, exc), "json", args.output)
        return 2
    handler = {"solve": cmd_solve, "scalar": cmd_scalar, "norm": cmd_norm,
               "verify": cmd_verify, "bench": cmd_bench}[args.command]
    try:
        results, checks = handler(cfg, args)
    except (BetheError, ValueError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        log.debug("command failed", exc_info=True)
        _emit(_error_report(args.command, exc), "json", args.output or cfg.output.get("path"))
        return 2 if isinstance(exc, ValidationError) else 3
    report = {"command": args.command, "config": cfg.resolved()}
    if args.command == "verify":
        report["invariants"] = checks
    else:
        report["checks"] = checks
    report["results"] = results
    flat = _all_checks(report)
    ok = all(c["pass"] for c in flat)
    report["status"] = "pass" if ok else "fail"
    report["summary"] = {"checks": len(flat), "failed": sum(not c["pass"] for c in flat)}
    if args.command == "verify":
        report["summary"]["invariants"] = len(checks)
    _emit(report, cfg.output["format"], args.output or cfg.output.get("path"))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
