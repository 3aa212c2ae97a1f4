"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``), runs one suite
of checks or computations and writes ``<command>.json`` (plus
``<command>.csv`` for series) into ``--out``. Without ``--out`` the JSON
report goes to stdout.

Exit codes: 0 success, 1 an asserted contract failed, 2 bad configuration,
3 a budget was exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, _accel
from .errors import BudgetExceeded, ConfigError, ContractViolation, ParameterError
from .expsums import (
    DEFAULT_BUDGET,
    ExpSumContext,
    LatticeCountSpec,
    WeylInput,
    block_reconstruction,
    lattice_count_M,
    rational_approx_from_gamma,
    rational_scan,
    shrink_ratio,
    weyl_chain_check,
)
from .forms import (
    IntegerForm,
    IntegerPolynomial,
    bihomogenize,
    diagonal_coefficients,
    diagonal_form,
    multilinear_tensor,
    parse_polynomial_text,
    polynomial_from_json,
    standard_quadric,
)
from .lfunctions import bundled_zeta_zeros, explicit_formula_residual, load_zeros
from .majorarcs import ArcParameters, build_arcs, local_density_identity, predict_main_term
from .minorarc_params import C0, caseI_parameters, codim_bound, derive_parameters
from .oracle import brute_count, codim_probe, diagonal_fast_count
from .weights import WeightFamily, make_bump

CONFIG_VERSION = 1
EXIT_OK, EXIT_CONTRACT, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3

_POS = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["version"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "form": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 2,
            "properties": {
                "preset": {"enum": ["standard_quadric"]},
                "diagonal": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                "degree": _POS_INT,
                "text": {"type": "string"},
                "json": {"type": "object"},
                "file": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "weights": {
            "type": "object",
            "required": ["delta", "x0"],
            "properties": {
                "delta": _POS,
                "x0": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "M0": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "X": {"type": "array", "items": _POS, "minItems": 1},
        "arcs": {
            "oneOf": [
                {"const": "derive"},
                {
                    "type": "object",
                    "required": ["theta0", "lam", "gamma"],
                    "properties": {"theta0": _POS, "lam": _POS, "gamma": _POS},
                    "additionalProperties": False,
                },
            ]
        },
        "Q": _POS_INT,
        "T_cutoff": _POS,
        "budgets": {
            "type": "object",
            "properties": {"terms": _POS_INT, "quad_nodes": _POS_INT},
            "additionalProperties": False,
        },
        "zeros": {"type": "string"},
        "output": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "count": {"type": "object", "properties": {"method": {"enum": ["auto", "brute", "fast"]},
                                                    "star": {"type": "boolean"}}},
        "compare": {"type": "object", "properties": {"max_rel_error": _POS}},
        "scan": {"type": "object", "properties": {"Q": _POS_INT, "star": {"type": "boolean"},
                                                   "peaks": _POS_INT}},
        "dyadic": {"type": "object", "properties": {"alphas": _POS_INT, "Theta": _POS, "tol": _POS}},
        "weyl": {"type": "object", "properties": {"instances": _POS_INT, "h": _POS_INT, "B": _POS_INT,
                                                   "t": _POS_INT, "form": {"type": "object"}}},
        "lattice": {"type": "object", "properties": {
            "alpha": {"type": ["string", "number"]}, "U_prime": {"type": "number", "minimum": 0},
            "V_prime": {"type": "number", "minimum": 0}, "P": _POS}},
        "shrink": {"type": "object", "properties": {
            "h": {"type": "array", "items": _POS_INT}, "matrices": _POS_INT,
            "pairs": {"type": "array", "items": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2}},
            "coeff_range": _POS, "gamma_max": {"type": "number", "exclusiveMinimum": 1}}},
        "local": {"type": "object", "properties": {"primes": {"type": "array", "items": _POS_INT},
                                                    "k": _POS_INT, "tol": _POS}},
        "explicit": {"type": "object", "properties": {"Y": {"type": "array", "items": _POS},
                                                       "max_ratio": _POS}},
        "params": {"type": "object", "properties": {"d": {"type": "integer", "minimum": 2},
                                                     "codim": _POS_INT, "kappa0": _POS, "eps": _POS}},
        "probe": {"type": "object", "properties": {"primes": {"type": "array", "items": _POS_INT},
                                                    "mode": {"enum": ["exhaustive", "sampled"]},
                                                    "samples": _POS_INT}},
    },
}

DEFAULTS = {
    "version": CONFIG_VERSION,
    "form": {"preset": "standard_quadric"},
    "weights": {"delta": 0.08, "x0": [0.3, 0.4, 0.4, 0.3], "M0": 4},
    "X": [500, 1000, 2000, 4000],
    "Q": 256,
    "T_cutoff": 64.0,
    "seed": 0,
}


# ------------------------------------------------------------ config

def load_config(path: str | None) -> dict:
    """Read, validate and complete a config (defaults fill missing top-level keys)."""
    raw: dict = {"version": CONFIG_VERSION}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    cfg = {**DEFAULTS, **raw}
    xs = cfg["X"]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ConfigError("X must be strictly ascending")
    return cfg


def build_form(spec: dict, base: Path | None = None) -> IntegerForm:
    try:
        if "preset" in spec:
            return standard_quadric()
        if "diagonal" in spec:
            return diagonal_form(spec["diagonal"], spec.get("degree", 2))
        if "text" in spec:
            poly = parse_polynomial_text(spec["text"])
        elif "json" in spec:
            poly = polynomial_from_json(spec["json"])
        else:
            path = Path(spec["file"])
            if base is not None and not path.is_absolute():
                path = base / path
            text = path.read_text()
            poly = polynomial_from_json(text) if text.lstrip().startswith("{") else parse_polynomial_text(text)
        return IntegerForm(poly)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad form: {exc}") from None


def build_family(cfg: dict, X: float, n: int) -> WeightFamily:
    w = cfg["weights"]
    if len(w["x0"]) != n:
        raise ConfigError(f"weights.x0 has {len(w['x0'])} entries, the form has {n} variables")
    try:
        return WeightFamily(X, tuple(w["x0"]), make_bump(w["delta"], w.get("M0", 4)))
    except ValueError as exc:
        raise ConfigError(f"bad weights: {exc}") from None


# ------------------------------------------------------------ output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def csv_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def emit(name: str, report: dict, rows: list[dict] | None, out: str | None) -> None:
    if out is None:
        sys.stdout.write(dumps(report))
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{name}.json").write_text(dumps(report))
    if rows:
        (d / f"{name}.csv").write_text(csv_text(rows))


# ------------------------------------------------------------ commands

def _ctx(cfg: dict, X: float, budget: int) -> ExpSumContext:
    form = cfg["_form"]
    return ExpSumContext(form, build_family(cfg, X, form.n), budget=budget)


def _count_one(cfg: dict, X: float, budget: int):
    opts = cfg.get("count", {})
    method, star = opts.get("method", "auto"), opts.get("star", False)
    form = cfg["_form"]
    fam = build_family(cfg, X, form.n)
    if method == "fast" or (method == "auto" and diagonal_coefficients(form) is not None):
        return diagonal_fast_count(form, fam, star=star, budget=budget)
    return brute_count(form, fam, star=star, budget=budget)


def cmd_count(cfg, args):
    rows = [_count_one(cfg, X, args.budget).to_dict(include_time=False) for X in cfg["X"]]
    return {"command": "count", "rows": rows}, rows, True


def _predict_rows(cfg, args, with_oracle: bool):
    form = cfg["_form"]
    rows, arcs = [], []
    for X in cfg["X"]:
        fam = build_family(cfg, X, form.n)
        oracle = _count_one(cfg, X, args.budget).weighted if with_oracle else None
        rep = predict_main_term(form, fam, Q=cfg["Q"], T_cutoff=cfg["T_cutoff"], oracle_count=oracle,
                                budget=args.budget)
        row = {"X": X, "series_partial": rep.series_partial, "integral_J": rep.integral_J, "c": rep.c,
               "predicted": rep.predicted, "J_tail": rep.J_tail}
        if with_oracle:
            row.update(oracle_count=rep.oracle_count, rel_error=rep.rel_error)
        rows.append(row)
        if "arcs" in cfg:
            arcs.append({"X": X, **_arc_report(cfg, X, form.d)})
    return rows, arcs


def _arc_report(cfg: dict, X: float, d: int) -> dict:
    spec = cfg["arcs"]
    if spec == "derive":
        p = derive_parameters(d, codim_bound(d))
        theta0, lam, gamma = float(p.theta0), float(p.lam), float(p.gamma)
    else:
        theta0, lam, gamma = spec["theta0"], spec["lam"], spec["gamma"]
    params = ArcParameters(theta0, lam, gamma, X, d)
    if params.M**2 > 1e7:
        raise BudgetExceeded(f"arc list with q <= {params.M:.3g} is too long")
    _, rep = build_arcs(params)
    return {"theta0": theta0, "lam": lam, "gamma": gamma, **rep}


def cmd_predict(cfg, args):
    rows, arcs = _predict_rows(cfg, args, with_oracle=False)
    return {"command": "predict", "Q": cfg["Q"], "T_cutoff": cfg["T_cutoff"], "rows": rows, "arcs": arcs}, rows, True


def cmd_compare(cfg, args):
    rows, arcs = _predict_rows(cfg, args, with_oracle=True)
    errs = [r["rel_error"] for r in rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    report = {"command": "compare", "Q": cfg["Q"], "T_cutoff": cfg["T_cutoff"], "rows": rows, "arcs": arcs,
              "rel_error_decreasing": decreasing}
    limit = cfg.get("compare", {}).get("max_rel_error")
    ok = True
    if limit is not None:
        ok = decreasing and errs[-1] <= limit
        report["max_rel_error"] = limit
    report["passed"] = ok
    return report, rows, ok


def _nearest_rational(alpha: float, qmax: int) -> tuple[int, int]:
    f = Fraction(alpha).limit_denominator(qmax)
    return f.numerator, f.denominator


def cmd_expsum_scan(cfg, args):
    opts = cfg.get("scan", {})
    Q, star, peaks = opts.get("Q", 1000), opts.get("star", False), opts.get("peaks", 10)
    X = cfg["X"][0]
    ctx = _ctx(cfg, X, args.budget)
    vals = rational_scan(ctx, Q, star=star)
    mags = np.abs(vals)
    top = set(np.argsort(-mags, kind="stable")[:peaks].tolist())
    rows = []
    for j in range(Q):
        a, q = _nearest_rational(j / Q, 12)
        rows.append({"alpha": j / Q, "re": float(vals[j].real), "im": float(vals[j].imag),
                     "abs": float(mags[j]), "j": j, "peak": int(j in top), "near_q": q if abs(a / q - j / Q) < 1 / Q else 0})
    peak_rows = sorted((r for r in rows if r["peak"]), key=lambda r: -r["abs"])
    report = {"command": "expsum-scan", "X": X, "Q": Q, "star": star,
              "peaks": [{"alpha": r["alpha"], "abs": r["abs"], "near_q": r["near_q"]} for r in peak_rows]}
    return report, rows, True


def cmd_dyadic_verify(cfg, args):
    from .weights import DyadicScheme

    opts = cfg.get("dyadic", {})
    tol = opts.get("tol", 1e-6)
    scheme = DyadicScheme(opts.get("Theta", 2.0))
    rng = np.random.default_rng(args.seed)
    rows = []
    for X in cfg["X"]:
        ctx = _ctx(cfg, X, args.budget)
        for alpha in rng.random(opts.get("alphas", 3)):
            rep = block_reconstruction(ctx, float(alpha), scheme)
            rows.append({"X": X, "alpha": float(alpha), "blocks": rep["blocks"], "abs_S": abs(rep["S"]),
                         "rel_error": rep["rel_error"]})
    ok = all(r["rel_error"] <= tol for r in rows)
    return {"command": "dyadic-verify", "tol": tol, "rows": rows, "passed": ok}, rows, ok


def _random_quadratic(rng, h: int) -> IntegerPolynomial:
    terms = []
    for i in range(h):
        for j in range(i, h):
            e = [0] * h
            e[i] += 1
            e[j] += 1
            terms.append((tuple(e), int(rng.integers(-3, 4))))
    return IntegerPolynomial(h, terms)


def cmd_weyl_verify(cfg, args):
    opts = cfg.get("weyl", {})
    h, B, t = opts.get("h", 2), opts.get("B", 4), opts.get("t", 2)
    rng = np.random.default_rng(args.seed)
    fixed = IntegerForm(polynomial_from_json(opts["form"])) if "form" in opts else None
    rows = []
    for k in range(opts.get("instances", 10)):
        phase = fixed.base if fixed is not None else _random_quadratic(rng, h)
        weights = rng.uniform(-1, 1, size=(B + 1,) * phase.n)
        alpha = float(rng.random())
        lhs, rhs = weyl_chain_check(WeylInput(phase, weights, alpha), t, budget=args.budget)
        rows.append({"instance": k, "alpha": alpha, "t": t, "lhs": lhs, "rhs": rhs,
                     "holds": int(lhs <= rhs * (1 + 1e-12))})
    ok = all(r["holds"] for r in rows)
    return {"command": "weyl-verify", "h": h, "B": B, "t": t, "rows": rows, "passed": ok}, rows, ok


def _parse_alpha(value) -> Fraction | float:
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            raise ConfigError(f"cannot parse alpha {value!r}") from None
    return float(value)


def cmd_lattice_count(cfg, args):
    opts = cfg.get("lattice", {})
    alpha = _parse_alpha(opts.get("alpha", "1/4"))
    tensor = multilinear_tensor(bihomogenize(cfg["_form"]))
    spec = LatticeCountSpec(tensor, alpha, opts.get("U_prime", 1), opts.get("V_prime", 1), opts.get("P", 0.1))
    count = lattice_count_M(spec, budget=args.budget)
    approx = rational_approx_from_gamma(spec, budget=args.budget)
    report = {"command": "lattice-count", "alpha": float(alpha), "h": tensor.h, "d": tensor.d,
              "U_prime": spec.U_prime, "V_prime": spec.V_prime, "P": spec.P, "count": count,
              "rational_approx": None if approx is None else {"q": approx[0], "a": approx[1],
                                                               "gap": float(approx[2])}}
    return report, None, True


def cmd_shrink_ratio(cfg, args):
    """Ratios over random real symmetric ``c`` with ``gamma_i > 1`` and ``0 < Z1 <= Z2 <= 1``."""
    opts = cfg.get("shrink", {})
    hs = opts.get("h", [1, 2])
    pairs = opts.get("pairs", [[1 / 8, 1 / 4], [1 / 8, 1], [1 / 4, 1 / 2], [1 / 2, 1], [1 / 6, 1 / 2]])
    for Z1, Z2 in pairs:
        if not 0 < Z1 <= Z2 <= 1:
            raise ConfigError(f"shrink pairs need 0 < Z1 <= Z2 <= 1, got {[Z1, Z2]}")
    cr = opts.get("coeff_range", 5)
    rng = np.random.default_rng(args.seed)
    rows = []
    for h in hs:
        for m in range(opts.get("matrices", 5)):
            a = rng.uniform(-cr, cr, size=(h, h))
            c = (a + a.T) / 2
            gammas = rng.uniform(1.0, opts.get("gamma_max", 40.0), size=h)
            for Z1, Z2 in pairs:
                rep = shrink_ratio(c, gammas, Z1, Z2)
                rows.append({"h": h, "matrix": m, "Z1": Z1, "Z2": Z2, "Y1": rep["Y1"], "Y2": rep["Y2"],
                             "ratio": rep["ratio"], "normalised": rep["normalised"]})
    worst = {h: max(r["normalised"] for r in rows if r["h"] == h) for h in hs}
    return {"command": "shrink-ratio", "worst_normalised": worst, "rows": rows}, rows, True


def cmd_local_densities(cfg, args):
    opts = cfg.get("local", {})
    tol = opts.get("tol", 1e-8)
    form = cfg["_form"]
    rows = []
    for p in opts.get("primes", [2, 3, 5]):
        for k in range(1, opts.get("k", 2) + 1):
            rep = local_density_identity(form, p, k, budget=args.budget)
            rows.append({"p": p, "k": k, "lhs": rep["lhs"], "rhs": rep["rhs"], "rel_error": rep["rel_error"]})
    ok = all(r["rel_error"] <= tol for r in rows)
    return {"command": "local-densities", "tol": tol, "rows": rows, "passed": ok}, rows, ok


def cmd_explicit_formula(cfg, args):
    opts = cfg.get("explicit", {})
    ds = load_zeros(cfg["zeros"]) if "zeros" in cfg else bundled_zeta_zeros()
    if ds.modulus != 1:
        raise ConfigError("only the trivial character (modulus 1) is supported from the CLI")
    limit = opts.get("max_ratio", 5.0)
    rows = [explicit_formula_residual(Y, None, ds).to_dict() for Y in opts.get("Y", [1e3, 1e4, 1e5])]
    ok = all(r["ratio"] <= limit for r in rows)
    report = {"command": "explicit-formula", "zeros": len(ds), "T_prime": ds.T_prime, "max_ratio": limit,
              "rows": rows, "passed": ok}
    return report, rows, ok


def cmd_params(cfg, args):
    opts = cfg.get("params", {})
    d = args.d if args.d is not None else opts.get("d", 2)
    codim = args.codim if args.codim is not None else opts.get("codim", codim_bound(d))
    p = derive_parameters(d, codim, kappa0=opts.get("kappa0", 1e-3), eps=opts.get("eps"))
    report = {"command": "params", "codim_bound": codim_bound(d), "C0": C0(d), "derived": p.to_dict(),
              "case_I": caseI_parameters(d, float(p.theta0))}
    return report, None, True


def cmd_probe_codim(cfg, args):
    opts = cfg.get("probe", {})
    probe = codim_probe(cfg["_form"], primes=tuple(opts.get("primes", [5, 7])),
                        mode=opts.get("mode", "exhaustive"), samples=opts.get("samples", 200_000),
                        seed=args.seed, budget=args.budget)
    return {"command": "probe-codim", **probe.to_dict()}, None, True


COMMANDS = {
    "count": (cmd_count, "weighted prime-point counts for every X"),
    "predict": (cmd_predict, "main-term prediction S(Q) J(T) X^(n-d)"),
    "compare": (cmd_compare, "prediction against exact counts, rel_error vs X"),
    "expsum-scan": (cmd_expsum_scan, "|S(j/Q)| over a rational grid"),
    "dyadic-verify": (cmd_dyadic_verify, "sum of dyadic blocks against S(alpha)"),
    "weyl-verify": (cmd_weyl_verify, "both sides of the weighted Weyl differencing inequality"),
    "lattice-count": (cmd_lattice_count, "small-fractional-part lattice count"),
    "shrink-ratio": (cmd_shrink_ratio, "lattice counts in scaled boxes"),
    "local-densities": (cmd_local_densities, "complete sums against local zero counts"),
    "explicit-formula": (cmd_explicit_formula, "prime sum against the zero sum"),
    "params": (cmd_params, "derived exponent constants"),
    "probe-codim": (cmd_probe_codim, "finite-field estimate of the singular-locus codimension"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output directory (default: JSON report on stdout)")
    common.add_argument("--threads", type=int, default=0, help="numba worker threads")
    common.add_argument("--budget-terms", dest="budget", type=int, default=None,
                        help=f"largest enumeration size (default {DEFAULT_BUDGET})")
    common.add_argument("--seed", type=int, default=None, help="seed for random instances and sampled probes")
    parser = argparse.ArgumentParser(prog="primepoints", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == "params":
            p.add_argument("--d", type=int, default=None)
            p.add_argument("--codim", type=int, default=None)
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        base = Path(args.config).parent if args.config else None
        cfg["_form"] = build_form(cfg["form"], base)
        budget = cfg.get("budgets", {}).get("terms", DEFAULT_BUDGET)
        args.budget = args.budget if args.budget is not None else budget
        if args.budget < 1:
            raise ConfigError("--budget-terms must be positive")
        args.seed = args.seed if args.seed is not None else cfg["seed"]
        if args.threads:
            _accel.set_threads(args.threads)
        fn = COMMANDS[args.command][0]
        report, rows, ok = fn(cfg, args)
        report["backend"] = _accel.backend()
        report["config_version"] = CONFIG_VERSION
        emit(args.command, report, rows, args.out or cfg.get("output"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ContractViolation, ParameterError) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    if not ok:
        print(f"{args.command}: asserted check failed", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


def main() -> None:
    sys.exit(run())
