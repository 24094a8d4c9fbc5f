"""Command-line front end: ``configfree <command> --system FILE ...``.

Exit codes: 0 ok, 2 configuration error, 3 budget exceeded, 4 precondition
violated.  JSON payloads carry a ``schema`` field; CSV payloads are plain.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, ConfigError, PreconditionError
from .system import DEFAULT_BUDGET

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_PRECONDITION = 0, 2, 3, 4


@dataclass
class ExperimentConfig:
    command: str
    system: dict = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    budget: int = DEFAULT_BUDGET
    budget_nodes: int = 5 * 10**6
    out: str = None
    fmt: str = "json"


# ---------------------------------------------------------------------------
# serialization

def jsonable(x):
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x) or math.isnan(x):
            return repr(x)
        return x
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    return x


def dump_json(command, payload):
    doc = {"schema": f"configfree.{command}/{SCHEMA_VERSION}"}
    doc.update(jsonable(payload))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "NA"
    return v


# ---------------------------------------------------------------------------
# helpers

def _read_json_arg(value, what):
    from .config import load_json_file, parse_json

    if value is None:
        raise ConfigError(f"missing {what}")
    v = value.strip()
    if v.startswith("{") or v.startswith("["):
        return parse_json(v, what)
    return load_json_file(value)


def _load_system(cfg):
    from .config import system_from_descriptor

    if cfg.system is None:
        raise ConfigError("--system is required for this command")
    return system_from_descriptor(cfg.system, budget=cfg.budget)


def _fraction(s):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {s!r}") from None


def _human_table(pairs):
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in pairs) + "\n"


# ---------------------------------------------------------------------------
# commands; each returns (json_payload, csv_text_or_None)

def cmd_describe(cfg):
    from .system import is_invariant, partition_by_distinctness, rho_uniformity

    if "grid" in cfg.params:
        return _describe_grid(cfg)
    S, inst = _load_system(cfg)
    part = partition_by_distinctness(S).sizes() if S.size else {}
    rho = None
    if S.ambient.is_group and S.size_k:
        rho = rho_uniformity(S).rho
    out = {
        "ambient": S.ambient.descriptor(),
        "order": S.ambient.order,
        "degree": S.k,
        "size": S.size,
        "size_k": S.size_k,
        "partition": {str(j): part.get(j, 0) for j in range(1, S.k + 1)},
        "invariant": is_invariant(S) if S.ambient.is_group and S.size else False,
        "rho": rho,
    }
    if inst is not None:
        out["family"] = {"name": inst.name, "params": inst.params, "expected": inst.expected,
                         "metadata": inst.metadata}
    human = _human_table([("|G|", S.ambient.order), ("k", S.k), ("|S|", S.size),
                          ("|S^(k)|", S.size_k), ("invariant", out["invariant"]),
                          ("rho", rho if rho is None else str(rho))])
    sys.stderr.write(human)
    rows = [(key, val) for key, val in (("order", S.ambient.order), ("degree", S.k),
                                        ("size", S.size), ("size_k", S.size_k),
                                        ("invariant", int(out["invariant"])), ("rho", rho))]
    return out, rows_csv(["field", "value"], rows)


def _describe_grid(cfg):
    from .families import build_family
    from .system import normality_report

    fam = cfg.system.get("family") if isinstance(cfg.system, dict) else None
    if fam is None:
        raise ConfigError("a normality sweep needs a family descriptor", pointer="/family")
    key, values = _single_grid(cfg.params["grid"])
    base = dict(cfg.system.get("params", {}))
    systems = []
    for v in values:
        base[key] = v
        systems.append(build_family(fam, dict(base), cfg.budget).system)
    rep = normality_report(systems)
    rows = [(r["order"], r["size"], r["g_over_s"], r["gk_over_s"], r["sk_over_s"])
            for r in rep["rows"]]
    return rep, rows_csv(["order", "size", "g_over_s", "gk_over_s", "sk_over_s"], rows)


def cmd_alphas(cfg):
    from .system import freedom_table

    S, _ = _load_system(cfg)
    t = freedom_table(S)
    rows = [(l + 1, a, b) for l, (a, b) in enumerate(zip(t.alpha, t.alpha_k))]
    return t.to_dict(), rows_csv(["ell", "alpha", "alpha_k"], rows)


def cmd_ma(cfg):
    from .linear import compute_m_A

    A = _read_json_arg(cfg.params.get("matrix"), "matrix")
    s = compute_m_A(A)
    return s.to_dict(), rows_csv(["m_A", "threshold"], [(s.m_A, s.threshold)])


def cmd_count(cfg):
    from .counting import bound_csv, bound_report, free_set_counts, build_hypergraph
    from .system import freedom_table

    S, _ = _load_system(cfg)
    n = S.ambient.order
    p = cfg.params
    if p.get("t") is not None:
        ts = [int(p["t"])]
    elif p.get("t_range"):
        lo, _, hi = p["t_range"].partition(":")
        ts = list(range(int(lo), int(hi) + 1))
    else:
        ts = list(range(n + 1))
    counts = None
    if not p.get("no_oracle"):
        counts = free_set_counts(build_hypergraph(S), cfg.budget_nodes)
    table = freedom_table(S) if S.size_k else None
    beta = p.get("beta") or Fraction(1, 10)
    reps = [bound_report(S, t, beta=beta, C=float(p.get("C") or 1),
                         oracle=counts[t] if counts else None, table=table) for t in ts]
    return {"reports": [r.to_dict() for r in reps]}, bound_csv(reps)


def cmd_threshold(cfg):
    from .random_sparse import threshold_formulas

    S, _ = _load_system(cfg)
    f = threshold_formulas(S, restricted=not cfg.params.get("unrestricted"))
    d = f.to_dict()
    return d, rows_csv(list(d), [[_cell(v) if not isinstance(v, list) else " ".join(map(str, v))
                                  for v in d.values()]])


def _p_grid(cfg, S):
    from .random_sparse import threshold_formulas

    p = cfg.params
    if p.get("p_grid") is not None:
        return [float(v) for v in p["p_grid"]]
    spec = p.get("p_spec")
    if spec is None:
        raise ConfigError("give p_grid or p_spec", pointer="/p_grid")
    src = spec.get("exponent_source", "one")
    if src not in ("one", "zero", "small"):
        raise ConfigError("exponent_source must be one, zero or small", pointer="/p_spec/exponent_source")
    base = threshold_formulas(S).get(src)
    cs = spec.get("c")
    cs = cs if isinstance(cs, list) else [cs]
    return [min(1.0, float(c) * base) for c in cs]


def cmd_montecarlo(cfg):
    from .random_sparse import montecarlo_stability

    S, _ = _load_system(cfg)
    p = cfg.params
    grid = _p_grid(cfg, S)
    delta = _fraction(str(p.get("delta", "1/2")))
    trials = int(p.get("trials", 100))
    rep = montecarlo_stability(S, delta, grid, trials, cfg.seed, mode=p.get("mode", "exact"),
                               workers=cfg.workers, budget_nodes=cfg.budget_nodes)
    return rep.to_dict(), rep.csv()


def cmd_concentration(cfg):
    from .random_sparse import concentration_check

    S, _ = _load_system(cfg)
    p = cfg.params
    U = tuple(int(u) for u in str(p.get("U", "0,1")).split(","))
    if any(not 0 <= u < S.k for u in U) or len(set(U)) != len(U):
        raise ConfigError(f"U must be distinct coordinates in [0, {S.k})", pointer="/U")
    r = concentration_check(S, U, float(p.get("p", 0.5)), int(p.get("trials", 100)), cfg.seed)
    d = dict(r.__dict__)
    row = [" ".join(map(str, r.U)), r.p, r.trials, r.image_size, r.expectation, r.mean, r.variance,
           r.rel_dev_quantiles["0.1"], r.rel_dev_quantiles["0.5"], r.rel_dev_quantiles["0.9"]]
    head = ["U", "p", "trials", "image_size", "expectation", "mean", "variance",
            "rel_dev_q10", "rel_dev_q50", "rel_dev_q90"]
    return d, rows_csv(head, [row])


def _single_grid(grid):
    if not isinstance(grid, dict):
        raise ConfigError("grid must map one parameter to a list", pointer="/grid")
    lists = [(k, v) for k, v in grid.items() if isinstance(v, list)]
    if len(lists) != 1:
        raise ConfigError("grid must vary exactly one parameter", pointer="/grid")
    return lists[0]


SWEEP_METRICS = ("t_lo", "p_one", "p_zero", "p_small", "size", "size_k")


def sweep(family, base_params, key, values, metric, delta=Fraction(1, 40), C=1, x="param",
          budget=DEFAULT_BUDGET):
    """Build one instance per value and regress ``log metric`` on ``log x``.

    ``x`` is ``"param"`` (the varied value) or ``"order"`` (``|G|``).
    """
    from scipy import stats

    from .counting import t_range
    from .families import build_family
    from .random_sparse import threshold_formulas

    if metric not in SWEEP_METRICS:
        raise ConfigError(f"metric must be one of {SWEEP_METRICS}", pointer="/metric")
    if len(values) < 3:
        raise ConfigError("need >= 3 points for regression", pointer="/grid")
    rows = []
    for v in values:
        inst = build_family(family, dict(base_params, **{key: v}), budget)
        S = inst.system
        if metric == "t_lo":
            y = t_range(S, delta, C).t_lo
        elif metric in ("p_one", "p_zero", "p_small"):
            y = threshold_formulas(S).get(metric[2:])
        else:
            y = getattr(S, metric)
        xv = S.ambient.order if x == "order" else v
        rows.append({"value": v, "x": xv, "y": y, "expected": inst.expected})
    xs = np.log([float(r["x"]) for r in rows])
    ys = np.log([float(r["y"]) for r in rows])
    fit = stats.linregress(xs, ys)
    tq = stats.t.ppf(0.975, len(rows) - 2)
    half = float(tq * fit.stderr) if len(rows) > 2 else math.inf
    return {
        "family": family, "param": key, "metric": metric, "x": x, "points": rows,
        "slope": float(fit.slope), "intercept": float(fit.intercept),
        "stderr": float(fit.stderr), "ci95": [float(fit.slope) - half, float(fit.slope) + half],
    }


def cmd_sweep(cfg):
    p = cfg.params
    fam = p.get("family")
    if fam is None:
        raise ConfigError("--family is required", pointer="/family")
    grid = _read_json_arg(p.get("grid"), "grid")
    key, values = _single_grid(grid)
    base = {k: v for k, v in grid.items() if k != key}
    if p.get("params"):
        base.update(_read_json_arg(p["params"], "params"))
    res = sweep(fam, base, key, values, p.get("metric", "t_lo"),
                _fraction(str(p.get("delta", "1/40"))), float(p.get("C") or 1), p.get("x", "param"), cfg.budget)
    rows = [(r["value"], r["x"], r["y"]) for r in res["points"]]
    text = rows_csv(["value", "x", "y"], rows)
    text += f"# slope={res['slope']!r} ci95={res['ci95'][0]!r}:{res['ci95'][1]!r}\n"
    return res, text


COMMANDS = {
    "describe": cmd_describe,
    "alphas": cmd_alphas,
    "ma": cmd_ma,
    "count": cmd_count,
    "threshold": cmd_threshold,
    "montecarlo": cmd_montecarlo,
    "concentration": cmd_concentration,
    "sweep": cmd_sweep,
}
CSV_DEFAULT = {"count", "montecarlo", "concentration"}


# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="system descriptor: JSON file or inline JSON")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--budget-nodes", type=int, default=5 * 10**6)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max tuples enumerated")
    common.add_argument("--out", help="directory to also write the payload into")
    common.add_argument("--format", choices=("json", "csv"))

    ap = argparse.ArgumentParser(prog="configfree", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("describe", parents=[common], help="system summary")
    p.add_argument("--grid", help="normality sweep over one family parameter, as JSON")
    sub.add_parser("alphas", parents=[common], help="degrees of freedom")
    p = sub.add_parser("ma", parents=[common], help="m_A of an integer matrix")
    p.add_argument("matrix", help="JSON matrix, inline or file")
    p = sub.add_parser("count", parents=[common], help="free-set counts and bounds")
    p.add_argument("--t", type=int)
    p.add_argument("--t-range", help="LO:HI")
    p.add_argument("--beta", type=_fraction)
    p.add_argument("--C", type=float)
    p.add_argument("--no-oracle", action="store_true")
    p = sub.add_parser("threshold", parents=[common], help="threshold formulas")
    p.add_argument("--unrestricted", action="store_true", help="use S instead of S^(k)")
    p = sub.add_parser("montecarlo", parents=[common], help="stability Monte Carlo")
    p.add_argument("--experiment", help="experiment descriptor JSON")
    p.add_argument("--delta")
    p.add_argument("--p-grid", help="comma-separated probabilities")
    p.add_argument("--c", help="comma-separated multipliers of a formula threshold")
    p.add_argument("--exponent-source", choices=("one", "zero", "small"), default="one")
    p.add_argument("--trials", type=int)
    p.add_argument("--mode", choices=("exact", "heuristic"))
    p = sub.add_parser("concentration", parents=[common], help="projection concentration")
    p.add_argument("--U", default="0,1")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=100)
    p = sub.add_parser("sweep", parents=[common], help="family sweep with log-log regression")
    p.add_argument("--family")
    p.add_argument("--grid", help='JSON such as {"n": [8, 16, 32]}')
    p.add_argument("--params", help="fixed family parameters as JSON")
    p.add_argument("--metric", choices=SWEEP_METRICS, default="t_lo")
    p.add_argument("--x", choices=("param", "order"), default="param")
    p.add_argument("--delta", default="1/40")
    p.add_argument("--C", type=float)
    return ap


def config_from_args(args):
    cfg = ExperimentConfig(command=args.command, seed=args.seed, workers=args.workers,
                           budget=args.budget, budget_nodes=args.budget_nodes, out=args.out,
                           fmt=args.format or ("csv" if args.command in CSV_DEFAULT else "json"))
    skip = {"command", "system", "seed", "workers", "budget", "budget_nodes", "out", "format",
            "experiment"}
    cfg.params = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if getattr(args, "experiment", None):
        exp = _read_json_arg(args.experiment, "experiment")
        if not isinstance(exp, dict):
            raise ConfigError("experiment descriptor must be an object", pointer="")
        cfg.system = exp.get("system")
        if "seed" in exp:
            cfg.seed = int(exp["seed"])
        for key in ("delta", "p_grid", "p_spec", "trials", "mode"):
            if key in exp:
                cfg.params[key] = exp[key]
    if args.system:
        cfg.system = _read_json_arg(args.system, "system")
    if args.command == "montecarlo":
        if isinstance(cfg.params.get("p_grid"), str):
            cfg.params["p_grid"] = [float(v) for v in cfg.params["p_grid"].split(",")]
        if cfg.params.get("c"):
            cfg.params["p_spec"] = {"c": [float(v) for v in cfg.params.pop("c").split(",")],
                                    "exponent_source": cfg.params.pop("exponent_source")}
    if args.command == "describe" and cfg.params.get("grid"):
        cfg.params["grid"] = _read_json_arg(cfg.params["grid"], "grid")
    return cfg


def run(cfg):
    """Execute a command; returns the rendered payload text."""
    payload, text_csv = COMMANDS[cfg.command](cfg)
    if cfg.fmt == "csv" and text_csv is not None:
        text = text_csv
    else:
        text = dump_json(cfg.command, payload)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        ext = "csv" if cfg.fmt == "csv" else "json"
        with open(os.path.join(cfg.out, f"{cfg.command}.{ext}"), "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _error(exc, code):
    err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if getattr(exc, "pointer", None) is not None:
        err["pointer"] = exc.pointer
    if getattr(exc, "witness", None) is not None:
        err["witness"] = exc.witness
    if isinstance(exc, BudgetExceeded):
        err["budget"] = {"required": exc.required, "budget": exc.budget}
    sys.stderr.write(dump_json("error", {"error": err}))
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        sys.stdout.write(run(cfg))
    except ConfigError as exc:
        return _error(exc, EXIT_CONFIG)
    except BudgetExceeded as exc:
        return _error(exc, EXIT_BUDGET)
    except PreconditionError as exc:
        return _error(exc, EXIT_PRECONDITION)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
