"""``mlab`` command line: parse a run configuration, dispatch, write reports.

Exit codes: 0 when every check ends as expected, 1 when any check fails
unexpectedly, 2 for configuration errors and unknown check ids, 3 for
internal or accuracy errors.  Errors are also printed to stderr as one JSON
object.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .harness import (
    FAIL,
    GATED,
    HEAT,
    REGISTRY,
    SUMMARY_HEADER,
    CheckContext,
    CheckError,
    CheckReport,
    RegistryError,
    TestFamily,
    TheoremParams,
    refinement_study,
    run_check,
    summary_rows,
)
from .lattice import Grid, build_ball_family
from .operators import (
    MAXIMAL_KINDS,
    AccuracyError,
    CommutatorSpec,
    TimeQuadrature,
    fractional_kernel,
    maximal_function,
    multilinear_commutator,
    riesz_potential,
    semigroup_apply,
    sharp_maximal,
)
from .spaces import MorreyParams, bmo_norm, morrey_norm, weak_norm, weighted_lebesgue_norm
from .weights import CSV_HEADER, characteristic, critical_index_estimate, parse_weight_spec

__all__ = ["main", "dispatch", "context_from_config", "EXIT_OK", "EXIT_FAIL", "EXIT_CONFIG", "EXIT_INTERNAL"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3
SUBCOMMANDS = ("ap", "rh", "norm", "apply", "check", "sweep")
OPERATORS = ("semigroup", "riesz", "fractional", "commutator", "sharp") + MAXIMAL_KINDS


class UsageError(ValueError):
    """Bad command-line input that is not a configuration violation."""


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------


def resolve_threads(cfg: RunConfig, environ=None) -> int:
    """Config value first, then ``MLAB_THREADS``, then one."""
    if cfg.threads is not None:
        return cfg.threads
    env = (environ if environ is not None else os.environ).get("MLAB_THREADS", "").strip()
    if env:
        try:
            val = int(env)
        except ValueError:
            raise ConfigError([f"MLAB_THREADS = {env!r} is not an integer"]) from None
        if val < 1:
            raise ConfigError([f"MLAB_THREADS must be at least 1, got {val}"])
        return val
    return 1


def context_from_config(cfg: RunConfig, threads: int = 1) -> CheckContext:
    """Harness context for ``cfg``; unset parameters keep the harness defaults."""
    kw = dict(
        dim=cfg.dim,
        half_width=cfg.half_width,
        resolutions=cfg.resolutions,
        policy=cfg.policy,
        weight=cfg.weight,
        r=cfg.r,
        tau=cfg.tau,
        quad_nodes=cfg.quad_nodes,
        stability_bound=cfg.stability_bound,
        index_tol=cfg.index_tol,
        seed=cfg.seed,
        threads=threads,
    )
    if cfg.alpha is not None:
        kw["alpha"] = cfg.alpha
    if cfg.m is not None:
        kw["m_values"] = tuple(range(1, cfg.m + 1))
    if None not in (cfg.p, cfg.alpha, cfg.kappa):
        kw["tuples"] = (TheoremParams(cfg.p, cfg.alpha, cfg.kappa, cfg.weight or "power:-0.25"),)
    return CheckContext(**kw)


def _parse_resolutions(text: str) -> tuple[int, ...]:
    try:
        res = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError([f"--resolutions {text!r} is not a comma-separated integer list"]) from None
    bad = [n for n in res if n < 4 or n % 2]
    if not res or bad:
        raise ConfigError([f"--resolutions must be even integers >= 4, got {text!r}"])
    if any(b <= a for a, b in zip(res, res[1:])):
        raise ConfigError([f"--resolutions must be strictly increasing, got {text!r}"])
    return res


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _envelope(cfg: RunConfig, subcommand: str, body: dict) -> dict:
    return {"version": __version__, "config_hash": cfg.config_hash(), "subcommand": subcommand,
            "config": cfg.describe(), **body}


def _diagnostic(kind: str, message: str, **extra) -> None:
    print(json.dumps(_jsonable({"error": kind, "message": message, **extra}), sort_keys=True), file=sys.stderr)


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _weight_spec(cfg: RunConfig, default: str):
    return parse_weight_spec(cfg.weight or default)


def _cmd_characteristic(cfg: RunConfig, out: Path, kind: str) -> int:
    spec = _weight_spec(cfg, "power:-0.5")
    param = (cfg.p if cfg.p is not None else 2.0) if kind == "A_p" else cfg.r
    label = "A_1" if kind == "A_p" and param == 1 else kind
    rows, levels = [], []
    for n in cfg.resolutions:
        grid = Grid(cfg.dim, cfg.half_width, n)
        fam = build_ball_family(grid, cfg.policy)
        ch = characteristic(spec(grid), kind, param, fam)
        rows.append(ch.csv_row(spec.label))
        levels.append({"N": n, "value": ch.value, "family_id": ch.family_id,
                       "witness": {"center": list(ch.witness.center), "radius": ch.witness.radius}})
    vals = [lv["value"] for lv in levels]
    growth = [b / a for a, b in zip(vals, vals[1:])]
    body = {"weight": spec.label, "kind": label, "param": param, "levels": levels, "growth": growth}
    if kind == "RH":
        hyp = context_from_config(cfg).hypothesis_grid()
        ci = critical_index_estimate(spec, hyp, cfg.index_tol, dim=cfg.dim, half_width=cfg.half_width,
                                     policy=cfg.policy)
        body["critical_index"] = {"value": ci.value, "bracket": list(ci.bracket), "capped": ci.capped,
                                  "resolutions": list(hyp)}
    _dump_json(out / "report.json", _envelope(cfg, "ap" if kind == "A_p" else "rh", body))
    _write_csv(out / "summary.csv", CSV_HEADER, rows)
    trend = f" growth {_fmt(growth[-1])}" if growth else ""
    print(f"{label}({_fmt(param)}) {spec.label}: {_fmt(vals[-1])} at N={cfg.resolutions[-1]}{trend}")
    if kind == "RH":
        print(f"critical index {spec.label}: {_fmt(body['critical_index']['value'])}")
    return EXIT_OK


def _cmd_norm(cfg: RunConfig, out: Path) -> int:
    p = cfg.p if cfg.p is not None else 2.0
    kappa = cfg.kappa if cfg.kappa is not None else 0.0
    records, rows = [], []
    for n in cfg.resolutions:
        grid = Grid(cfg.dim, cfg.half_width, n)
        fam = build_ball_family(grid, cfg.policy)
        tf = TestFamily.standard(grid)
        f = _function(tf, cfg.function)
        w = _weight_spec(cfg, "const:1")(grid)
        reps = {
            "lebesgue": {"norm_id": "lebesgue", "params": {"p": p, "w": w.label}, "value": weighted_lebesgue_norm(f, p, w)},
            "weak": {"norm_id": "weak", "params": {"l": p}, "value": weak_norm(f, p)},
            "morrey": morrey_norm(f, MorreyParams(p, kappa, w), fam).record(),
        }
        for name in cfg.symbols:
            reps[f"bmo:{name}"] = bmo_norm(_symbol(tf, name), w, fam).record()
        for key, rec in reps.items():
            records.append({"N": n, "function": cfg.function, **rec})
            rows.append([n, cfg.function, key, repr(float(rec["value"]))])
    _dump_json(out / "report.json", _envelope(cfg, "norm", {"norms": records}))
    _write_csv(out / "summary.csv", ["N", "function", "norm", "value"], rows)
    for row in rows[-(3 + len(cfg.symbols)):]:
        print(f"{row[2]} {row[1]} N={row[0]}: {_fmt(float(row[3]))}")
    return EXIT_OK


def _function(tf: TestFamily, name: str):
    if name not in tf.functions:
        raise ConfigError([f"unknown function {name!r}; known: {sorted(tf.functions)}"])
    return tf.functions[name]


def _symbol(tf: TestFamily, name: str):
    if name not in tf.symbols:
        raise ConfigError([f"unknown symbol {name!r}; known: {sorted(tf.symbols)}"])
    return tf.symbols[name]


def _cmd_apply(cfg: RunConfig, out: Path) -> int:
    op = cfg.operator
    if op not in OPERATORS:
        raise ConfigError([f"unknown operator {op!r}; known: {list(OPERATORS)}"])
    alpha = cfg.alpha if cfg.alpha is not None else 0.5
    quad = TimeQuadrature(nodes=cfg.quad_nodes)
    sidecar = {"operator": op, "function": cfg.function, "levels": []}
    for n in cfg.resolutions:
        grid = Grid(cfg.dim, cfg.half_width, n)
        tf = TestFamily.standard(grid)
        f = _function(tf, cfg.function)
        heat = HEAT[cfg.dim]
        diag = None
        if op == "semigroup":
            g = semigroup_apply(heat, f, cfg.t)
        elif op == "riesz":
            g = riesz_potential(f, alpha)
        elif op in ("fractional", "commutator"):
            fk = fractional_kernel(heat, grid, alpha, quad)
            diag = fk.diagnostics
            if op == "fractional":
                g = f.with_values(fk.apply(f.values))
            else:
                bs = tuple(_symbol(tf, s) for s in cfg.symbols)
                if cfg.m is not None:
                    bs = (bs * cfg.m)[: cfg.m]
                g = multilinear_commutator(CommutatorSpec(alpha, bs), f, heat, quad)
        elif op == "sharp":
            g = sharp_maximal(heat, f, build_ball_family(grid, cfg.policy))
        else:
            w = _weight_spec(cfg, "const:1")(grid) if op.endswith("_w") else None
            a = alpha if "alpha" in op else 0.0
            g = maximal_function(f, op, build_ball_family(grid, cfg.policy), alpha=a, r=cfg.r, w=w)
        name = f"{op}_{cfg.function.replace(':', '-')}_N{n}.csv"
        g.to_csv(out / name)
        sidecar["levels"].append({"N": n, "csv": name, "quadrature": diag.as_dict() if diag else None,
                                  "max_abs": float(np.max(np.abs(g.values)))})
    _dump_json(out / "report.json", _envelope(cfg, "apply", sidecar))
    _write_csv(out / "summary.csv", ["N", "csv", "max_abs"],
               [[lv["N"], lv["csv"], repr(lv["max_abs"])] for lv in sidecar["levels"]])
    last = sidecar["levels"][-1]
    print(f"{op} {cfg.function} N={last['N']}: max |out| = {_fmt(last['max_abs'])} -> {last['csv']}")
    return EXIT_OK


def unexpected_failure(rep: CheckReport) -> bool:
    """A positive check that failed, or a negative control that did not fire.

    Gating a positive check is reported but is not a failure.
    """
    if rep.expected not in (FAIL, GATED):
        return rep.verdict == FAIL
    return not rep.as_expected


def _check_ids(cfg: RunConfig, ids, default_all: bool) -> list[str]:
    ids = list(ids) or list(cfg.ids) or (list(REGISTRY) if default_all else [])
    if not ids:
        raise ConfigError(["no check ids given on the command line or in [checks] ids"])
    unknown = [i for i in ids if i not in REGISTRY]
    if unknown:
        raise RegistryError(unknown[0])
    return ids


def _cmd_checks(cfg: RunConfig, out: Path, ids, threads: int, sweep: bool) -> int:
    ids = _check_ids(cfg, ids, default_all=sweep)
    ctx = context_from_config(cfg, threads)
    reports, timing = [], {}
    for cid in ids:
        start = time.perf_counter()
        if sweep:
            spec = REGISTRY[cid]
            res = cfg.resolutions if spec.axis == "N" or spec.aggregate else None
            if res is not None and len(res) < 2 and spec.criterion == "stable":
                raise ConfigError([f"sweep of {cid} needs at least two resolutions"])
            rep = (refinement_study(cid, res, ctx).report if res is not None and len(res) >= 2
                   else run_check(cid, ctx, res))
        else:
            rep = run_check(cid, ctx)
        timing[cid] = time.perf_counter() - start
        reports.append(rep)
        if rep.as_expected:
            flag = ""
        elif unexpected_failure(rep):
            flag = " (unexpected)"
        else:
            flag = " (hypotheses not met, not a failure)"
        last = rep.measurements[-1] if rep.measurements else None
        value = f" value={_fmt(last.value)}" if last else ""
        trend = f" trend={_fmt(rep.trends[-1])}" if rep.trends else ""
        print(f"{cid}: {rep.verdict}{flag}{value}{trend} expected={rep.expected}", flush=True)
    payload = _envelope(cfg, "sweep" if sweep else "check", {"reports": [r.record() for r in reports]})
    _dump_json(out / "report.json", payload)
    _write_csv(out / "summary.csv", SUMMARY_HEADER, summary_rows(reports))
    # wall times live apart from the report so the report stays reproducible
    _dump_json(out / "timing.json", {"threads": threads, "seconds": timing})
    return EXIT_FAIL if any(unexpected_failure(r) for r in reports) else EXIT_OK


def dispatch(subcommand: str, cfg: RunConfig, *, out: Path, ids=(), threads: int = 1) -> int:
    """Run one subcommand and return its exit code; exceptions propagate."""
    if subcommand not in SUBCOMMANDS:
        raise UsageError(f"unknown subcommand {subcommand!r}; expected one of {list(SUBCOMMANDS)}")
    out.mkdir(parents=True, exist_ok=True)
    if subcommand == "ap":
        return _cmd_characteristic(cfg, out, "A_p")
    if subcommand == "rh":
        return _cmd_characteristic(cfg, out, "RH")
    if subcommand == "norm":
        return _cmd_norm(cfg, out)
    if subcommand == "apply":
        return _cmd_apply(cfg, out)
    return _cmd_checks(cfg, out, ids, threads, sweep=subcommand == "sweep")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mlab", description="Weighted Morrey-space lattice toolkit")
    ap.add_argument("--version", action="version", version=f"mlab {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        if name in ("check", "sweep"):
            p.add_argument("ids", nargs="*", help="check ids (default: [checks] ids; sweep runs all)")
        p.add_argument("--config", help="INI run configuration (defaults apply when omitted)")
        p.add_argument("--out", help="output directory (default: [output] dir, else the current directory)")
        p.add_argument("--resolutions", help="comma-separated resolutions, overriding [grid]")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text)
        if args.resolutions:
            cfg = dataclasses.replace(cfg, resolutions=_parse_resolutions(args.resolutions))
        threads = resolve_threads(cfg)
        out = Path(args.out or cfg.out_dir or ".")
        return dispatch(args.subcommand, cfg, out=out, ids=getattr(args, "ids", ()), threads=threads)
    except ConfigError as exc:
        _diagnostic("config", str(exc), violations=exc.violations)
        return EXIT_CONFIG
    except RegistryError as exc:
        _diagnostic("unknown-check", str(exc), check_id=exc.check_id, known_ids=exc.known)
        return EXIT_CONFIG
    except OSError as exc:
        _diagnostic("io", str(exc))
        return EXIT_CONFIG if args.config and not Path(args.config).is_file() else EXIT_INTERNAL
    except (AccuracyError, CheckError) as exc:
        _diagnostic("accuracy" if isinstance(exc, AccuracyError) else "check", str(exc))
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - the exit-code contract covers every failure
        _diagnostic("internal", f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
