"""Command-line interface: experiment commands, sweeps, and file emission.

Every command is byte-deterministic: the same config and seed produce
identical output files.  Replica r runs on the seed derived for index r, so
sweeps and reruns are reproducible piecewise.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .configio import (COMMANDS, ConfigError, ExperimentSpec, parse_config,
                       site_to_str)
from .engine import run
from .observables import (audit_subadditivity, estimate_mu, outcome_summary,
                          passage_time, shape_estimate)
from .oracle import (BudgetExceeded, empirical_digests, enumerate_exact,
                     total_variation)
from .render import render_shape_svg
from .rng import derive_seed

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_CHECK = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frogsim",
        description="Monte Carlo simulator for one- and two-type frog models "
                    "on Z^d with lazy random walks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--replicas", type=int, default=None,
                       help="override the replica count")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--emit", default=None,
                       help="comma list from csv,json,svg")
        p.add_argument("--kernel", default=None,
                       help="force a step kernel (c, numpy, sparse)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = parse_config(text)
        emit = None
        if args.emit is not None:
            emit = tuple(p.strip() for p in args.emit.split(",") if p.strip())
        spec = spec.with_overrides(seed=args.seed, replicas=args.replicas,
                                   emit=emit)
        _validate_for_command(args.command, spec)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        handler = _HANDLERS[args.command]
        payload = handler(spec, kernel=args.kernel)
        _write_payload(payload, spec, outdir)
        code = payload.get("exit_code", EXIT_OK)
        if code:
            print(payload.get("fail_reason", "check failed"), file=sys.stderr)
        return code
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _validate_for_command(command: str, spec: ExperimentSpec):
    cfg = spec.config
    if command in ("shape", "passage") and cfg.two_type:
        raise ConfigError(f"{command} needs a one-type config (drop start2)")
    if command == "coexist" and not cfg.two_type:
        raise ConfigError("coexist needs a two-type config (set start2)")
    if command == "sweep":
        if spec.command is None:
            raise ConfigError("sweep config needs `command = <subcommand>`")
        if not spec.sweep:
            raise ConfigError("sweep config needs a [sweep] section")
        _validate_for_command(spec.command, spec)
    if command == "passage" and not (spec.targets or spec.n_values
                                     or spec.triples):
        raise ConfigError("passage needs targets, n_values, or triples")


# ---------------------------------------------------------------------------
# command payloads (pure computation; file writing happens afterwards)

def _cmd_simulate(spec: ExperimentSpec, kernel=None) -> dict:
    cfg = spec.config
    rows = []
    traces = []
    for r in range(spec.replicas):
        s = run(replace(cfg, seed=derive_seed(cfg.seed, r)), kernel=kernel)
        rows.append({
            "replica": r, "count1": int(s.count1), "count2": int(s.count2),
            "discovered": int(len(s.ev_t)), "t_final": int(s.t_final),
        })
        trace = [(int(t), site, int(a), int(nact))
                 for site, t, _by, a, nact in s.discovery_items()]
        traces.append(trace)
    summary = {
        "command": "simulate",
        "config": _config_json(spec),
        "replicas": rows,
        "mean_discovered": _mean([r["discovered"] for r in rows]),
    }
    return {"summary": summary, "traces": traces,
            "sweep_row": {"mean_discovered": summary["mean_discovered"]}}


def _cmd_shape(spec: ExperimentSpec, kernel=None) -> dict:
    cfg = spec.config
    checkpoints = tuple(sorted(set(spec.checkpoints))) or tuple(
        sorted({max(cfg.horizon // 2, 1), cfg.horizon}))
    if checkpoints[-1] > cfg.horizon:
        raise ConfigError(f"checkpoint {checkpoints[-1]} exceeds horizon "
                          f"{cfg.horizon}")
    per_replica = []
    shape_rows = []
    svg_cells = []
    for r in range(spec.replicas):
        s = run(replace(cfg, seed=derive_seed(cfg.seed, r),
                        track_discoverers=False), kernel=kernel)
        entries = []
        last_shape = None
        for n in checkpoints:
            sh = shape_estimate(s, n)
            last_shape = sh
            entries.append({
                "n": n,
                "inner_radius": int(sh.inner_radius),
                "outer_radius": int(sh.outer_radius),
                "inner_ratio": sh.inner_radius / n,
                "outer_ratio": sh.outer_radius / n,
                "rho": spec.rho,
                "coverage_rho_n": sh.coverage(spec.rho),
            })
        per_replica.append({"replica": r, "checkpoints": entries})
        start = cfg.start1
        rows = [(int(t), tuple(int(c - o) for c, o in zip(site, start)))
                for site, t, _by, _a, _n in s.discovery_items()]
        shape_rows.append(rows)
        svg_cells.append((last_shape.cells, checkpoints[-1]))
    agg = []
    for i, n in enumerate(checkpoints):
        agg.append({
            "n": n,
            "mean_inner_ratio": _mean(
                [p["checkpoints"][i]["inner_ratio"] for p in per_replica]),
            "mean_outer_ratio": _mean(
                [p["checkpoints"][i]["outer_ratio"] for p in per_replica]),
            "mean_coverage_rho_n": _mean(
                [p["checkpoints"][i]["coverage_rho_n"] for p in per_replica]),
        })
    summary = {
        "command": "shape",
        "config": _config_json(spec),
        "checkpoints": list(checkpoints),
        "per_replica": per_replica,
        "aggregate": agg,
    }
    row = {"mean_inner_ratio": agg[-1]["mean_inner_ratio"],
           "mean_outer_ratio": agg[-1]["mean_outer_ratio"],
           "mean_coverage_rho_n": agg[-1]["mean_coverage_rho_n"]}
    return {"summary": summary, "shape_rows": shape_rows,
            "svg_cells": svg_cells, "sweep_row": row}


def _cmd_coexist(spec: ExperimentSpec, kernel=None) -> dict:
    cfg = spec.config
    rows = []
    n_co = n_l1 = n_l2 = n_tie = 0
    for r in range(spec.replicas):
        seed = derive_seed(cfg.seed, r)
        s = run(replace(cfg, seed=seed, track_discoverers=False),
                kernel=kernel)
        o = outcome_summary(s, spec.K)
        rows.append((seed, o.count1, o.count2, o.leader, int(o.coexist)))
        n_co += o.coexist
        n_l1 += o.leader == "type1"
        n_l2 += o.leader == "type2"
        n_tie += o.leader == "tie"
    n = spec.replicas
    summary = {
        "command": "coexist",
        "config": _config_json(spec),
        "K": spec.K,
        "replicas": n,
        "coexist_freq": n_co / n,
        "coexist_se": _freq_se(n_co, n),
        "leader_type1_freq": n_l1 / n,
        "leader_type1_se": _freq_se(n_l1, n),
        "leader_type2_freq": n_l2 / n,
        "leader_type2_se": _freq_se(n_l2, n),
        "leader_tie_freq": n_tie / n,
        "mean_count1": _mean([r[1] for r in rows]),
        "mean_count2": _mean([r[2] for r in rows]),
    }
    row = {k: summary[k] for k in
           ("coexist_freq", "leader_type1_freq", "leader_type2_freq",
            "mean_count1", "mean_count2")}
    return {"summary": summary, "outcome_rows": rows, "sweep_row": row}


def _cmd_passage(spec: ExperimentSpec, kernel=None) -> dict:
    cfg = spec.config
    p_values = spec.p_values or (cfg.p1,)
    table_rows = []
    by_p = {}
    for y in spec.targets:
        times = {}
        for p in p_values:
            res = passage_time(cfg, cfg.start1, y, p, cfg.horizon, kernel)
            table_rows.append((cfg.start1, y, p, res))
            times[p] = res
        by_p[y] = times
    # coupled monotonicity: larger p discovers no later, per realization
    mono_checked = mono_violations = 0
    ps = sorted(p_values)
    for y, times in by_p.items():
        for lo, hi in zip(ps, ps[1:]):
            a, b = times[lo], times[hi]
            if a.resolved and b.resolved:
                mono_checked += 1
                if b.time > a.time:
                    mono_violations += 1
    summary = {
        "command": "passage",
        "config": _config_json(spec),
        "p_values": list(p_values),
        "targets": [site_to_str(y) for y in spec.targets],
        "monotone_pairs_checked": mono_checked,
        "monotone_violations": mono_violations,
    }
    if spec.n_values:
        mus = estimate_mu(cfg, spec.n_values, spec.mu_replicas, kernel=kernel)
        summary["mu"] = {
            str(n): {"mean": m.mean, "se": m.se, "replicas": m.replicas,
                     "unresolved": m.unresolved}
            for n, m in sorted(mus.items())}
    if spec.triples:
        audit = audit_subadditivity(cfg, cfg.p1, spec.triples,
                                    spec.norm_bound, cfg.horizon,
                                    kernel=kernel)
        summary["subadditivity"] = {
            "checked": audit.checked,
            "applicable": audit.applicable,
            "violations": audit.violations,
        }
    row = {"monotone_violations": mono_violations}
    if spec.n_values:
        row.update({f"mu_{n}": summary["mu"][str(n)]["mean"]
                    for n in spec.n_values})
    if spec.triples:
        row["subadditivity_violations"] = summary["subadditivity"]["violations"]
    return {"summary": summary, "passage_rows": table_rows,
            "p_values": p_values, "sweep_row": row}


def _cmd_oracle_check(spec: ExperimentSpec, kernel=None) -> dict:
    cfg = spec.config
    dist = enumerate_exact(cfg)
    emp = empirical_digests(cfg, range(spec.oracle_seeds), kernel=kernel)
    tv = total_variation(emp, dist)
    ok = tv <= spec.tv_threshold
    summary = {
        "command": "oracle-check",
        "config": _config_json(spec),
        "n_seeds": spec.oracle_seeds,
        "atoms": len(dist.atoms),
        "branches": dist.branches,
        "total_variation": tv,
        "threshold": spec.tv_threshold,
        "pass": bool(ok),
    }
    payload = {"summary": summary, "oracle_dist": dist,
               "sweep_row": {"total_variation": tv, "pass": int(ok)}}
    if not ok:
        payload["exit_code"] = EXIT_CHECK
        payload["fail_reason"] = (
            f"oracle check failed: TV {tv:.5f} > {spec.tv_threshold}")
    return payload


def _cmd_sweep(spec: ExperimentSpec, kernel=None) -> dict:
    keys = sorted(spec.sweep)
    grid = list(itertools.product(*(spec.sweep[k] for k in keys)))
    rows = []
    handler = _HANDLERS[spec.command]
    for values in grid:
        point = dict(zip(keys, values))
        label = {k: (v.spec() if k == "eta" else v) for k, v in point.items()}
        try:
            sub = _spec_at_point(spec, point)
            payload = handler(sub, kernel=kernel)
            rows.append({"point": label, "status": "ok",
                         "metrics": payload["sweep_row"]})
        except Exception as exc:
            rows.append({"point": label, "status": "error",
                         "error": str(exc)})
    summary = {
        "command": "sweep",
        "subcommand": spec.command,
        "config": _config_json(spec),
        "grid_keys": keys,
        "points": rows,
    }
    return {"summary": summary, "sweep_rows": rows, "grid_keys": keys}


def _spec_at_point(spec: ExperimentSpec, point: dict) -> ExperimentSpec:
    cfg_kw = {}
    spec_kw = {}
    for key, value in point.items():
        if key == "K":
            spec_kw["K"] = value
        else:
            cfg_kw[key] = value
    out = spec
    if cfg_kw:
        out = replace(out, config=replace(spec.config, **cfg_kw))
    if spec_kw:
        out = replace(out, **spec_kw)
    return out


_HANDLERS = {
    "simulate": _cmd_simulate,
    "shape": _cmd_shape,
    "coexist": _cmd_coexist,
    "passage": _cmd_passage,
    "oracle-check": _cmd_oracle_check,
    "sweep": _cmd_sweep,
}


# ---------------------------------------------------------------------------
# file emission

def _write_payload(payload: dict, spec: ExperimentSpec, outdir: Path):
    emit = spec.emit
    summary = payload["summary"]
    if "json" in emit:
        _write(outdir / "summary.json",
               json.dumps(summary, sort_keys=True, indent=2) + "\n")
    if "csv" not in emit:
        pass
    elif "traces" in payload:
        d = spec.config.d
        header = ["time"] + [f"x{i}" for i in range(d)] + ["type", "n_activated"]
        for r, trace in enumerate(payload["traces"]):
            rows = [[str(t)] + [str(c) for c in site] + [str(a), str(nact)]
                    for t, site, a, nact in trace]
            _write_csv(outdir / f"trace_r{r}.csv", header, rows)
    elif "shape_rows" in payload:
        d = spec.config.d
        header = ["n"] + [f"x{i}" for i in range(d)]
        for r, rows in enumerate(payload["shape_rows"]):
            _write_csv(outdir / f"shape_r{r}.csv", header,
                       [[str(t)] + [str(c) for c in site] for t, site in rows])
    elif "outcome_rows" in payload:
        _write_csv(outdir / "outcomes.csv",
                   ["seed", "count1", "count2", "leader", f"coexist_{spec.K}"],
                   [[str(v) for v in row] for row in payload["outcome_rows"]])
    elif "passage_rows" in payload:
        rows = [[site_to_str(x), site_to_str(y), repr(float(p)), str(res)]
                for x, y, p, res in payload["passage_rows"]]
        _write_csv(outdir / "passage.csv", ["x", "y", "p", "time"], rows)
        p_values = payload["p_values"]
        if len(p_values) > 1:
            wide = {}
            for x, y, p, res in payload["passage_rows"]:
                wide.setdefault((x, y), {})[p] = str(res)
            header = ["x", "y"] + [f"t_p{repr(float(p))}" for p in p_values]
            rows = [[site_to_str(x), site_to_str(y)]
                    + [cols.get(p, "") for p in p_values]
                    for (x, y), cols in sorted(wide.items())]
            _write_csv(outdir / "passage_by_p.csv", header, rows)
    elif "sweep_rows" in payload:
        keys = payload["grid_keys"]
        metric_keys = sorted({m for row in payload["sweep_rows"]
                              for m in row.get("metrics", {})})
        header = keys + ["status"] + metric_keys + ["error"]
        rows = []
        for row in payload["sweep_rows"]:
            vals = [str(row["point"][k]) for k in keys] + [row["status"]]
            metrics = row.get("metrics", {})
            vals += [repr(metrics[k]) if k in metrics else ""
                     for k in metric_keys]
            vals.append(row.get("error", ""))
            rows.append(vals)
        _write_csv(outdir / "sweep.csv", header, rows)
    elif "oracle_dist" in payload:
        dist = payload["oracle_dist"]
        rows = []
        for digest, prob in sorted(dist.atoms.items()):
            rows.append([_digest_str(digest), str(prob.numerator),
                         str(prob.denominator)])
        _write_csv(outdir / "oracle_exact.csv",
                   ["digest", "numerator", "denominator"], rows)
    if "svg" in emit and "svg_cells" in payload and spec.config.d == 2:
        for r, (cells, n) in enumerate(payload["svg_cells"]):
            _write(outdir / f"shape_r{r}.svg",
                   render_shape_svg({1: cells}, n))


def _digest_str(digest) -> str:
    return ";".join(f"{site_to_str(site)}@{t}:{by}:{a}"
                    for site, t, by, a in digest)


def _write(path: Path, content: str):
    path.write_text(content, encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    _write(path, "\n".join(lines) + "\n")


def _mean(values) -> float:
    return float(sum(values) / len(values)) if values else math.nan


def _freq_se(k: int, n: int) -> float:
    f = k / n
    return math.sqrt(f * (1.0 - f) / n)


def _config_json(spec: ExperimentSpec) -> dict:
    cfg = spec.config
    out = {
        "d": cfg.d,
        "eta": cfg.eta.spec(),
        "p1": cfg.p1,
        "p2": cfg.p2,
        "start1": site_to_str(cfg.start1),
        "tie": cfg.tie.spec(),
        "laziness": cfg.laziness,
        "condition_start": cfg.condition_start_nonempty,
        "seed": cfg.seed,
        "horizon": cfg.horizon,
        "replicas": spec.replicas,
    }
    if cfg.start2 is not None:
        out["start2"] = site_to_str(cfg.start2)
    return out


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
