"""Command line entry point: ``rumorlab <subcommand> ...`` (or ``python -m rumorlab``)."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .engine import PROTOCOL_NAMES, LowestIdAdversary, ProtocolSpec, run_trials, run_until_broadcast, stalling_adversary
from .errors import RumorLabError
from .graph import (SeparationLayout, TightnessLayout, gen_basic, gen_lct, gen_separation,
                    gen_tightness)
from .io import layout_to_json, to_jsonable, write_csv, write_edgelist, write_json

log = logging.getLogger("rumorlab")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


class CliError(Exception):
    pass


def parse_graph(spec: str):
    """``kind:args`` -> (graph, layout or None)."""
    parts = spec.split(":")
    kind, args = parts[0], parts[1:]
    try:
        if kind in ("star", "path", "complete", "clique") and len(args) == 1:
            return gen_basic(kind, int(args[0])), None
        if kind in ("cbt", "complete_binary_tree") and len(args) == 1:
            return gen_basic("complete_binary_tree", int(args[0])), None
        if kind == "lct" and len(args) == 1:
            return gen_lct(int(args[0]))
        if kind == "separation" and 1 <= len(args) <= 3:
            doubled = len(args) == 3 and args[2] == "doubled"
            c = int(args[1]) if len(args) >= 2 else 1
            return gen_separation(int(args[0]), c, doubled)
        if kind == "tightness" and len(args) == 1:
            return gen_tightness(int(args[0]))
    except ValueError as exc:
        if isinstance(exc, RumorLabError):
            raise
        raise CliError(f"bad graph spec {spec!r}: {exc}") from None
    raise CliError(f"bad graph spec {spec!r}; expected star:N, path:N, complete:N, cbt:D, lct:K, "
                   "separation:L[:C[:doubled]] or tightness:K")


def default_source(layout):
    if isinstance(layout, SeparationLayout):
        return [layout.r_alpha]
    if isinstance(layout, TightnessLayout):
        return layout.B.tolist()
    return [0]


def _emit(args, experiment, rows, columns, meta):
    meta = dict(meta, experiment=experiment, config={k: v for k, v in vars(args).items() if k != "func"})
    if args.out:
        write_csv(args.out, rows, columns, experiment)
        write_json(args.meta or str(Path(args.out).with_suffix(".json")), meta)
    elif args.meta:
        write_json(args.meta, meta)
    print(json.dumps(to_jsonable(meta.get("summary", rows)), indent=2))


def _finish(args, ok, reason=""):
    if args.check and not ok:
        print(f"CHECK FAILED: {reason}", file=sys.stderr)
        return EXIT_CHECK
    if args.check:
        print("CHECK PASSED", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    g, layout = parse_graph(args.graph)
    if args.protocol not in PROTOCOL_NAMES:
        raise CliError(f"unknown protocol {args.protocol!r}; known: {', '.join(PROTOCOL_NAMES)}")
    adv = None
    if "adversarial" in args.protocol:
        if args.adversary == "stalling":
            if not isinstance(layout, SeparationLayout):
                raise CliError("the stalling adversary needs a separation graph")
            adv = stalling_adversary(layout)
        else:
            adv = LowestIdAdversary()
    S0 = args.source if args.source else default_source(layout)
    spec = ProtocolSpec.from_name(args.protocol, adversary=adv, max_rounds=args.max_rounds, seed=args.seed)
    if args.trials == 1:
        t, traces = run_until_broadcast(g, S0, spec, record=False)
        print(f"broadcast_time={t if t is not None else 'timeout'}")
        rows, counts = [], np.cumsum([len(S0)] + list(traces))
        for i, new in enumerate(traces, start=1):
            rows.append({"run_id": 0, "t": i, "S_t": int(counts[i]), "new_count": int(new)})
        if args.out:
            write_csv(args.out, rows, ["run_id", "t", "S_t", "new_count"], "simulate")
            write_json(args.meta or str(Path(args.out).with_suffix(".json")),
                       {"protocol_spec": spec.to_json(), "graph": args.graph, "S0": S0,
                        "broadcast_time": t, "n": g.n})
        return EXIT_OK
    res = run_trials(g, S0, spec, args.trials)
    rows = [{"run_id": i, "seed": args.seed, "broadcast_time": int(t) if t >= 0 else "timeout"}
            for i, t in enumerate(res.times)]
    ok = res.times[res.times >= 0]
    summary = {"trials": args.trials, "timeouts": res.timeouts,
               "mean": float(ok.mean()) if len(ok) else None,
               "median": float(np.median(ex._times_inf(res.times)))}
    if args.out:
        write_csv(args.out, rows, ["run_id", "seed", "broadcast_time"], "simulate")
        write_json(args.meta or str(Path(args.out).with_suffix(".json")),
                   {"protocol_spec": spec.to_json(), "graph": args.graph, "S0": S0, "summary": summary})
    print(json.dumps(summary))
    return EXIT_OK


def cmd_gen_graph(args):
    g, layout = parse_graph(args.graph)
    if args.out:
        write_edgelist(g, args.out)
        side = args.layout or (str(Path(args.out).with_suffix(".layout.json")) if layout is not None else None)
        if side:
            write_json(side, {"n": g.n, "edges": g.num_edges, "layout": layout_to_json(layout)})
    print(f"nodes={g.n} edges={g.num_edges} min_degree={g.min_degree} max_degree={g.max_degree}")
    return EXIT_OK


def cmd_exp_tree(args):
    rows, ok, why = [], True, []
    if args.tree:
        g, _ = parse_graph(args.tree)
        rep = ex.exp_tree_full(g, args.trials, args.seed, root=args.root)
        for name, r in rep["protocols"].items():
            rows.append(dict(r, protocol=name, bound=rep["bound"], seed=args.seed))
            if not r["within_bound"]:
                ok = False
                why.append(f"{name} quantile above bound")
        _emit(args, "tree-full", rows, ["seed", "protocol", "quantile_value", "bound", "within_bound", "timeouts"],
              {"summary": rep})
        return _finish(args, ok, "; ".join(why))
    for q in args.q:
        rep = ex.exp_tree_path(q, args.trials, args.seed)
        for name, r in rep["protocols"].items():
            rows.append(dict(r, q=q, protocol=name, seed=args.seed, exact_pull=rep.get("exact_pull", "")))
            if not 0.5 <= r["ratio"] <= 2.0 and q > 2:
                ok = False
                why.append(f"q={q} {name} ratio {r['ratio']:.3f}")
        if "exact_pull" in rep:
            err = abs(rep["protocols"]["pull"]["mean"] - rep["exact_pull"]) / rep["exact_pull"]
            if err > 0.05:
                ok = False
                why.append(f"q={q} pull mean off exact by {err:.1%}")
    rows.sort(key=lambda r: (r["q"], r["protocol"]))
    _emit(args, "tree-path", rows, ["seed", "q", "protocol", "mean", "stderr", "ratio", "exact_pull", "timeouts"],
          {"summary": rows})
    return _finish(args, ok, "; ".join(why))


def separation_verdict(rows):
    why = []
    if rows and rows[0]["ratio"] < 3:
        why.append(f"ratio at l={rows[0]['l']} is {rows[0]['ratio']:.3f} < 3")
    for a, b in zip(rows, rows[1:]):
        if not b["ratio"] > a["ratio"]:
            why.append(f"ratio does not grow from l={a['l']} to l={b['l']}")
    for r in rows:
        if r["random"]["median"] > r["random_bound"]:
            why.append(f"random median above 40 log^2 n at l={r['l']}")
    return not why, "; ".join(why)


def cmd_exp_separation(args):
    rows = ex.exp_separation(args.l, args.c, args.trials, args.seed, args.source, args.doubled)
    flat = [{"seed": args.seed, "l": r["l"], "n": r["n"], "random_median": r["random"]["median"],
             "adversarial_median": r["adversarial"]["median"], "ratio": r["ratio"],
             "random_timeouts": r["random"]["timeouts"], "adversarial_timeouts": r["adversarial"]["timeouts"],
             "zeta_fill_median": r["random"]["zeta_fill_median"],
             "stall_violations": r["adversarial"]["stall_violations"]} for r in rows]
    _emit(args, "separation", flat, list(flat[0]), {"summary": rows})
    ok, why = separation_verdict(rows)
    return _finish(args, ok, why)


def tightness_verdict(rows):
    by_k = {r["k"]: r for r in rows}
    why = []
    for k, r in by_k.items():
        if r["pull_one_round_fraction"] != 1.0:
            why.append(f"PULL missed A in one round at k={k}")
        if 2 * k in by_k:
            ratio = by_k[2 * k]["m_star"] / r["m_star"]
            if not 1.3 <= ratio <= 3.5:
                why.append(f"m*({2 * k})/m*({k}) = {ratio:.3f} outside [1.3, 3.5]")
    return not why, "; ".join(why)


def cmd_exp_tightness(args):
    rows = ex.exp_tightness(args.k, args.trials, args.seed, args.quantile)
    for r in rows:
        r["seed"] = args.seed
    _emit(args, "tightness", rows, ["seed", "k", "n", "delta", "Delta", "m_star", "m_star_over_scale",
                                    "round1_win_a0", "round1_win_mean", "pull_one_round_fraction", "timeouts"],
          {"summary": rows})
    ok, why = tightness_verdict(rows)
    return _finish(args, ok, why)


def _suite(name):
    if name != "small":
        raise CliError(f"unknown suite {name!r}; available: small")
    return ex.small_suite()


def cmd_exp_coupling(args):
    rows = ex.exp_coupling(args.trials, args.seed, _suite(args.suite), args.scale)
    for r in rows:
        r["seed"] = args.seed
    _emit(args, "coupling", rows, ["seed", "graph", "n", "T", "T_prime", "K", "trials", "violations",
                                   "violation_rate", "ci_low", "ci_high", "be_rate", "nonstandard_params"],
          {"summary": rows})
    bad = [r["graph"] for r in rows if r["violation_rate"] > 0.01 or r["be_rate"] > 0.01]
    return _finish(args, not bad, f"violation or BE rate above 1% on {bad}")


def cmd_exp_dominance(args):
    rows = ex.exp_dominance(args.samples, args.seed, args.sigma, _suite(args.suite))
    for r in rows:
        r["seed"] = args.seed
    _emit(args, "dominance", rows, ["seed", "graph", "n", "T", "samples", "worst_sigma", "worst_gap", "passed"],
          {"summary": rows})
    bad = [r["graph"] for r in rows if not r["passed"]]
    return _finish(args, not bad, f"monotone-set deficit beyond {args.sigma} sigma on {bad}")


def cmd_chernoff(args):
    if args.p:
        from .chernoff import chernoff_geo_bound, empirical_tail
        bound, mu = chernoff_geo_bound(args.p, args.t)
        emp = empirical_tail(args.p, args.t, args.samples, args.seed)
        rows = [{"p1": args.p[0], "p": args.p, "t": args.t, "mu": mu, "threshold": 3 * (mu + args.t),
                 "bound": bound, "empirical": emp, "ok": emp <= bound}]
    else:
        rows = ex.chernoff_grid(args.samples, args.seed)
    for r in rows:
        r["seed"] = args.seed
    _emit(args, "chernoff", rows, ["seed", "p1", "t", "mu", "threshold", "bound", "empirical", "ok"],
          {"summary": rows})
    return _finish(args, all(r["ok"] for r in rows), "empirical tail above bound")


# ---------------------------------------------------------------------------
# parser

def build_parser():
    p = argparse.ArgumentParser(prog="rumorlab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=0):
        sp.add_argument("--seed", type=int, default=seed)
        sp.add_argument("--out", help="CSV output path")
        sp.add_argument("--meta", help="JSON metadata path (default: next to --out)")
        sp.add_argument("--config", help="JSON file whose keys set option defaults")
        sp.add_argument("--check", action="store_true", help="exit 2 when the acceptance check fails")

    sp = sub.add_parser("simulate", help="run one protocol on one graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--protocol", default="pull")
    sp.add_argument("--source", type=int, nargs="*")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--max-rounds", type=int, default=100_000)
    sp.add_argument("--adversary", choices=["lowest-id", "stalling"], default="lowest-id")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gen-graph", help="write a generated topology as an edge list")
    sp.add_argument("graph")
    sp.add_argument("--out")
    sp.add_argument("--layout", help="layout JSON sidecar path")
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_gen_graph, check=False, meta=None)

    sp = sub.add_parser("exp-tree", help="broadcast times on paths or a given tree")
    sp.add_argument("--q", type=int, nargs="+", default=[3, 32])
    sp.add_argument("--tree", help="tree graph spec, e.g. cbt:6 or star:100")
    sp.add_argument("--root", type=int, default=0)
    sp.add_argument("--trials", type=int, default=10_000)
    common(sp)
    sp.set_defaults(func=cmd_exp_tree)

    sp = sub.add_parser("exp-separation", help="random vs stalling-adversary RPULL")
    sp.add_argument("--l", type=int, nargs="+", default=[16, 32])
    sp.add_argument("--c", type=int, default=1)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--source", default="r_alpha")
    sp.add_argument("--doubled", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_exp_separation)

    sp = sub.add_parser("exp-tightness", help="rounds until A is informed on the tightness graph")
    sp.add_argument("--k", type=int, nargs="+", default=[4, 6, 8])
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--quantile", type=float, default=0.99)
    common(sp)
    sp.set_defaults(func=cmd_exp_tightness)

    sp = sub.add_parser("exp-coupling", help="RPULL_T vs VPULL_{T+1} violation rates")
    sp.add_argument("--suite", default="small")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--scale", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_exp_coupling)

    sp = sub.add_parser("exp-dominance", help="exact PULL_1 vs sampled RPULL_T on a suite")
    sp.add_argument("--suite", default="small")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--sigma", type=float, default=3.0)
    common(sp)
    sp.set_defaults(func=cmd_exp_dominance)

    sp = sub.add_parser("chernoff", help="geometric-sum tail bound vs sampling")
    sp.add_argument("--p", type=float, nargs="+", help="sorted success probabilities (default: 3x3 grid)")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--samples", type=int, default=1_000_000)
    common(sp)
    sp.set_defaults(func=cmd_chernoff)
    return p


def _apply_config(parser, argv, args):
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(k.replace("-", "_") for k in cfg) - known
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    return parser.parse_args(argv)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _apply_config(parser, argv, args)
        return args.func(args)
    except (CliError, RumorLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
