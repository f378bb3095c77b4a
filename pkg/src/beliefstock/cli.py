"""Command-line front end.

Exit status: 0 on success, 1 on domain errors (infeasible input, a required
assumption failing, resource caps), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import assumptions, bounds, gamma, reorder, simulate
from .belief import parse_belief, posteriors
from .errors import BeliefStockError
from .model import bundled_model, load_model_file, validate_document
from .regions import barycentric_to_xy, regions_to_csv, regions_to_polygons
from .single_period import myopic_base_stock, myopic_range, partition_p1

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(args):
    path = Path(args.model)
    if path.exists():
        return load_model_file(path)
    try:
        return bundled_model(args.model)
    except (FileNotFoundError, OSError):
        raise UsageError(f"cannot read model file {args.model}") from None


def _belief(args, model, default=None):
    if args.belief is None:
        if default is None:
            raise UsageError("--belief is required")
        return default
    try:
        return parse_belief(args.belief, model.N)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(args, payload, schema: str | None = None, text: str | None = None):
    if text is None:
        if schema is not None:
            validate_document(payload, schema)
        text = json.dumps(payload, indent=2, default=_plain) + "\n"
    if args.output:
        Path(args.output).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v).__name__}")


def _regions_out(args, regions, N):
    if args.format == "csv":
        _emit(args, None, text=regions_to_csv(regions, N))
    elif args.format == "polygons":
        if N != 3:
            raise UsageError("--format polygons needs a model with N=3")
        _emit(args, {"polygons": regions_to_polygons(regions, N)}, "polygons.schema.json")
    else:
        _emit(args, {"regions": [r.to_dict() for r in regions]}, "regions.schema.json")


# subcommands

def cmd_validate(args):
    model = _load(args)
    lo, hi = myopic_range(model)
    _emit(args, {"valid": True, "N": model.N, "M": model.M, "Z": model.Z,
                 "demands": model.demands.tolist(),
                 "costs": {"p": model.p, "h": model.h, "K": model.K, "beta": model.beta},
                 "myopic_range": [lo, hi]}, "summary.schema.json")


def cmd_partition(args):
    model = _load(args)
    _regions_out(args, partition_p1(model), model.N)


def cmd_check(args):
    model = _load(args)
    rep = assumptions.check_a1(model, args.method)
    out = rep.to_dict()
    out["a3"] = assumptions.check_a3(model)
    out["a4"] = assumptions.check_a4(model)
    out["min_delta"] = assumptions.min_delta(model)
    if args.belief is not None:
        x = _belief(args, model)
        depth = args.depth or 3
        out["a2"] = {"holds": assumptions.check_a2(model, x, depth), "depth": depth,
                     "certified_to_depth_only": True}
    _emit(args, out, "a1report.schema.json")


def cmd_solve(args):
    model = _load(args)
    if args.horizon is None and args.epsilon is None:
        raise UsageError("solve needs --horizon or --epsilon")
    if not assumptions.check_a1(model).holds:
        print("warning: attainability fails; the sets give the lower bound only", file=sys.stderr)
    if args.epsilon is not None:
        rep = gamma.solve_infinite(model, args.epsilon)
        G, gammas, report = rep.gamma, None, rep.to_dict()
    else:
        gammas = gamma.solve_finite(model, args.horizon)
        G, report = gammas[-1], None
    if args.format == "csv":
        _emit(args, None, text=G.to_csv())
        return
    out = {"horizon": G.horizon, "vectors": G.vectors.tolist()}
    if report is not None:
        out["report"] = report
    if args.belief is not None:
        x = _belief(args, model)
        q = {"belief": x.tolist(), "value": G.value(x)}
        if args.inventory is not None and gammas is not None:
            q["inventory"] = args.inventory
            q["value"] = gamma.value_full(model, gammas, x, args.inventory)
        out["query"] = q
    _emit(args, out, "gammaset.schema.json")


def cmd_bounds(args):
    model = _load(args)
    n = args.horizon or 2
    rep = bounds.delta_gap(model, n, seed=args.seed)
    out = rep.to_dict()
    if args.delta is not None or args.belief is not None:
        delta = assumptions.min_delta(model) if args.delta is None else args.delta
        x = _belief(args, model, default=np.eye(model.N)[0])
        s = args.inventory if args.inventory is not None else myopic_base_stock(model, x)
        low = bounds.lower_bound_vL(model, n).value(x)
        mid = bounds.tighter_lower_vprime(model, delta, n, x, s)
        up = bounds.upper_bound_vU(model, x, s, n, depth=args.depth or bounds.DEFAULT_DEPTH)
        out["shifted"] = {"delta": delta, "belief": x.tolist(), "inventory": s,
                          "lower": low, "shifted_lower": mid, "upper": up}
    _emit(args, out, "gapreport.schema.json")


def cmd_ssbounds(args):
    model = _load(args)
    if args.belief is not None:
        x = _belief(args, model)
        b = reorder.ss_bounds(model, x)
        out = b.to_dict()
        out["indices"] = list(b.indices)
        out["belief"] = x.tolist()
        _emit(args, out, "ssbounds.schema.json")
        return
    _regions_out(args, reorder.ss_partition(model), model.N)


def cmd_sssolve(args):
    model = _load(args)
    n = 2 if args.horizon is None else args.horizon
    pol = reorder.solve_ss_finite(model, n, depth=args.depth or reorder.DEFAULT_SS_DEPTH,
                                  s_max=args.inventory)
    out = pol.export(seed=args.seed)
    if args.belief is not None:
        x = _belief(args, model)
        q = {"belief": x.tolist(), **pol.policy_at(x)}
        if args.inventory is not None:
            q["inventory"] = args.inventory
            q["value"] = pol.value(x, args.inventory)
            q["action"] = pol.action(x, args.inventory)
        out["query"] = q
    _emit(args, out, "sspolicy.schema.json")


def cmd_simulate(args):
    model = _load(args)
    x0 = _belief(args, model, default=np.full(model.N, 1.0 / model.N))
    s0 = 0 if args.inventory is None else args.inventory
    horizon = args.horizon or 30
    if args.policy == "ss":
        pol = simulate.SSRule(reorder.solve_ss_finite(model, args.ss_horizon, s_max=s0))
    else:
        pol = simulate.MyopicPolicy(model)
    res = simulate.simulate_policy(model, pol, x0, s0, horizon, args.replications, args.seed,
                                   check_absorption=args.policy == "myopic",
                                   trace=args.trace if args.output else 0)
    out = res.to_dict()
    out["policy"] = args.policy
    validate_document(out, "simulation.schema.json")
    if args.output:
        Path(args.output).write_text(simulate.trace_csv(res.trace, model.N), "utf-8")
    sys.stdout.write(json.dumps(out, indent=2) + "\n")


def cmd_export_plot(args):
    model = _load(args)
    if model.N != 3:
        raise UsageError("export-plot needs a model with N=3")
    if args.figure == "p1":
        regions = partition_p1(model)
    elif args.figure == "ss":
        regions = reorder.ss_partition(model)
    else:
        _emit(args, _xhat_points(model, args), "polygons.schema.json")
        return
    if args.format == "csv":
        _emit(args, None, text=regions_to_csv(regions, model.N))
    else:
        _emit(args, {"polygons": regions_to_polygons(regions, model.N)}, "polygons.schema.json")


def _xhat_points(model, args):
    """The dominance witness for one outcome, with the posteriors of the
    vertices and of a grid of priors."""
    k = args.demand_index
    z = args.signal
    xh = assumptions.construct_xhat(model, k, z)
    grid = gamma.lattice_probes(model.N, 20)
    sig, post = posteriors(model, grid)
    ok = sig[:, k, z] > 0
    pts = post[ok, k, z]
    return {
        "polygons": regions_to_polygons(partition_p1(model), model.N),
        "points": [
            {"label": "xhat", "x": xh.tolist(), "xy": barycentric_to_xy(xh).tolist()},
            {"label": "posteriors", "x": pts.tolist(), "xy": barycentric_to_xy(pts).tolist()},
        ],
    }


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beliefstock", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *flags):
        p.add_argument("--model", required=True, help="model JSON file or bundled name")
        p.add_argument("--output", help="write to this file instead of stdout")
        for f in flags:
            {
                "horizon": lambda: p.add_argument("--horizon", type=int),
                "belief": lambda: p.add_argument("--belief", help='comma-separated, e.g. "1,0,0"'),
                "inventory": lambda: p.add_argument("--inventory", type=int),
                "epsilon": lambda: p.add_argument("--epsilon", type=float),
                "delta": lambda: p.add_argument("--delta", type=int),
                "seed": lambda: p.add_argument("--seed", type=int, default=0),
                "replications": lambda: p.add_argument("--replications", type=int, default=10_000),
                "depth": lambda: p.add_argument("--depth", type=int),
                "format": lambda: p.add_argument("--format", choices=["json", "csv", "polygons"],
                                                 default="json"),
            }[f]()
        return p

    common(sub.add_parser("validate", help="validate a model document"))
    common(sub.add_parser("partition", help="myopic base stock regions"), "format")
    p = common(sub.add_parser("check", help="attainability and its sufficient conditions"),
               "belief", "depth")
    p.add_argument("--method", choices=["exact_lp", "sufficient_a3a4", "sampled"], default="exact_lp")
    common(sub.add_parser("solve", help="value function sets"),
           "horizon", "epsilon", "belief", "inventory", "format")
    common(sub.add_parser("bounds", help="gap bound and lower/upper bounds"),
           "horizon", "belief", "inventory", "delta", "depth", "seed")
    common(sub.add_parser("ssbounds", help="(s,S) bounds at a belief or as a partition"),
           "belief", "format")
    common(sub.add_parser("sssolve", help="finite-horizon (s,S) policy"),
           "horizon", "belief", "inventory", "depth", "seed")
    p = common(sub.add_parser("simulate", help="Monte-Carlo policy cost"),
               "horizon", "belief", "inventory", "seed", "replications")
    p.add_argument("--policy", choices=["myopic", "ss"], default="myopic")
    p.add_argument("--ss-horizon", type=int, default=2)
    p.add_argument("--trace", type=int, default=1, help="replications to trace into --output")
    p = common(sub.add_parser("export-plot", help="plot geometry (no images)"), "format")
    p.add_argument("--figure", choices=["p1", "xhat", "ss"], default="p1")
    p.add_argument("--demand-index", type=int, default=4)
    p.add_argument("--signal", type=int, default=0)
    return ap


HANDLERS = {
    "validate": cmd_validate,
    "partition": cmd_partition,
    "check": cmd_check,
    "solve": cmd_solve,
    "bounds": cmd_bounds,
    "ssbounds": cmd_ssbounds,
    "sssolve": cmd_sssolve,
    "simulate": cmd_simulate,
    "export-plot": cmd_export_plot,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BeliefStockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
