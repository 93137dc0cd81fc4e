"""Command-line front end.

Every command reads a network (and usually a path), writes one JSON report
to ``--out`` (stdout by default) and exits 0, 2 on invalid input or 3 when
no plan satisfies the constraints.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import audit_smaller_sets, exhaustive_slicer, greedy_slicer, random_instance
from .cost import (MemoryLevel, MemoryLevelModel, SliceSet, advise_strategy, overhead,
                   overhead_fraction, sliced_cost, tree_cost)
from .errors import InfeasibleError, TNSlicerError, ValidationError
from .executor import contract_full, contract_sliced, random_inputs
from .fusion import DEFAULT_CAPACITY, fused_cost_model, plan_fusion
from .lifetime import all_lifetimes, correlated_nodes, extract_stem, restrict_lifetimes
from .network import build_tree, greedy_test_path, parse_network, parse_path
from .refine import AnnealConfig, anneal, refine_chains
from .slicing import POOLS, find_tree_slices

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_MISMATCH = 0, 2, 3, 1


class Context:
    """Loaded inputs plus the provenance that goes into the report."""

    def __init__(self, args):
        self.args = args
        self.hashes: dict[str, str] = {}
        self._tree = None

    def read(self, path: str) -> str:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"no such file: {path}")
        raw = p.read_bytes()
        self.hashes[p.name] = hashlib.sha256(raw).hexdigest()
        return raw.decode("utf-8")

    @property
    def tree(self):
        if self._tree is None:
            if not self.args.net:
                raise ValidationError("--net is required for this command")
            net = parse_network(self.read(self.args.net))
            if self.args.path:
                path = parse_path(self.read(self.args.path))
            else:
                path = greedy_test_path(net, seed=self.args.seed)
            self._tree = build_tree(net, path)
        return self._tree

    def slices(self, t: int | None = None) -> SliceSet | None:
        if self.args.slices is None:
            return None
        ixs = tuple(ix for ix in self.args.slices.split(",") if ix)
        for ix in ixs:
            if ix not in self.tree.network.edges:
                raise ValidationError(f"--slices: unknown index {ix!r}")
        if t is None:
            t = max(self.tree.rank(e) - sum(ix in self.tree.edge_indices[e] for ix in ixs)
                    for e in range(self.tree.n_edges))
        return SliceSet(ixs, t, "manual")

    def target(self) -> int:
        if self.args.target is None:
            raise ValidationError("--target is required for this command")
        if self.args.target < 1:
            raise ValidationError(f"--target must be >= 1, got {self.args.target}")
        return self.args.target


def _anneal_config(args) -> AnnealConfig:
    try:
        return AnnealConfig(args.t_initial, args.t_final, args.alpha, args.seed, args.max_iters)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _slice_report(tree, S: SliceSet) -> dict:
    d = S.to_dict()
    d.update(sliced_cost(tree, S).to_dict())
    d["overhead"] = overhead(tree, S)
    d["subtasks"] = 1 << len(S)
    return d


def _load_model(ctx: Context) -> MemoryLevelModel | None:
    if not ctx.args.model:
        return None
    doc = json.loads(ctx.read(ctx.args.model))
    try:
        levels = tuple(MemoryLevel(str(lv["name"]), float(lv["capacity_bytes"]),
                                   float(lv["bandwidth_bytes_per_s"])) for lv in doc["levels"])
        return MemoryLevelModel(levels, float(doc["peak_flops"]), int(doc.get("element_bytes", 16)))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"memory model: missing or malformed field {exc}") from exc


def cmd_cost(ctx: Context) -> dict:
    tree = ctx.tree
    out = {"tree": tree_cost(tree).to_dict(), "n_leaves": tree.n_leaves}
    S = ctx.slices()
    if S is not None:
        out["sliced"] = _slice_report(tree, S)
        model = _load_model(ctx)
        if model is not None:
            out["advice"] = [a.to_dict() for a in advise_strategy(model, tree, [S])]
    return out


def cmd_lifetimes(ctx: Context) -> dict:
    tree = ctx.tree
    return {"lifetimes": {ix: {"tree_edges": list(lf.tree_edges),
                               "endpoints": list(lf.endpoints),
                               "correlated_nodes": correlated_nodes(tree, ix)}
                          for ix, lf in sorted(all_lifetimes(tree).items())}}


def cmd_stem(ctx: Context) -> dict:
    tree = ctx.tree
    stem = extract_stem(tree)
    return {"tensors": list(stem.tensors), "nodes": list(stem.nodes),
            "branches": list(stem.branches), "node_log2": list(stem.node_costs),
            "ranks": [tree.rank(e) for e in stem.tensors],
            "intervals": {ix: list(v) for ix, v in
                          sorted(restrict_lifetimes(tree, stem).items())}}


def cmd_slice(ctx: Context) -> dict:
    tree, t = ctx.tree, ctx.target()
    method = ctx.args.method
    if method == "finder":
        S = find_tree_slices(tree, t, ctx.args.finder_pool)
    elif method == "greedy":
        S = greedy_slicer(tree, t)
    else:
        S, _ = exhaustive_slicer(tree, t, ctx.args.max_pool)
    return {"method": method, "slices": _slice_report(tree, S)}


def cmd_refine(ctx: Context) -> dict:
    tree, t = ctx.tree, ctx.target()
    S0 = ctx.slices(t) or find_tree_slices(tree, t, ctx.args.finder_pool)
    cfg = _anneal_config(ctx.args)
    S = refine_chains(tree, S0, cfg, ctx.args.chains, ctx.args.workers)
    return {"initial": _slice_report(tree, S0), "refined": _slice_report(tree, S),
            "schedule": {"t_initial": cfg.t_initial, "t_final": cfg.t_final,
                         "alpha": cfg.alpha, "chains": ctx.args.chains}}


def cmd_fuse(ctx: Context) -> dict:
    tree = ctx.tree
    S = ctx.slices()
    stem = extract_stem(tree)
    plan = plan_fusion(tree, stem, restrict_lifetimes(tree, stem), ctx.args.capacity,
                       S.indices if S else ())
    out = {"plan": plan.to_dict()}
    model = _load_model(ctx)
    if model is not None:
        out["cost"] = fused_cost_model(plan, model, ctx.args.granularity).to_dict()
    return out


def cmd_exec(ctx: Context) -> dict:
    tree = ctx.tree
    net = tree.network
    if ctx.args.slices is not None:
        S = ctx.slices()
    else:
        S = find_tree_slices(tree, ctx.target(), ctx.args.finder_pool)
    inputs = random_inputs(net, ctx.args.seed)
    full, c_full = contract_full(net, tree, inputs, ctx.args.force)
    part, c_sliced = contract_sliced(net, tree, S, inputs, ctx.args.workers, ctx.args.force)
    scale = float(np.max(np.abs(full.data))) or 1.0
    rel = float(np.max(np.abs(full.data - part.data))) / scale
    measured = Fraction(c_sliced.scalar_multiplies, c_full.scalar_multiplies)
    predicted = overhead_fraction(tree, S)
    return {"slices": S.to_dict(), "flops_full": str(c_full.scalar_multiplies),
            "flops_sliced": str(c_sliced.scalar_multiplies),
            "overhead_measured": float(measured), "overhead_predicted": float(predicted),
            "overhead_match": measured == predicted, "max_relative_error": rel,
            "values_match": rel <= 1e-10}


def cmd_audit(ctx: Context) -> dict:
    tree, t = ctx.tree, ctx.target()
    best, land = exhaustive_slicer(tree, t, ctx.args.max_pool)
    audit = audit_smaller_sets(land)
    return {"pool": land.pool, "valid_sets": len(land.flops),
            "optimum": _slice_report(tree, best), "checked": audit.checked,
            "ties": audit.ties,
            "counterexamples": [sorted(s) for s, _ in audit.counterexamples]}


def _bench_one(seed: int, cfg: AnnealConfig, pool: str) -> dict:
    inst = random_instance(seed)
    tree, t = inst.tree, inst.t
    g = greedy_slicer(tree, t)
    f = find_tree_slices(tree, t, pool)
    r = anneal(tree, f, AnnealConfig(cfg.t_initial, cfg.t_final, cfg.alpha, seed,
                                     cfg.max_outer_iters)).slices
    return {"seed": seed, "t": t, "greedy_size": len(g), "finder_size": len(f),
            "greedy_overhead": overhead(tree, g), "refined_overhead": overhead(tree, r)}


def cmd_bench(ctx: Context) -> dict:
    args = ctx.args
    cfg = _anneal_config(args)
    seeds = range(args.seed, args.seed + args.instances)
    if args.workers > 1:
        with ThreadPoolExecutor(args.workers) as ex:
            rows = list(ex.map(lambda s: _bench_one(s, cfg, args.finder_pool), seeds))
    else:
        rows = [_bench_one(s, cfg, args.finder_pool) for s in seeds]
    n = len(rows) or 1
    return {"instances": len(rows),
            "overhead_le_greedy": sum(r["refined_overhead"] <= r["greedy_overhead"] for r in rows) / n,
            "size_le_greedy": sum(r["finder_size"] <= r["greedy_size"] for r in rows) / n,
            "rows": rows}


COMMANDS = {"cost": cmd_cost, "lifetimes": cmd_lifetimes, "stem": cmd_stem,
            "slice": cmd_slice, "refine": cmd_refine, "fuse": cmd_fuse,
            "exec": cmd_exec, "audit": cmd_audit, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--net", help="network JSON file")
    common.add_argument("--path", help="SSA path JSON file (default: seeded greedy path)")
    common.add_argument("--out", help="report file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--target", type=int, help="memory target as a rank")
    common.add_argument("--slices", help="comma-separated sliced indices")
    common.add_argument("--timestamps", action="store_true", help="add a creation time to the report")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--finder-pool", choices=POOLS, default="local")

    anneal_opts = argparse.ArgumentParser(add_help=False)
    anneal_opts.add_argument("--t-initial", type=float, default=1.0)
    anneal_opts.add_argument("--t-final", type=float, default=1e-3)
    anneal_opts.add_argument("--alpha", type=float, default=0.95)
    anneal_opts.add_argument("--max-iters", type=int, default=10000, help="outer iteration cap")

    model_opts = argparse.ArgumentParser(add_help=False)
    model_opts.add_argument("--model", help="memory-level model JSON file")

    p = argparse.ArgumentParser(prog="tn-slicer", description="Slicing planner for tensor-network contraction.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("cost", parents=[common, model_opts], help="cost of the tree, optionally sliced")
    sub.add_parser("lifetimes", parents=[common], help="lifetime of every index")
    sub.add_parser("stem", parents=[common], help="stem, branches and stem intervals")
    s = sub.add_parser("slice", parents=[common], help="find a slice set for --target")
    s.add_argument("--method", choices=("finder", "greedy", "exhaustive"), default="finder")
    s.add_argument("--max-pool", type=int, default=14)
    r = sub.add_parser("refine", parents=[common, anneal_opts], help="anneal a slice set")
    r.add_argument("--chains", type=int, default=1)
    f = sub.add_parser("fuse", parents=[common, model_opts], help="fused stem plan")
    f.add_argument("--capacity", type=int, default=DEFAULT_CAPACITY, help="scratchpad rank")
    f.add_argument("--granularity", type=int, default=0, help="minimum transfer in bytes")
    e = sub.add_parser("exec", parents=[common], help="contract and check sliced results")
    e.add_argument("--verify", action="store_true", help="print the overhead comparison")
    e.add_argument("--force", action="store_true", help="ignore the desk-scale flop limit")
    a = sub.add_parser("audit", parents=[common], help="exhaustive landscape audit")
    a.add_argument("--max-pool", type=int, default=12)
    b = sub.add_parser("bench", parents=[common, anneal_opts], help="finder+refiner vs greedy on random instances")
    b.add_argument("--instances", type=int, default=200)
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("workers", "chains", "instances"):
        if getattr(args, name, 1) < 1:
            print(f"error: --{name} must be >= 1", file=sys.stderr)
            return EXIT_INVALID
    ctx = Context(args)
    try:
        result = COMMANDS[args.command](ctx)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (TNSlicerError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    report = {"command": args.command, "version": __version__, "seed": args.seed,
              "inputs": dict(sorted(ctx.hashes.items())), "result": result}
    if args.timestamps:
        report["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)

    code = EXIT_OK
    if args.command == "exec" and args.verify:
        same = result["overhead_match"]
        print(f"overhead_measured == overhead_predicted: {'true' if same else 'false'}",
              file=sys.stderr if not args.out else sys.stdout)
        if not (same and result["values_match"]):
            code = EXIT_MISMATCH
    return code


def main() -> None:
    sys.exit(run())
