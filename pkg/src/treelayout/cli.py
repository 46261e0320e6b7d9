"""Command-line front end: generate trees, lay them out, price the results.

Subcommands:

* ``gen``     -- write a tree file (perfect | path | random | lowerbound)
* ``layout``  -- compute a block layout (aware) or linear order (oblivious)
* ``eval``    -- cost a tree/layout pair, one CSV row per (B, offset, depth)
* ``sweep``   -- run a config-driven grid of families x sizes x block sizes
* ``oracle``  -- brute-force optimal transfer count plus witness partition

All artifacts are plain JSON or CSV and contain no timestamps, so a fixed
seed reproduces them byte for byte.  Exit codes: 0 success, 2 usage,
3 invalid input, 4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .aware import (exclusion_violations, layout_aware, layout_from_json,
                    layout_to_json, padded_order)
from .cost import (brute_force_optimal, cost_report, theoretical_bound,
                   solve_p, worst_case_cost)
from .oblivious import blocks_at, layout_oblivious, order_to_json
from .tree import (ResourceLimitError, TreeError, TreeTopology, compute_weights,
                   gen_lower_bound, gen_path, gen_perfect, gen_random,
                   load_tree, tree_to_json)

log = logging.getLogger("treelayout")

CSV_COLUMNS = ("tree_id", "family", "N", "B", "layout", "offset", "D",
               "worst_exact", "worst_cum", "bound", "ratio")

FAMILIES = ("perfect", "path", "random", "lowerbound")


def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def _write_json(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _write_rows(rows, out: Optional[str], fmt: str) -> None:
    if fmt == "json":
        _write_json({"rows": rows}, out)
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[k]) for k in CSV_COLUMNS])
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        Path(out).write_text(buf.getvalue())


# ---------------------------------------------------------------- gen

def cmd_gen(args) -> int:
    family = args.family
    if family == "perfect":
        if args.height is None:
            raise ValueError("gen perfect requires --height")
        tree = gen_perfect(args.height)
    elif family == "path":
        if args.n is None:
            raise ValueError("gen path requires --n")
        tree = gen_path(args.n)
    elif family == "random":
        if args.n is None:
            raise ValueError("gen random requires --n")
        tree = gen_random(args.n, seed=args.seed)
    else:  # lowerbound
        if not args.B or args.inv_p is None or args.n is None:
            raise ValueError("gen lowerbound requires --B, --inv-p and --n")
        tree = gen_lower_bound(args.B[0], args.inv_p, args.n)
    _write_json(tree_to_json(tree), args.out)
    log.info("gen %s: %d nodes", family, tree.n)
    return 0


# ---------------------------------------------------------------- layout

def cmd_layout(args, parser: argparse.ArgumentParser) -> int:
    tree = load_tree(args.tree)
    t0 = time.perf_counter()
    if args.mode == "aware":
        if not args.B:
            parser.error("layout aware requires --B")
        B = args.B[0]
        asg = layout_aware(tree, B, _parse_fraction(args.c))
        _write_json(layout_to_json(asg), args.out)
        if args.padded_out is not None:
            slots = padded_order(asg)
            _write_json({"B": B, "order": slots}, args.padded_out)
        log.info("aware layout: N=%d B=%d blocks=%d (%.3fs)",
                 tree.n, B, len(asg.blocks), time.perf_counter() - t0)
    else:
        order = layout_oblivious(tree)
        _write_json(order_to_json(order), args.out)
        log.info("oblivious order: N=%d (%.3fs)",
                 tree.n, time.perf_counter() - t0)
    return 0


# ---------------------------------------------------------------- eval

def _load_layout_file(path: str, tree: TreeTopology):
    """Return ("blocks", BlockAssignment) or ("order", node->block map factory)."""
    obj = json.loads(Path(path).read_text())
    if "blocks" in obj:
        return "blocks", layout_from_json(obj, n=tree.n)
    if "order" in obj:
        slots = obj["order"]
        ids = [x for x in slots if x is not None]
        if sorted(ids) != list(range(tree.n)):
            raise TreeError("order file does not cover the tree's node ids")
        return "order", slots
    raise TreeError(f"{path}: neither a block layout nor a linear order")


def _rows_for_report(rep, N: int, B: int, kind: str, offset: int,
                     tree_id: str, family: str, depths) -> list:
    rows = []
    for D in depths:
        bound = theoretical_bound(N, D, B)
        we = rep.worst_exact[D]
        rows.append({
            "tree_id": tree_id, "family": family, "N": N, "B": B,
            "layout": kind, "offset": offset, "D": D,
            "worst_exact": we, "worst_cum": rep.worst_cum[D],
            "bound": bound, "ratio": we / max(1.0, bound),
        })
    return rows


def cmd_eval(args) -> int:
    tree = load_tree(args.tree)
    kind, payload = _load_layout_file(args.layout, tree)
    tree_id = Path(args.tree).stem
    if args.D is not None:
        if not 0 <= args.D <= tree.height:
            raise ValueError(f"--D {args.D} outside 0..{tree.height}")
        depths = [args.D]
    else:
        depths = range(tree.height + 1)
    rows = []
    if kind == "blocks":
        asg = payload
        rep = cost_report(tree, asg.block_of, B=asg.B, kind="aware")
        rows += _rows_for_report(rep, tree.n, asg.B, "aware", 0,
                                 tree_id, "-", depths)
    else:
        if not args.B:
            raise ValueError("--B is required to evaluate a linear order")
        slots = payload
        for B in args.B:
            if B < 1:
                raise ValueError("B must be >= 1")
            offsets = range(B) if args.offsets == "all" else (0,)
            for off in offsets:
                blk = {x: (pos + off) // B
                       for pos, x in enumerate(slots) if x is not None}
                rep = cost_report(tree, blk, B=B, kind="oblivious")
                rows += _rows_for_report(rep, tree.n, B, "oblivious", off,
                                         tree_id, "-", depths)
    _write_rows(rows, args.out, args.format)
    return 0


# ---------------------------------------------------------------- sweep

@dataclass
class SweepConfig:
    """A reproducible grid of (family, N, B) cost-measurement cells."""

    families: dict                      # family name -> list of sizes
    Bs: list
    c: Fraction = Fraction(1)
    depths: str = "log"                 # "all" | "log"
    offsets: str = "zero"               # "zero" | "all"
    seed: int = 0
    csv_out: Optional[str] = None
    summary_out: Optional[str] = None

    def __post_init__(self):
        for fam, sizes in self.families.items():
            if fam not in FAMILIES:
                raise ValueError(f"unknown family {fam!r}")
            if not sizes or any(n < 1 for n in sizes):
                raise ValueError(f"family {fam!r} needs positive sizes")
        if not self.Bs or any(b < 1 for b in self.Bs):
            raise ValueError("B list must be positive")
        if self.depths not in ("all", "log"):
            raise ValueError("depths policy must be 'all' or 'log'")
        if self.offsets not in ("zero", "all"):
            raise ValueError("offsets policy must be 'zero' or 'all'")

    @classmethod
    def from_json(cls, obj: dict) -> "SweepConfig":
        kw = dict(obj)
        if "c" in kw:
            kw["c"] = _parse_fraction(str(kw["c"]))
        return cls(**kw)


def _depth_grid(height: int, policy: str):
    if policy == "all":
        return list(range(height + 1))
    ds = []
    d = 1
    while d <= height:
        ds.append(d)
        d *= 2
    if height >= 1 and (not ds or ds[-1] != height):
        ds.append(height)
    return ds or [0]


def _gadget_inv_p(N: int, D: int, B: int) -> int:
    """Power-of-two branching factor matching the adversarial density."""
    p = solve_p(N, D, B)
    inv = float(1 / p)
    j = max(1, round(math.log2(inv)))
    return 1 << j


def _sweep_tree(family: str, N: int, B: int, cfg: SweepConfig,
                cache: dict):
    if family == "lowerbound":
        # the gadget shape depends on B; pick the density for a mid-range
        # depth so one tree serves the whole depth grid
        D_ref = max(1, math.ceil(math.log2(max(2, N)) * math.sqrt(B)))
        inv_p = _gadget_inv_p(N, D_ref, B)
        key = (family, N, B, inv_p)
        tid = f"lowerbound-{N}-B{B}"
    else:
        key = (family, N)
        tid = f"{family}-{N}"
    if key in cache:
        return cache[key], tid
    if family == "perfect":
        h = (N + 1).bit_length() - 2
        if h < 0 or (1 << (h + 1)) - 1 != N:
            raise ValueError(f"perfect family needs N = 2^h - 1, got {N}")
        tree = gen_perfect(h)
    elif family == "path":
        tree = gen_path(N)
    elif family == "random":
        tree = gen_random(N, seed=cfg.seed * 1_000_003 + N)
    else:
        tree = gen_lower_bound(B, inv_p, N)
    cache[key] = tree
    return tree, tid


def run_sweep(cfg: SweepConfig):
    """Execute the grid; returns (rows, summary dict)."""
    rows: list = []
    trees: dict = {}
    orders: dict = {}
    excl = 0
    t0 = time.perf_counter()
    for family in sorted(cfg.families):
        for N in cfg.families[family]:
            for B in cfg.Bs:
                tree, tid = _sweep_tree(family, N, B, cfg, trees)
                depths = _depth_grid(tree.height, cfg.depths)
                asg = layout_aware(tree, B, cfg.c)
                excl += exclusion_violations(tree, compute_weights(tree), asg)
                rep = cost_report(tree, asg.block_of, B=B, kind="aware")
                rows += _rows_for_report(rep, tree.n, B, "aware", 0,
                                         tid, family, depths)
                if tid not in orders:
                    orders[tid] = layout_oblivious(tree)
                order = orders[tid]
                offs = range(B) if cfg.offsets == "all" else (0,)
                for off in offs:
                    rep = cost_report(tree, blocks_at(order, B, off),
                                      B=B, kind="oblivious")
                    rows += _rows_for_report(rep, tree.n, B, "oblivious", off,
                                             tid, family, depths)
                log.info("sweep cell %s B=%d done (%.1fs elapsed)",
                         tid, B, time.perf_counter() - t0)
    summary = _summarize(cfg, rows, excl)
    return rows, summary


def _summarize(cfg: SweepConfig, rows, excl: int) -> dict:
    fams: dict = {}
    for row in rows:
        f = fams.setdefault(row["family"], {})
        k = f.setdefault(row["layout"], {"max_ratio": 0.0, "by_N": {}})
        r = row["ratio"]
        k["max_ratio"] = max(k["max_ratio"], r)
        key = str(row["N"])
        k["by_N"][key] = max(k["by_N"].get(key, 0.0), r)
    for fam, stats in fams.items():
        for kind, k in list(stats.items()):
            by = k["by_N"]
            ns = sorted(int(x) for x in by)
            small, large = by[str(ns[0])], by[str(ns[-1])]
            k["growth_factor"] = large / small if small > 0 else 0.0
            k["growth_ok"] = large <= 1.5 * small
    return {
        "rows": len(rows),
        "exclusion_violations": excl,
        "families": fams,
    }


def cmd_sweep(args) -> int:
    cfg = SweepConfig.from_json(json.loads(Path(args.config).read_text()))
    rows, summary = run_sweep(cfg)
    csv_out = args.out if args.out is not None else cfg.csv_out
    _write_rows(rows, csv_out, "csv")
    _write_json(summary, cfg.summary_out)
    return 0


# ---------------------------------------------------------------- oracle

def cmd_oracle(args) -> int:
    tree = load_tree(args.tree)
    B = args.B[0]
    best, parts = brute_force_optimal(tree, B, args.D)
    print(f"optimal worst-case transfers at depth {args.D}: {best}")
    print(f"witness blocks: {json.dumps(parts)}")
    asg = layout_aware(tree, B)
    got = worst_case_cost(tree, asg.block_of, args.D).worst_exact
    print(f"aware layout cost: {got} ({got / best:.2f}x optimal)")
    return 0


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="treelayout",
        description="Block layouts for fixed-topology binary trees "
                    "and their transfer-cost measurements.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a tree file")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--height", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--B", type=int, action="append")
    g.add_argument("--inv-p", type=int, dest="inv_p")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    l = sub.add_parser("layout", help="lay a tree out")
    l.add_argument("mode", choices=("aware", "oblivious"))
    l.add_argument("--tree", required=True)
    l.add_argument("--B", type=int, action="append")
    l.add_argument("--c", default="1")
    l.add_argument("--out")
    l.add_argument("--padded-out", dest="padded_out",
                   help="also write the aware layout as an aligned, padded "
                        "linear order")
    l.set_defaults(func=lambda a: cmd_layout(a, l))

    e = sub.add_parser("eval", help="cost a layout against a tree")
    e.add_argument("--tree", required=True)
    e.add_argument("--layout", required=True)
    e.add_argument("--B", type=int, action="append")
    e.add_argument("--D", type=int)
    e.add_argument("--offsets", choices=("zero", "all"), default="zero")
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="run a measurement grid from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="override the config's CSV path")
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oracle", help="brute-force optimum for small trees")
    o.add_argument("--tree", required=True)
    o.add_argument("--B", type=int, action="append", required=True)
    o.add_argument("--D", type=int, required=True)
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        log.error("%s", exc)
        return 4
    except (TreeError, ValueError) as exc:
        log.error("%s", exc)
        return 3
    except OSError as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
