"""Command line: run a scenario, validate it, or summarise a finished run."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from collections import defaultdict
from pathlib import Path

from .simchain import ScenarioError, load_scenario, run_chain, validate_scenario


def _read(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _float(text: str) -> float:
    return float(text) if text not in ("", None) else math.nan


def _write(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _show(title: str, header: list[str], rows: list[list]) -> None:
    cells = [[f"{c:.2f}" if isinstance(c, float) else str(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(header)]
    print(title)
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in cells:
        print("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    print()


def price_table(rows: list[dict]) -> list[list]:
    groups = defaultdict(list)
    for r in rows:
        p = _float(r["price"])
        if not math.isnan(p):
            groups[(r["market"], r["zone"])].append(p)
    return [[m, z, len(v), sum(v) / len(v), min(v), max(v)]
            for (m, z), v in sorted(groups.items())]


def welfare_table(rows: list[dict]) -> list[list]:
    return [[r["market"], r["day"], _float(r["welfare"]), r["pricing"],
             len(r["paradoxical"].split()), _float(r["make_whole_total"])] for r in rows]


def imbalance_table(rows: list[dict], delta_t: float) -> list[list]:
    groups = defaultdict(list)
    for r in rows:
        groups[(r["market"], r["portfolio"])].append(r)
    out = []
    for (m, p), rs in sorted(groups.items()):
        total = [_float(r["total"]) for r in rs]
        large = [_float(r["large_up"]) + _float(r["large_down"]) for r in rs]
        out.append([m, p, sum(abs(x) for x in total) * delta_t,
                    max(abs(x) for x in total), sum(large) * delta_t])
    return out


def _figures(out: Path, prices: list[dict], imbalances: list[dict]) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    made = []
    series = defaultdict(list)
    for r in prices:
        series[(r["market"], r["zone"])].append((r["timestamp"], _float(r["price"])))
    if series:
        fig, ax = plt.subplots(figsize=(9, 4))
        for (m, z), pts in sorted(series.items()):
            pts.sort()
            ax.step(range(len(pts)), [p for _, p in pts], where="post", label=f"{m} {z}")
        ax.set_xlabel("step")
        ax.set_ylabel("price [EUR/MWh]")
        ax.legend(fontsize="small", ncol=2)
        fig.tight_layout()
        made.append(out / "prices.png")
        fig.savefig(made[-1], dpi=120)
        plt.close(fig)
    series = defaultdict(list)
    for r in imbalances:
        series[(r["market"], r["portfolio"])].append((r["timestamp"], _float(r["total"])))
    if series:
        fig, ax = plt.subplots(figsize=(9, 4))
        for (m, p), pts in sorted(series.items()):
            pts.sort()
            ax.plot(range(len(pts)), [v for _, v in pts], label=f"{m} {p}")
        ax.axhline(0.0, color="grey", lw=0.5)
        ax.set_xlabel("step")
        ax.set_ylabel("imbalance [MW]")
        ax.legend(fontsize="small", ncol=2)
        fig.tight_layout()
        made.append(out / "imbalances.png")
        fig.savefig(made[-1], dpi=120)
        plt.close(fig)
    return made


def report(run_dir: Path, quiet: bool = False) -> Path:
    """Summary CSVs and figures under ``run_dir/report``."""
    if not (run_dir / "manifest.json").exists():
        raise FileNotFoundError(f"{run_dir} is not a run directory (no manifest.json)")
    manifest = json.loads((run_dir / "manifest.json").read_text())
    out = run_dir / "report"
    out.mkdir(exist_ok=True)
    prices, imbalances = _read(run_dir / "prices.csv"), _read(run_dir / "imbalances.csv")
    tables = {
        "prices": (["market", "zone", "steps", "mean", "min", "max"], price_table(prices)),
        "welfare": (["market", "day", "welfare", "pricing", "paradoxical", "make_whole"],
                    welfare_table(_read(run_dir / "welfare.csv"))),
        "imbalances": (["market", "portfolio", "abs_energy_mwh", "max_abs_mw",
                        "large_energy_mwh"],
                       imbalance_table(imbalances, float(manifest.get("delta_t", 1.0)))),
    }
    for name, (header, rows) in tables.items():
        _write(out / f"{name}_summary.csv", header, rows)
        if not quiet:
            _show(name, header, rows)
    _figures(out, prices, imbalances)
    if not quiet and manifest.get("errors"):
        print(f"{len(manifest['errors'])} module error(s):")
        for e in manifest["errors"]:
            print(f"  {e['module']} {e['market']} day {e['day']} at {e['timestamp']}: "
                  f"{e['message']}")
    return out


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridmarket", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario")
    run.add_argument("scenario", type=Path)
    run.add_argument("--out", type=Path, help="run directory (default: <output>/<name>)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--time-limit", type=float, help="solver time limit per model [s]")
    run.add_argument("--network", choices=["atc", "fb"], help="override the network model")
    run.add_argument("--dump-lp", action="store_true", help="write every model as LP file")

    val = sub.add_parser("validate", help="check a scenario without running it")
    val.add_argument("scenario", type=Path)

    rep = sub.add_parser("report", help="summary tables and figures of a run")
    rep.add_argument("run_dir", type=Path)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        problems = validate_scenario(args.scenario)
        for p in problems:
            print(p)
        if not problems:
            print(f"{args.scenario}: ok")
        return 1 if problems else 0
    if args.command == "report":
        try:
            out = report(args.run_dir)
        except FileNotFoundError as exc:
            print(exc, file=sys.stderr)
            return 2
        print(f"report written to {out}")
        return 0
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    out = args.out or Path(sc.output) / sc.name
    res = run_chain(sc, out, seed=args.seed, time_limit=args.time_limit,
                    network_mode=args.network, dump_lp=args.dump_lp)
    print(f"{sc.name}: {sc.days} day(s) in {res.manifest['elapsed_s']} s, "
          f"{len(res.errors)} error(s); results in {out}")
    return 1 if res.errors else 0


if __name__ == "__main__":
    sys.exit(main())
