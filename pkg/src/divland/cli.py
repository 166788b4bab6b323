"""Command-line front end: evolve, evaluate, analyze, compare, merge.

Every command writes its products plus a manifest into --out and never
modifies its inputs. Exit codes: 0 success, 1 usage or configuration error,
2 I/O or input-file error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, figures, store
from .evolve import (
    H0_SCHEDULE,
    OBJECTIVE_NAMES,
    EvolutionConfig,
    merge_archives,
    run_evolution,
)
from .network import MAX_HIDDEN, Genome

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INTERNAL = 3

# Keys a JSON config file may set; command-line flags win on conflict.
CONFIG_KEYS = {
    "pop": int,
    "gens": int,
    "hidden": int,
    "constrained": bool,
    "spike_objective": bool,
    "seed": int,
    "jobs": int,
    "landings": int,
    "episodes": int,
}


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="divland",
                     description="Evolve and study spiking divergence-landing controllers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")

    p = sub.add_parser("evolve", help="run one evolution and write its archive")
    common(p)
    p.add_argument("--pop", type=int, default=None, help="population size (default 100)")
    p.add_argument("--gens", type=int, default=None, help="generations (default 400)")
    p.add_argument("--hidden", type=int, default=None,
                   help=f"hidden neurons, 0..{MAX_HIDDEN} (default {MAX_HIDDEN})")
    p.add_argument("--constrained", action="store_true", default=None,
                   help="use the constrained mutation ranges")
    p.add_argument("--no-spike-objective", action="store_true",
                   help="drop the spike-rate objective from selection (still reported)")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel evaluation workers (results identical to --jobs 1)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("evaluate", help="robustness statistics for stored genomes")
    common(p)
    p.add_argument("inputs", nargs="+", help="genome files or archive directories")
    p.add_argument("--landings", type=int, default=None,
                   help="randomized landings per genome (default 250)")
    p.add_argument("--h0", type=float, default=4.0, help="start altitude (default 4 m)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="response and activity reports for stored genomes")
    common(p)
    p.add_argument("inputs", nargs="+", help="genome files or archive directories")
    p.add_argument("--episodes", type=int, default=None,
                   help="landings behind the closed-loop response (default 100)")
    p.add_argument("--grid", type=int, default=101,
                   help="steady-state grid resolution per axis (default 101)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="matched-landing comparison of controllers")
    common(p)
    p.add_argument("controllers", nargs="+",
                   help="genome files, archive directories, or baseline names "
                        "(p-slow, p-fast)")
    p.add_argument("--landings", type=int, default=None,
                   help="matched landings per controller (default 50)")
    p.add_argument("--h0", type=float, default=4.0, help="start altitude (default 4 m)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("merge", help="non-dominated union of archive directories")
    common(p)
    p.add_argument("archives", nargs="+", help="archive directories to merge")
    p.set_defaults(func=cmd_merge)
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    doc = store.read_json(path)
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    cfg = {}
    for key, value in doc.items():
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}: unknown config key {key!r}")
        want = CONFIG_KEYS[key]
        if want is bool:
            if not isinstance(value, bool):
                raise UsageError(f"{path}: {key} must be true or false")
        elif not isinstance(value, int) or isinstance(value, bool):
            raise UsageError(f"{path}: {key} must be an integer")
        cfg[key] = value
    return cfg


def _setting(args, config: dict, key: str, default, flag=None):
    """Flag if given, else config-file value, else the default."""
    value = getattr(args, flag or key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _positive(name: str, value: int) -> int:
    if value < 1:
        raise UsageError(f"{name} must be at least 1, got {value}")
    return value


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _collect_genomes(inputs) -> list[tuple[str, Genome]]:
    """Flatten genome files and archive directories into (name, genome) pairs."""
    found = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            archive = store.load_archive(path)
            for entry in archive.members:
                name = f"{path.name}_g{entry.generation}_i{entry.individual_id}"
                found.append((name, entry.genome))
        elif path.exists():
            found.append((path.stem, store.load_genome(path)))
        else:
            raise FileNotFoundError(f"no genome file or archive at {path}")
    if not found:
        raise UsageError("no genomes found in the given inputs")
    return found


def _write_manifest(out: Path, command: str, payload: dict) -> None:
    doc = {"format": store.RUN_FORMAT, "version": store.FORMAT_VERSION,
           "command": command}
    doc.update(payload)
    store.write_json(out / "manifest.json", doc)


def cmd_evolve(args) -> int:
    config = _load_config(args.config)
    evo = EvolutionConfig(
        population_size=_positive("--pop", _setting(args, config, "pop", 100)),
        generations=_setting(args, config, "gens", 400),
        n_hidden=_setting(args, config, "hidden", MAX_HIDDEN),
        constrained=bool(_setting(args, config, "constrained", False)),
        spike_objective=(not args.no_spike_objective
                         and bool(config.get("spike_objective", True))),
        seed=_setting(args, config, "seed", 0),
        jobs=_positive("--jobs", _setting(args, config, "jobs", 1)),
    )
    if not 0 <= evo.n_hidden <= MAX_HIDDEN:
        raise UsageError(f"--hidden must lie in 0..{MAX_HIDDEN}, got {evo.n_hidden}")
    out = _out_dir(args)

    total = evo.generations

    def progress(row):
        gen = row["generation"]
        if gen % max(1, total // 10) == 0 or gen == total:
            print(f"generation {gen}/{total}: archive={row['archive_size']} "
                  f"best_touchdown={row['best_touchdown_speed']:.3f}", flush=True)

    archive, stats = run_evolution(evo, progress=progress)
    store.save_archive(out, archive)
    header = list(stats[0].keys())
    store.write_table(out / "generations.csv", header,
                      [[row[k] for k in header] for row in stats])
    _write_manifest(out, "evolve", {
        "seed": evo.seed,
        "config": {
            "population_size": evo.population_size,
            "generations": evo.generations,
            "n_hidden": evo.n_hidden,
            "constrained": evo.constrained,
            "spike_objective": evo.spike_objective,
            "p_mut": evo.p_mut,
            "tournament": evo.tournament,
        },
        "objective_mask": list(archive.objective_mask),
        "objectives": list(OBJECTIVE_NAMES),
        "h0_schedule": list(H0_SCHEDULE),
        "archive_size": len(archive),
    })
    figures.save_pareto_figure(archive.members, out / "pareto.png")
    figures.save_generation_curves(stats, out / "generations.png")
    print(f"archive holds {len(archive)} members; wrote {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    seed = _setting(args, config, "seed", 0)
    landings = _positive("--landings", _setting(args, config, "landings", 250))
    genomes = _collect_genomes(args.inputs)
    out = _out_dir(args)
    summary_rows = []
    for name, genome in genomes:
        report = analysis.evaluate_robustness(genome, landings=landings,
                                              seed=seed, h0=args.h0)
        store.write_table(
            out / f"robustness_{name}.csv",
            ["landing", *OBJECTIVE_NAMES],
            [[i, *row] for i, row in enumerate(report.samples.tolist())],
        )
        figures.save_robustness_figure(report, out / f"robustness_{name}.png")
        summary = [name, report.landings, report.success_rate]
        for k in range(4):
            summary.extend([report.medians[k], report.q1[k], report.q3[k]])
        summary_rows.append(summary)
        print(f"{name}: success {report.success_rate:.2f}, "
              f"median touchdown {report.medians[2]:.3f} m/s")
    header = ["genome", "landings", "success_rate"]
    for objective in OBJECTIVE_NAMES:
        header.extend([f"median_{objective}", f"q1_{objective}", f"q3_{objective}"])
    store.write_table(out / "robustness.csv", header, summary_rows)
    _write_manifest(out, "evaluate", {
        "seed": seed,
        "landings": landings,
        "h0": args.h0,
        "genomes": [name for name, _ in genomes],
    })
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = _load_config(args.config)
    seed = _setting(args, config, "seed", 0)
    episodes = _positive("--episodes", _setting(args, config, "episodes", 100))
    grid = _positive("--grid", args.grid)
    genomes = _collect_genomes(args.inputs)
    out = _out_dir(args)
    d_grid = tuple(np.linspace(-5.0, 5.0, grid))
    dd_grid = tuple(np.linspace(-20.0, 20.0, grid))
    for name, genome in genomes:
        sub = out / name
        matrix = analysis.steady_state_response(genome, d_grid, dd_grid)
        store.write_table(
            sub / "steady_state.csv",
            ["d_hat\\dd_hat", *[repr(v) for v in dd_grid]],
            [[d_grid[i], *matrix[i].tolist()] for i in range(len(d_grid))],
        )
        figures.save_steady_state_figure(d_grid, dd_grid, matrix,
                                         sub / "steady_state.png")
        curve = analysis.transient_response(genome, episodes=episodes, seed=seed)
        store.write_table(
            sub / "transient.csv",
            ["d_hat", "T_sp"],
            zip(curve.d_obs.tolist(), curve.t_sp.tolist()),
        )
        store.write_table(
            sub / "transient_smoothed.csv",
            ["d_hat", "T_sp"],
            zip(curve.smoothed_d.tolist(), curve.smoothed_t.tolist()),
        )
        figures.save_transient_figure(curve, sub / "transient.png")
        activity = analysis.record_activity(genome, seed=seed)
        labels = [f"hidden_{j}" for j in range(genome.n_hidden)] + ["output"]
        store.write_table(
            sub / "activity.csv",
            ["neuron", "rate_hz"],
            zip(labels, activity.rates),
        )
        figures.save_activity_figure(activity, sub / "activity.png")
        print(f"{name}: output neuron fires at {activity.rates[-1]:.1f} Hz")
    _write_manifest(out, "analyze", {
        "seed": seed,
        "episodes": episodes,
        "grid": grid,
        "genomes": [name for name, _ in genomes],
    })
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load_config(args.config)
    seed = _setting(args, config, "seed", 0)
    landings = _positive("--landings", _setting(args, config, "landings", 50))
    baselines = analysis.named_baselines()
    named = []
    for token in args.controllers:
        if token in baselines:
            named.append((token, baselines[token]))
        else:
            named.extend(_collect_genomes([token]))
    if len(named) < 2:
        raise UsageError("compare needs at least two controllers")
    out = _out_dir(args)
    rows = analysis.compare(named, episodes=landings, seed=seed, h0=args.h0)
    header = list(rows[0].keys())
    store.write_table(out / "comparison.csv", header,
                      [[row[k] for k in header] for row in rows])
    figures.save_comparison_figure(rows, out / "comparison.png")
    for row in rows:
        print(f"{row['controller']}: success {row['success_rate']:.2f}, "
              f"median time {row['median_time_to_land']:.2f} s")
    _write_manifest(out, "compare", {
        "seed": seed,
        "landings": landings,
        "h0": args.h0,
        "controllers": [name for name, _ in named],
    })
    return EXIT_OK


def cmd_merge(args) -> int:
    archives = [store.load_archive(path) for path in args.archives]
    merged = merge_archives(archives)
    out = _out_dir(args)
    store.save_archive(out, merged)
    _write_manifest(out, "merge", {
        "inputs": [Path(p).name for p in args.archives],
        "objective_mask": list(merged.objective_mask),
        "archive_size": len(merged),
    })
    print(f"merged {len(archives)} archives into {len(merged)} members at {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, store.StoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # config objects validate in their constructors; surface as usage
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
