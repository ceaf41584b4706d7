"""Command-line entry point: generate inputs, simulate, analyze, and report.

Subcommands: gen-population, gen-corpus, simulate, analyze, report.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import figures
from .core import ConfigurationError, FormatError, LoadLevel, NormRegime
from .harness import (
    ExperimentPlan,
    descriptive_shares,
    load_experiment,
    realized_load_audit,
    run_experiment,
)
from .policy import mock_policy_spec, policy_spec_from_obj
from .population import (
    generate_population,
    generate_seed_corpus,
    load_corpus,
    load_population,
    save_corpus,
    save_population,
)
from .stats import (
    FittedModel,
    Scenario,
    build_design_matrix,
    fit_binary_logistic,
    fit_multinomial_logistic,
    load_model,
    predicted_probabilities,
    read_scenario_csv,
    save_model,
    write_coefficient_csv,
)

API_KEY_ENV = "SOCIALSIM_LLM_API_KEY"

_NORM_ALIASES = {
    "none": NormRegime.NO_NORM,
    "no_norm": NormRegime.NO_NORM,
    "like": NormRegime.LIKE_DOMINANT,
    "like_dominant": NormRegime.LIKE_DOMINANT,
    "repost": NormRegime.REPOST_DOMINANT,
    "repost_dominant": NormRegime.REPOST_DOMINANT,
}


def _parse_cell(text: str) -> tuple[LoadLevel, NormRegime]:
    parts = dict(kv.split("=", 1) for kv in text.split(",") if "=" in kv)
    if "load" not in parts or "norm" not in parts:
        raise ConfigurationError(f"--cell must look like load=<level>,norm=<regime>, got {text!r}")
    try:
        load = LoadLevel(parts["load"].strip().lower())
    except ValueError as e:
        raise ConfigurationError(f"unknown load level {parts['load']!r}") from e
    norm = _NORM_ALIASES.get(parts["norm"].strip().lower())
    if norm is None:
        raise ConfigurationError(f"unknown norm regime {parts['norm']!r}")
    return load, norm


def cmd_gen_population(args: argparse.Namespace) -> int:
    profiles, graph = generate_population(args.n, args.seed)
    save_population(profiles, graph, args.out)
    print(f"wrote {len(profiles)} agents ({graph.n_edges} follow edges) to {args.out}")
    return 0


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    corpus = generate_seed_corpus(args.seed, size=args.size)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} seed posts to {args.out}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    if not config_path.exists():
        print(f"error: config file not found: {config_path}", file=sys.stderr)
        return 2
    try:
        cfg = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        print(f"error: config is not valid JSON: {e}", file=sys.stderr)
        return 2

    try:
        plan = ExperimentPlan.from_obj(cfg)
        if args.seed is not None:
            plan.base_seed = args.seed
        if args.policy == "mock":
            plan.policy = mock_policy_spec()
        elif args.policy is not None:
            plan.policy = policy_spec_from_obj({"kind": args.policy})

        if cfg.get("population"):
            profiles, graph = load_population(_resolve(config_path, cfg["population"]))
        else:
            profiles, graph = generate_population(plan.n_agents, int(cfg.get("population_seed", plan.base_seed)))
        if cfg.get("corpus"):
            corpus = load_corpus(_resolve(config_path, cfg["corpus"]))
        else:
            corpus = generate_seed_corpus(int(cfg.get("corpus_seed", plan.base_seed)))
        if len(profiles) != plan.n_agents:
            raise ConfigurationError(
                f"plan expects {plan.n_agents} agents but population has {len(profiles)}"
            )
        cells = [_parse_cell(args.cell)] if args.cell else None
    except (ConfigurationError, FormatError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    manifest = run_experiment(
        plan,
        profiles,
        graph,
        corpus,
        args.out,
        workers=args.workers,
        cells=cells,
        api_key=os.environ.get(API_KEY_ENV),
    )
    failed = [c for c in manifest["cells"] if c.get("status") != "ok"]
    for c in manifest["cells"]:
        status = c.get("status")
        print(f"cell {c['load']}/{c['norm']} rep {c['replication']}: {status}" + (f" ({c.get('error')})" if status != "ok" else f" {c['rows']} rows"))
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    return 1 if failed else 0


def _resolve(config_path: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else (config_path.parent / p)


def cmd_analyze(args: argparse.Namespace) -> int:
    logs_dir = Path(args.logs)
    if not (logs_dir / "manifest.json").exists():
        print(f"error: no manifest.json under {logs_dir}", file=sys.stderr)
        return 1
    manifest, per_cell = load_experiment(logs_dir)
    records = [r for cell in sorted(per_cell) for r in per_cell[cell]]
    exposures = [r for r in records if hasattr(r, "action")]
    if not exposures:
        print("error: logs contain no exposure records", file=sys.stderr)
        return 1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    profiles, graph = load_population(logs_dir / "population.jsonl")
    _write_shares_csv(per_cell, out / "descriptive_shares.csv")
    _write_audit_csv(per_cell, graph, out / "load_audit.csv")

    metrics_rows = []
    if args.stage in ("threshold", "both"):
        X, names, y = build_design_matrix(exposures, "threshold")
        model = fit_binary_logistic(X, y, terms=names)
        write_coefficient_csv(model, out / "threshold_coefficients.csv")
        save_model(model, out / "threshold_model.json")
        metrics_rows.append(_metrics_row(model))
        print(f"threshold: n={model.n_obs} k={model.k} converged={model.converged} mcfadden={model.metrics.mcfadden:.3f}")
    if args.stage in ("allocation", "both"):
        try:
            X, names, y = build_design_matrix(exposures, "allocation")
        except ValueError:
            print("error: no engaged records; allocation stage cannot be fitted", file=sys.stderr)
            return 1
        model = fit_multinomial_logistic(X, y, terms=names)
        write_coefficient_csv(model, out / "allocation_coefficients.csv")
        save_model(model, out / "allocation_model.json")
        metrics_rows.append(_metrics_row(model))
        print(f"allocation: n={model.n_obs} k={model.k} converged={model.converged}")

    with open(out / "fit_metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["stage", "n", "k", "ll_full", "ll_null", "chi2", "df", "mcfadden", "aic", "converged"])
        writer.writeheader()
        writer.writerows(metrics_rows)
    print(f"analysis written to {out}")
    return 0


def _metrics_row(model: FittedModel) -> dict:
    m = model.metrics
    return {
        "stage": model.stage,
        "n": model.n_obs,
        "k": model.k,
        "ll_full": model.ll_full,
        "ll_null": model.ll_null,
        "chi2": m.chi2,
        "df": m.df,
        "mcfadden": m.mcfadden,
        "aic": m.aic,
        "converged": model.converged,
    }


def _write_shares_csv(per_cell: dict, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["cell", "n", "read", "like", "repost", "quote"])
        writer.writeheader()
        for cell in sorted(per_cell):
            shares = descriptive_shares(per_cell[cell])
            writer.writerow({"cell": cell, "n": shares.n_records, **{k: f"{v:.6f}" for k, v in shares.shares.items()}})


def _write_audit_csv(per_cell: dict, graph, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["cell", "n_activations", "mean", "min", "max"])
        writer.writeheader()
        for cell in sorted(per_cell):
            audit = realized_load_audit(per_cell[cell], graph)
            writer.writerow(
                {
                    "cell": cell,
                    "n_activations": audit.n_activations,
                    "mean": "" if audit.mean is None else f"{audit.mean:.4f}",
                    "min": "" if audit.min is None else audit.min,
                    "max": "" if audit.max is None else audit.max,
                }
            )


def cmd_report(args: argparse.Namespace) -> int:
    analysis = Path(args.analysis)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    shares_path = analysis / "descriptive_shares.csv"
    if not shares_path.exists():
        print(f"error: missing analysis file: {shares_path}", file=sys.stderr)
        return 1
    cells = []
    with open(shares_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cells.append((row["cell"], {a: float(row[a]) for a in ("read", "like", "repost", "quote")}))
    (out / "shares_by_condition.svg").write_text(figures.stacked_share_svg(cells), encoding="utf-8")

    model_path = analysis / "threshold_model.json"
    if not model_path.exists():
        print(f"error: missing analysis file: {model_path}", file=sys.stderr)
        return 1
    model = load_model(model_path)
    scenarios = _scenario_grid(args.grid, model)
    rows = predicted_probabilities(model, scenarios)
    curves: dict[tuple[str, str], list] = {}
    for r in rows:
        curves.setdefault((r["load"], r["norm"]), []).append((r["composite"], r["p"], r["lo"], r["hi"]))
    (out / "threshold_probability_curves.svg").write_text(
        figures.probability_curves_svg(curves), encoding="utf-8"
    )

    alloc_path = analysis / "allocation_model.json"
    alloc_rows = None
    if alloc_path.exists():
        alloc_model = load_model(alloc_path)
        alloc_rows = predicted_probabilities(alloc_model, _scenario_grid(args.grid, alloc_model))
        for action in ("like", "repost", "quote"):
            action_curves: dict[tuple[str, str], list] = {}
            for r in alloc_rows:
                if r["action"] != action:
                    continue
                action_curves.setdefault((r["load"], r["norm"]), []).append(
                    (r["composite"], r["p"], r["lo"], r["hi"])
                )
            svg = figures.probability_curves_svg(
                action_curves,
                title=f"Predicted probability of {action} among engagements",
                y_label=f"p({action} | engage)",
            )
            (out / f"allocation_{action}_curves.svg").write_text(svg, encoding="utf-8")

    _write_markdown_report(analysis, out, cells)
    print(f"report written to {out}")
    return 0


def _scenario_grid(grid_path: str | None, model: FittedModel) -> list[Scenario]:
    if grid_path:
        return read_scenario_csv(grid_path)
    cmax = max(model.composite_max, 1.0)
    grid = np.linspace(0.0, cmax, 41)
    return [
        Scenario(composite=float(c), load=load, norm=norm)
        for load in LoadLevel
        for norm in NormRegime
        for c in grid
    ]


def _write_markdown_report(analysis: Path, out: Path, cells: list) -> None:
    lines = ["# Simulation analysis report", ""]
    lines.append("## Figures")
    lines.append("")
    for svg in sorted(out.glob("*.svg")):
        lines.append(f"![{svg.stem}]({svg.name})")
    lines.append("")
    for name, title in [
        ("fit_metrics.csv", "Model fit"),
        ("threshold_coefficients.csv", "Threshold model coefficients"),
        ("allocation_coefficients.csv", "Allocation model coefficients"),
        ("load_audit.csv", "Realized algorithmic load"),
        ("descriptive_shares.csv", "Action shares by condition"),
    ]:
        path = analysis / name
        if not path.exists():
            continue
        lines.append(f"## {title}")
        lines.append("")
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if rows:
            lines.append("| " + " | ".join(rows[0]) + " |")
            lines.append("|" + "---|" * len(rows[0]))
            for row in rows[1:]:
                lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    (out / "report.md").write_text("\n".join(lines), encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="socialsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-population", help="generate a synthetic population file")
    p.add_argument("--n", type=int, default=558, help="number of agents")
    p.add_argument("--seed", type=int, required=True, help="generation seed")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=cmd_gen_population)

    p = sub.add_parser("gen-corpus", help="generate a synthetic seed-post corpus")
    p.add_argument("--seed", type=int, required=True, help="generation seed")
    p.add_argument("--size", type=int, default=50, help="number of seed posts")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("simulate", help="run the factorial experiment plan")
    p.add_argument("--config", required=True, help="plan config JSON")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.add_argument("--cell", help="run a single cell: load=<level>,norm=<regime>")
    p.add_argument("--policy", choices=["mock"], help="override the plan's policy")
    p.add_argument("--seed", type=int, help="override the plan's base seed")
    p.add_argument("--workers", type=int, default=1, help="parallel cell workers")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="fit threshold/allocation models on persisted logs")
    p.add_argument("--logs", required=True, help="simulate output directory")
    p.add_argument("--out", required=True, help="analysis output directory")
    p.add_argument("--stage", choices=["threshold", "allocation", "both"], default="both")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render SVG figures and a Markdown report")
    p.add_argument("--analysis", required=True, help="analyze output directory")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--grid", help="scenario grid CSV (composite, load, norm)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
