"""Command-line entry point: ``dri compute | simulate | sensitivity | report``.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 computation error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .core import ADJUSTMENT_MODES, CORRELATION_KINDS, DEFAULT_LAMBDA, DEGENERATE_POLICIES, METHODS, DriConfig
from .datagen import (
    DEFAULT_MODEL,
    STUDY_CONSIDERATIONS,
    STUDY_LIKERT,
    STUDY_NOISE_LEVELS,
    STUDY_PREFERENCES,
    design_grid,
)
from .empirical import CaseData, bootstrap_delta, compute_case, name_seed, score_wave, split_stability, with_significance
from .errors import ComputationError, DriError, UsageError
from .experiments import (
    STUDY_TAUS,
    audit_criteria,
    design_invariance_summary,
    run_component_a,
    sensitivity_scenarios,
    threshold_criteria,
)
from .io import (
    CASE_HEADER,
    CRITERIA_HEADER,
    STUDY_MODIFIED_FLOORS,
    STUDY_STANDARD_FLOORS,
    STUDY_TABLE1,
    RunManifest,
    case_rows,
    criteria_rows,
    document_tables,
    dumps,
    load_dataset,
    read_json,
    render_text,
    run_timestamp,
    table_csv,
    write_json,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _env_seed() -> int | None:
    raw = os.environ.get("DRI_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"DRI_SEED must be an integer, got {raw!r}") from None


def _add_index_options(p: argparse.ArgumentParser, with_method: bool = True) -> None:
    p.add_argument("--tau", type=float, default=0.2, help="penalty threshold (default 0.2)")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA, help="scale constant (default 1/sqrt(2))")
    p.add_argument("--mode", choices=ADJUSTMENT_MODES, default="floor-referenced")
    p.add_argument("--kind", choices=CORRELATION_KINDS, default="spearman-midrank")
    p.add_argument("--degenerate", choices=DEGENERATE_POLICIES, default="exclude-pair")
    if with_method:
        p.add_argument("--method", choices=METHODS, default="modified")


def _config(args) -> DriConfig:
    return DriConfig(
        correlation_kind=args.kind,
        tau=args.tau,
        lam=args.lam,
        method=getattr(args, "method", "modified"),
        adjustment_mode=args.mode,
        degenerate_policy=args.degenerate,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dri", description="Deliberative Reason Index tools")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compute", help="score a dataset or a pre/post case")
    c.add_argument("--input", required=True, type=Path)
    c.add_argument("--name", help="case label (default: file stem)")
    c.add_argument("--likert-max", type=int, choices=(5, 7))
    _add_index_options(c)
    c.add_argument("--seed", type=int, help="split seed (default: DRI_SEED, else derived from the case name)")
    c.add_argument("--bootstrap", type=int, default=2000, metavar="B", help="bootstrap resamples; 0 disables (default 2000)")
    c.add_argument("--splits", type=int, default=20, metavar="K", help="split seeds for the stability check; 0 disables")
    c.add_argument("--out", type=Path, help="write the JSON document here instead of standard output")
    c.add_argument("--csv", type=Path, help="also write the table as CSV")
    c.add_argument("--stamp", action="store_true", help="record a timestamp in the manifest")

    s = sub.add_parser("simulate", help="formula validation across the design grid")
    s.add_argument("--group-sizes", type=_int_list, default=[30, 100])
    s.add_argument("--considerations", type=_int_list, default=list(STUDY_CONSIDERATIONS))
    s.add_argument("--preferences", type=_int_list, default=list(STUDY_PREFERENCES))
    s.add_argument("--likert", type=_int_list, default=list(STUDY_LIKERT))
    s.add_argument("--noise", type=_float_list, default=list(STUDY_NOISE_LEVELS))
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--seed", type=int)
    _add_index_options(s, with_method=False)
    s.add_argument("--modes", default="floor-referenced,as-printed",
                   help="adjustment modes scored for the modified formula")
    s.add_argument("--jobs", type=int, default=1, help="parallel workers; output does not depend on it")
    s.add_argument("--out", type=Path)
    s.add_argument("--csv", type=Path, help="scenario table")
    s.add_argument("--figure-csv", type=Path, help="plot-ready design-averaged means")
    s.add_argument("--stamp", action="store_true")

    b = sub.add_parser("sensitivity", help="threshold sensitivity analysis")
    b.add_argument("--taus", type=_float_list, default=list(STUDY_TAUS))
    b.add_argument("--group-size", type=int, default=100)
    b.add_argument("--considerations", type=_int_list, default=list(STUDY_CONSIDERATIONS))
    b.add_argument("--preferences", type=_int_list, default=list(STUDY_PREFERENCES))
    b.add_argument("--likert", type=_int_list, default=[5])
    b.add_argument("--noise", type=_float_list, default=list(STUDY_NOISE_LEVELS))
    b.add_argument("--reps", type=int, default=300)
    b.add_argument("--seed", type=int)
    _add_index_options(b, with_method=False)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", type=Path)
    b.add_argument("--csv", type=Path, help="criteria table")
    b.add_argument("--stamp", action="store_true")

    r = sub.add_parser("report", help="re-render a stored JSON document")
    r.add_argument("--input", required=True, type=Path)
    r.add_argument("--table", help="table name (default: all tables as text)")
    r.add_argument("--csv", type=Path, help="write the chosen table as CSV")
    return parser


def _emit(doc: dict, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(dumps(doc))
    else:
        write_json(doc, out)


def _cmd_compute(args) -> int:
    config = _config(args)
    data = load_dataset(args.input, args.likert_max, args.name)
    seed = args.seed if args.seed is not None else _env_seed()
    if isinstance(data, CaseData):
        split_seed = seed if seed is not None else name_seed(data.name)
        report = compute_case(data, config, split_seed)
        if args.bootstrap:
            report = with_significance(report, bootstrap_delta(data, config, args.bootstrap, split_seed, observed=report))
        doc = {
            "kind": "case",
            "manifest": RunManifest("compute", config, split_seed, timestamp=run_timestamp(args.stamp)).to_dict(),
            "report": report.to_dict(),
        }
        if args.splits:
            doc["split_stability"] = split_stability(data, config, args.splits, split_seed)
        header, rows = CASE_HEADER, case_rows([report])
        table = "cases"
    else:
        split_seed = seed if seed is not None else name_seed(args.name or args.input.stem)
        std, mod = score_wave(data, config, split_seed)
        doc = {
            "kind": "wave",
            "manifest": RunManifest("compute", config, split_seed, timestamp=run_timestamp(args.stamp)).to_dict(),
            "n": data.n,
            "results": {"standard": std.to_dict(), "modified": mod.to_dict()},
        }
        header, rows = document_tables(doc)["wave"]
        table = "wave"
    _emit(doc, args.out)
    if args.csv:
        args.csv.write_text(table_csv(doc, table), encoding="utf-8")
    if args.out is not None:
        print(render_text(header, rows, places=2), end="")
    return 0


def _floor_summary(results, config) -> str:
    lines = ["noise floors (noise=1, averaged over designs) vs reported values"]
    by = {}
    for r in results:
        if r.design.noise == 1.0:
            by.setdefault((r.formula, r.adjustment_mode, r.design.n), []).append(r.mean_dri)
    rows = []
    for (formula, mode, n), vals in sorted(by.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1] or "")):
        reported = STUDY_STANDARD_FLOORS.get(n) if formula == "standard" else STUDY_MODIFIED_FLOORS.get(n)
        rows.append((n, formula, mode or "", sum(vals) / len(vals), reported))
    lines.append(render_text(("n", "formula", "mode", "simulated", "reported"), rows).rstrip())
    return "\n".join(lines) + "\n"


def _cmd_simulate(args) -> int:
    config = _config(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for m in modes:
        if m not in ADJUSTMENT_MODES:
            raise UsageError(f"unknown adjustment mode {m!r}")
    if config.adjustment_mode not in modes:
        modes.insert(0, config.adjustment_mode)
    seed = args.seed if args.seed is not None else (_env_seed() or 0)
    designs = design_grid(args.group_sizes, args.considerations, args.preferences, args.likert)
    results = run_component_a(designs, args.noise, args.reps, config, seed, modes, n_jobs=args.jobs)
    doc = {
        "kind": "component_a",
        "manifest": RunManifest("simulate", config, seed, timestamp=run_timestamp(args.stamp)).to_dict(),
        "designs": [d.to_dict() for d in designs],
        "noise_levels": list(args.noise),
        "reps": args.reps,
        "modes": modes,
        "latent_model": asdict(DEFAULT_MODEL),
        "n_datasets": len(designs) * len(args.noise) * args.reps,
        "results": [r.to_dict() for r in results],
    }
    if 1.0 in args.noise and len({d.key for d in designs}) > 1:
        try:
            doc["design_invariance"] = [row.to_dict() for row in design_invariance_summary(results)]
        except UsageError:
            pass
    _emit(doc, args.out)
    if args.csv:
        args.csv.write_text(table_csv(doc, "scenarios"), encoding="utf-8")
    if args.figure_csv:
        args.figure_csv.write_text(table_csv(doc, "figure1"), encoding="utf-8")
    if args.out is not None and 1.0 in args.noise:
        print(_floor_summary(results, config), end="")
    return 0


def _cmd_sensitivity(args) -> int:
    config = _config(args)
    seed = args.seed if args.seed is not None else (_env_seed() or 0)
    designs = design_grid([args.group_size], args.considerations, args.preferences, args.likert)
    scenarios = sensitivity_scenarios(args.taus, designs, args.noise, args.reps, config, seed, n_jobs=args.jobs)
    criteria = threshold_criteria(scenarios)
    problems = audit_criteria(criteria, scenarios)
    if problems:
        raise ComputationError("criteria audit failed: " + "; ".join(problems))
    doc = {
        "kind": "component_b",
        "manifest": RunManifest("sensitivity", config, seed, timestamp=run_timestamp(args.stamp)).to_dict(),
        "taus": sorted(args.taus),
        "designs": [d.to_dict() for d in designs],
        "noise_levels": list(args.noise),
        "reps": args.reps,
        "n_scenarios": len(args.taus) * len(args.noise) * len(designs),
        "criteria": [c.to_dict() for c in criteria],
        "scenarios": [s.to_dict() for s in scenarios],
    }
    _emit(doc, args.out)
    if args.csv:
        args.csv.write_text(table_csv(doc, "criteria"), encoding="utf-8")
    if args.out is not None:
        print(render_text(CRITERIA_HEADER, criteria_rows(criteria)), end="")
        if args.group_size == 100:
            ref = [(t, *STUDY_TABLE1[t]) for t in sorted(args.taus) if t in STUDY_TABLE1]
            if ref:
                print("reported (n=100):")
                print(render_text(("tau", "discrimination", "noise_floor"), ref), end="")
    return 0


def _cmd_report(args) -> int:
    doc = read_json(args.input)
    if args.csv or args.table:
        name = args.table or next(iter(document_tables(doc)))
        text = table_csv(doc, name)
        if args.csv:
            args.csv.write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    for name, (header, rows) in document_tables(doc).items():
        print(f"[{name}]")
        print(render_text(header, rows), end="")
    return 0


COMMANDS = {
    "compute": _cmd_compute,
    "simulate": _cmd_simulate,
    "sensitivity": _cmd_sensitivity,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except DriError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
