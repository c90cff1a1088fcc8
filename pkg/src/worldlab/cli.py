"""Command-line interface: generate, evaluate, theory, render, inspect.

Every command is a pure function of its flags and seed; artifacts land
under one output root (manifest.json, data/, images/, reports/).
Exit codes: 0 success, 1 validation, 2 generation failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .dataset import read_records, write_dataset
from .errors import (
    ConfigurationError,
    DomainError,
    GenerationError,
    WorldlabError,
)
from .evaluation import build_report, load_predictions, report_csv, report_table
from .raster import RasterImage
from .render import render_state
from .tasks import DATASET_TARGETS, TASK_FORMATS, TASK_NAMES, generate_bundle

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_GENERATION = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; this tool reserves 2 for generation
    # failures, so flag problems must exit 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="worldlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="synthesize a dataset")
    gen.add_argument("--out", required=True, help="output root directory")
    gen.add_argument("--seed", type=int, required=True, help="master seed")
    gen.add_argument(
        "--task", action="append", choices=TASK_NAMES,
        help="task to generate (repeatable; default: all valid for --wm)",
    )
    gen.add_argument("--split", default="test", choices=("train", "test"))
    gen.add_argument(
        "--count", type=int, default=None,
        help="instances per task (default: the task's split target)",
    )
    gen.add_argument(
        "--wm", default="implicit", choices=("implicit", "verbal", "visual"),
        help="world-modeling format of the traces",
    )
    gen.add_argument("--resolution", type=int, default=256)
    gen.add_argument(
        "--no-validate", action="store_true",
        help="skip per-trace replay validation (faster)",
    )

    theory = sub.add_parser("theory", help="run numerical certificates")
    theory.add_argument(
        "--check", default="all",
        choices=("kl", "mi", "corollary", "transfer", "all"),
    )
    theory.add_argument("--trials", type=int, default=100)
    theory.add_argument("--seed", type=int, default=0)
    theory.add_argument("--out", default=None, help="output root for reports/")
    theory.add_argument(
        "--tol", type=float, default=None,
        help="override the check's default tolerance",
    )

    ev = sub.add_parser("evaluate", help="score a predictions file")
    ev.add_argument("--data", required=True, help="dataset root (with data/)")
    ev.add_argument("--predictions", required=True, help="predictions JSONL")
    ev.add_argument("--out", default=None, help="output root (default: --data)")

    rend = sub.add_parser("render", help="re-render one instance's states")
    rend.add_argument("--data", required=True)
    rend.add_argument("--id", required=True, dest="record_id")
    rend.add_argument("--out", required=True)
    rend.add_argument("--resolution", type=int, default=256)

    ins = sub.add_parser("inspect", help="print one record, human-readable")
    ins.add_argument("--data", required=True)
    ins.add_argument("--id", default=None, dest="record_id",
                     help="record id (default: first record found)")
    return parser


def _all_records(root: Path) -> list[dict]:
    files = sorted((root / "data").glob("*/*.jsonl"))
    if not files:
        raise FileNotFoundError(f"no data/*/*.jsonl under {root}")
    records = []
    for path in files:
        records.extend(read_records(path))
    return records


def _find_record(root: Path, record_id: str | None) -> dict:
    records = _all_records(root)
    if record_id is None:
        return records[0]
    for rec in records:
        if rec["id"] == record_id:
            return rec
    raise ConfigurationError(f"no record with id {record_id!r} under {root}")


def cmd_generate(args) -> int:
    tasks = args.task or [t for t in TASK_NAMES if args.wm in TASK_FORMATS[t]]
    if args.count is not None and args.count <= 0:
        raise ConfigurationError(f"--count must be positive, got {args.count}")
    specs = []
    for task in tasks:
        if args.wm not in TASK_FORMATS[task]:
            raise ConfigurationError(
                f"format {args.wm!r} unsupported for task {task!r}"
            )
        count = args.count if args.count is not None else DATASET_TARGETS[task][args.split]
        specs.append((task, args.split, count, args.wm))
    manifest = write_dataset(
        args.out,
        args.seed,
        specs,
        resolution=args.resolution,
        validate=not args.no_validate,
    )
    print(f"manifest digest {manifest['digest']}")
    print(f"wrote {manifest['records']} records under {args.out}")
    return EXIT_OK


def cmd_theory(args) -> int:
    from .certificates import (
        EQUALITY_TOL,
        ZERO_GAIN_TOL,
        corollary3_suite,
        theorem1_suite,
        theorem2_suite,
    )
    from .transfer import DRIFT_TOL, transfer_suite

    plans = {
        "kl": (theorem1_suite, EQUALITY_TOL),
        "mi": (theorem2_suite, EQUALITY_TOL),
        "corollary": (corollary3_suite, ZERO_GAIN_TOL),
        "transfer": (transfer_suite, DRIFT_TOL),
    }
    selected = list(plans) if args.check == "all" else [args.check]
    sections = {}
    all_passed = True
    for name in selected:
        suite, default_tol = plans[name]
        tol = args.tol if args.tol is not None else default_tol
        result = suite(args.seed, args.trials, tol)
        section = result.to_jsonable()
        section["tolerance"] = tol
        sections[name] = section
        all_passed &= result.passed
        print(f"{name}: {'PASS' if result.passed else 'FAIL'} "
              f"({result.count} instances, worst {section['worst']})")

    if args.out is not None:
        report_dir = Path(args.out) / "reports"
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "theory.json").write_text(
            json.dumps(sections, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        from .reportfig import save_theory_figure

        fig_path = save_theory_figure(sections, report_dir)
        print(f"wrote {report_dir / 'theory.json'} and {fig_path}")
    return EXIT_OK if all_passed else EXIT_VALIDATION


def cmd_evaluate(args) -> int:
    root = Path(args.data)
    records = _all_records(root)
    predictions = load_predictions(args.predictions)
    report = build_report(records, predictions, images_root=root)
    out_root = Path(args.out) if args.out is not None else root
    report_dir = out_root / "reports"
    report_dir.mkdir(parents=True, exist_ok=True)
    (report_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (report_dir / "report.txt").write_text(report_table(report), encoding="utf-8")
    (report_dir / "report.csv").write_text(report_csv(report), encoding="utf-8")
    from .reportfig import save_eval_figures

    figures = save_eval_figures(report, report_dir)
    print(report_table(report), end="")
    print(f"wrote reports under {report_dir} ({len(figures)} figures)")
    return EXIT_OK


def cmd_render(args) -> int:
    from .evaluation import truth_observation_states

    rec = _find_record(Path(args.data), args.record_id)
    bundle = generate_bundle(rec["task"], rec["seed"], rec["split"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    states = truth_observation_states(bundle, "visual")
    written = []
    for i, state in enumerate(states):
        img = render_state(rec["task"], state, args.resolution)
        path = out / f"{rec['id']}_state{i}.png"
        path.write_bytes(img.to_png_bytes())
        written.append(path)
    print(f"wrote {len(written)} state images under {out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    rec = _find_record(Path(args.data), args.record_id)
    print(f"id:       {rec['id']}")
    print(f"task:     {rec['task']}  split: {rec['split']}  "
          f"format: {rec['wm_format']}  seed: {rec['seed']}")
    print(f"params:   {json.dumps(rec['params'], sort_keys=True)}")
    print(f"question: {rec['question']}")
    print(f"answer:   {rec['answer']}")
    kinds = [seg["kind"] for seg in rec["cot"]]
    print(f"cot:      {len(kinds)} segments: {' '.join(kinds)}")
    print(f"images:   {len(rec['images'])}")
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "theory": cmd_theory,
    "evaluate": cmd_evaluate,
    "render": cmd_render,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"worldlab: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args)
    except GenerationError as exc:
        print(f"worldlab: generation failure: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (ConfigurationError, DomainError) as exc:
        print(f"worldlab: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"worldlab: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WorldlabError as exc:
        print(f"worldlab: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
