"""Prediction scoring: answer verification, fidelity, stratified reports.

Answers are extracted from free-form model text with a terminal
"Answer:" line convention plus a last-value fallback, then compared
canonically.  World-model fidelity decodes or parses a prediction's
intermediate states and compares them against the oracle's state sequence,
exactly or with appearance erased.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .cot import parse_cube_matrix, parse_paperfold_matrices
from .errors import DecodeError, DomainError, WorldlabError
from .raster import RasterImage
from .render import decode_state
from .tasks import ball as ball_mod
from .tasks import cube as cube_mod
from .tasks import generate_bundle
from .tasks import maze as maze_mod
from .tasks import paperfold as paperfold_mod

_ANSWER_LINE = re.compile(r"answer\s*:\s*(.+)", re.IGNORECASE)
_INT = re.compile(r"-?\d+")
_LETTER = re.compile(r"\b([A-Za-z])\b")


@dataclass
class Prediction:
    instance_id: str
    raw_text: str
    #: optional [(step index, {"kind": ..., "payload": ...}), ...]
    intermediate: list = field(default_factory=list)


@dataclass
class FidelityScore:
    per_step: list            # {"step", "exact", "shape_only", "error"?}
    exact: float
    shape_only: float

    @classmethod
    def of(cls, per_step: list) -> "FidelityScore":
        n = len(per_step)
        return cls(
            per_step=per_step,
            exact=sum(s["exact"] for s in per_step) / n if n else 0.0,
            shape_only=sum(s["shape_only"] for s in per_step) / n if n else 0.0,
        )


# ---------------------------------------------------------------- answers

def extract_answer(raw_text: str) -> str | None:
    """Payload of the last 'Answer:' line, or None when absent."""
    hits = _ANSWER_LINE.findall(raw_text)
    return hits[-1].strip() if hits else None


def _last_line_with(pattern: re.Pattern, raw: str) -> str | None:
    for line in reversed(raw.splitlines()):
        if pattern.search(line):
            return line
    return None


def parse_int(raw_text: str):
    payload = extract_answer(raw_text)
    source = payload if payload is not None else _last_line_with(_INT, raw_text)
    if source is None:
        return None
    hit = _INT.search(source)
    return int(hit.group()) if hit else None


def parse_letter(raw_text: str):
    payload = extract_answer(raw_text)
    source = payload if payload is not None else _last_line_with(_LETTER, raw_text)
    if source is None:
        return None
    hit = _LETTER.search(source)
    return hit.group(1).upper() if hit else None


def parse_int_set(raw_text: str):
    payload = extract_answer(raw_text)
    source = payload if payload is not None else _last_line_with(_INT, raw_text)
    if source is None:
        return None
    values = [int(v) for v in _INT.findall(source)]
    return sorted(set(values)) if values else None


def expected_answer_kind(record: dict) -> str:
    """'int', 'letter', or 'int_set', from the record's answer and params."""
    answer = record["answer"]
    if isinstance(answer, list):
        mode = record.get("params", {}).get("answer_mode", "equality")
        return "int" if mode == "membership" else "int_set"
    if isinstance(answer, str):
        return "letter"
    return "int"


def parse_prediction(record: dict, raw_text: str):
    kind = expected_answer_kind(record)
    if kind == "int":
        return parse_int(raw_text)
    if kind == "letter":
        return parse_letter(raw_text)
    return parse_int_set(raw_text)


def verify_answer(record: dict, prediction: Prediction) -> bool:
    """Canonical comparison; a parse failure scores False, never raises."""
    if record["id"] != prediction.instance_id:
        raise DomainError(
            f"prediction for {prediction.instance_id!r} scored against "
            f"{record['id']!r}"
        )
    parsed = parse_prediction(record, prediction.raw_text)
    if parsed is None:
        return False
    answer = record["answer"]
    if isinstance(answer, list):
        mode = record.get("params", {}).get("answer_mode", "equality")
        if mode == "membership":
            return parsed in answer
        return parsed == sorted(answer)
    if isinstance(answer, str):
        return parsed == answer.upper()
    return parsed == answer


# ---------------------------------------------------------------- fidelity

def shape_projection(state):
    """Erase appearance, keep occupancy/structure; identity when colorless."""
    if isinstance(state, cube_mod.ViewMatrix):
        occupancy = tuple(
            tuple(cell is not None for cell in row) for row in state.cells
        )
        return ("view", state.kind, state.view, occupancy)
    if isinstance(state, paperfold_mod.Snapshot):
        return ("sheet", state.rows, state.cols,
                tuple(sorted(cell for cell, _shape in state.holes)))
    if isinstance(state, tuple) and state and len(state) == 4 and state[0].__class__ is int:
        # paperfold stage tuple (rows, cols, holes, counts)
        rows, cols, holes, counts = state
        return ("stage", rows, cols, tuple(sorted(holes)),
                tuple(sorted(counts.items())))
    if isinstance(state, tuple) and all(
        hasattr(o, "shape") and hasattr(o, "x") for o in state
    ) and state:
        # multihop scene: colors erased, object shapes and cells kept
        return ("scene", tuple(sorted((o.shape, o.x, o.z) for o in state)))
    return state


def score_fidelity(predicted_state, truth_state, mode: str) -> bool:
    if mode == "exact":
        return predicted_state == truth_state
    if mode == "shape_only":
        return shape_projection(predicted_state) == shape_projection(truth_state)
    raise DomainError(f"unknown fidelity mode {mode!r}")


def truth_observation_states(bundle, wm_format: str) -> list:
    """Oracle state per observation slot of a trace in wm_format."""
    task = bundle.instance.task
    if task == "paperfold":
        stages = paperfold_mod.replay_stages(bundle.state)[1:]
        if wm_format == "verbal":
            return list(stages)
        return [paperfold_mod.Snapshot.of(r, c, h) for r, c, h, _n in stages]
    if task == "maze":
        path = list(bundle.path)
        states = [
            maze_mod.PathState(maze=bundle.maze, path=tuple(path[: i + 2]))
            for i in range(len(path) - 1)
        ]
        if wm_format == "verbal":
            return [st.head() for st in states]
        return states
    if task == "sokoban":
        if wm_format == "verbal":
            return [(st.player, st.box) for st in bundle.states[1:]]
        return [(bundle.board, bundle.states[k]) for k in bundle.keys]
    if task == "ball":
        return bundle.path.states[1:]
    if task == "multihop":
        return [tuple(sorted(s, key=lambda o: (o.x, o.z))) for s in bundle.scenes]
    if task == "cube":
        return [bundle.marked]
    raise DomainError(f"unknown task {task!r}")


def _parse_intermediate(task, item, images_root):
    kind = item.get("kind")
    payload = item.get("payload", "")
    if kind == "image_ref":
        data = (Path(images_root) / payload).read_bytes()
        return decode_state(RasterImage.from_png_bytes(data))
    if kind == "verbal_matrix":
        if task == "paperfold":
            return parse_paperfold_matrices(payload)
        if task == "cube":
            view = item.get("view", "front")
            base = int(item.get("base", 0))
            return parse_cube_matrix(payload, view, base)
        raise DecodeError(f"no verbal matrix form for task {task!r}")
    if kind == "coords":
        pairs = [(int(a), int(b)) for a, b in re.findall(r"\((\d+)\s*,\s*(\d+)\)", payload)]
        if not pairs:
            raise DecodeError("no coordinates in payload")
        return pairs[0] if len(pairs) == 1 else tuple(pairs[:2])
    raise DecodeError(f"unknown intermediate kind {kind!r}")


def score_trace_fidelity(record: dict, prediction: Prediction, images_root=".") -> FidelityScore:
    """Compare a prediction's intermediate states against the oracle's.

    Steps index the observation slots of the record's format.  Undecodable
    payloads score False in both modes and carry an error note.
    """
    bundle = generate_bundle(record["task"], record["seed"], record["split"])
    truth = truth_observation_states(bundle, record["wm_format"])
    per_step = []
    for step, item in prediction.intermediate:
        if not (0 <= step < len(truth)):
            per_step.append(
                {"step": step, "exact": False, "shape_only": False,
                 "error": f"step outside 0..{len(truth) - 1}"}
            )
            continue
        try:
            state = _parse_intermediate(record["task"], item, images_root)
        except (WorldlabError, OSError, ValueError) as exc:
            per_step.append(
                {"step": step, "exact": False, "shape_only": False,
                 "error": str(exc)}
            )
            continue
        per_step.append(
            {
                "step": step,
                "exact": score_fidelity(state, truth[step], "exact"),
                "shape_only": score_fidelity(state, truth[step], "shape_only"),
            }
        )
    return FidelityScore.of(per_step)


# ---------------------------------------------------------------- report

def stratum_key(record: dict) -> str:
    p = record.get("params", {})
    task = record["task"]
    if task == "paperfold":
        return f"folds={len(p.get('folds', []))}"
    if task in ("maze", "sokoban"):
        return f"size={p.get('size')}"
    if task == "ball":
        return f"reflections={p.get('n_reflections')}"
    if task == "multihop":
        return f"ops={p.get('n_ops')}"
    if task == "cube":
        return f"base={p.get('base')}"
    return "all"


def build_report(records: list[dict], predictions: list[Prediction],
                 images_root=".") -> dict:
    """Aggregate accuracy, parse failures, strata, and fidelity."""
    by_id = {r["id"]: r for r in records}
    unknown = [p.instance_id for p in predictions if p.instance_id not in by_id]
    if unknown:
        raise DomainError(f"predictions for unknown instances: {unknown[:5]}")

    per_task: dict[str, list[bool]] = {}
    per_stratum: dict[str, list[bool]] = {}
    n_parse_fail = 0
    fidelity_steps: list[dict] = []
    n_fidelity_preds = 0
    for pred in sorted(predictions, key=lambda p: p.instance_id):
        rec = by_id[pred.instance_id]
        ok = verify_answer(rec, pred)
        if parse_prediction(rec, pred.raw_text) is None:
            n_parse_fail += 1
        per_task.setdefault(rec["task"], []).append(ok)
        key = f"{rec['task']}/{stratum_key(rec)}"
        per_stratum.setdefault(key, []).append(ok)
        if pred.intermediate:
            n_fidelity_preds += 1
            fidelity_steps.extend(
                score_trace_fidelity(rec, pred, images_root).per_step
            )

    def mean(flags):
        return sum(flags) / len(flags) if flags else None

    scored = [ok for oks in per_task.values() for ok in oks]
    report = {
        "counts": {
            "records": len(records),
            "predictions": len(predictions),
            "parse_failures": n_parse_fail,
        },
        "parse_failure_rate": (
            n_parse_fail / len(predictions) if predictions else 0.0
        ),
        "accuracy": {
            "overall": mean(scored),
            "per_task": {t: mean(v) for t, v in sorted(per_task.items())},
            "per_stratum": {k: mean(v) for k, v in sorted(per_stratum.items())},
        },
    }
    if n_fidelity_preds:
        undecodable = sum(1 for s in fidelity_steps if "error" in s)
        report["fidelity"] = {
            "predictions_with_states": n_fidelity_preds,
            "steps": len(fidelity_steps),
            "undecodable_steps": undecodable,
            "exact": mean([s["exact"] for s in fidelity_steps]),
            "shape_only": mean([s["shape_only"] for s in fidelity_steps]),
        }
    return report


def report_table(report: dict) -> str:
    """Plain-text view of the report."""
    lines = []
    acc = report["accuracy"]
    fmt = lambda v: "-" if v is None else f"{v:.4f}"
    lines.append(f"{'slice':<28} {'accuracy':>9} {'n':>6}")
    counts = report["counts"]
    lines.append(f"{'overall':<28} {fmt(acc['overall']):>9} {counts['predictions']:>6}")
    for task, v in acc["per_task"].items():
        lines.append(f"{task:<28} {fmt(v):>9}")
    for key, v in acc["per_stratum"].items():
        lines.append(f"{key:<28} {fmt(v):>9}")
    lines.append(
        f"parse failures: {counts['parse_failures']} "
        f"({report['parse_failure_rate']:.4f})"
    )
    if "fidelity" in report:
        f = report["fidelity"]
        lines.append(
            f"fidelity over {f['steps']} steps: exact {fmt(f['exact'])}, "
            f"shape-only {fmt(f['shape_only'])}, "
            f"undecodable {f['undecodable_steps']}"
        )
    return "\n".join(lines) + "\n"


def report_csv(report: dict) -> str:
    """Per-slice accuracy as comma-delimited rows."""
    rows = ["slice,accuracy"]
    acc = report["accuracy"]
    val = lambda v: "" if v is None else f"{v:.6f}"
    rows.append(f"overall,{val(acc['overall'])}")
    for task, v in acc["per_task"].items():
        rows.append(f"{task},{val(v)}")
    for key, v in acc["per_stratum"].items():
        rows.append(f"{key},{val(v)}")
    return "\n".join(rows) + "\n"


def load_predictions(path) -> list[Prediction]:
    """Read predictions JSONL: {instance_id, raw_text, intermediate?}."""
    import json

    preds = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                inter = [
                    (int(item["step"]), item)
                    for item in obj.get("intermediate", [])
                ]
                preds.append(
                    Prediction(
                        instance_id=obj["instance_id"],
                        raw_text=obj["raw_text"],
                        intermediate=inter,
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DomainError(f"{path}:{i}: bad prediction ({exc})") from exc
    return preds
