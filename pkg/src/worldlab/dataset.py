"""Dataset synthesis: solved instances to JSONL records, PNGs, and a manifest.

One record per instance.  Image files land under images/<task>/, records
under data/<task>/<split>.jsonl, and the manifest carries per-slice counts
plus a content digest over every emitted byte, so equal seeds mean equal
datasets, verifiable from the manifest alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .cot import IMAGE_PLACEHOLDER, CoTTrace, build_cot, validate_trace
from .errors import ConfigurationError, GenerationError, WorldlabError
from .raster import RasterImage
from .render import DEFAULT_RESOLUTION, render_state
from .seeding import SEED_SCHEME, mix_seed
from .tasks import TASK_FORMATS, generate_bundle
from .tasks import maze as maze_mod

#: distinct derived seeds tried per index before declaring a shortfall
ATTEMPT_BUDGET = 16


@dataclass
class DatasetEntry:
    """One instance ready for serialization."""

    instance: object
    trace: CoTTrace
    input_images: tuple[RasterImage, ...]


def input_images(bundle, resolution: int = DEFAULT_RESOLUTION) -> tuple[RasterImage, ...]:
    """The images shown alongside the question, before any reasoning."""
    task = bundle.instance.task
    if task == "paperfold":
        return ()   # the question narrates folds and punches in full
    if task == "maze":
        state = maze_mod.PathState(maze=bundle.maze, path=())
        return (render_state(task, state, resolution),)
    if task == "sokoban":
        return (render_state(task, (bundle.board, bundle.states[0]), resolution),)
    if task == "ball":
        return (render_state(task, bundle.path.states[0], resolution),)
    if task == "multihop":
        return (render_state(task, bundle.initial, resolution),)
    if task == "cube":
        return tuple(
            render_state(task, view, resolution) for view in bundle.given_views
        )
    raise ConfigurationError(f"unknown task {task!r}")


def build_entry(
    bundle,
    wm_format: str,
    resolution: int = DEFAULT_RESOLUTION,
    validate: bool = True,
) -> DatasetEntry:
    trace = build_cot(bundle, wm_format, resolution)
    if validate:
        validate_trace(bundle, trace)
    return DatasetEntry(
        instance=bundle.instance,
        trace=trace,
        input_images=input_images(bundle, resolution),
    )


def generate_entries(
    task: str,
    split: str,
    count: int,
    wm_format: str,
    master_seed: int,
    resolution: int = DEFAULT_RESOLUTION,
    validate: bool = True,
):
    """Yield count entries for one (task, split, format) slice.

    Seeds derive from (master_seed, task, split, index, attempt); an index
    whose generator rejects every attempt seed is a hard shortfall.
    """
    if wm_format not in TASK_FORMATS.get(task, ()):
        raise ConfigurationError(
            f"format {wm_format!r} unsupported for task {task!r}"
        )
    if count < 0:
        raise ConfigurationError(f"count must be nonnegative, got {count}")
    for index in range(count):
        entry = None
        for attempt in range(ATTEMPT_BUDGET):
            seed = mix_seed(master_seed, task, split, index, attempt)
            try:
                bundle = generate_bundle(task, seed, split)
            except WorldlabError:
                continue
            entry = build_entry(bundle, wm_format, resolution, validate)
            break
        if entry is None:
            raise GenerationError(
                f"{task}/{split} index {index}: no instance within "
                f"{ATTEMPT_BUDGET} attempt seeds"
            )
        entry.instance.id = f"{task}-{split}-{wm_format}-{index:05d}"
        yield entry


def record_dict(entry: DatasetEntry, image_paths: list[str]) -> dict:
    instance, trace = entry.instance, entry.trace
    prefix = (IMAGE_PLACEHOLDER + "\n") * len(entry.input_images)
    return {
        "id": instance.id,
        "task": instance.task,
        "split": instance.split,
        "wm_format": trace.format,
        "params": instance.params,
        "question": prefix + instance.question,
        "answer": instance.answer,
        "images": image_paths,
        "cot": [
            {"kind": seg.kind, "payload": seg.payload} for seg in trace.segments
        ],
        "seed": instance.seed,
    }


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def write_dataset(
    out_dir,
    master_seed: int,
    specs: list[tuple[str, str, int, str]],
    resolution: int = DEFAULT_RESOLUTION,
    validate: bool = True,
) -> dict:
    """Emit a dataset for specs = [(task, split, count, wm_format), ...].

    Returns the manifest dict; the same bytes land in manifest.json.
    A generation shortfall leaves manifest.partial.json behind and raises.
    """
    out = Path(out_dir)
    seen = set()
    for task, split, _count, _fmt in specs:
        if (task, split) in seen:
            raise ConfigurationError(
                f"duplicate slice {task}/{split}; one record file per slice"
            )
        seen.add((task, split))

    digest = hashlib.sha256()
    counts: dict[str, int] = {}
    total = 0
    try:
        for task, split, count, wm_format in specs:
            data_path = out / "data" / task / f"{split}.jsonl"
            data_path.parent.mkdir(parents=True, exist_ok=True)
            image_dir = out / "images" / task
            n = 0
            with open(data_path, "w", encoding="utf-8") as fh:
                for entry in generate_entries(
                    task, split, count, wm_format, master_seed, resolution, validate
                ):
                    paths = []
                    all_images = list(entry.input_images) + list(entry.trace.images)
                    if all_images:
                        image_dir.mkdir(parents=True, exist_ok=True)
                    for k, img in enumerate(all_images):
                        rel = f"images/{task}/{entry.instance.id}_{k}.png"
                        blob = img.to_png_bytes()
                        (out / rel).write_bytes(blob)
                        digest.update(blob)
                        paths.append(rel)
                    line = _dump(record_dict(entry, paths)) + "\n"
                    fh.write(line)
                    digest.update(line.encode("utf-8"))
                    n += 1
            counts[f"{task}/{split}/{wm_format}"] = n
            total += n
    except WorldlabError:
        partial = _manifest(master_seed, resolution, counts, total, digest, partial=True)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.partial.json").write_text(
            json.dumps(partial, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        raise

    manifest = _manifest(master_seed, resolution, counts, total, digest)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def _manifest(master_seed, resolution, counts, total, digest, partial=False):
    manifest = {
        "master_seed": master_seed,
        "seed_scheme": SEED_SCHEME,
        "resolution": resolution,
        "tool_version": __version__,
        "counts": counts,
        "records": total,
        "digest": digest.hexdigest(),
    }
    if partial:
        manifest["partial"] = True
    return manifest


def read_records(path) -> list[dict]:
    """Load one JSONL record file, tolerating a trailing newline."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}:{i}: invalid JSON ({exc})") from exc
    return records
