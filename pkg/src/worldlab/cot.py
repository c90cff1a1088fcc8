"""Chain-of-thought trace construction in three world-modeling formats.

A trace interleaves reasoning text with state observations.  The format
decides what the observations look like: implicit traces drop them (maze
and sokoban keep placeholder mask tokens where coordinates would go),
verbal traces carry character matrices or coordinate text, visual traces
carry rendered images of the state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ConfigurationError, ConsistencyError, DecodeError
from .raster import RasterImage
from .render import DEFAULT_RESOLUTION, decode_state, render_state
from .tasks import MASK_TOKENS, TASK_FORMATS
from .tasks import ball as ball_mod
from .tasks import cube as cube_mod
from .tasks import maze as maze_mod
from .tasks import multihop as multihop_mod
from .tasks import paperfold as paperfold_mod
from .tasks import sokoban as sokoban_mod

IMAGE_PLACEHOLDER = "<image>"

#: integer pair in parentheses, the shape shared by all coordinate literals
COORD_RE = re.compile(r"\(\s*\d+\s*,\s*\d+\s*\)")

_BASE36 = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_LETTER_SHAPES = {v: k for k, v in paperfold_mod.SHAPE_LETTERS.items()}
_CUBE_CHARS = {0: "Y", 1: "B", cube_mod.AUX: "?", None: "."}
_CHAR_CUBE = {v: k for k, v in _CUBE_CHARS.items()}


@dataclass(frozen=True)
class CoTSegment:
    kind: str        # text | verbal_matrix | image_ref | masked_point
    payload: str


@dataclass
class CoTTrace:
    format: str
    question: str
    answer: int | str | list
    segments: tuple[CoTSegment, ...]
    #: rendered states, one per image_ref segment, in order
    images: tuple[RasterImage, ...] = ()
    step_count: int = 0


def answer_text(answer) -> str:
    if isinstance(answer, list):
        return ", ".join(str(v) for v in answer)
    return str(answer)


def final_answer_line(trace: CoTTrace) -> str:
    last = trace.segments[-1]
    if last.kind != "text":
        raise ConsistencyError("trace must end with a text segment")
    return last.payload.splitlines()[-1]


# Observation specs produced by the per-task step builders:
#   ("state", value)              renderable state, imaged in visual format
#   ("matrix+state", text, st)    symbolic matrix plus its renderable state
#   ("coords", text, n)           text holding n coordinate literals
#   ("coords+state", text, n, st) both
#   None                          no observation at this step


# ---------------------------------------------------------------- paperfold

def _paperfold_matrices(rows, cols, holes, counts) -> str:
    layer_lines = [
        "".join(_BASE36[counts[(r, c)]] for c in range(cols)) for r in range(rows)
    ]
    hole_lines = []
    for r in range(rows):
        line = []
        for c in range(cols):
            shapes = holes.get((r, c), ())
            line.append(paperfold_mod.SHAPE_LETTERS[shapes[0]] if shapes else ".")
        hole_lines.append("".join(line))
    return "layers:\n" + "\n".join(layer_lines) + "\nholes:\n" + "\n".join(hole_lines)


def parse_paperfold_matrices(payload: str):
    """Inverse of the stage matrices: (rows, cols, holes, layer_counts)."""
    lines = payload.splitlines()
    if not lines or lines[0] != "layers:":
        raise DecodeError("stage matrices must open with 'layers:'")
    try:
        split = lines.index("holes:")
    except ValueError:
        raise DecodeError("stage matrices lack a 'holes:' block") from None
    layer_lines, hole_lines = lines[1:split], lines[split + 1 :]
    if len(layer_lines) != len(hole_lines) or not layer_lines:
        raise DecodeError("layer and hole blocks must match in height")
    rows, cols = len(layer_lines), len(layer_lines[0])
    counts, holes = {}, {}
    for r in range(rows):
        if len(layer_lines[r]) != cols or len(hole_lines[r]) != cols:
            raise DecodeError("ragged stage matrix")
        for c in range(cols):
            counts[(r, c)] = _BASE36.index(layer_lines[r][c])
            ch = hole_lines[r][c]
            if ch != ".":
                if ch not in _LETTER_SHAPES:
                    raise DecodeError(f"unknown hole letter {ch!r}")
                holes[(r, c)] = (_LETTER_SHAPES[ch],)
    return rows, cols, holes, counts


def _paperfold_steps(bundle):
    state = bundle.state
    stages = paperfold_mod.replay_stages(state)
    n = len(state.fold_log)
    steps = []
    for i in range(1, n + 1):
        fold = state.fold_log[n - i]
        rows, cols, holes, counts = stages[i]
        text = (
            f"Unfold {i} of {n}: undo the last remaining fold "
            f"({fold.describe()}), restoring a {rows}x{cols} sheet."
        )
        if i == 1:
            text = "Start from the punched stack and undo the folds in reverse order. " + text
        steps.append(
            (text, ("matrix+state",
                    _paperfold_matrices(rows, cols, holes, counts),
                    paperfold_mod.Snapshot.of(rows, cols, holes)))
        )
    tally = sorted(
        (shapes[0], cell) for cell, shapes in bundle.pattern.items()
    )
    per_shape = {}
    for shape, _cell in tally:
        per_shape[shape] = per_shape.get(shape, 0) + 1
    parts = ", ".join(f"{n} {shape}" for shape, n in sorted(per_shape.items()))
    final = (
        f"The flat sheet now shows every hole: {parts} "
        f"({len(tally)} in total).\nAnswer: {answer_text(bundle.instance.answer)}"
    )
    return steps, final, n


# ---------------------------------------------------------------- maze

def _maze_steps(bundle):
    path = list(bundle.path)
    moves = maze_mod.path_moves(path)
    steps = []
    for i, move in enumerate(moves):
        text = f"Move {move}."
        if i == 0:
            text = "Walk the only passage route toward the goal. " + text
        r, c = path[i + 1]
        obs = ("coords+state",
               f"Now at <point>({r}, {c})</point>.",
               1,
               maze_mod.PathState(maze=bundle.maze, path=tuple(path[: i + 2])))
        steps.append((text, obs))
    final = (
        f"The goal is reached after {len(moves)} moves.\n"
        f"Answer: {answer_text(bundle.instance.answer)}"
    )
    return steps, final, len(moves)


# ---------------------------------------------------------------- sokoban

def _sokoban_move_phrase(states, moves, i) -> str:
    pushed = states[i].box != states[i + 1].box
    return f"push the box {moves[i]}" if pushed else f"move {moves[i]}"


def _sokoban_steps(bundle, fmt):
    states, moves = bundle.states, list(bundle.moves)
    steps = []
    if fmt == "visual":
        prev = 0
        for j, k in enumerate(bundle.keys):
            if k == prev and j == 0:
                text = "The player starts beside the box."
            else:
                phrases = [
                    _sokoban_move_phrase(states, moves, i) for i in range(prev, k)
                ]
                text = (", then ".join(phrases) + ".").capitalize()
                if j == 0:
                    text = "Walk the shortest route and push the box home. " + text
            steps.append((text, ("state", (bundle.board, states[k]))))
            prev = k
        n_steps = len(bundle.keys)
    else:
        for i in range(len(moves)):
            text = _sokoban_move_phrase(states, moves, i).capitalize() + "."
            if i == 0:
                text = "Walk the shortest route and push the box home. " + text
            (pr, pc), (br, bc) = states[i + 1].player, states[i + 1].box
            obs = ("coords", f"Player at ({pr}, {pc}); box at ({br}, {bc}).", 2)
            steps.append((text, obs))
        n_steps = len(moves)
    final = (
        f"The box lands on the target after {len(moves)} moves.\n"
        f"Answer: {answer_text(bundle.instance.answer)}"
    )
    return steps, final, n_steps


# ---------------------------------------------------------------- ball

def _ball_steps(bundle):
    path = bundle.path
    steps = []
    # one step per event: every reflection, then the hole entry
    for i, (x, y, wall) in enumerate(path.events):
        if wall == "hole":
            text = "It reaches an opening in the top edge and drops in."
        else:
            text = f"It travels in a straight line and reflects off the {wall} wall."
        if i == 0:
            text = "Follow the ball from its starting cell. " + text
        steps.append((text, ("state", path.states[i + 1])))
    final = (
        f"The ball falls into hole {path.label}.\n"
        f"Answer: {answer_text(bundle.instance.answer)}"
    )
    return steps, final, len(path.events)


# ---------------------------------------------------------------- multihop

def _multihop_steps(bundle):
    steps = []
    for i, text in enumerate(bundle.narration):
        line = f"Apply step {i + 1}: {text}"
        steps.append((line, ("state", bundle.scenes[i])))
    instance = bundle.instance
    if instance.params["question_kind"] == "count":
        final = (
            f"Counting in the final scene gives {instance.answer}.\n"
            f"Answer: {answer_text(instance.answer)}"
        )
    else:
        options = instance.params["options"]
        value = options[ord(instance.answer) - ord("A")]
        final = (
            f"In the final scene the correct option is {value!r}.\n"
            f"Answer: {answer_text(instance.answer)}"
        )
    return steps, final, len(bundle.narration)


# ---------------------------------------------------------------- cube

def cube_matrix(view: cube_mod.ViewMatrix) -> str:
    if view.kind != "orth":
        raise ConfigurationError("only flat views have a character matrix form")
    return "\n".join(
        "".join(_CUBE_CHARS[cell] for cell in row) for row in view.cells
    )


def parse_cube_matrix(payload: str, view: str, base: int) -> cube_mod.ViewMatrix:
    lines = payload.splitlines()
    cells = []
    for line in lines:
        row = []
        for ch in line:
            if ch not in _CHAR_CUBE:
                raise DecodeError(f"unknown view character {ch!r}")
            row.append(_CHAR_CUBE[ch])
        cells.append(tuple(row))
    if len({len(row) for row in cells} or {0}) != 1 or not cells:
        raise DecodeError("ragged view matrix")
    return cube_mod.ViewMatrix(kind="orth", view=view, base=base, cells=tuple(cells))


def _cube_steps(bundle):
    instance = bundle.instance
    label = cube_mod.VIEW_LABELS[bundle.query_view]
    text = (
        f"Enumerate every structure consistent with all three given views, "
        f"then assemble {label}: a cell keeps its color when every "
        f"consistent structure agrees on it, and is marked with the "
        f"auxiliary color when the structures disagree."
    )
    steps = [(text, ("matrix+state", cube_matrix(bundle.marked), bundle.marked))]
    counts = ", ".join(str(v) for v in bundle.counts)
    color = instance.params["query_color"]
    if instance.params["answer_mode"] == "equality":
        final = (
            f"Across all {bundle.n_structures} consistent structures the "
            f"possible {color} counts are {counts}.\n"
            f"Answer: {answer_text(instance.answer)}"
        )
    else:
        final = (
            f"Across all {bundle.n_structures} consistent structures the "
            f"possible {color} counts are {counts}; one valid count is "
            f"{bundle.counts[0]}.\nAnswer: {bundle.counts[0]}"
        )
    return steps, final, 1


# ---------------------------------------------------------------- assembly

def _normalize_obs(obs):
    """Split combined observation specs into per-format parts."""
    if obs is None:
        return None, None, None, 0
    kind = obs[0]
    if kind == "state":
        return None, obs[1], None, 0
    if kind == "matrix+state":
        return obs[1], obs[2], None, 0
    if kind == "coords":
        return None, None, obs[1], obs[2]
    if kind == "coords+state":
        return None, obs[3], obs[1], obs[2]
    raise ConfigurationError(f"unknown observation spec {kind!r}")


_STEP_BUILDERS = {
    "paperfold": lambda b, fmt: _paperfold_steps(b),
    "maze": lambda b, fmt: _maze_steps(b),
    "sokoban": _sokoban_steps,
    "ball": lambda b, fmt: _ball_steps(b),
    "multihop": lambda b, fmt: _multihop_steps(b),
    "cube": lambda b, fmt: _cube_steps(b),
}


def build_cot(bundle, wm_format: str, resolution: int = DEFAULT_RESOLUTION) -> CoTTrace:
    instance = bundle.instance
    task = instance.task
    if wm_format not in TASK_FORMATS.get(task, ()):
        raise ConfigurationError(
            f"format {wm_format!r} unsupported for task {task!r}; "
            f"valid: {TASK_FORMATS.get(task)}"
        )
    steps, final_text, n_steps = _STEP_BUILDERS[task](bundle, wm_format)

    segments: list[CoTSegment] = []
    images: list[RasterImage] = []
    for text, obs in steps:
        segments.append(CoTSegment("text", text))
        matrix, state, coord_text, n_coords = _normalize_obs(obs)
        if wm_format == "visual":
            if state is not None:
                images.append(render_state(task, state, resolution))
                segments.append(CoTSegment("image_ref", IMAGE_PLACEHOLDER))
        elif wm_format == "verbal":
            if matrix is not None:
                segments.append(CoTSegment("verbal_matrix", matrix))
            elif coord_text is not None:
                segments.append(CoTSegment("text", coord_text))
        else:
            if coord_text is not None and task in MASK_TOKENS:
                token = MASK_TOKENS[task]
                for _ in range(n_coords):
                    segments.append(CoTSegment("masked_point", token))
    segments.append(CoTSegment("text", final_text))
    return CoTTrace(
        format=wm_format,
        question=instance.question,
        answer=instance.answer,
        segments=tuple(segments),
        images=tuple(images),
        step_count=n_steps,
    )


# ---------------------------------------------------------------- checking

def check_format_purity(trace: CoTTrace):
    """Structural format rules; raises ConsistencyError on any breach."""
    kinds = [s.kind for s in trace.segments]
    if not kinds or kinds[0] != "text" or kinds[-1] != "text":
        raise ConsistencyError("traces must open and close with reasoning text")
    n_refs = kinds.count("image_ref")
    if len(trace.images) != n_refs:
        raise ConsistencyError(
            f"{n_refs} image_ref segments but {len(trace.images)} images"
        )
    text_blob = "\n".join(s.payload for s in trace.segments if s.kind == "text")
    if trace.format == "implicit":
        if n_refs or "verbal_matrix" in kinds:
            raise ConsistencyError("implicit traces must not carry observations")
        if COORD_RE.search(text_blob):
            raise ConsistencyError("implicit trace leaks a coordinate literal")
        if IMAGE_PLACEHOLDER in text_blob:
            raise ConsistencyError("implicit trace leaks an image placeholder")
    elif trace.format == "verbal":
        if n_refs:
            raise ConsistencyError("verbal traces must not carry images")
        if IMAGE_PLACEHOLDER in text_blob:
            raise ConsistencyError("verbal trace leaks an image placeholder")
    elif trace.format == "visual":
        if n_refs < 1:
            raise ConsistencyError("visual traces need at least one image")
        for seg in trace.segments:
            if seg.kind == "image_ref" and seg.payload != IMAGE_PLACEHOLDER:
                raise ConsistencyError("image_ref payload must be the placeholder")
    else:
        raise ConsistencyError(f"unknown format {trace.format!r}")
    for seg in trace.segments:
        if seg.kind == "masked_point" and seg.payload not in MASK_TOKENS.values():
            raise ConsistencyError("masked_point payload must be the mask token")


def _expected_observations(bundle):
    """Ground-truth state sequence a trace's observations must reproduce."""
    task = bundle.instance.task
    if task == "paperfold":
        stages = paperfold_mod.replay_stages(bundle.state)
        return [
            (stage, paperfold_mod.Snapshot.of(stage[0], stage[1], stage[2]))
            for stage in stages[1:]
        ]
    if task == "maze":
        path = list(bundle.path)
        return [
            maze_mod.PathState(maze=bundle.maze, path=tuple(path[: i + 2]))
            for i in range(len(path) - 1)
        ]
    if task == "sokoban":
        return list(bundle.states)
    if task == "ball":
        return bundle.path.states[1:]
    if task == "multihop":
        return list(bundle.scenes)
    if task == "cube":
        return [bundle.marked]
    raise ConsistencyError(f"unknown task {task!r}")


def validate_trace(bundle, trace: CoTTrace):
    """Full trace check: format purity plus observation replay.

    Every observation segment is decoded back to a symbolic state and
    compared against the state sequence recomputed from the bundle; the
    final observation must be the instance's final state.
    """
    check_format_purity(trace)
    task = bundle.instance.task
    expected = _expected_observations(bundle)

    if trace.format == "visual":
        decoded = [decode_state(img) for img in trace.images]
        if task == "sokoban":
            want = [(bundle.board, bundle.states[k]) for k in bundle.keys]
        elif task == "multihop":
            want = [
                tuple(sorted(s, key=lambda o: (o.x, o.z))) for s in expected
            ]
        elif task == "paperfold":
            want = [snap for _stage, snap in expected]
        else:
            want = expected
        if decoded != want:
            raise ConsistencyError(f"{task} visual observations do not replay")
    elif trace.format == "verbal":
        if task == "paperfold":
            got = [
                parse_paperfold_matrices(s.payload)
                for s in trace.segments
                if s.kind == "verbal_matrix"
            ]
            want = [stage for stage, _snap in expected]
            if got != want:
                raise ConsistencyError("paperfold stage matrices do not replay")
        elif task == "cube":
            payloads = [s.payload for s in trace.segments if s.kind == "verbal_matrix"]
            if len(payloads) != 1:
                raise ConsistencyError("cube traces carry exactly one view matrix")
            got = parse_cube_matrix(
                payloads[0], bundle.marked.view, bundle.marked.base
            )
            if got != bundle.marked:
                raise ConsistencyError("cube view matrix does not match")
        elif task in ("maze", "sokoban"):
            text_blob = "\n".join(
                s.payload for s in trace.segments if s.kind == "text"
            )
            coords = [
                (int(a), int(b))
                for a, b in re.findall(r"\((\s*\d+)\s*,\s*(\d+)\s*\)", text_blob)
            ]
            if task == "maze":
                want = [st.head() for st in expected]
            else:
                want = []
                for st in bundle.states[1:]:
                    want.extend([st.player, st.box])
            if coords != want:
                raise ConsistencyError(f"{task} coordinate log does not replay")
        else:
            raise ConsistencyError(f"verbal format unsupported for {task!r}")

    want_answer = answer_text(
        bundle.counts[0]
        if task == "cube" and bundle.instance.params["answer_mode"] == "membership"
        else bundle.instance.answer
    )
    if final_answer_line(trace) != f"Answer: {want_answer}":
        raise ConsistencyError("final line must state the canonical answer")
