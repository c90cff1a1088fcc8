"""Release gate: one test per acceptance criterion.

Each test prints a single summary line, so `pytest -v` doubles as the
checklist. Ensemble sizes and tolerances here are contractual; do not
shrink them to speed the suite up.
"""

import random
import time

from helpers import (
    brute_cube,
    exhaustive_punched_sheets,
    legal_folds,
    random_cube_problem,
)
from worldlab.certificates import (
    EQUALITY_TOL,
    ZERO_GAIN_TOL,
    corollary3_suite,
    theorem1_suite,
    theorem2_suite,
)
from worldlab.cot import COORD_RE, IMAGE_PLACEHOLDER, build_cot
from worldlab.dataset import write_dataset
from worldlab.errors import CapacityError
from worldlab.evaluation import score_fidelity
from worldlab.render import decode_state, render_state
from worldlab.tasks import (
    DATASET_TARGETS,
    TASK_NAMES,
    generate_bundle,
)
from worldlab.tasks import ball as ball_mod
from worldlab.tasks import cube as cube_mod
from worldlab.tasks import maze as maze_mod
from worldlab.tasks import multihop as mh
from worldlab.tasks import paperfold as pf
from worldlab.tasks import sokoban as sk
from worldlab.transfer import DRIFT_TOL, transfer_suite


def test_criterion_1_error_decomposition():
    t0 = time.perf_counter()
    result = theorem1_suite(11, 100, EQUALITY_TOL)
    elapsed = time.perf_counter() - t0
    assert result.count == 100
    for row in result.rows:
        assert row["equality_gap"] <= 1e-9
        assert row["projection_slack"] >= -1e-9
    assert result.passed
    assert elapsed < 60.0
    print(
        f"criterion 1 PASS: 100 ensembles, worst equality gap "
        f"{result.worst['equality_gap']:.3e}, {elapsed:.1f}s"
    )


def test_criterion_2_uncertainty_reduction():
    result = theorem2_suite(13, 100, EQUALITY_TOL)
    assert result.count == 100
    for row in result.rows:
        assert row["most_negative_gain"] >= -1e-12
        assert row["worst_bound_excess"] <= 1e-9
    assert result.passed
    print(
        f"criterion 2 PASS: 100 ensembles, most negative gain "
        f"{result.worst['most_negative_gain']:.3e}"
    )


def test_criterion_3_zero_gain_when_observable():
    result = corollary3_suite(17, 50, ZERO_GAIN_TOL)
    assert result.count == 50
    for row in result.rows:
        assert row["largest_gain_magnitude"] <= 1e-12
    assert result.passed
    print(
        f"criterion 3 PASS: 50 deterministic ensembles, largest gain "
        f"{result.worst['largest_gain_magnitude']:.3e}"
    )


def test_criterion_4_transfer_bounds():
    result = transfer_suite(19, 100, DRIFT_TOL)
    assert result.count == 100
    dims = {row["dim"] for row in result.rows}
    assert dims == {1, 2}
    covered = 0
    for row in result.rows:
        assert row["theorem5_slack"] >= -1e-9
        if row["radius"] >= row["drift_bound"]:
            assert row["eps_bias"] == 0.0
            covered += 1
    assert 0 < covered < 100        # both branches of the bias bound ran
    assert result.passed
    print(
        f"criterion 4 PASS: 100 problems, {covered} with covering radius, "
        f"worst slack {result.worst['theorem5_slack']:.3e}"
    )


def _random_folded_sheet(rng):
    state = pf.new_sheet(rng.randint(3, 8))
    for _ in range(rng.randint(1, 4)):
        options = legal_folds(state.rows, state.cols)
        if not options:
            break
        state = pf.apply_fold(state, rng.choice(options))
    cells = [(r, c) for r in range(state.rows) for c in range(state.cols)]
    for cell in rng.sample(cells, min(rng.randint(1, 3), len(cells))):
        state = pf.punch(state, cell, rng.choice(pf.SHAPES))
    return state


def test_criterion_5_oracle_equivalence():
    t0 = time.perf_counter()

    rng = random.Random(2024)
    for _ in range(1000):
        state = _random_folded_sheet(rng)
        direct = pf.unfold(state)
        replay = pf.unfold_by_replay(state.grid, state.fold_log, state.punches)
        assert direct == replay
    sheets = 0
    for state in exhaustive_punched_sheets(grid=3, max_folds=2):
        assert pf.unfold(state) == pf.unfold_by_replay(
            state.grid, state.fold_log, state.punches
        )
        sheets += 1
    assert sheets == 100

    for seed in range(1000):
        bundle = ball_mod.generate(seed, split="train")
        label, refl = ball_mod.trace_integrate(bundle.scene)
        assert label == bundle.path.label
        assert refl == bundle.path.n_reflections

    for i in range(500):
        bundle = sk.generate(i, split="train", size=6 + i % 3)
        dist = sk.distance_map(bundle.board, bundle.start)
        best = min(d for s, d in dist.items() if s.box == bundle.board.target)
        assert len(bundle.moves) == best

    rng = random.Random(77)
    compared = 0
    while compared < 200:
        stack, iso, orth, qview, qcolor = random_cube_problem(rng, n=3)
        try:
            counts, marked, leaves = cube_mod.enumerate_consistent(
                3, iso, orth, qview, qcolor
            )
        except CapacityError:
            continue
        bcounts, bmarked, bleaves = brute_cube(3, iso, orth, qview, qcolor)
        assert counts == bcounts
        assert leaves == bleaves
        assert marked == bmarked
        compared += 1

    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0
    print(
        f"criterion 5 PASS: 1000+100 sheets, 1000 ball scenes, 500 pushes, "
        f"200 cube instances in {elapsed:.1f}s"
    )


def test_criterion_6_protocol_shapes():
    train = {
        "paperfold": 2357, "multihop": 2000, "ball": 2254,
        "maze": 8448, "sokoban": 7715, "cube": 2500,
    }
    test = {
        "paperfold": 480, "multihop": 480, "ball": 1024,
        "maze": 480, "sokoban": 480, "cube": 480,
    }
    for task in TASK_NAMES:
        assert DATASET_TARGETS[task]["train"] == train[task]
        assert DATASET_TARGETS[task]["test"] == test[task]

    made = {}
    for task, want in test.items():
        count = 0
        for seed in range(want):
            bundle = generate_bundle(task, seed, split="test")
            params = bundle.instance.params
            if task == "paperfold":
                assert params["grid"] == 8
                assert len(params["folds"]) == 4
            elif task == "ball":
                assert params["n_reflections"] >= 1
            elif task == "maze":
                assert params["size"] == 5
            elif task == "cube":
                assert params["base"] == 6
            count += 1
        made[task] = count
    assert made == test
    print(f"criterion 6 PASS: {sum(made.values())} held-out bundles generated")


def _states_for(task, seed):
    if task == "paperfold":
        bundle = pf.generate(seed, split="train")
        return [
            pf.Snapshot.of(rows, cols, holes)
            for rows, cols, holes, _ in pf.replay_stages(bundle.state)
        ]
    if task == "maze":
        bundle = maze_mod.generate(seed, split="train")
        return [
            maze_mod.PathState(maze=bundle.maze, path=tuple(bundle.path[:cut]))
            for cut in range(len(bundle.path) + 1)
        ]
    if task == "sokoban":
        bundle = sk.generate(seed, split="train")
        return [(bundle.board, s) for s in bundle.states[:10]]
    if task == "ball":
        bundle = ball_mod.generate(seed, split="train")
        return list(bundle.path.states)
    if task == "multihop":
        bundle = mh.generate(seed, split="train")
        return [bundle.initial] + list(bundle.scenes)
    bundle = cube_mod.generate(seed, split="train")
    return list(bundle.given_views) + [bundle.marked]


def test_criterion_7_trace_formats():
    for task in TASK_NAMES:
        for seed in range(20):
            bundle = generate_bundle(task, seed, split="train")
            imp = build_cot(bundle, "implicit")
            blob = "\n".join(
                s.payload for s in imp.segments if s.kind == "text"
            )
            assert not COORD_RE.search(blob)
            assert not imp.images
            vis = build_cot(bundle, "visual")
            refs = [s for s in vis.segments if s.kind == "image_ref"]
            assert len(refs) == len(vis.images)
            assert refs, "visual trace with no image"
            assert all(s.payload == IMAGE_PLACEHOLDER for s in refs)

    checked = 0
    seed = 0
    while checked < 1000:
        for task in TASK_NAMES:
            for state in _states_for(task, seed):
                got = decode_state(render_state(task, state))
                if task == "multihop":
                    assert got == tuple(
                        sorted(state, key=lambda o: (o.x, o.z))
                    )
                else:
                    assert got == state
                checked += 1
        seed += 1

    flip = {0: 1, 1: 0, cube_mod.AUX: cube_mod.AUX, None: None}
    scored = exact_hits = shape_hits = 0
    seed = 0
    while scored < 20:
        marked = cube_mod.generate(seed, split="train").marked
        seed += 1
        if not any(c in (0, 1) for row in marked.cells for c in row):
            continue
        permuted = cube_mod.ViewMatrix(
            kind=marked.kind,
            view=marked.view,
            base=marked.base,
            cells=tuple(tuple(flip[c] for c in row) for row in marked.cells),
        )
        exact_hits += score_fidelity(permuted, marked, "exact")
        shape_hits += score_fidelity(permuted, marked, "shape_only")
        scored += 1
    assert exact_hits == 0
    assert shape_hits == 20

    print(
        f"criterion 7 PASS: 120 traces leak-free, {checked} state round "
        f"trips, 20 recolored views scored shape-only"
    )


def test_criterion_8_reproducible_generation(tmp_path):
    specs = [
        ("paperfold", "train", 3, "verbal"),
        ("maze", "train", 3, "visual"),
        ("sokoban", "train", 3, "verbal"),
        ("ball", "train", 3, "visual"),
        ("multihop", "train", 3, "implicit"),
        ("cube", "train", 2, "visual"),
    ]
    roots = []
    for name in ("a", "b"):
        root = tmp_path / name
        write_dataset(root, 4242, specs)
        roots.append(root)
    first, second = roots
    listing = lambda root: sorted(
        p.relative_to(root) for p in root.rglob("*") if p.is_file()
    )
    assert listing(first) == listing(second)
    differing = [
        p for p in listing(first)
        if (first / p).read_bytes() != (second / p).read_bytes()
    ]
    assert differing == []
    n_files = len(listing(first))
    print(f"criterion 8 PASS: two runs, {n_files} files byte-identical")
