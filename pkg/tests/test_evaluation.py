import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from worldlab import evaluation as ev
from worldlab.render import render_state
from worldlab.tasks import cube as cube_mod
from worldlab.tasks import generate_bundle


def test_extract_answer_last_line_wins():
    assert ev.extract_answer("Answer: 3\nwait\nAnswer: 5") == "5"
    assert ev.extract_answer("answer:   7  ") == "7"
    assert ev.extract_answer("no verdict here") is None


def test_parse_int():
    assert ev.parse_int("thinking...\nAnswer: 12") == 12
    assert ev.parse_int("Answer: -2") == -2
    assert ev.parse_int("the count is 9") == 9   # fallback: last line with an int
    assert ev.parse_int("first 3\nthen 4 maybe") == 4
    assert ev.parse_int("nothing numeric") is None


def test_parse_letter():
    assert ev.parse_letter("Answer: B") == "B"
    assert ev.parse_letter("answer: c") == "C"
    assert ev.parse_letter("my final choice is option D") == "D"
    assert ev.parse_letter("completely blank reply .") is None


def test_parse_int_set():
    assert ev.parse_int_set("Answer: 3, 5, 5, 1") == [1, 3, 5]
    assert ev.parse_int_set("Answer: 4") == [4]
    assert ev.parse_int_set("counts could be 2 or 3") == [2, 3]
    assert ev.parse_int_set("???") is None


@given(st.lists(st.integers(min_value=-999, max_value=999), min_size=1, max_size=8))
def test_parse_int_set_round_trip(values):
    text = "Answer: " + ", ".join(str(v) for v in values)
    assert ev.parse_int_set(text) == sorted(set(values))


def test_expected_answer_kind():
    assert ev.expected_answer_kind({"answer": 3, "params": {}}) == "int"
    assert ev.expected_answer_kind({"answer": "B", "params": {}}) == "letter"
    assert ev.expected_answer_kind(
        {"answer": [1, 2], "params": {"answer_mode": "equality"}}
    ) == "int_set"
    assert ev.expected_answer_kind(
        {"answer": [1, 2], "params": {"answer_mode": "membership"}}
    ) == "int"


def test_verify_answer_int_and_letter():
    rec = {"id": "a", "task": "maze", "answer": 6, "params": {}}
    assert ev.verify_answer(rec, ev.Prediction("a", "Answer: 6"))
    assert not ev.verify_answer(rec, ev.Prediction("a", "Answer: 7"))
    assert not ev.verify_answer(rec, ev.Prediction("a", "beats me"))
    with pytest.raises(ev.DomainError):
        ev.verify_answer(rec, ev.Prediction("b", "Answer: 6"))
    letter = {"id": "a", "task": "multihop", "answer": "C", "params": {}}
    assert ev.verify_answer(letter, ev.Prediction("a", "answer: c"))
    assert not ev.verify_answer(letter, ev.Prediction("a", "Answer: A"))


def test_verify_answer_membership_vs_equality():
    member = {
        "id": "a", "task": "cube", "answer": [2, 3, 4],
        "params": {"answer_mode": "membership"},
    }
    assert ev.verify_answer(member, ev.Prediction("a", "Answer: 3"))
    assert not ev.verify_answer(member, ev.Prediction("a", "Answer: 5"))
    equal = {
        "id": "a", "task": "cube", "answer": [2, 3, 4],
        "params": {"answer_mode": "equality"},
    }
    assert ev.verify_answer(equal, ev.Prediction("a", "Answer: 2, 3, 4"))
    assert not ev.verify_answer(equal, ev.Prediction("a", "Answer: 2, 3"))
    assert not ev.verify_answer(equal, ev.Prediction("a", "Answer: 3"))


def _determined_marked_view():
    heights = ((1, 0), (0, 0))
    stack = cube_mod.CubeStack(base=2, heights=heights, colors={(0, 0, 0): 0})
    iso = cube_mod.project(stack, "iso_fl")
    orth = {
        "front": cube_mod.project(stack, "front"),
        "top": cube_mod.project(stack, "top"),
    }
    _counts, marked, _leaves = cube_mod.enumerate_consistent(
        2, iso, orth, "right", 0
    )
    return marked


def test_color_permuted_cube_view_scores_shape_only():
    marked = _determined_marked_view()
    flip = {0: 1, 1: 0, cube_mod.AUX: cube_mod.AUX, None: None}
    permuted = cube_mod.ViewMatrix(
        kind=marked.kind,
        view=marked.view,
        base=marked.base,
        cells=tuple(tuple(flip[c] for c in row) for row in marked.cells),
    )
    assert not ev.score_fidelity(permuted, marked, "exact")
    assert ev.score_fidelity(permuted, marked, "shape_only")
    assert ev.score_fidelity(marked, marked, "exact")


def test_shape_projection_multihop_recolor():
    bundle = generate_bundle("multihop", 0, split="train")
    scene = bundle.initial
    rotated = tuple(
        o.__class__(color="re" + o.color, shape=o.shape, x=o.x, z=o.z)
        for o in scene
    )
    assert ev.shape_projection(rotated) == ev.shape_projection(scene)
    assert rotated != scene


def test_truth_observation_states_shapes():
    maze = generate_bundle("maze", 0, split="train")
    verbal = ev.truth_observation_states(maze, "verbal")
    assert verbal == [tuple(c) for c in maze.path[1:]]
    visual = ev.truth_observation_states(maze, "visual")
    assert len(visual) == len(maze.path) - 1
    sok = generate_bundle("sokoban", 0, split="train")
    pairs = ev.truth_observation_states(sok, "verbal")
    assert pairs == [(s.player, s.box) for s in sok.states[1:]]
    assert len(ev.truth_observation_states(sok, "visual")) == len(sok.keys)


def test_score_trace_fidelity_oracle_echo(tmp_path):
    bundle = generate_bundle("multihop", 3, split="train")
    record = {
        "id": "m3", "task": "multihop", "seed": bundle.instance.seed,
        "split": "train", "wm_format": "visual", "params": {},
    }
    truth = ev.truth_observation_states(bundle, "visual")
    items = []
    for i, scene in enumerate(truth):
        png = render_state("multihop", scene).to_png_bytes()
        (tmp_path / f"s{i}.png").write_bytes(png)
        items.append((i, {"kind": "image_ref", "payload": f"s{i}.png"}))
    pred = ev.Prediction("m3", "Answer: 0", intermediate=items)
    score = ev.score_trace_fidelity(record, pred, images_root=tmp_path)
    assert score.exact == 1.0
    assert score.shape_only == 1.0


def test_score_trace_fidelity_mixed(tmp_path):
    bundle = generate_bundle("maze", 2, split="train")
    record = {
        "id": "z", "task": "maze", "seed": bundle.instance.seed,
        "split": "train", "wm_format": "verbal", "params": {},
    }
    heads = ev.truth_observation_states(bundle, "verbal")
    r0, c0 = heads[0]
    items = [
        (0, {"kind": "coords", "payload": f"({r0}, {c0})"}),
        (1, {"kind": "coords", "payload": "(9, 9)"}),
        (2, {"kind": "coords", "payload": "scrambled"}),
        (99, {"kind": "coords", "payload": "(0, 0)"}),
    ]
    score = ev.score_trace_fidelity(
        record, ev.Prediction("z", "x", intermediate=items), images_root=tmp_path
    )
    assert [s["exact"] for s in score.per_step] == [True, False, False, False]
    assert "error" in score.per_step[2]
    assert "error" in score.per_step[3]
    assert score.exact == 0.25


def _mini_records():
    records = []
    bundles = {}
    for task, seed in (("maze", 0), ("maze", 1), ("ball", 0), ("ball", 1)):
        bundle = generate_bundle(task, seed, split="train")
        inst = bundle.instance
        inst.id = f"{task}-{seed}"
        records.append(
            {
                "id": inst.id, "task": task, "split": "train",
                "seed": inst.seed, "wm_format": "implicit",
                "params": inst.params, "answer": inst.answer,
            }
        )
        bundles[inst.id] = bundle
    return records, bundles


def test_build_report_accuracy_and_strata():
    records, _ = _mini_records()
    predictions = [
        ev.Prediction(records[0]["id"], f"Answer: {records[0]['answer']}"),
        ev.Prediction(records[1]["id"], f"Answer: {records[1]['answer']}"),
        ev.Prediction(records[2]["id"], f"Answer: {records[2]['answer']}"),
        ev.Prediction(records[3]["id"], "total mystery"),
    ]
    report = ev.build_report(records, predictions)
    assert report["accuracy"]["overall"] == 0.75
    assert report["accuracy"]["per_task"]["maze"] == 1.0
    assert report["accuracy"]["per_task"]["ball"] == 0.5
    assert report["counts"]["parse_failures"] == 1
    assert report["parse_failure_rate"] == 0.25
    assert "maze/size=5" in report["accuracy"]["per_stratum"]
    refl = records[2]["params"]["n_reflections"]
    assert f"ball/reflections={refl}" in report["accuracy"]["per_stratum"]
    assert "fidelity" not in report

    table = ev.report_table(report)
    assert "overall" in table and "0.7500" in table
    csv = ev.report_csv(report)
    assert csv.splitlines()[0] == "slice,accuracy"
    assert "overall,0.750000" in csv

    with pytest.raises(ev.DomainError):
        ev.build_report(records, [ev.Prediction("ghost", "Answer: 1")])


def test_build_report_fidelity_block():
    records, bundles = _mini_records()
    rec = dict(records[0], wm_format="verbal")
    heads = ev.truth_observation_states(bundles[rec["id"]], "verbal")
    items = [
        (i, {"kind": "coords", "payload": f"({r}, {c})"})
        for i, (r, c) in enumerate(heads)
    ]
    predictions = [
        ev.Prediction(rec["id"], f"Answer: {rec['answer']}", intermediate=items)
    ]
    report = ev.build_report([rec], predictions)
    assert report["fidelity"]["predictions_with_states"] == 1
    assert report["fidelity"]["steps"] == len(heads)
    assert report["fidelity"]["exact"] == 1.0
    assert report["fidelity"]["undecodable_steps"] == 0
    assert "fidelity over" in ev.report_table(report)


def test_load_predictions(tmp_path):
    path = tmp_path / "preds.jsonl"
    rows = [
        {"instance_id": "a", "raw_text": "Answer: 1"},
        {
            "instance_id": "b",
            "raw_text": "Answer: 2",
            "intermediate": [{"step": 0, "kind": "coords", "payload": "(1, 2)"}],
        },
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    preds = ev.load_predictions(path)
    assert [p.instance_id for p in preds] == ["a", "b"]
    assert preds[1].intermediate[0][0] == 0

    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"instance_id": "a"}\n', encoding="utf-8")
    with pytest.raises(ev.DomainError) as err:
        ev.load_predictions(bad)
    assert ":1: bad prediction" in str(err.value)
