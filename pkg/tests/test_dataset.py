import json

import pytest

from worldlab import dataset
from worldlab.cot import IMAGE_PLACEHOLDER
from worldlab.errors import ConfigurationError, GenerationError
from worldlab.tasks import generate_bundle


def test_input_images_per_task():
    expected = {
        "paperfold": 0,
        "maze": 1,
        "sokoban": 1,
        "ball": 1,
        "multihop": 1,
        "cube": 3,
    }
    for task, want in expected.items():
        bundle = generate_bundle(task, 0, split="train")
        assert len(dataset.input_images(bundle)) == want


def test_generate_entries_ids_and_determinism():
    a = list(dataset.generate_entries("maze", "train", 4, "implicit", 7))
    b = list(dataset.generate_entries("maze", "train", 4, "implicit", 7))
    assert [e.instance.id for e in a] == [
        "maze-train-implicit-00000",
        "maze-train-implicit-00001",
        "maze-train-implicit-00002",
        "maze-train-implicit-00003",
    ]
    for x, y in zip(a, b):
        assert x.instance.question == y.instance.question
        assert x.instance.seed == y.instance.seed
        assert x.trace.segments == y.trace.segments
    c = list(dataset.generate_entries("maze", "train", 4, "implicit", 8))
    assert [e.instance.seed for e in c] != [e.instance.seed for e in a]


def test_generate_entries_rejects_bad_args():
    with pytest.raises(ConfigurationError):
        list(dataset.generate_entries("multihop", "train", 1, "verbal", 0))
    with pytest.raises(ConfigurationError):
        list(dataset.generate_entries("maze", "train", -1, "implicit", 0))


def test_record_dict_shape():
    entry = next(dataset.generate_entries("cube", "train", 1, "visual", 3))
    rec = dataset.record_dict(entry, ["images/cube/x_0.png"])
    assert rec["task"] == "cube"
    assert rec["question"].startswith(IMAGE_PLACEHOLDER + "\n")
    assert rec["question"].count(IMAGE_PLACEHOLDER) >= len(entry.input_images)
    prefix = (IMAGE_PLACEHOLDER + "\n") * len(entry.input_images)
    assert rec["question"].startswith(prefix)
    assert rec["images"] == ["images/cube/x_0.png"]
    assert all(set(d) == {"kind", "payload"} for d in rec["cot"])
    json.dumps(rec)


def test_write_dataset_round_trip(tmp_path):
    specs = [
        ("maze", "train", 3, "visual"),
        ("paperfold", "train", 2, "verbal"),
    ]
    manifest = dataset.write_dataset(tmp_path / "d1", 11, specs)
    assert manifest["records"] == 5
    assert manifest["counts"] == {
        "maze/train/visual": 3,
        "paperfold/train/verbal": 2,
    }
    stored = json.loads((tmp_path / "d1" / "manifest.json").read_text())
    assert stored == manifest

    records = dataset.read_records(tmp_path / "d1" / "data" / "maze" / "train.jsonl")
    assert len(records) == 3
    for rec in records:
        for rel in rec["images"]:
            assert (tmp_path / "d1" / rel).is_file()
    # paperfold verbal emits no images at all
    assert not (tmp_path / "d1" / "images" / "paperfold").exists()


def test_write_dataset_byte_identical_reruns(tmp_path):
    specs = [("sokoban", "train", 2, "visual"), ("ball", "train", 2, "implicit")]
    m1 = dataset.write_dataset(tmp_path / "a", 5, specs)
    m2 = dataset.write_dataset(tmp_path / "b", 5, specs)
    assert m1 == m2
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_write_dataset_rejects_duplicate_slice(tmp_path):
    with pytest.raises(ConfigurationError):
        dataset.write_dataset(
            tmp_path / "x",
            0,
            [("maze", "train", 1, "implicit"), ("maze", "train", 1, "visual")],
        )


def test_shortfall_leaves_partial_manifest(tmp_path, monkeypatch):
    calls = {"n": 0}
    real = dataset.generate_bundle

    def flaky(task, seed, split="train", **opts):
        calls["n"] += 1
        if task == "ball":
            raise GenerationError("forced shortfall")
        return real(task, seed, split, **opts)

    monkeypatch.setattr(dataset, "generate_bundle", flaky)
    with pytest.raises(GenerationError):
        dataset.write_dataset(
            tmp_path / "p",
            2,
            [("maze", "train", 1, "implicit"), ("ball", "train", 1, "implicit")],
        )
    partial = json.loads((tmp_path / "p" / "manifest.partial.json").read_text())
    assert partial["partial"] is True
    assert partial["counts"] == {"maze/train/implicit": 1}
    assert not (tmp_path / "p" / "manifest.json").exists()
    assert calls["n"] >= dataset.ATTEMPT_BUDGET


def test_read_records_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"ok": 1}\nnot json\n', encoding="utf-8")
    with pytest.raises(ConfigurationError) as err:
        dataset.read_records(path)
    assert ":2:" in str(err.value)
