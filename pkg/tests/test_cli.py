import json

import pytest

from worldlab import cli
from worldlab.errors import GenerationError


def _read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line]


def test_version_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0


def test_usage_errors_exit_one(tmp_path, capsys):
    assert cli.main([]) == cli.EXIT_VALIDATION
    assert cli.main(["generate", "--bogus"]) == cli.EXIT_VALIDATION
    assert cli.main(
        ["generate", "--out", str(tmp_path), "--seed", "0", "--task", "nope"]
    ) == cli.EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "worldlab: error:" in err


def test_generate_rejects_bad_combos(tmp_path, capsys):
    code = cli.main(
        ["generate", "--out", str(tmp_path / "a"), "--seed", "0",
         "--task", "multihop", "--wm", "verbal"]
    )
    assert code == cli.EXIT_VALIDATION
    assert "unsupported" in capsys.readouterr().err
    code = cli.main(
        ["generate", "--out", str(tmp_path / "b"), "--seed", "0",
         "--task", "maze", "--count", "-3"]
    )
    assert code == cli.EXIT_VALIDATION


def test_generation_failure_exits_two(tmp_path, monkeypatch, capsys):
    def explode(*a, **k):
        raise GenerationError("boom")

    monkeypatch.setattr(cli, "write_dataset", explode)
    code = cli.main(
        ["generate", "--out", str(tmp_path), "--seed", "0",
         "--task", "maze", "--count", "1", "--split", "train"]
    )
    assert code == cli.EXIT_GENERATION
    assert "generation failure: boom" in capsys.readouterr().err


def test_missing_data_root_exits_three(tmp_path, capsys):
    code = cli.main(["inspect", "--data", str(tmp_path / "nowhere")])
    assert code == cli.EXIT_IO
    assert "i/o error" in capsys.readouterr().err


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    code = cli.main(
        ["generate", "--out", str(root), "--seed", "11",
         "--task", "maze", "--task", "ball",
         "--count", "2", "--split", "train"]
    )
    assert code == cli.EXIT_OK
    return root


def test_generate_writes_dataset(small_dataset, tmp_path, capsys):
    root = small_dataset
    manifest = json.loads((root / "manifest.json").read_text())
    assert manifest["records"] == 4
    records = _read_jsonl(root / "data" / "maze" / "train.jsonl")
    assert [r["id"] for r in records] == [
        "maze-train-implicit-00000", "maze-train-implicit-00001",
    ]

    # same flags, fresh directory: identical digest
    again = tmp_path / "again"
    assert cli.main(
        ["generate", "--out", str(again), "--seed", "11",
         "--task", "maze", "--task", "ball",
         "--count", "2", "--split", "train"]
    ) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert f"manifest digest {manifest['digest']}" in out
    manifest2 = json.loads((again / "manifest.json").read_text())
    assert manifest2["digest"] == manifest["digest"]


def test_inspect_prints_record(small_dataset, capsys):
    assert cli.main(["inspect", "--data", str(small_dataset)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "id:       ball-train-implicit-00000" in out
    assert "task:     ball" in out

    assert cli.main(
        ["inspect", "--data", str(small_dataset), "--id", "maze-train-implicit-00001"]
    ) == cli.EXIT_OK
    assert "maze-train-implicit-00001" in capsys.readouterr().out

    assert cli.main(
        ["inspect", "--data", str(small_dataset), "--id", "ghost"]
    ) == cli.EXIT_VALIDATION


def test_render_writes_state_images(small_dataset, tmp_path, capsys):
    out = tmp_path / "frames"
    code = cli.main(
        ["render", "--data", str(small_dataset),
         "--id", "maze-train-implicit-00000", "--out", str(out)]
    )
    assert code == cli.EXIT_OK
    written = sorted(out.glob("*.png"))
    assert len(written) >= 2
    assert all(p.name.startswith("maze-train-implicit-00000_state") for p in written)


def test_evaluate_end_to_end(small_dataset, tmp_path, capsys):
    records = []
    for name in ("maze", "ball"):
        records.extend(_read_jsonl(small_dataset / "data" / name / "train.jsonl"))
    preds = tmp_path / "preds.jsonl"
    lines = [
        json.dumps({"instance_id": r["id"], "raw_text": f"Answer: {r['answer']}"})
        for r in records
    ]
    preds.write_text("\n".join(lines) + "\n", encoding="utf-8")

    out_root = tmp_path / "scored"
    code = cli.main(
        ["evaluate", "--data", str(small_dataset),
         "--predictions", str(preds), "--out", str(out_root)]
    )
    assert code == cli.EXIT_OK
    stdout = capsys.readouterr().out
    assert "overall" in stdout and "1.0000" in stdout

    report_dir = out_root / "reports"
    report = json.loads((report_dir / "report.json").read_text())
    assert report["accuracy"]["overall"] == 1.0
    assert (report_dir / "report.txt").exists()
    assert (report_dir / "report.csv").exists()
    assert (report_dir / "accuracy_by_task.png").exists()
    assert (report_dir / "accuracy_by_stratum.png").exists()


def test_evaluate_bad_inputs(small_dataset, tmp_path, capsys):
    missing = tmp_path / "absent.jsonl"
    assert cli.main(
        ["evaluate", "--data", str(small_dataset), "--predictions", str(missing)]
    ) == cli.EXIT_IO

    corrupt = tmp_path / "corrupt.jsonl"
    corrupt.write_text('{"instance_id": "only-an-id"}\n', encoding="utf-8")
    assert cli.main(
        ["evaluate", "--data", str(small_dataset), "--predictions", str(corrupt)]
    ) == cli.EXIT_VALIDATION
    assert "bad prediction" in capsys.readouterr().err


def test_theory_command_writes_report(tmp_path, capsys):
    out = tmp_path / "lab"
    code = cli.main(
        ["theory", "--check", "corollary", "--trials", "5",
         "--seed", "1", "--out", str(out)]
    )
    assert code == cli.EXIT_OK
    stdout = capsys.readouterr().out
    assert "corollary: PASS (5 instances" in stdout
    saved = json.loads((out / "reports" / "theory.json").read_text())
    assert saved["corollary"]["passed"] is True
    assert (out / "reports" / "theory_gaps.png").exists()


def test_theory_tolerance_override(capsys):
    code = cli.main(
        ["theory", "--check", "corollary", "--trials", "3",
         "--seed", "2", "--tol", "0.5"]
    )
    assert code == cli.EXIT_OK
    assert "PASS" in capsys.readouterr().out
