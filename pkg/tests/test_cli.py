"""End-to-end pipeline runs over the 3-video mock fixture via the CLI."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from vidprompt.cli import main
from vidprompt.config import RunConfig
from vidprompt.represent import VideoRepresentation

from cli_fixture import EVENT_PHRASES_FINAL, build_fixture


@pytest.fixture
def fixture_root(tmp_path):
    config_path = build_fixture(tmp_path)
    return tmp_path, config_path


def invoke(*args):
    runner = CliRunner()
    result = runner.invoke(main, list(args), catch_exceptions=False)
    return result


def snapshot(*dirs: Path) -> dict[str, bytes]:
    tree = {}
    for directory in dirs:
        for path in sorted(Path(directory).rglob("*")):
            if path.is_file():
                tree[str(path)] = path.read_bytes()
    return tree


def run_pipeline(config_path):
    for command in ("build-vocab", "represent", "run", "eval"):
        result = invoke(command, "--config", str(config_path))
        assert result.exit_code == 0, f"{command} failed: {result.output}"


class TestBuildVocab:
    def test_stats_report_counts(self, fixture_root):
        root, config_path = fixture_root
        result = invoke("build-vocab", "--config", str(config_path))
        assert result.exit_code == 0
        stats = json.loads((root / "vocab" / "stats.json").read_text())
        assert stats["object"]["original"] == 9
        assert stats["object"]["final"] == 9
        # events: "green field" fails the verb+argument filter, then
        # "running quickly" is removed as a near-duplicate of "running fast"
        assert stats["event"]["original"] == 7
        assert stats["event"]["after_structural_filter"] == 6
        assert stats["event"]["after_dedup"] == 5
        assert stats["event"]["final"] == 5
        assert stats["attribute"]["final"] == 4

    def test_event_store_matches_annotator_oracle(self, fixture_root):
        # Oracle: apply the heuristic annotator rule directly to the phrase
        # file and intersect with the committed near-duplicate removal.
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        store = json.loads((root / "vocab" / "events.json").read_text())
        assert store["phrases"] == EVENT_PHRASES_FINAL

    def test_blocklist_reduces_objects(self, fixture_root, tmp_path):
        root, config_path = fixture_root
        blocklist = tmp_path / "blocklist.txt"
        blocklist.write_text("cake\n", encoding="utf-8")
        config = json.loads(Path(config_path).read_text())
        config["vocab_blocklist"] = str(blocklist)
        config["vocab_dir"] = str(tmp_path / "vocab_blocked")
        blocked_config = tmp_path / "config_blocked.json"
        blocked_config.write_text(json.dumps(config))
        result = invoke("build-vocab", "--config", str(blocked_config))
        assert result.exit_code == 0
        stats = json.loads((tmp_path / "vocab_blocked" / "stats.json").read_text())
        assert stats["object"]["after_blocklist"] == 8
        assert stats["object"]["final"] == 8

    def test_missing_source_exits_2(self, fixture_root, tmp_path):
        root, config_path = fixture_root
        config = json.loads(Path(config_path).read_text())
        config["vocab_sources"] = {"object": str(tmp_path / "missing.txt")}
        bad = tmp_path / "bad_config.json"
        bad.write_text(json.dumps(config))
        assert invoke("build-vocab", "--config", str(bad)).exit_code == 2


class TestRepresent:
    def test_writes_one_json_per_video(self, fixture_root):
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        result = invoke("represent", "--config", str(config_path))
        assert result.exit_code == 0
        files = sorted(p.name for p in (root / "representations").glob("v*.json"))
        assert files == ["v1.json", "v2.json", "v3.json"]
        repr_v2 = VideoRepresentation.load(root / "representations" / "v2.json")
        assert repr_v2.asr == "preheat the oven and mix the batter"
        assert len(repr_v2.frame_captions) == 4

    def test_missing_image_entry_is_partial_failure(self, fixture_root, tmp_path):
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        table = json.loads((root / "image_embed.json").read_text())
        del table["entries"]["v3:t0"]
        broken = tmp_path / "broken_images.json"
        broken.write_text(json.dumps(table))
        config = json.loads(Path(config_path).read_text())
        config["image_embed_table"] = str(broken)
        config["representations_dir"] = str(tmp_path / "partial_reprs")
        partial = tmp_path / "config_partial.json"
        partial.write_text(json.dumps(config))
        result = invoke("represent", "--config", str(partial))
        assert result.exit_code == 1
        manifest = json.loads((tmp_path / "partial_reprs" / "manifest.json").read_text())
        assert [f["video_id"] for f in manifest["failures"]] == ["v3"]


class TestRunAndEval:
    def test_three_seeds_three_prediction_files(self, fixture_root):
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        invoke("represent", "--config", str(config_path))
        result = invoke("run", "--config", str(config_path))
        assert result.exit_code == 0
        for seed in (1, 2, 3):
            seed_dir = root / "out" / f"seed_{seed}"
            assert (seed_dir / "predictions.jsonl").is_file()
            manifest = json.loads((seed_dir / "manifest.json").read_text())
            assert manifest["seed"] == seed
            assert set(manifest["instances"]) == {"e_v3", "e_v1"}
            for entry in manifest["instances"].values():
                assert entry["in_context_ids"]  # selection recorded for audit
            assert sorted(p.name for p in (seed_dir / "prompts").glob("*.txt")) == [
                "e_v1.txt",
                "e_v3.txt",
            ]

    def test_eval_report_mean_std(self, fixture_root):
        root, config_path = fixture_root
        run_pipeline(config_path)
        report = json.loads((root / "out" / "report.json").read_text())
        assert report["seeds"] == [1, 2, 3]
        for metric in ("bleu4", "rouge_l", "cider_d"):
            entry = report["metrics"][metric]
            assert len(entry["per_seed"]) == 3
            assert entry["std"] >= 0
            assert abs(entry["mean"] - sum(entry["per_seed"]) / 3) <= 1e-12
        assert report["unavailable"] == ["meteor"]

    def test_zero_shot_run(self, fixture_root):
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        invoke("represent", "--config", str(config_path))
        result = invoke("run", "--config", str(config_path), "--in-context", "0", "--output-dir", str(root / "out0"))
        assert result.exit_code == 0
        manifest = json.loads((root / "out0" / "seed_1" / "manifest.json").read_text())
        assert all(not e["in_context_ids"] for e in manifest["instances"].values())

    def test_eval_unknown_prediction_ids_exit_2(self, fixture_root):
        root, config_path = fixture_root
        run_pipeline(config_path)
        rogue = {"video_id": "vX", "example_id": "ghost", "prompt_manifest_ref": "x", "prediction": "y"}
        predictions = root / "out" / "seed_1" / "predictions.jsonl"
        predictions.write_text(predictions.read_text() + json.dumps(rogue) + "\n")
        assert invoke("eval", "--config", str(config_path)).exit_code == 2


class TestPseudoLabel:
    def test_caption_file_and_manifest(self, fixture_root):
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        invoke("represent", "--config", str(config_path))
        result = invoke("pseudo-label", "--config", str(config_path))
        assert result.exit_code == 0
        lines = (root / "out" / "pseudo_labels.tsv").read_text().splitlines()
        assert len(lines) == 2  # the two eval videos
        assert all(len(line.split("\t")) == 2 for line in lines)
        manifest = json.loads((root / "out" / "pseudo_manifest.json").read_text())
        assert manifest["params"]["temperature"] == 0.0


class TestEndToEndDeterminism:
    def test_three_repeated_runs_byte_identical(self, fixture_root):
        import shutil

        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        snapshots = []
        for _ in range(3):
            for stale in (root / "representations", root / "out"):
                shutil.rmtree(stale, ignore_errors=True)
            for command in ("represent", "run", "eval"):
                result = invoke(command, "--config", str(config_path))
                assert result.exit_code == 0
            snapshots.append(snapshot(root / "representations", root / "out"))
        assert snapshots[0] == snapshots[1] == snapshots[2]
        assert any("report.json" in k for k in snapshots[0])


class TestAblations:
    def _pipeline_with(self, root, config_path, tmp_path, name, **overrides):
        config = json.loads(Path(config_path).read_text())
        config["representations_dir"] = str(tmp_path / f"reprs_{name}")
        config["output_dir"] = str(tmp_path / f"out_{name}")
        config.update(overrides)
        path = tmp_path / f"config_{name}.json"
        path.write_text(json.dumps(config))
        assert invoke("represent", "--config", str(path)).exit_code == 0
        assert invoke("run", "--config", str(path)).exit_code == 0
        return Path(config["representations_dir"]), Path(config["output_dir"])

    def test_one_frame_prompts_have_single_caption(self, fixture_root, tmp_path):
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        reprs, out = self._pipeline_with(root, config_path, tmp_path, "one", one_frame=True)
        repr_paths = sorted(reprs.glob("v*.json"))
        assert len(repr_paths) == 3
        for repr_path in repr_paths:
            assert len(VideoRepresentation.load(repr_path).frame_captions) == 1
        prompt_paths = sorted((out / "seed_1" / "prompts").glob("*.txt"))
        assert len(prompt_paths) == 2
        for prompt_path in prompt_paths:
            caption_lines = [
                line
                for line in prompt_path.read_text().splitlines()
                if line.startswith("Frame Captions:")
            ]
            assert caption_lines  # query and in-context blocks alike
            for line in caption_lines:
                assert line.count("First,") == 1
                assert "Then," not in line and "Finally," not in line

    def test_reversed_prompts_are_order_reversed(self, fixture_root, tmp_path):
        root, config_path = fixture_root
        invoke("build-vocab", "--config", str(config_path))
        forward_reprs, forward_out = self._pipeline_with(root, config_path, tmp_path, "fwd")
        reversed_reprs, reversed_out = self._pipeline_with(
            root, config_path, tmp_path, "rev", reversed_order=True
        )
        for repr_path in forward_reprs.glob("v*.json"):
            forward = VideoRepresentation.load(repr_path)
            backward = VideoRepresentation.load(reversed_reprs / repr_path.name)
            assert [c.text for c in backward.frame_captions] == [
                c.text for c in reversed(forward.frame_captions)
            ]
            for kind, tokens in forward.tokens.items():
                assert [t.phrase for t in backward.tokens[kind]] == [
                    t.phrase for t in reversed(tokens)
                ]
        # the prompt diff is exactly the reordering: same lines, token and
        # caption lines rendered from reversed lists
        for prompt_path in (forward_out / "seed_1" / "prompts").glob("*.txt"):
            forward_lines = prompt_path.read_text().splitlines()
            reversed_lines = (
                (reversed_out / "seed_1" / "prompts" / prompt_path.name).read_text().splitlines()
            )
            assert len(forward_lines) == len(reversed_lines)
            for a, b in zip(forward_lines, reversed_lines):
                if a != b:
                    assert a.split(":")[0] in {"Objects", "Events", "Attributes", "Frame Captions"}


class TestConfig:
    def test_round_trip(self, fixture_root):
        _, config_path = fixture_root
        config = RunConfig.load(config_path)
        assert RunConfig.from_dict(config.to_dict()) == config

    def test_flag_overrides_win(self, fixture_root):
        _, config_path = fixture_root
        config = RunConfig.load(config_path)
        assert config.with_overrides(in_context=4).in_context == 4
        assert config.with_overrides(in_context=None).in_context == config.in_context

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            RunConfig.from_dict({"no_such_field": 1})

    def test_config_hash_stable(self, fixture_root):
        _, config_path = fixture_root
        first = RunConfig.load(config_path).config_hash()
        second = RunConfig.load(config_path).config_hash()
        assert first == second

    def test_missing_config_file_exits_2(self):
        assert invoke("run", "--config", "/nonexistent/config.json").exit_code == 2
