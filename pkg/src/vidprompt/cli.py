"""Command-line pipeline: build-vocab, represent, run, eval, pseudo-label.

Every command reads one JSON config (see RunConfig) plus flag overrides, and
writes a manifest carrying the config hash, seed, and provider identities so
any output can be traced back to its inputs. Exit codes: 0 success, 1 some
instances failed, 2 config or I/O error.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from .config import RunConfig
from .fewshot import LabeledExample
from .prompt import TaskKind
from .providers import (
    CachedCaptioner,
    CachedCompletion,
    CachedImageEmbedder,
    CachedTextEmbedder,
    CompletionParams,
    DiskCache,
    HttpCaptioner,
    HttpClient,
    HttpCompletion,
    HttpImageEmbedder,
    HttpTextEmbedder,
    MockCaptioner,
    MockCompletion,
    MockImageEmbedder,
    MockTextEmbedder,
    ProviderError,
    parallel_map,
)
from .represent import FrameCaption, VideoRepresentation, build_representation
from .tasks import (
    TaskInstance,
    evaluate_task,
    generate_pseudo_labels,
    load_predictions,
    make_report,
    run_task,
    save_pseudo_labels,
)
from .tokenizer import FrameEmbedding, tokenize_video
from .vocab import (
    FileAnnotator,
    HeuristicAnnotator,
    VocabKind,
    dedup_by_similarity,
    embed_vocab,
    filter_events,
    load_phrases,
    load_vocab_embedding,
    save_vocab_embedding,
    Vocabulary,
)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


@dataclass
class ProviderBundle:
    text_embedder: object | None
    image_embedder: object | None
    captioner: object | None
    completion: object | None

    def identities(self) -> dict:
        return {
            name: getattr(provider, "identity", None)
            for name, provider in (
                ("text_embedder", self.text_embedder),
                ("image_embedder", self.image_embedder),
                ("captioner", self.captioner),
                ("completion", self.completion),
            )
            if provider is not None
        }


def build_providers(config: RunConfig) -> ProviderBundle:
    """Mock tables win over the HTTP endpoint; a cache dir wraps whatever was built."""
    client = HttpClient(base_url=config.endpoint) if config.endpoint else None

    text_embedder = image_embedder = captioner = completion = None
    if config.text_embed_table:
        text_embedder = MockTextEmbedder(config.text_embed_table)
    elif client:
        text_embedder = HttpTextEmbedder(client)
    if config.image_embed_table:
        image_embedder = MockImageEmbedder(config.image_embed_table)
    elif client:
        image_embedder = HttpImageEmbedder(client)
    if config.caption_table:
        captioner = MockCaptioner(config.caption_table)
    elif client:
        captioner = HttpCaptioner(client)
    if config.completion_table:
        completion = MockCompletion(config.completion_table)
    elif client:
        completion = HttpCompletion(client)

    if config.cache_dir:
        cache = DiskCache(config.cache_dir)
        if text_embedder:
            text_embedder = CachedTextEmbedder(text_embedder, cache)
        if image_embedder:
            image_embedder = CachedImageEmbedder(image_embedder, cache)
        if captioner:
            captioner = CachedCaptioner(captioner, cache)
        if completion:
            completion = CachedCompletion(completion, cache)
    return ProviderBundle(text_embedder, image_embedder, captioner, completion)


def _load_config(config_path: str, **overrides) -> RunConfig:
    return RunConfig.load(config_path).with_overrides(**overrides)


def _load_dataset(config: RunConfig) -> dict:
    if not config.dataset:
        raise ValueError("config.dataset is required")
    return json.loads(Path(config.dataset).read_text(encoding="utf-8"))


def _load_representations(config: RunConfig) -> dict[str, VideoRepresentation]:
    directory = Path(config.representations_dir)
    if not directory.is_dir():
        raise FileNotFoundError(f"representations directory not found: {directory}")
    representations = {}
    for path in sorted(directory.glob("*.json")):
        if path.name == "manifest.json":
            continue
        repr_ = VideoRepresentation.load(path)
        representations[repr_.video_id] = repr_
    return representations


def _support_pool(dataset: dict, representations: dict[str, VideoRepresentation]) -> list[LabeledExample]:
    pool = []
    for entry in dataset.get("train", []):
        repr_ = representations.get(entry["video_id"])
        if repr_ is None:
            raise KeyError(f"train example {entry['example_id']!r} has no representation")
        pool.append(
            LabeledExample(
                example_id=entry["example_id"],
                representation=repr_,
                annotation=entry["annotation"],
                question=entry.get("question"),
                candidates=tuple(entry["candidates"]) if entry.get("candidates") else None,
            )
        )
    return pool


def _instances(dataset: dict) -> list[TaskInstance]:
    return [
        TaskInstance(
            example_id=entry["example_id"],
            video_id=entry["video_id"],
            annotation=entry.get("annotation", ""),
            question=entry.get("question"),
            candidates=tuple(entry["candidates"]) if entry.get("candidates") else None,
            references=tuple(entry.get("references", ())),
        )
        for entry in dataset.get("eval", [])
    ]


def _write_manifest(path: Path, config: RunConfig, providers: ProviderBundle, extra: dict) -> None:
    manifest = {
        "config_hash": config.config_hash(),
        "providers": providers.identities(),
        **extra,
    }
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")


def _command(func):
    """Shared error handling: config/IO problems exit 2."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (OSError, ValueError, KeyError, json.JSONDecodeError, ProviderError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)

    return wrapper


_CONFIG_OPTION = click.option("--config", "config_path", required=True, type=click.Path(exists=True))


@click.group()
def main():
    """Few-shot video-to-text pipeline."""


@main.command("build-vocab")
@_CONFIG_OPTION
@click.option("--vocab-dir", default=None, type=click.Path())
@_command
def cmd_build_vocab(config_path: str, vocab_dir: str | None):
    """Clean, dedup, and embed the visual-token vocabularies; write stores + stats."""
    config = _load_config(config_path, vocab_dir=vocab_dir)
    providers = build_providers(config)
    if providers.text_embedder is None:
        raise ValueError("build-vocab needs a text embedder (mock table or endpoint)")
    if not config.vocab_sources:
        raise ValueError("config.vocab_sources is empty")

    out_dir = Path(config.vocab_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats: dict[str, dict] = {}
    for kind_name, source in config.vocab_sources.items():
        kind = VocabKind(kind_name)
        raw_lines = [l for l in Path(source).read_text(encoding="utf-8").splitlines() if l.strip()]
        report: dict = {"source": source, "original": len(raw_lines)}

        blocklist = config.vocab_blocklist if kind == VocabKind.OBJECT else None
        vocab = load_phrases(source, kind, blocklist=blocklist)
        if blocklist:
            report["after_blocklist"] = len(vocab)
        phrases = list(vocab.phrases)

        if kind == VocabKind.EVENT:
            annotator = (
                FileAnnotator(config.event_labels) if config.event_labels else HeuristicAnnotator()
            )
            phrases = filter_events(phrases, annotator)
            report["after_structural_filter"] = len(phrases)
        if kind in (VocabKind.EVENT, VocabKind.ATTRIBUTE):
            phrases = dedup_by_similarity(
                phrases, providers.text_embedder, config.dedup_threshold
            )
            report["after_dedup"] = len(phrases)

        final = Vocabulary(kind=kind, phrases=tuple(phrases), source_label=source)
        embedding = embed_vocab(final, providers.text_embedder)
        store_path = out_dir / f"{kind.value}s.json"
        save_vocab_embedding(store_path, embedding)
        report["final"] = len(final)
        report["store"] = str(store_path)
        stats[kind_name] = report

    stats_path = out_dir / "stats.json"
    stats_path.write_text(json.dumps(stats, indent=1, sort_keys=True), encoding="utf-8")
    _write_manifest(out_dir / "manifest.json", config, providers, {"command": "build-vocab"})
    click.echo(f"wrote {len(stats)} vocabularies to {out_dir}")


@main.command("represent")
@_CONFIG_OPTION
@click.option("--representations-dir", default=None, type=click.Path())
@click.option("--one-frame/--full-frames", "one_frame", default=None)
@click.option("--reversed/--forward", "reversed_order", default=None)
@_command
def cmd_represent(config_path: str, representations_dir: str | None, one_frame: bool | None, reversed_order: bool | None):
    """Build one representation JSON per video from embeddings and captions."""
    config = _load_config(
        config_path,
        representations_dir=representations_dir,
        one_frame=one_frame,
        reversed_order=reversed_order,
    )
    dataset = _load_dataset(config)
    providers = build_providers(config)
    if providers.image_embedder is None or providers.captioner is None:
        raise ValueError("represent needs an image embedder and a captioner")

    vocabs = {}
    for kind in VocabKind:
        store = Path(config.vocab_dir) / f"{kind.value}s.json"
        if store.exists():
            vocabs[kind] = load_vocab_embedding(store)
    if not vocabs:
        raise FileNotFoundError(f"no vocabulary stores under {config.vocab_dir}")

    out_dir = Path(config.representations_dir or "representations")
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = []
    for video in dataset.get("videos", []):
        video_id = video["video_id"]
        try:
            vectors = parallel_map(
                providers.image_embedder.embed_image,
                [f["ref"] for f in video["token_frames"]],
            )
            frames = [
                FrameEmbedding(f["index"], vector)
                for f, vector in zip(video["token_frames"], vectors)
            ]
            per_frame = tokenize_video(frames, vocabs, k=config.top_k)
            captions = []
            for f in video["caption_frames"]:
                text, score = providers.captioner.caption_frame(f["ref"])
                captions.append(FrameCaption(frame_index=f["index"], text=text, filter_score=score))
            repr_ = build_representation(
                video_id,
                captions,
                per_frame,
                asr=video.get("asr"),
                reversed_order=config.reversed_order,
                one_frame=config.one_frame,
                top_m=config.top_m,
                must_rank_within=config.must_rank_within,
            )
            repr_.save(out_dir / f"{video_id}.json")
        except (ProviderError, ValueError, KeyError) as exc:
            failures.append({"video_id": video_id, "error": str(exc)})

    _write_manifest(
        out_dir / "manifest.json",
        config,
        providers,
        {"command": "represent", "videos": len(dataset.get("videos", [])), "failures": failures},
    )
    if failures:
        click.echo(f"{len(failures)} videos failed", err=True)
        sys.exit(EXIT_PARTIAL)
    click.echo(f"wrote representations to {out_dir}")


@main.command("run")
@_CONFIG_OPTION
@click.option("--output-dir", default=None, type=click.Path())
@click.option("--seed", "seeds", multiple=True, type=int)
@click.option("--support-size", "-M", "support_size", default=None, type=int)
@click.option("--in-context", "-N", "in_context", default=None, type=int)
@click.option("--static-markers/--temporal-markers", "static_markers", default=None)
@_command
def cmd_run(config_path, output_dir, seeds, support_size, in_context, static_markers):
    """Select in-context examples, assemble prompts, and call the completion provider."""
    config = _load_config(
        config_path,
        output_dir=output_dir,
        seeds=tuple(seeds) if seeds else None,
        support_size=support_size,
        in_context=in_context,
        static_markers=static_markers,
    )
    task = TaskKind(config.task)
    dataset = _load_dataset(config)
    representations = _load_representations(config)
    providers = build_providers(config)
    if providers.completion is None:
        raise ValueError("run needs a completion provider")
    if config.in_context > 0 and providers.text_embedder is None:
        raise ValueError("run needs a text embedder for in-context selection")

    support = _support_pool(dataset, representations)
    instances = _instances(dataset)
    params = CompletionParams(
        temperature=config.temperature, max_tokens=config.max_tokens, stop=config.stop
    )

    any_failures = False
    out_root = Path(config.output_dir)
    for seed in config.seeds:
        run = run_task(
            instances,
            representations,
            support,
            task,
            providers.completion,
            providers.text_embedder,
            support_size=config.support_size,
            in_context=config.in_context,
            seed=seed,
            params=params,
            static_markers=config.static_markers,
        )
        seed_dir = out_root / f"seed_{seed}"
        prompts_dir = seed_dir / "prompts"
        prompts_dir.mkdir(parents=True, exist_ok=True)
        run.manifest["config_hash"] = config.config_hash()
        run.manifest["providers"] = providers.identities()
        run.save(seed_dir / "predictions.jsonl", seed_dir / "manifest.json")
        for example_id, prompt_text in sorted(run.prompts.items()):
            (prompts_dir / f"{example_id}.txt").write_text(prompt_text, encoding="utf-8")
        any_failures = any_failures or bool(run.failures)

    if any_failures:
        click.echo("some instances failed; see manifests", err=True)
        sys.exit(EXIT_PARTIAL)
    click.echo(f"wrote runs for seeds {list(config.seeds)} to {out_root}")


@main.command("eval")
@_CONFIG_OPTION
@click.option("--output-dir", default=None, type=click.Path())
@_command
def cmd_eval(config_path, output_dir):
    """Score per-seed predictions and write a mean/std report."""
    config = _load_config(config_path, output_dir=output_dir)
    task = TaskKind(config.task)
    dataset = _load_dataset(config)
    instances = _instances(dataset)
    known_ids = {i.example_id for i in instances}
    providers = build_providers(config)

    per_seed = []
    out_root = Path(config.output_dir)
    for seed in config.seeds:
        predictions = load_predictions(out_root / f"seed_{seed}" / "predictions.jsonl")
        unknown = set(predictions) - known_ids
        if unknown:
            raise ValueError(f"predictions for unknown example ids: {sorted(unknown)}")
        per_seed.append(evaluate_task(task, predictions, instances, providers.text_embedder))

    report = make_report(config.task, list(config.seeds), per_seed)
    report.save(out_root / "report.json")
    click.echo(f"wrote report to {out_root / 'report.json'}")


@main.command("pseudo-label")
@_CONFIG_OPTION
@click.option("--output-dir", default=None, type=click.Path())
@click.option("--seed", "seed", default=None, type=int)
@_command
def cmd_pseudo_label(config_path, output_dir, seed):
    """Caption unlabeled videos with greedy decoding; write a TSV caption file."""
    config = _load_config(config_path, output_dir=output_dir)
    dataset = _load_dataset(config)
    representations = _load_representations(config)
    providers = build_providers(config)
    if providers.completion is None:
        raise ValueError("pseudo-label needs a completion provider")

    video_ids = dataset.get("unlabeled") or [e["video_id"] for e in dataset.get("eval", [])]
    instances = [TaskInstance(example_id=vid, video_id=vid) for vid in video_ids]
    support = _support_pool(dataset, representations)
    params = CompletionParams(
        temperature=config.temperature, max_tokens=config.max_tokens, stop=config.stop
    )

    run = generate_pseudo_labels(
        instances,
        representations,
        support,
        providers.completion,
        providers.text_embedder,
        support_size=config.support_size,
        in_context=config.in_context,
        seed=seed if seed is not None else config.seeds[0],
        params=params,
    )
    out_root = Path(config.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    save_pseudo_labels(out_root / "pseudo_labels.tsv", run)
    run.manifest["config_hash"] = config.config_hash()
    run.manifest["providers"] = providers.identities()
    (out_root / "pseudo_manifest.json").write_text(
        json.dumps(run.manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    if run.failures:
        click.echo(f"{len(run.failures)} videos failed; see pseudo_manifest.json", err=True)
        sys.exit(EXIT_PARTIAL)
    click.echo(f"wrote {len(run.predictions)} pseudo labels to {out_root / 'pseudo_labels.tsv'}")


if __name__ == "__main__":
    main()
