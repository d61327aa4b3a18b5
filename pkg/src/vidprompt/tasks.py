"""Task runners and evaluation: prompt-and-complete loops, candidate mapping, seed-averaged reports."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from .fewshot import LabeledExample, example_key, sample_support, select_in_context
from .prompt import SUFFIXES, TaskKind, assemble, default_instruction, render_block
from .providers.base import (
    CompletionParams,
    CompletionProvider,
    ProviderError,
    TextEmbedder,
    normalize_rows,
)
from .represent import VideoRepresentation


@dataclass(frozen=True)
class TaskInstance:
    """One evaluation unit: a video plus the task-specific query fields and gold data."""

    example_id: str
    video_id: str
    annotation: str = ""
    question: str | None = None
    candidates: tuple[str, ...] | None = None
    references: tuple[str, ...] = ()

    def gold_references(self) -> tuple[str, ...]:
        return self.references if self.references else (self.annotation,)


@dataclass
class TaskRun:
    """Predictions, rendered prompts, and audit manifest for one (task, seed) pass."""

    task: TaskKind
    seed: int
    support_size: int
    in_context: int
    predictions: dict[str, str]  # example_id -> generated text
    manifest: dict
    prompts: dict[str, str] = field(default_factory=dict)  # example_id -> prompt text
    failures: list[dict] = field(default_factory=list)

    def save(self, predictions_path: str | Path, manifest_path: str | Path) -> None:
        lines = [
            json.dumps(
                {
                    "video_id": self.manifest["instances"][example_id]["video_id"],
                    "example_id": example_id,
                    "prompt_manifest_ref": self.manifest["instances"][example_id]["prompt_sha256"],
                    "prediction": prediction,
                },
                sort_keys=True,
            )
            for example_id, prediction in sorted(self.predictions.items())
        ]
        Path(predictions_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        Path(manifest_path).write_text(json.dumps(self.manifest, indent=1, sort_keys=True), encoding="utf-8")


def load_predictions(path: str | Path) -> dict[str, str]:
    predictions: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            record = json.loads(line)
            predictions[record["example_id"]] = record["prediction"]
    return predictions


def _query_key(repr_: VideoRepresentation, task: TaskKind, question: str | None) -> str:
    placeholder = LabeledExample(
        example_id="query", representation=repr_, annotation="-", question=question
    )
    return example_key(placeholder, task)


def run_task(
    instances: list[TaskInstance],
    representations: dict[str, VideoRepresentation],
    support_pool: list[LabeledExample],
    task: TaskKind,
    completion: CompletionProvider,
    selection_embedder: TextEmbedder,
    support_size: int = 10,
    in_context: int = 5,
    seed: int = 0,
    params: CompletionParams | None = None,
    static_markers: bool = False,
    instruction: str | None = None,
) -> TaskRun:
    """Build a prompt per instance, call the completion provider, and record everything.

    Per-instance failures (missing representation, provider errors) are
    recorded and skipped; the run always completes. With mock providers and
    temperature 0 the result is byte-stable across repeated runs.
    """
    params = params or CompletionParams()
    instruction_text = instruction if instruction is not None else default_instruction(task)
    support = sample_support(support_pool, support_size, seed) if support_pool else None

    predictions: dict[str, str] = {}
    prompts: dict[str, str] = {}
    failures: list[dict] = []
    instance_manifest: dict[str, dict] = {}
    for instance in instances:
        try:
            repr_ = representations.get(instance.video_id)
            if repr_ is None:
                raise KeyError(f"no representation for video {instance.video_id!r}")

            selected: list[LabeledExample] = []
            if in_context > 0 and support is not None:
                query_key = _query_key(repr_, task, instance.question)
                selected = select_in_context(
                    support, query_key, selection_embedder, n=in_context, task=task
                )
            blocks = [
                render_block(
                    ex.representation,
                    task,
                    annotation=ex.annotation,
                    question=ex.question,
                    candidates=ex.candidates,
                    static=static_markers,
                )
                for ex in selected
            ]
            query_block = render_block(
                repr_,
                task,
                annotation=None,
                question=instance.question,
                candidates=instance.candidates,
                static=static_markers,
            )
            prompt = assemble(instruction_text, blocks, query_block, SUFFIXES[task])
            prompts[instance.example_id] = prompt.rendered
            predictions[instance.example_id] = completion.complete(prompt.rendered, params)
            instance_manifest[instance.example_id] = {
                "video_id": instance.video_id,
                "in_context_ids": [ex.example_id for ex in selected],
                "prompt_sha256": hashlib.sha256(prompt.rendered.encode("utf-8")).hexdigest(),
                "prompt_chars": len(prompt.rendered),
            }
        except (ProviderError, KeyError, ValueError) as exc:
            failures.append({"example_id": instance.example_id, "error": str(exc)})

    manifest = {
        "task": task.value,
        "seed": seed,
        "support_size": support_size,
        "in_context": in_context,
        "params": {
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stop": list(params.stop),
        },
        "static_markers": static_markers,
        "completion_identity": completion.identity,
        "support_ids": [ex.example_id for ex in support.examples] if support else [],
        "instances": instance_manifest,
        "failures": failures,
    }
    return TaskRun(
        task=task,
        seed=seed,
        support_size=support_size,
        in_context=in_context,
        predictions=predictions,
        manifest=manifest,
        prompts=prompts,
        failures=failures,
    )


def map_to_candidate(generated: str, candidates: list[str], embedder: TextEmbedder) -> int:
    """Index of the candidate most similar to the generated text (ties pick the lowest index)."""
    if not candidates:
        raise ValueError("need at least one candidate")
    vectors = normalize_rows(np.asarray(embedder.embed_texts([generated, *candidates])))
    similarities = vectors[1:] @ vectors[0]
    return int(np.argmax(similarities))


def evaluate_task(
    task: TaskKind,
    predictions: dict[str, str],
    instances: list[TaskInstance],
    embedder: TextEmbedder | None = None,
) -> dict[str, float]:
    """Per-task metric bundle for one seed's predictions."""
    if task in (TaskKind.CAPTION, TaskKind.CAPTION_WITH_ASR):
        hypotheses = [predictions.get(i.example_id, "") for i in instances]
        references = [list(i.gold_references()) for i in instances]
        return {
            "bleu4": metrics.bleu4(hypotheses, references),
            "rouge_l": metrics.rouge_l(hypotheses, references),
            "cider_d": metrics.cider_d(hypotheses, references),
        }
    if task == TaskKind.QA:
        golds = {i.example_id: i.annotation for i in instances}
        return {"accuracy": metrics.qa_accuracy(predictions, golds)}
    if task == TaskKind.VLEP:
        if embedder is None:
            raise ValueError("VLEP evaluation needs a text embedder for candidate mapping")
        correct = 0
        for instance in instances:
            if instance.candidates is None or instance.annotation not in instance.candidates:
                raise ValueError(f"instance {instance.example_id!r} lacks a gold candidate")
            gold_index = instance.candidates.index(instance.annotation)
            generated = predictions.get(instance.example_id, "")
            if not generated:
                continue
            if map_to_candidate(generated, list(instance.candidates), embedder) == gold_index:
                correct += 1
        return {"accuracy": correct / len(instances)}
    raise ValueError(f"unknown task {task}")


@dataclass(frozen=True)
class EvalReport:
    """Seed-averaged metric report; unavailable metrics are named, not faked."""

    task: str
    seeds: tuple[int, ...]
    metrics: dict[str, dict]
    unavailable: tuple[str, ...] = ("meteor",)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "seeds": list(self.seeds),
            "metrics": self.metrics,
            "unavailable": list(self.unavailable),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True), encoding="utf-8")


def make_report(task: str, seeds: list[int], per_seed: list[dict[str, float]]) -> EvalReport:
    """Aggregate per-seed metric dicts into mean/std (population) per metric."""
    if len(seeds) != len(per_seed) or not per_seed:
        raise ValueError("need one metric dict per seed")
    names = sorted(per_seed[0])
    table: dict[str, dict] = {}
    for name in names:
        values = [scores[name] for scores in per_seed]
        mean = sum(values) / len(values)
        variance = sum((v - mean) ** 2 for v in values) / len(values)
        table[name] = {"per_seed": values, "mean": mean, "std": math.sqrt(variance)}
    return EvalReport(task=task, seeds=tuple(seeds), metrics=table)


def generate_pseudo_labels(
    instances: list[TaskInstance],
    representations: dict[str, VideoRepresentation],
    support_pool: list[LabeledExample],
    completion: CompletionProvider,
    selection_embedder: TextEmbedder,
    support_size: int = 10,
    in_context: int = 5,
    seed: int = 0,
    params: CompletionParams | None = None,
) -> TaskRun:
    """Caption every video with greedy decoding; temperature is forced to 0."""
    params = replace(params or CompletionParams(), temperature=0.0)
    return run_task(
        instances,
        representations,
        support_pool,
        TaskKind.CAPTION,
        completion,
        selection_embedder,
        support_size=support_size,
        in_context=in_context,
        seed=seed,
        params=params,
    )


def save_pseudo_labels(path: str | Path, run: TaskRun) -> None:
    """Write the caption file: one "video_id<TAB>caption" line per successful video."""
    rows = sorted(
        (self_manifest["video_id"], run.predictions[example_id])
        for example_id, self_manifest in run.manifest["instances"].items()
        if example_id in run.predictions
    )
    text = "".join(f"{video_id}\t{caption}\n" for video_id, caption in rows)
    Path(path).write_text(text, encoding="utf-8")
