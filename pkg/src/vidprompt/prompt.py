"""Few-shot prompt assembly: instruction, in-context example blocks, query block.

The rendered prompt is instruction + blank line + annotated example blocks +
the query block, which ends with the bare task suffix plus one trailing
space; generation is expected to start exactly there. Block wording is
pinned by the golden fixtures under tests/data/goldens.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .represent import VideoRepresentation


class TaskKind(str, Enum):
    CAPTION = "caption"
    CAPTION_WITH_ASR = "caption_with_asr"
    QA = "qa"
    VLEP = "vlep"


SUFFIXES = {
    TaskKind.CAPTION: "Video Caption:",
    TaskKind.CAPTION_WITH_ASR: "Video Caption:",
    TaskKind.QA: "Answer:",
    TaskKind.VLEP: "What is more likely to happen next:",
}

INSTRUCTIONS = {
    TaskKind.CAPTION: (
        "Generate a video caption based on the objects, events, attributes "
        "and frame captions. Example:"
    ),
    TaskKind.CAPTION_WITH_ASR: (
        "Generate a video caption based on the objects, events, attributes, "
        "frame captions and subtitle. Example:"
    ),
    TaskKind.QA: (
        "Answer the question based on the objects, events, attributes and "
        "frame captions. Example:"
    ),
    TaskKind.VLEP: (
        "Predict what is more likely to happen next based on the objects, "
        "events, attributes, frame captions and dialogue. Example:"
    ),
}

_BLOCK_SEPARATOR = "\n\n"  # exactly one blank line between blocks


@dataclass(frozen=True)
class FewShotPrompt:
    instruction: str
    context: tuple[str, ...]
    query: str
    suffix: str
    rendered: str


def default_instruction(task: TaskKind) -> str:
    return INSTRUCTIONS[task]


def render_block(
    repr_: VideoRepresentation,
    task: TaskKind,
    annotation: str | None = None,
    question: str | None = None,
    candidates: tuple[str, str] | None = None,
    static: bool = False,
) -> str:
    """Render one video's block for ``task``.

    With ``annotation`` the block is an in-context example; without it the
    block is a query and ends at the suffix with one trailing space.
    """
    lines = repr_.rendered_lines(static=static)

    if task == TaskKind.CAPTION_WITH_ASR:
        if repr_.asr is None:
            raise ValueError(f"video {repr_.video_id!r} has no ASR transcript")
        lines.append(f"Subtitle: {repr_.asr}")
    elif task == TaskKind.QA:
        if not question:
            raise ValueError(f"QA block for video {repr_.video_id!r} needs a question")
        lines.append(f"Question: {question}")
    elif task == TaskKind.VLEP:
        if repr_.asr is None:
            raise ValueError(f"video {repr_.video_id!r} has no dialogue transcript")
        if candidates is None or len(candidates) != 2:
            raise ValueError(f"VLEP block for video {repr_.video_id!r} needs two candidates")
        lines.append(f"Dialogue: {repr_.asr}")
        lines.append(f"Option A: {candidates[0]}")
        lines.append(f"Option B: {candidates[1]}")

    suffix = SUFFIXES[task]
    if annotation is None:
        lines.append(f"{suffix} ")
    else:
        lines.append(f"{suffix} {annotation}")
    return "\n".join(lines)


def assemble(
    instruction: str,
    examples: list[str],
    query: str,
    suffix: str = "",
) -> FewShotPrompt:
    """Concatenate instruction, example blocks, and query with blank-line separators."""
    rendered = _BLOCK_SEPARATOR.join([instruction, *examples, query])
    return FewShotPrompt(
        instruction=instruction,
        context=tuple(examples),
        query=query,
        suffix=suffix,
        rendered=rendered,
    )


def prompt_stats(prompt: FewShotPrompt) -> dict:
    """Exact size counters for budget checks before submission."""
    return {
        "char_count": len(prompt.rendered),
        "line_count": prompt.rendered.count("\n") + 1,
        "example_count": len(prompt.context),
    }
