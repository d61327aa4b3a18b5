"""Hand-built fixture videos shared across tests.

The bathtub video exercises every aggregation rule; the worked derivation of
its expected token lines lives in test_represent.py. The cooking and dog
videos are in-context examples for the golden prompts; the sunset video is
the reversed-order scenario pair.
"""

from __future__ import annotations

from vidprompt.represent import (
    AggregatedToken,
    FrameCaption,
    VideoRepresentation,
    build_representation,
)
from vidprompt.tokenizer import TokenScore
from vidprompt.vocab import VocabKind


def _frame_tokens(kind: VocabKind, per_frame: dict[int, list[tuple[str, float]]]):
    """Expand (frame -> ordered (phrase, score) list) into ranked TokenScore lists."""
    return {
        (frame, kind): [
            TokenScore(phrase=phrase, kind=kind, score=score, frame_index=frame, rank=rank)
            for rank, (phrase, score) in enumerate(entries, start=1)
        ]
        for frame, entries in per_frame.items()
    }


def bathtub_per_frame_tokens() -> dict:
    tokens = {}
    tokens.update(
        _frame_tokens(
            VocabKind.OBJECT,
            {
                0: [("bath toy", 0.95), ("towel", 0.93), ("mirror", 0.92)],
                1: [("bath toy", 0.90), ("soap", 0.60), ("mirror", 0.59)],
                2: [("rubber duck", 0.94), ("bath toy", 0.85), ("mirror", 0.80)],
                3: [("rubber duck", 0.91), ("soap", 0.62), ("wall", 0.50)],
                4: [("rubber duck", 0.89), ("towel", 0.83), ("wall", 0.48)],
                5: [("towel", 0.90), ("rubber duck", 0.88), ("mirror", 0.61)],
                6: [("towel", 0.96), ("water", 0.70), ("wall", 0.52)],
                7: [("towel", 0.97), ("water", 0.72), ("mirror", 0.60)],
            },
        )
    )
    tokens.update(
        _frame_tokens(
            VocabKind.EVENT,
            {
                0: [("playing with toy", 0.88), ("sitting down", 0.40)],
                1: [("playing with toy", 0.86), ("sitting down", 0.38)],
                2: [("holding duck", 0.70), ("sitting down", 0.35)],
                3: [("splashing water", 0.90), ("holding duck", 0.65)],
                4: [("splashing water", 0.87), ("holding duck", 0.66)],
                5: [("standing up", 0.60), ("splashing water", 0.55)],
                6: [("drying off", 0.85), ("standing up", 0.58)],
                7: [("drying off", 0.89), ("standing up", 0.57)],
            },
        )
    )
    tokens.update(
        _frame_tokens(
            VocabKind.ATTRIBUTE,
            {
                0: [("wet", 0.80), ("small", 0.50)],
                1: [("wet", 0.78), ("small", 0.49)],
                2: [("wet", 0.75), ("yellow", 0.60)],
                3: [("yellow", 0.82), ("wet", 0.70)],
                4: [("yellow", 0.80), ("wet", 0.68)],
                5: [("happy", 0.65), ("yellow", 0.55)],
                6: [("happy", 0.85), ("dry", 0.64)],
                7: [("happy", 0.88), ("dry", 0.66)],
            },
        )
    )
    return tokens


def bathtub_captions() -> list[FrameCaption]:
    return [
        FrameCaption(1, "a toddler playing in a bathtub filled with toys", 0.91),
        FrameCaption(3, "a baby holding a yellow rubber duck", 0.88),
        FrameCaption(5, "a child splashing water in the tub", 0.93),
        FrameCaption(7, "a smiling kid wrapped in a towel", 0.90),
    ]


BATHTUB_ASR = "splish splash the baby is taking a bath"


def bathtub_representation(**kwargs) -> VideoRepresentation:
    return build_representation(
        "vid_bath",
        bathtub_captions(),
        bathtub_per_frame_tokens(),
        asr=kwargs.pop("asr", BATHTUB_ASR),
        **kwargs,
    )


def _direct_representation(video_id, tokens_by_kind, captions, asr=None) -> VideoRepresentation:
    """Build a representation from already-final token lists (temporal order given)."""
    tokens = {}
    for kind, phrases in tokens_by_kind.items():
        tokens[kind] = tuple(
            AggregatedToken(
                phrase=phrase,
                kind=kind,
                best_score=0.9 - 0.05 * position,
                best_rank=1,
                frequency=1,
                temporal_indicator=float(position * 2),
            )
            for position, phrase in enumerate(phrases)
        )
    return VideoRepresentation(
        video_id=video_id,
        frame_captions=tuple(captions),
        tokens=tokens,
        asr=asr,
    )


def cooking_representation() -> VideoRepresentation:
    return _direct_representation(
        "vid_cook",
        {
            VocabKind.OBJECT: ["mixing bowl", "wooden spoon", "cake"],
            VocabKind.EVENT: ["mixing batter", "baking cake"],
            VocabKind.ATTRIBUTE: ["creamy", "golden brown"],
        },
        [
            FrameCaption(1, "a person mixing batter in a bowl"),
            FrameCaption(3, "hands stirring flour with a spoon"),
            FrameCaption(5, "a cake pan going into the oven"),
            FrameCaption(7, "a golden cake on a cooling rack"),
        ],
        asr="today we are baking a simple sponge cake",
    )


def dog_representation() -> VideoRepresentation:
    return _direct_representation(
        "vid_dog",
        {
            VocabKind.OBJECT: ["dog", "frisbee", "grass"],
            VocabKind.EVENT: ["running fast", "catching frisbee"],
            VocabKind.ATTRIBUTE: ["energetic", "sunny"],
        },
        [
            FrameCaption(1, "a dog running across a grassy field"),
            FrameCaption(3, "a frisbee flying through the air"),
            FrameCaption(5, "a dog leaping to catch a frisbee"),
            FrameCaption(7, "a dog carrying a frisbee back to its owner"),
        ],
        asr="good boy go get it",
    )


def sunset_per_frame_tokens() -> dict:
    return _frame_tokens(
        VocabKind.OBJECT,
        {
            0: [("sun moving", 0.90)],
            2: [("ocean", 0.40)],
            4: [("night sky", 0.95)],
        },
    )


def sunset_captions() -> list[FrameCaption]:
    return [
        FrameCaption(0, "the sun hanging low over the sea"),
        FrameCaption(2, "an orange glow fading at the horizon"),
        FrameCaption(4, "stars appearing in a darkening sky"),
    ]


def sunset_representation(reversed_order: bool = False) -> VideoRepresentation:
    # Forward order reads sun -> night (sunset); reversed reads night -> sun
    # (sunrise).
    return build_representation(
        "vid_sun",
        sunset_captions(),
        sunset_per_frame_tokens(),
        reversed_order=reversed_order,
    )
