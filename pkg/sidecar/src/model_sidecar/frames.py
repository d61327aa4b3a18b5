"""Video decoding and centered-uniform sparse frame sampling.

The sampling convention is shared with the pipeline client: for n frames out
of T decodable frames, index_i = floor(i*T/n + T/(2n)), i.e. the center of
each of n equal segments.
"""

from __future__ import annotations

from pathlib import Path

import cv2


def sample_frame_indices(total_frames: int, n: int) -> list[int]:
    if total_frames < 1 or n < 1:
        raise ValueError("total_frames and n must be >= 1")
    return [
        min(total_frames - 1, int(i * total_frames / n + total_frames / (2 * n)))
        for i in range(n)
    ]


def count_frames(video_path: str | Path) -> int:
    capture = cv2.VideoCapture(str(video_path))
    if not capture.isOpened():
        raise ValueError(f"cannot open video: {video_path}")
    try:
        reported = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
        if reported > 0:
            return reported
        count = 0
        while capture.grab():
            count += 1
        return count
    finally:
        capture.release()


def extract_frames(video_path: str | Path, n: int, cache_dir: str | Path) -> list[str]:
    """Decode n centered-uniform frames to JPEG files; returns their paths.

    Output names are deterministic (<stem>_<index:03d>.jpg), so repeated
    extraction reuses the cache.
    """
    video_path = Path(video_path)
    if not video_path.is_file():
        raise FileNotFoundError(f"video not found: {video_path}")
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)

    total = count_frames(video_path)
    if total < 1:
        raise ValueError(f"video has no decodable frames: {video_path}")
    wanted = sample_frame_indices(total, n)
    paths = [cache_dir / f"{video_path.stem}_{index:03d}.jpg" for index in wanted]
    if all(path.is_file() for path in paths):
        return [str(path) for path in paths]

    capture = cv2.VideoCapture(str(video_path))
    try:
        by_index = dict(zip(wanted, paths))
        position = 0
        remaining = set(wanted)
        while remaining:
            ok, frame = capture.read()
            if not ok:
                raise ValueError(f"failed to decode frame {position} of {video_path}")
            if position in remaining:
                cv2.imwrite(str(by_index[position]), frame)
                remaining.discard(position)
            position += 1
    finally:
        capture.release()
    return [str(path) for path in paths]
