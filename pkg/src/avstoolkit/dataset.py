"""Generated-caption dataset mechanics: frame schedules, stats, manifests.

Videos are sampled at roughly evenly spaced timestamps (about five
frames at about 3.6 s apart for typical clip lengths); each sampled
frame is captioned externally, so one video carries several captions.
This module owns the schedule arithmetic, one-pass corpus statistics,
and deterministic train/validation manifest emission.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence

__all__ = [
    "NonPositiveDuration",
    "UnknownVideoId",
    "CaptionOrigin",
    "VideoMeta",
    "CaptionRecord",
    "CorpusStats",
    "StatsAccumulator",
    "frame_schedule",
    "corpus_stats",
    "split_videos",
    "emit_manifest",
    "load_corpus",
    "write_corpus",
]

DEFAULT_FRAME_SPACING = 3.6
DEFAULT_TARGET_FRAMES = 5


class NonPositiveDuration(ValueError):
    """A video duration was zero, negative, or non-finite."""


class UnknownVideoId(ValueError):
    """A caption referenced a video absent from the metadata."""


class CaptionOrigin(str, Enum):
    GENERATED = "generated"
    ORIGINAL = "original"


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    duration: float
    source_url: Optional[str] = None

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise NonPositiveDuration(
                f"video {self.video_id!r}: duration must be finite and > 0, "
                f"got {self.duration}"
            )


@dataclass(frozen=True)
class CaptionRecord:
    video_id: str
    caption_id: str
    text: str
    frame_time: Optional[float] = None
    origin: CaptionOrigin = CaptionOrigin.GENERATED


def frame_schedule(
    duration: float,
    target_spacing: float = DEFAULT_FRAME_SPACING,
    target_frames: int = DEFAULT_TARGET_FRAMES,
) -> list[float]:
    """Centered frame timestamps for one video.

    The frame count is round(duration / target_spacing) clamped to
    [1, target_frames]; timestamps sit at the centers of n equal
    segments, so they are strictly increasing and strictly inside
    (0, duration).
    """
    if not (math.isfinite(duration) and duration > 0):
        raise NonPositiveDuration(f"duration must be finite and > 0, got {duration}")
    if not (math.isfinite(target_spacing) and target_spacing > 0):
        raise ValueError(f"target_spacing must be > 0, got {target_spacing}")
    if target_frames < 1:
        raise ValueError(f"target_frames must be >= 1, got {target_frames}")
    n = min(max(round(duration / target_spacing), 1), target_frames)
    return [(i + 0.5) * duration / n for i in range(n)]


@dataclass(frozen=True)
class CorpusStats:
    """Corpus summary; `empty` flags the undefined-mean case."""

    num_videos: int
    num_captions: int
    avg_tokens_per_caption: float
    captions_per_video: float
    empty: bool = False


@dataclass
class StatsAccumulator:
    """One-pass, shardable statistics; merge is additive/union."""

    video_ids: set[str] = field(default_factory=set)
    num_captions: int = 0
    total_tokens: int = 0

    def add(self, caption: CaptionRecord) -> None:
        self.video_ids.add(caption.video_id)
        self.num_captions += 1
        self.total_tokens += len(caption.text.split())

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        self.video_ids |= other.video_ids
        self.num_captions += other.num_captions
        self.total_tokens += other.total_tokens
        return self

    def finalize(self) -> CorpusStats:
        num_videos = len(self.video_ids)
        if self.num_captions == 0:
            return CorpusStats(0, 0, 0.0, 0.0, empty=True)
        return CorpusStats(
            num_videos=num_videos,
            num_captions=self.num_captions,
            avg_tokens_per_caption=self.total_tokens / self.num_captions,
            captions_per_video=self.num_captions / num_videos,
        )


def corpus_stats(captions: Iterable[CaptionRecord]) -> CorpusStats:
    """Counts, mean whitespace-token length, and captions per video."""
    acc = StatsAccumulator()
    for caption in captions:
        acc.add(caption)
    return acc.finalize()


def split_videos(
    video_ids: Iterable[str], split_ratio: float, seed: int
) -> tuple[list[str], list[str]]:
    """Deterministic video-level train/val partition.

    The validation side takes floor((1 - ratio) * V) videos, so a
    single-video corpus lands entirely in train.  Returned lists are
    sorted; membership depends only on (ids, ratio, seed).
    """
    if not (0.0 < split_ratio < 1.0):
        raise ValueError(f"split_ratio must be in (0, 1), got {split_ratio}")
    ids = sorted(set(video_ids))
    rng = random.Random(seed)
    rng.shuffle(ids)
    # floor of (1-ratio)*V, but snap to the nearest integer first so that
    # e.g. ratio 0.8 over 10 videos yields exactly 2, not floor(1.999...)
    raw = (1.0 - split_ratio) * len(ids)
    nearest = round(raw)
    n_val = nearest if abs(raw - nearest) < 1e-6 else int(raw)
    val = sorted(ids[:n_val])
    train = sorted(ids[n_val:])
    return train, val


def emit_manifest(
    videos: Sequence[VideoMeta],
    captions: Sequence[CaptionRecord],
    split_ratio: float,
    seed: int,
    train_path: str,
    val_path: str,
) -> tuple[list[str], list[str]]:
    """Write newline-delimited video-id manifests for a by-video split.

    All captions of a video share its split.  A caption referencing an
    unknown video raises UnknownVideoId before anything is written.
    """
    known = {v.video_id for v in videos}
    for caption in captions:
        if caption.video_id not in known:
            raise UnknownVideoId(
                f"caption {caption.caption_id!r} references unknown video "
                f"{caption.video_id!r}"
            )
    train, val = split_videos(known, split_ratio, seed)
    for path, ids in ((train_path, train), (val_path, val)):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for video_id in ids:
                fh.write(video_id + "\n")
    return train, val


def load_corpus(path: str) -> Iterator[tuple[VideoMeta, list[CaptionRecord]]]:
    """Stream the corpus JSONL format (one video with its captions per line)."""
    with open(path, "r", encoding="utf-8") as fh:
        seen: set[str] = set()
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                video = VideoMeta(
                    video_id=str(record["video_id"]),
                    duration=float(record["duration"]),
                    source_url=record.get("source_url"),
                )
                captions = [
                    CaptionRecord(
                        video_id=video.video_id,
                        caption_id=str(c["caption_id"]),
                        text=str(c["text"]),
                        frame_time=(
                            float(c["frame_time"]) if c.get("frame_time") is not None else None
                        ),
                        origin=CaptionOrigin(c.get("origin", "generated")),
                    )
                    for c in record.get("captions", [])
                ]
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus record: {exc}") from exc
            if video.video_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate video id {video.video_id!r}")
            seen.add(video.video_id)
            for caption in captions:
                if caption.frame_time is not None and not (
                    0.0 <= caption.frame_time <= video.duration
                ):
                    raise ValueError(
                        f"{path}:{lineno}: caption {caption.caption_id!r} frame_time "
                        f"{caption.frame_time} outside [0, {video.duration}]"
                    )
            yield video, captions


def write_corpus(
    records: Iterable[tuple[VideoMeta, Sequence[CaptionRecord]]], path: str
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for video, captions in records:
            payload = {
                "video_id": video.video_id,
                "duration": video.duration,
                "captions": [
                    {
                        "caption_id": c.caption_id,
                        "text": c.text,
                        "frame_time": c.frame_time,
                        "origin": c.origin.value,
                    }
                    for c in captions
                ],
            }
            if video.source_url is not None:
                payload["source_url"] = video.source_url
            fh.write(json.dumps(payload))
            fh.write("\n")
