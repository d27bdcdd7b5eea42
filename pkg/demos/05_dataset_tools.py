"""Caption-dataset mechanics: frame schedules, stats, manifests.

Generated-caption corpora pair each video with captions written for a
handful of sampled frames.  The schedule aims for about five frames
roughly 3.6 s apart; short clips degrade to a single centered frame and
long clips cap at five.
"""

from avstoolkit.dataset import (
    CaptionRecord,
    VideoMeta,
    corpus_stats,
    frame_schedule,
    split_videos,
)

for duration in (2.0, 9.5, 18.0, 180.0):
    times = frame_schedule(duration)
    stamps = ", ".join(f"{t:.1f}" for t in times)
    print(f"{duration:6.1f}s -> {len(times)} frames at [{stamps}]")

# Each sampled frame gets one generated caption; stats mirror the usual
# dataset-table columns (#videos, #captions, avg tokens, cap/video).
videos = [VideoMeta(f"v{i:02d}", duration=10.0 + i) for i in range(20)]
captions = [
    CaptionRecord(
        video_id=v.video_id,
        caption_id=f"{v.video_id}#{j}",
        text="a person does something interesting",
        frame_time=t,
    )
    for v in videos
    for j, t in enumerate(frame_schedule(v.duration))
]
stats = corpus_stats(captions)
print(
    f"\ncorpus: {stats.num_videos} videos, {stats.num_captions} captions, "
    f"{stats.avg_tokens_per_caption:.2f} avg tokens, "
    f"{stats.captions_per_video:.2f} captions/video"
)

# Splits are by video so no caption leaks across; the same seed always
# reproduces the same partition.
train, val = split_videos([v.video_id for v in videos], split_ratio=0.8, seed=13)
print(f"\ntrain {len(train)} videos, val {len(val)} videos")
print("val:", ", ".join(val))
assert split_videos([v.video_id for v in videos], 0.8, 13) == (train, val)
