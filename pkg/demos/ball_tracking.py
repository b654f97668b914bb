"""
Tracking a bouncing ball from DVS events
========================================

Simulate a bright ball crossing a 128x128 sensor, cut the events into 10 ms
spike-count frames and follow the ball with the compressive tracker.
"""

import numpy as np

from dvstrack import BallScene, SensorParams, TrackerConfig, bin_events, generate_events, render_scene, track

# A ball of radius 6 px, ten times brighter than the background, moving
# along the diagonal at about 85 px/s and bouncing off the walls.
scene = BallScene(start=(40.0, 40.0), velocity=(60.0, 60.0), radius=6, foreground=10.0,
                  background=1.0, duration=6_000_000, margin=4)
events = generate_events(render_scene(scene), SensorParams(theta=0.1))
print(f"{len(events)} events over {events.t_end / 1e6:.0f} s")

# 10 ms bins; only the moving edges of the ball fire, so each frame holds
# a few hundred spikes out of 16384 pixels.
frames = bin_events(events)
per_bin = np.mean([f.total for f in frames])
print(f"{len(frames)} frames, {per_bin:.0f} events per frame ({per_bin / 128**2:.1%} of the pixels)")

# Start from a 15x15 box around the ball in the first frame.
config = TrackerConfig(positive_radius=2, neg_inner=5, n_features=100, sigma_floor=15 * 15 / 2)
records = track(frames, (33, 33, 15, 15), config)

errors = []
for r in records:
    gx, gy = scene.center(r.t_start + 5_000)
    bx, by = r.bbox.center
    errors.append(np.hypot(bx - gx, by - gy))
errors = np.array(errors)
print(f"center error: median {np.median(errors):.2f} px, max {errors.max():.2f} px, "
      f"{(errors <= 5).mean():.1%} of frames within 5 px")

for r in records[::100]:
    print(f"bin {r.bin_index:3d}  box {tuple(r.bbox)}  score {r.score:9.1f}")
