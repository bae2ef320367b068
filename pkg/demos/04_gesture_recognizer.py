"""Gesture recognition: variance-scaled nearest centroids on 77-dim features.

Harvest labeled gesture features from the simulator, fit one centroid per
intention, then run a whole episode in "raw" mode where the planner only
ever sees the classifier's output — never the scripted labels.
"""

import numpy as np

from rhino import Session, collect_gesture_samples, load_bundled, run_script
from rhino.episode import MODE_RAW
from rhino.features import FEATURE_DIM, fit_centroids

scenario = load_bundled("dining")

# one fresh world per intention, leader posing only: a static harvest
samples, labels = collect_gesture_samples(scenario, seed=3)
model = fit_centroids(samples, labels)
print(f"fitted {len(model.classes)} intention centroids "
      f"on {len(samples)} samples of {FEATURE_DIM} dims")

# held-out accuracy on a fresh harvest seed
fresh, fresh_labels = collect_gesture_samples(scenario, seed=4)
hits = sum(model.classify(v) == y for v, y in zip(fresh, fresh_labels))
print(f"cross-seed accuracy: {hits / len(fresh_labels):.1%}\n")

# the same script, decided twice: once from labels, once from the classifier
script = [
    {"from_tick": 0, "to_tick": 90, "intention": "Waving"},
    {"from_tick": 120, "to_tick": 210, "intention": "ShakingHand"},
]
direct = run_script(scenario, script, seed=5, ticks=300, scenario_ref="dining")
raw = run_script(scenario, script, seed=5, ticks=300, scenario_ref="dining",
                 mode=MODE_RAW, model=model)

print("decisions from scripted labels vs. recognized gestures:")
for d, r in zip(direct.events, raw.events):
    mark = "==" if (d.tick, d.kind) == (r.tick, r.kind) else "!!"
    print(f"  {mark} t={d.tick:4d} {d.kind:18s} | t={r.tick:4d} {r.kind}")
