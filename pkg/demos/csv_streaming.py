"""Filtering a CSV file through a config-described ensemble.

Everything the library does in memory is also reachable from flat files:
a tiny key-value config names the engine and its candidates, observations
arrive as a headerless CSV, and each input row becomes an output row of
estimate, model weights and per-model evidences.  The command line wraps
the same call: ``bdemm stream --config sensors.cfg --input obs.csv
--out filtered.csv``.

Here two Kalman candidates disagree about measurement quality.  The data
switch from clean to noisy halfway through, and the weight columns in the
output CSV record the handoff.
"""

import csv
import os
import tempfile

import numpy as np

from bdemm.stream import run_stream

CONFIG = """\
# two candidates for one sensor: trusted vs degraded
engine = kf
wtt.kind = forgetting
wtt.alpha = 0.8
kf.models = 2
kf.model.1.A = [1.0]
kf.model.1.Q = [0.05]
kf.model.1.B = [1.0]
kf.model.1.R = [0.04]
kf.model.2.A = [1.0]
kf.model.2.Q = [0.05]
kf.model.2.B = [1.0]
kf.model.2.R = [4.0]
kf.init.mean = [0.0]
kf.init.cov = [1.0]
"""


def make_observations(path, rng):
    level = 0.0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for t in range(1, 41):
            level += rng.normal(0.0, 0.2)
            sigma = 0.2 if t <= 20 else 2.0
            writer.writerow(["%.6f" % (level + rng.normal(0.0, sigma))])


def main():
    rng = np.random.default_rng(12)
    with tempfile.TemporaryDirectory() as work:
        cfg = os.path.join(work, "sensors.cfg")
        obs = os.path.join(work, "obs.csv")
        out = os.path.join(work, "filtered.csv")
        with open(cfg, "w") as fh:
            fh.write(CONFIG)
        make_observations(obs, rng)

        rows = run_stream(cfg, obs, out)
        print("wrote %d rows to %s" % (rows, out))

        with open(out) as fh:
            reader = csv.reader(fh)
            header = next(reader)
            body = list(reader)

    print("columns: %s" % ", ".join(header))
    print()
    print("%4s %10s %22s" % ("step", "estimate", "weights (clean, noisy)"))
    for row in body[::5]:
        print("%4s %10.3f %11.3f %10.3f"
              % (row[0], float(row[1]), float(row[2]), float(row[3])))

    clean = np.mean([float(r[3]) for r in body[:20]])
    noisy = np.mean([float(r[3]) for r in body[20:]])
    print()
    print("mean weight on the degraded-sensor model: %.3f before the"
          " switch, %.3f after" % (clean, noisy))


if __name__ == "__main__":
    main()
