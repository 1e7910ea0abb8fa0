"""Trial-and-error threshold search on noise-free synthetic traces.

For each published scenario row, sweep a threshold grid and keep the value
that localizes the most bursts on the reference network; ties go to the
value closest (in ratio) to the published threshold. Prints TOML that can
be pasted into src/burstloc/data/scenarios_<detector>.toml.

    python scripts/calibrate_thresholds.py --detector cusum
"""

import argparse
import math
from dataclasses import replace

from burstloc.bench import PUBLISHED_CUSUM, PUBLISHED_SHEWHART, run_grid
from burstloc.inp_model import reference_model

GRID = [0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 13.0]


def duration_for(spec, start_time=10.0):
    # room for the burst plus two full localization batches
    span = 2 * spec.capture_interval * spec.localization_interval
    return max(40.0, math.ceil((start_time + span) / 10.0) * 10.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--detector", choices=["cusum", "shewhart"], required=True)
    args = ap.parse_args()
    model = reference_model()
    rows = PUBLISHED_CUSUM if args.detector == "cusum" else PUBLISHED_SHEWHART
    for spec in rows:
        spec = replace(spec, duration=duration_for(spec))
        scored = []
        for thr in GRID:
            report = run_grid(model, [replace(spec, threshold=thr)], {"noise_std": 0.0})
            acc = report.accuracy_by_scenario()[spec.name]
            scored.append((-acc, abs(math.log(thr / spec.threshold)), thr, acc))
        _, _, best, acc = min(scored)
        print(f"# published threshold {spec.threshold}; calibrated accuracy {float(acc):.0f}%")
        print(f"[{spec.name}]")
        print(f'detector = "{spec.detector}"')
        print(f"capture_interval = {spec.capture_interval}")
        print(f"threshold = {best}")
        print(f"localization_interval = {spec.localization_interval}")
        print(f"duration = {spec.duration}")
        print()


if __name__ == "__main__":
    main()
