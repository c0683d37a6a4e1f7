"""
Novelty detection with three scores
===================================

A Poisson set model is fitted to normal bags of roughly 48 points. Test
bags include too few points, too many points, and points from a shifted
feature cloud. Each score gets a threshold at the 2nd 10-quantile of its
training scores.

The plain likelihood and the set density both reward small bags, so
low-cardinality anomalies can outscore normal data. The ranking score
divides each point's density by the squared L2 norm, so all anomaly
groups fall below the normal group.
"""

import sys

from rfspp.eval import rows_to_csv, run_novelty1

report = run_novelty1(seed=7, trials=2, q=2, Q=10)

print("thresholds:", {k: round(v, 2) for k, v in report["thresholds"].items()})
for scorer in ("nb", "rfs", "ranking"):
    f1 = report["aggregate"][f"{scorer}_f1"]["mean"]
    print(f"{scorer:8s} mean F1 {f1:.3f}")

# per-group medians show which groups each score ranks below normal
row = report["trials"][0]
for scorer in ("nb", "rfs", "ranking"):
    meds = {g: round(row[f"{scorer}_median_{g}"], 1)
            for g in ("normal", "low_cardinality", "high_cardinality", "feature")}
    print(scorer, meds)

# boxplot data for the first trial, ready for any plotting tool
first = [r for r in report["boxplot"] if r["trial"] == 0]
sys.stdout.write(rows_to_csv(first))
