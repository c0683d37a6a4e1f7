"""
Why bag likelihoods depend on the unit of length
================================================

Apples fall under a tree. Day one has a single apple at 0.8 m from the
trunk, day two has two apples at -0.4 m and 0.4 m. Scoring each day by the
product of feature densities ranks them one way in meters and the other
way in centimeters. The set density with an explicit unit volume, and the
unit-free ranking score, do not flip.
"""

import math

from rfspp import (
    IidClusterModel,
    PiecewiseConstantDensity,
    PointPattern,
    PoissonCardinality,
    UnitContext,
    nb_log_likelihood,
    ranking_log_score,
    rescale_pattern,
    rfs_log_density,
)

# landing-position density, per meter
meters = PiecewiseConstantDensity([-1.0, -0.6, -0.2, 0.2, 0.6, 1.0], [0.3, 0.6, 0.8, 0.6, 0.2])
day1 = PointPattern([[0.8]])
day2 = PointPattern([[-0.4], [0.4]])

s = 100.0
cm = meters.rescaled(s)
day1_cm, day2_cm = rescale_pattern(day1, s), rescale_pattern(day2, s)

print("product of densities")
print(f"  meters       day1 {math.exp(nb_log_likelihood(meters, day1)):.6g}   day2 {math.exp(nb_log_likelihood(meters, day2)):.6g}")
print(f"  centimeters  day1 {math.exp(nb_log_likelihood(cm, day1_cm)):.6g}   day2 {math.exp(nb_log_likelihood(cm, day2_cm)):.6g}")

# the same comparison with a Poisson count model
model_m = IidClusterModel(PoissonCardinality(1.5), meters, UnitContext(1.0))
model_cm = IidClusterModel(PoissonCardinality(1.5), cm, UnitContext(s))

for name, fn in (("set log-density", rfs_log_density), ("ranking score", ranking_log_score)):
    print(name)
    print(f"  meters       day1 {fn(model_m, day1):+.6f}   day2 {fn(model_m, day2):+.6f}")
    print(f"  centimeters  day1 {fn(model_cm, day1_cm):+.6f}   day2 {fn(model_cm, day2_cm):+.6f}")
