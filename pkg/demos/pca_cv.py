"""
Reducing feature dimension before cross-validation
==================================================

Points from the three-class scenario are lifted into 5-D by a random
linear map plus a little noise, projected back to 2-D by PCA, and
classified with 4-fold cross-validation.
"""

import numpy as np

from rfspp import Dataset, PointPattern, ScenarioSpec, generate_classification3
from rfspp.eval import cross_validate_classification
from rfspp.preprocess import fit_pca

rng = np.random.default_rng(0)
train, _ = generate_classification3(ScenarioSpec("classification3", seed=3, counts={"train": 80, "test": 0}))

lift = rng.normal(size=(2, 5))
lifted = Dataset.from_patterns(
    [PointPattern(p.points @ lift + 0.01 * rng.normal(size=(len(p), 5))) for p in train.patterns],
    labels=train.labels,
    class_count=train.class_count,
)

proj = fit_pca(lifted, target_dim=2)
print("retained variance:", round(proj.retained_variance, 6))

reduced = proj.apply(lifted)
report = cross_validate_classification(reduced, k=4, seed=0)
for row in report["folds"]:
    print(f"fold {row['fold']}: rfs {row['rfs_accuracy']:.3f}  nb {row['nb_accuracy']:.3f}")
