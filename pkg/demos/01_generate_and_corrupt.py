"""Build a synthetic shapes dataset, inject systematic errors, sample a trusted set.

Walks through the benchmark construction end to end and exports a PGM
contact sheet showing clean images next to their corrupted versions.

Run:  python3 demos/01_generate_and_corrupt.py
"""

import numpy as np

from cleanvae import build_error_classes, corrupt, generate_shapes, sample_trusted_set
from cleanvae.imaging import write_pgm

# 1. Clean data: four balanced shape classes, white on black, 28x28 binary.
clean = generate_shapes(n=500, seed=7)
print(f"clean dataset: {clean.n} images, classes "
      f"{np.bincount(clean.class_id).tolist()}, splits "
      f"{np.bincount(clean.split).tolist()} (train/val/test)")

# 2. Error classes: four fixed one-pixel white lines crossing the frame.
classes = build_error_classes("shapes", seed=7)
for k, ec in enumerate(classes):
    print(f"  error class {k}: {ec.orientation} line, "
          f"{int(ec.footprint(28, 28).sum())} pixels, color {ec.color}")

# 3. Corrupt 35% of instances; each outlier gets exactly one error class and
#    only the class footprint is overwritten -- ground truth is retained.
ds = corrupt(clean, noise_level=0.35, classes=classes, seed=7)
outliers = np.flatnonzero(ds.y_true == 0)
print(f"corrupted: {len(outliers)} outliers of {ds.n} "
      f"({len(outliers) / ds.n:.0%}), per class "
      f"{np.bincount(ds.error_class_id[outliers]).tolist()}")
untouched = ~ds.dirty_mask
assert (ds.images[untouched] == ds.clean_truth[untouched]).all()
print("masked-overwrite invariant holds: pixels outside the mask are untouched")

# 4. Trusted set: the only supervision the semi-supervised models ever see.
trusted = sample_trusted_set(ds, per_class=10, seed=7)
print(f"trusted set: {len(trusted)} labels "
      f"({int((trusted.labels == 1).sum())} inliers, "
      f"{int((trusted.labels == 0).sum())} outliers) = "
      f"{len(trusted) / ds.n:.1%} of the data")

# 5. Contact sheet: corrupted | ground truth pairs for the first 6 outliers.
rows = outliers[:6]
sheet = np.full((len(rows) * 28 + len(rows) - 1, 2 * 28 + 1), 0.5)
for r, idx in enumerate(rows):
    sheet[r * 29:r * 29 + 28, :28] = ds.images[idx].reshape(28, 28)
    sheet[r * 29:r * 29 + 28, 29:] = ds.clean_truth[idx].reshape(28, 28)
write_pgm("demo_corruption.pgm", sheet)
print("wrote demo_corruption.pgm (left: corrupted, right: ground truth)")
