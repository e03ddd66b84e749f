#!/usr/bin/env python3
"""Build a synthetic year of operating points and look at its structure.

Generates the default 8760-hour, 20-attribute dataset, shows the
normalization round trip, and writes the CSV + sidecar pair that the rest
of the pipeline consumes.
"""

import numpy as np

import gridscan as gs

cfg = gs.SyntheticYearConfig(seed=1)
data = gs.generate_synthetic_year(cfg)
print(f"generated {data.n_points} hours x {data.n_attributes} attributes")
print(f"value range: [{data.values.min():.3f}, {data.values.max():.3f}]")
print(f"informative attributes: {data.metadata['informative_names']}")

# normalization keeps an exact affine map back to native units
raw = gs.denormalize(data)
renorm = gs.normalize(raw, data.attributes)
print(f"round-trip max error: {np.abs(renorm.values - data.values).max():.2e}")

# the diurnal component shows up as a lag-24 autocorrelation peak
x = data.values[:, 0] - data.values[:, 0].mean()
for lag in (13, 24):
    r = np.dot(x[:-lag], x[lag:]) / np.dot(x, x)
    print(f"autocorrelation lag {lag:>2}: {r:+.3f}")

path = gs.save_csv(data, "demo_year.csv")
print(f"wrote {path} (+ {path}.norm.json sidecar)")
