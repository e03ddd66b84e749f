#!/usr/bin/env python3
"""The full fast-scan pipeline with error validation.

Feature selection consumes a few hundred oracle calls, clustering needs
none, and the final stability trace costs one call per centroid.  The
scan is then validated on 500 random hours against the true index.
"""

import gridscan as gs

data = gs.generate_synthetic_year(gs.SyntheticYearConfig(seed=1))
oracle = gs.DampingSurrogate.from_seed(data.metadata["informative_indices"], seed=101)

report = gs.fast_scan(data, oracle)
report = gs.validate(report, data, oracle, sample_size=500, seed=7)

print(f"clusters: {report.k_final} of {data.n_points} hours "
      f"(reduction {report.reduction:.1%})")
print(f"oracle evaluations: {report.oracle_evaluations} "
      f"(= {report.training_size} training + {report.k_final} centroids)")
print(f"MAPE over 500 validation hours: {report.mape:.2%}")
print(f"max APE: {report.max_ape:.2%}")
print()
print("error histogram (1-percentage-point bins):")
for lo, hi, count in report.histogram:
    bar = "#" * max(1, count // 5) if count else ""
    print(f"  {lo:4.0f}-{hi:<4.0f}% {count:>4} {bar}")
