"""Fast stability scanning of yearly operating points.

Cluster a year of operating points with feature-weighted self-adaptive
PSO-k-means, evaluate stability indices only at cluster centroids, and
quantify the accuracy/speed-up trade-off against an exhaustive scan.
"""

from .clustering import (
    AdaptiveParams,
    ClusterModel,
    Particle,
    PsoParams,
    Swarm,
    centroid_of,
    init_centroids_random,
    init_swarm,
    inertia_weight,
    kmeans,
    mutation_check,
    pso_step,
    self_adaptive_pso_kmeans,
    smse,
    validate_weights,
    weighted_distance,
)
from .dataset import (
    Attribute,
    AttributeKind,
    CsvFormatError,
    OperatingPointSet,
    SyntheticYearConfig,
    denormalize,
    generate_synthetic_year,
    load_csv,
    normalize,
    save_csv,
)
from .oracles import (
    DampingSurrogate,
    StabilityOracle,
    StabilityTrace,
    TabulatedOracle,
    TwoBusMargin,
    affine_demand_map,
    evaluate_many,
    full_scan,
    two_bus_margin,
)
from .relief import (
    DegeneratePredictionError,
    FeatureReport,
    ReliefParams,
    adjust_weights,
    attribute_diff,
    neighbor_influence,
    prediction_diff,
    rrelieff_pass,
    select_features,
)
from .scanning import (
    ScanConfig,
    ScanReport,
    ValidationSample,
    WorstCaseReport,
    compare_full_vs_fast,
    fast_scan,
    validate,
    worst_case_analysis,
)

__version__ = "0.1.0"
