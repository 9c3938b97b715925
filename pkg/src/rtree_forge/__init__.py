"""Exact R-trees generated by weighted trees, and 1-Lipschitz surjections built from them."""
from __future__ import annotations

__version__ = "0.1.0"

from .construct import (
    BranchLimit,
    CertificateReport,
    HierarchyError,
    NotLipschitzError,
    PartitionHierarchy,
    SurjectionBundle,
    branch_limit,
    branch_weight_sums,
    build_compact_surjection,
    build_partition_hierarchy,
    build_separable_surjection,
    build_star,
    depth_for_density,
    evaluate_map,
    intrinsic_sample,
    verify_bundle,
)
from .metric import (
    EpsilonNet,
    FiniteMetricSpace,
    MalformedMetricError,
    ValidationReport,
    Violation,
    diameter,
    greedy_epsilon_net,
    metric_segment,
    validate_metric,
)
from .rtree import (
    IdealPoint,
    Infeasible,
    PointError,
    RTreePoint,
    RTreeSpace,
    completion_distance,
    distance,
    epsilon_net_points,
    four_point_defect,
    geodesic,
    height,
    hyperconvex_witness,
    lex_meet,
    segment_intersection_point,
    tree_to_dot,
)
from .spaces import (
    DisconnectedSpaceError,
    DurationTooShortError,
    EmbeddedPolygonalSpace,
    LipschitzPath,
    SpacePoint,
    chord_distance,
    cone_space,
    geodesic_path,
    intrinsic_distance,
)
from .wtree import (
    TreeError,
    WeightedTree,
    branches,
    down_set,
    max_chain_weight_avoiding,
    meet,
    precompact_certificate,
)
