"""Cut-locus realizations: triangle packings that fold to convex polyhedra."""
from .tree import (LengthTree, TreeNode, TreeParseError, TreeStats, canonical_form, normalize,
                   parse_tree, random_tree, reroot, stats, star)
from .packer import (BuildConfig, ConstructionError, FundamentalTriangle, LambdaBound, Packing,
                     build_packing, cup_params, lambda_min, place_star, theta_x)
from .validator import ValidationReport, validate
from .ridge import (MatchReport, OracleResult, RidgeExtractionError, RidgeGraph, bisector_oracle,
                    extract_ridge, match_tree)
from .render import RenderStyle, render_svg

__all__ = [
    "LengthTree", "TreeNode", "TreeParseError", "TreeStats", "canonical_form", "normalize",
    "parse_tree", "random_tree", "reroot", "stats", "star",
    "BuildConfig", "ConstructionError", "FundamentalTriangle", "LambdaBound", "Packing",
    "build_packing", "cup_params", "lambda_min", "place_star", "theta_x",
    "ValidationReport", "validate",
    "MatchReport", "OracleResult", "RidgeExtractionError", "RidgeGraph", "bisector_oracle",
    "extract_ridge", "match_tree",
    "RenderStyle", "render_svg",
]
