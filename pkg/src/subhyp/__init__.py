"""Square chains, subhyperbolic metrics and extension-domain diagnostics for planar polygons."""

from .domain import PolygonDomain, load_domain, load_domain_file, max_inscribed_square, rasterize
from .estimators import ChainBuilder, ExtensionClassifier, SubhyperbolicMetric
from .generators import DomainSpec, generate
from .geom import Point, Segment, Square, classify_squares, dist_squares, uniform_dist
from .growing import build_fields, evaluate_h_m, growing_inequalities_report
from .metrics import arc_diameter_estimate, classify_extension, d_alpha, len_alpha, s_alpha_estimate
from .narrow_path import build_narrow_chain, shrink_middle_square, verify_narrow_invariants
from .render import render_svg
from .separation import classify_accessibility, maximal_touching_square, separating_square
from .wide_path import build_wide_chain, complement_report, verify_wide_invariants

__version__ = "0.1.0"

__all__ = [
    "Point", "Segment", "Square", "PolygonDomain", "DomainSpec",
    "classify_squares", "dist_squares", "uniform_dist",
    "load_domain", "load_domain_file", "max_inscribed_square", "rasterize", "generate",
    "maximal_touching_square", "classify_accessibility", "separating_square",
    "build_wide_chain", "verify_wide_invariants", "complement_report",
    "shrink_middle_square", "build_narrow_chain", "verify_narrow_invariants",
    "len_alpha", "d_alpha", "s_alpha_estimate", "arc_diameter_estimate", "classify_extension",
    "build_fields", "evaluate_h_m", "growing_inequalities_report",
    "render_svg", "SubhyperbolicMetric", "ExtensionClassifier", "ChainBuilder",
]
