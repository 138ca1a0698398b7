"""Set-membership range-based localization with certified outer bounds."""
from .conic import ConeProgram, Solution, Status, Tolerances
from .domgraph import DomSystem, assemble, diagnose, incidence_matrix, membership_Xd, membership_localization, projector
from .errors import (
    ArgumentError,
    DegenerateCenter,
    DimensionUnsupported,
    EmptyLocalizationSet,
    InfeasibleProbe,
    InvalidBatch,
    RangeBoundError,
    SamplingBudgetExceeded,
    SolverFailure,
    VertexBudgetExceeded,
)
from .estimator import SetMembershipLocalizer
from .inner import Ball, InnerEllipsoid, inscribed_ball, inscribed_ellipsoid
from .model import BoundsVector, ErrorMode, Kind, MeasurementBatch, Scenario, build_bounds, membership_true
from .outer import Box, OuterEllipsoid, directional_range, outer_box, outer_ellipsoid, vertex_images
from .pipeline import Localization, LocalizeOptions, localize
from .refine import central_estimate, enlarge_bounds, feasible_point_search, linearization_points

__version__ = "0.1.0"
