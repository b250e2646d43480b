"""Buddy-relation motif census and conditional uniform graph testing for
timestamped backer -> project networks."""

__version__ = "0.1.0"

from .graph import (
    Backing,
    GraphFormatError,
    ProjectRecord,
    TemporalBipartiteGraph,
    derive_project_spans,
    load_graph,
    save_graph,
)
from .motif import (
    BuddyCase,
    BuddyCensus,
    UndefinedRatioError,
    buddy_ratio,
    cobacker_stats,
    enumerate_buddy_cases,
)
from .nullmodel import (
    CandidateSet,
    ChoiceDistribution,
    CugResult,
    candidate_set,
    choice_distribution,
    cug_test,
    rewire_graph,
    trial_rng,
)
from .stats import DegreeSummary, degree_histogram, degree_summary
from .synth import GroundTruthLog, SynthConfig, generate
from .validation import ValidationReport, validate
