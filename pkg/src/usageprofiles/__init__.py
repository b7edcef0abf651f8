"""Web usage profiling: access-log sessionization and session clustering."""

from pathlib import Path

from .clustering import (
    NOISE,
    ClusterResult,
    DbscanParams,
    InvalidK,
    KMeansParams,
    KMedoidsParams,
    LeaderParams,
    dbscan_run,
    kmeans_run,
    kmedoids_run,
    leader_run,
)
from .logingest import CleaningPolicy, IngestStats, LogEntry, MalformedLine, clean_entries, ingest, parse_log_line
from .sessionize import EmptyInput, Session, SessionizerConfig, UserKey, identify_users, session_length_distribution, split_sessions
from .validity import ValidityReport, c_index, davies_bouldin, evaluate, sse
from .vectorspace import DimensionMismatch, SessionMatrix, UrlIndex, WeightingMode, build_matrix, squared_euclidean

__version__ = "0.1.0"

FIXTURE_LOG = Path(__file__).parent / "data" / "fixture_access.log"
