"""Super host detection at edge routers with a mergeable cube of bits arrays."""
from .config import DEFAULT_CONFIG, ConfigError, SketchConfig, seeded_config
from .cube import ConfigMismatch, CubeOfBitsArrays, UnionColumn, cube_new, merge_cubes
from .distributed import (deserialize, global_merge, partition_trace, read_sketch, serialize,
                          write_sketch)
from .estimator import (LoadEstimate, corrected_estimate, estimate_cs_load, hot_threshold,
                        linear_estimate, shared_bit_prob)
from .kernels import BACKEND
from .oracle import GroundTruth, MetricsReport, exact_cardinalities, score_detection
from .recovery import (HotColumnSet, RecoveryResult, SuperHostRecord, TupleSpaceOverflow,
                       check_tuple, find_hot_columns, recover_all, recover_cs)
from .trace import SynthSpec, Trace, split_windows, synth_trace
from .update import IpPair, record_pair, record_stream

__version__ = "0.1.0"
