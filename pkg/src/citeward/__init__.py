"""citeward: fine-grained attribution rewards for cited question answering.

The toolkit scores responses with in-text citations along three axes
(correctness, citation recall, citation precision), selects generations by
those rewards (best-of-N and sentence-level beam search), emits per-token
reward maps for external RL trainers, and evaluates responses with the
matching metric suite.
"""

from .core import (
    CitationRef,
    DatasetMode,
    KeyInfoKind,
    KeyInfoList,
    ParsedResponse,
    Passage,
    RewardWeights,
    Sentence,
    TaskExample,
    ValidationReport,
    normalize_ws,
    strip_citations,
    validate_example,
)
from .errors import (
    BoundaryMismatch,
    CitewardError,
    EmptyDataset,
    EmptyResponse,
    IngestError,
    OracleUnavailable,
    SamplerAborted,
)
from .metrics import MetricReport, aggregate_reports, evaluate_example
from .oracle import (
    EntailmentOracle,
    RemoteOracle,
    ScriptedOracle,
    concat_premise,
    em_contains,
    entails,
)
from .rewards import (
    PolicyLogprobs,
    RewardBreakdown,
    SegmentBoundaries,
    TokenRewardMap,
    citation_precision_rewards,
    citation_recall_rewards,
    combined_reward,
    correctness_reward,
    fine_grained_token_map,
    holistic_token_map,
    score_response,
)
from .sampler import (
    BeamResult,
    Candidate,
    GenerationBackend,
    HolisticResult,
    RemoteBackend,
    SamplerConfig,
    ScriptedBackend,
    ScriptedBackendSet,
    fine_grained_beam_search,
    holistic_rs,
)
from .segment import parse_response, split_items, split_sentences

__version__ = "0.1.0"
