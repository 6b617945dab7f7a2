"""semstego: hide bitstreams in the entity content of generated sentences.

The toolkit samples a sentence type (an entity multiset) from an empirical
semantic distribution by arithmetic coding over an entity tree, asks a
generation agent to write a sentence of that type, and decodes by
extracting the type and recovering the probability interval's shared bit
prefix.
"""

from .bits import BitStream
from .codec import Interval, SampleTrace, class_interval, decode_type, embed_message, sample_type
from .crypto import (
    StegoKey,
    derandomize,
    extend_keystream,
    frame_payload,
    randomize,
    unframe_payload,
)
from .distribution import (
    ClassDistribution,
    NodeProbabilities,
    assign_probabilities,
    build_distribution,
    load_distribution,
    save_distribution,
)
from .errors import (
    AgentError,
    CodecError,
    ConfigError,
    DeadPrefixError,
    DistributionError,
    ExtractionFailedError,
    GenerationFailedError,
    NoCapacityError,
    SemStegoError,
    TreeFormatError,
    TruncatedMessageError,
    UnknownClassError,
)
from .semantic_space import (
    Entity,
    OntologyTree,
    SemType,
    extract_type,
    load_tree,
    save_tree,
    type_add,
    type_len,
    type_leq,
)

__version__ = "0.1.0"

__all__ = [
    "BitStream",
    "ClassDistribution",
    "Entity",
    "Interval",
    "NodeProbabilities",
    "OntologyTree",
    "SampleTrace",
    "SemType",
    "StegoKey",
    "assign_probabilities",
    "build_distribution",
    "class_interval",
    "decode_type",
    "derandomize",
    "embed_message",
    "extend_keystream",
    "extract_type",
    "frame_payload",
    "load_distribution",
    "load_tree",
    "randomize",
    "sample_type",
    "save_distribution",
    "save_tree",
    "type_add",
    "type_len",
    "type_leq",
    "unframe_payload",
    # errors
    "SemStegoError",
    "TreeFormatError",
    "DistributionError",
    "DeadPrefixError",
    "UnknownClassError",
    "NoCapacityError",
    "CodecError",
    "GenerationFailedError",
    "ExtractionFailedError",
    "AgentError",
    "TruncatedMessageError",
    "ConfigError",
]
