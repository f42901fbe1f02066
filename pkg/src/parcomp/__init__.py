"""parcomp: intrinsic language-model metrics over multi-parallel corpora.

The package bundles everything needed to run a desk-scale evaluation study
end to end:

- ``corpus``      loading, pivot alignment and splitting of multi-parallel
                  corpora and paraphrase sets
- ``tokenizer``   a deterministic byte-fallback BPE tokenizer
- ``ngram``       a Witten-Bell smoothed n-gram scorer with full next-token
                  distributions and checkpointed training
- ``records``     the line-delimited JSON score interchange format
- ``metrics``     NLL, PPL, BPC, total bits, BPEC, IP and MRR
- ``consistency`` paraphrase-consistency verdicts at sample and split level
- ``cli``         the ``parcomp`` command binding the stages together

External neural scorers plug in through the score-record format; see the
``records`` module for the schema.
"""

from parcomp.errors import (
    ConsistencyError,
    CorpusError,
    MetricError,
    ParcompError,
    RecordError,
    ScorerError,
    TokenizerError,
)

__version__ = "0.1.0"

__all__ = [
    "ParcompError",
    "CorpusError",
    "TokenizerError",
    "ScorerError",
    "RecordError",
    "MetricError",
    "ConsistencyError",
    "__version__",
]
