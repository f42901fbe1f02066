"""Exception hierarchy shared by all parcomp modules.

Every error raised on bad input derives from ParcompError so the CLI can
translate validation failures into exit code 1 while genuine bugs still
surface as tracebacks.
"""


class ParcompError(Exception):
    """Base class for all input-validation errors raised by parcomp."""


class CorpusError(ParcompError):
    """Corpus or paraphrase-set loading, alignment, or splitting failed."""


class TokenizerError(ParcompError):
    """BPE training, encoding, decoding, or model (de)serialization failed."""


class ScorerError(ParcompError):
    """N-gram training or sequence scoring rejected its input."""


class RecordError(ParcompError):
    """A score record or score set violated the interchange schema."""


class MetricError(ParcompError):
    """A metric was requested on input that cannot support it."""


class ConsistencyError(ParcompError):
    """Consistency analysis rejected misaligned or degenerate input."""
