class SynscorerError(Exception):
    """Base class for sidecar errors."""


class CorpusFormatError(SynscorerError):
    """A corpus JSONL file violates the expected schema."""


class ConfigError(SynscorerError):
    """Invalid training configuration."""
