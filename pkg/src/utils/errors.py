"""
Exception hierarchy for NarrativeMap
"""

from typing import Iterable, List, Optional


class NarrativeMapError(Exception):
    """Base class for every error raised by NarrativeMap"""


class UserInputError(NarrativeMapError):
    """Invalid input supplied by the user (exit code 1)"""


class ConfigError(UserInputError):
    """One or more configuration problems, reported together"""

    def __init__(self, problems: Iterable[str]):
        self.problems: List[str] = list(problems)
        message = "; ".join(self.problems) if self.problems else "invalid configuration"
        super().__init__(f"configuration invalid: {message}")


class DimensionMismatchError(ConfigError):
    """Embedding endpoint returned vectors of an unexpected dimension"""

    def __init__(self, expected: int, actual: int, model: str = ""):
        self.expected = expected
        self.actual = actual
        where = f" from model {model!r}" if model else ""
        super().__init__([f"expected embedding dimension {expected} but received {actual}{where}"])


class MissingArtifactError(UserInputError):
    """A stage ran before the stage producing its inputs"""

    def __init__(self, artifact: str, command: str):
        self.artifact = artifact
        self.command = command
        super().__init__(f"missing {artifact}; run `{command}` first")


class CorpusError(UserInputError):
    """Corpus file cannot be read"""


class EndpointError(NarrativeMapError):
    """Remote endpoint failed after all retries"""

    def __init__(self, message: str, attempts: int = 1, failed: Optional[List[str]] = None):
        self.attempts = attempts
        self.failed = failed or []
        super().__init__(message)


class ActantParseError(NarrativeMapError):
    """Model output holds no usable actantial JSON object"""

    def __init__(self, message: str, raw: str = ""):
        self.raw = raw
        super().__init__(message)


class ReductionError(NarrativeMapError):
    """SVD fit or projection cannot be carried out"""


class ProjectionError(NarrativeMapError):
    """UMAP projection cannot be carried out"""


class ClusteringError(NarrativeMapError):
    """Clustering input or operation is invalid"""


class AnalysisError(NarrativeMapError):
    """Report aggregation input is invalid"""


class StorageError(NarrativeMapError):
    """S3 storage access failed"""
