"""Bundle extractor: transformer hidden states and attention heads to bundle files."""

from .extract import (
    ExtractionConfig,
    ExtractionResult,
    export_table1_fixtures,
    extract,
)
from .stopwords import load_stopwords

__version__ = "0.1.0"

__all__ = [
    "ExtractionConfig",
    "ExtractionResult",
    "export_table1_fixtures",
    "extract",
    "load_stopwords",
]
