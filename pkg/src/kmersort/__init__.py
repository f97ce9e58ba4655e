"""Sorting-based k-mer counting with minimizer supermers over simulated ranks."""

from .errors import (ConfigError, IngestError, KmerSortError, OutputError, PipelineError,
                     SanitizationError, WireFormatError)
from .pipeline import RunConfig, RunReport, run_pipeline
from .sortcount import Histogram, KmerArray

__all__ = [
    "ConfigError", "IngestError", "KmerSortError", "OutputError", "PipelineError",
    "SanitizationError", "WireFormatError", "RunConfig", "RunReport", "run_pipeline",
    "Histogram", "KmerArray",
]
__version__ = "0.1.0"
