"""Thin adapter: probe a multi-modal classifier's modality coalitions and
write the engine's prediction-log format."""

from .export import ExportError, ModelProbeConfig, export

__version__ = "0.1.0"

__all__ = ["ExportError", "ModelProbeConfig", "export", "__version__"]
