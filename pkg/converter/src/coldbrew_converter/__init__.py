"""Dataset conversion into coldbrew graph bundles."""

from .convert import REGISTRY, ConversionError, ConversionLog, SourceSpec, convert

__all__ = ["REGISTRY", "ConversionError", "ConversionLog", "SourceSpec", "convert"]
