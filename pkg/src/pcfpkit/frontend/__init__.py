"""Readers and writers for models, properties, pipelines and explicit models."""

from .explicit import export_explicit, parse_explicit
from .jsonfmt import parse_pcfp, serialize_pcfp
from .pipeline import Directive, UnknownDirective, parse_pipeline, run_pipeline
from .prism import (
    DuplicateVariable,
    ModelTypeError,
    MultipleModules,
    ParseError,
    UnknownVariable,
    format_model,
    parse_model,
    parse_pred,
    parse_property,
)

__all__ = [
    "Directive", "DuplicateVariable", "ModelTypeError", "MultipleModules", "ParseError",
    "UnknownDirective", "UnknownVariable", "export_explicit", "format_model", "parse_explicit",
    "parse_model", "parse_pcfp", "parse_pipeline", "parse_pred", "parse_property", "run_pipeline",
    "serialize_pcfp",
]
