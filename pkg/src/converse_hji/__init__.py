"""Converse-optimal synthesis of robustly stabilizable nonlinear benchmark systems."""

from .design import synthesize
from .expr import parse
from .model import ProblemSpec, SystemDefinition, validate

__all__ = ["ProblemSpec", "SystemDefinition", "parse", "synthesize", "validate"]
