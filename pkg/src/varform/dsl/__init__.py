"""Theory-file format and machine-readable reports."""

from .lexer import ParseError, Token, tokenize
from .parser import parse_theory
from .report import render_report, to_jsonable
from .theory import (
    BackgroundDecl,
    GaugeDecl,
    HamiltonianDecl,
    SolutionDecl,
    SymmetryDecl,
    Theory,
    TransgressionDecl,
    render_theory,
)

__all__ = [
    "BackgroundDecl",
    "GaugeDecl",
    "HamiltonianDecl",
    "ParseError",
    "SolutionDecl",
    "SymmetryDecl",
    "Theory",
    "Token",
    "TransgressionDecl",
    "parse_theory",
    "render_report",
    "render_theory",
    "to_jsonable",
    "tokenize",
]
