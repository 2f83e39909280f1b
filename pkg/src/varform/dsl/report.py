"""Stable JSON rendering of analysis results."""

from __future__ import annotations

import json
from fractions import Fraction

from ..eulerlag import SourceForm
from ..forms import BiForm, EvoField
from ..jetcore import Expr, render


def to_jsonable(obj):
    """Convert analysis values to JSON-compatible data with canonical strings."""
    if isinstance(obj, Expr):
        return render(obj)
    if isinstance(obj, BiForm):
        return {obj.word_text(w): render(c) for w, c in obj.items()}
    if isinstance(obj, SourceForm):
        return {f: render(e) for f, e in obj.components}
    if isinstance(obj, EvoField):
        return {f: render(e) for f, e in obj.components}
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float):
        return float(f"{obj:.6e}")
    return obj


def render_report(results: dict) -> str:
    """Deterministic JSON text; an ``el`` entry is always present."""
    data = to_jsonable(dict(results))
    data.setdefault("el", {})
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
