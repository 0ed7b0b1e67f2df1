"""Parsing of `#pragma @Annotation {key:value, ...}` directives."""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import MalformedAnnotation, UnknownAnnotationKey
from .ast import Annotation

_KEY_TO_KIND = {
    "iters": "iteration_count",
    "pct": "percentage",
    "lp_init": "lp_init",
    "lp_cond": "lp_cond",
    "skip": "skip",
}

_HEAD_RE = re.compile(r"^\s*#\s*pragma\s+@Annotation\s*\{(.*)\}\s*$", re.DOTALL)
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def parse_annotation(pragma_text: str, line: int = 0) -> list[Annotation]:
    """Parse one pragma directive into its annotations, in key order.

    Raises MalformedAnnotation for syntax problems and UnknownAnnotationKey
    for keys outside the supported set.
    """
    m = _HEAD_RE.match(pragma_text)
    if m is None:
        raise MalformedAnnotation(
            f"annotation must look like '#pragma @Annotation {{key:value}}': {pragma_text.strip()!r}"
        )
    body = m.group(1).strip()
    if not body:
        raise MalformedAnnotation("annotation braces are empty")
    out: list[Annotation] = []
    for item in body.split(","):
        if ":" not in item:
            raise MalformedAnnotation(f"annotation entry {item.strip()!r} is not key:value")
        key, _, raw = item.partition(":")
        key = key.strip()
        raw = raw.strip()
        kind = _KEY_TO_KIND.get(key)
        if kind is None:
            raise UnknownAnnotationKey(key)
        out.append(Annotation(kind, _parse_value(kind, key, raw), line))
    return out


def _parse_value(kind: str, key: str, raw: str):
    if not raw:
        raise MalformedAnnotation(f"annotation key '{key}' has no value")
    if kind == "iteration_count":
        try:
            value = int(raw)
        except ValueError:
            raise MalformedAnnotation(f"'{key}' expects an integer, got {raw!r}") from None
        if value < 0:
            raise MalformedAnnotation(f"'{key}' must be non-negative, got {value}")
        return value
    if kind == "percentage":
        try:
            value = Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise MalformedAnnotation(f"'{key}' expects a number in [0,1], got {raw!r}") from None
        if not 0 <= value <= 1:
            raise MalformedAnnotation(f"'{key}' must lie in [0,1], got {raw}")
        return value
    if kind in ("lp_init", "lp_cond"):
        if not _IDENT_RE.match(raw):
            raise MalformedAnnotation(f"'{key}' expects an identifier, got {raw!r}")
        return raw
    # skip
    if raw not in ("yes", "true"):
        raise MalformedAnnotation(f"'{key}' expects yes/true, got {raw!r}")
    return True


def merge_annotations(pragmas: list[list[Annotation]]) -> list[Annotation]:
    """Combine the annotations of consecutive pragmas; later keys override
    earlier duplicates of the same kind."""
    by_kind: dict[str, Annotation] = {}
    for group in pragmas:
        for ann in group:
            by_kind[ann.kind] = ann
    return list(by_kind.values())
