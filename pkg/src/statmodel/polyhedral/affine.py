"""Integer affine forms over loop indices and symbolic parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping


@dataclass(frozen=True)
class AffineExpr:
    """sum(c * v for v, c in coeffs) + const, with integer coefficients.

    Zero coefficients are never stored; two structurally equal forms compare
    equal. Whether a variable is a loop index or a model parameter is decided
    by the surrounding domain, not by the expression itself.
    """

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def make(coeffs: Mapping[str, int] | None = None, const: int = 0) -> "AffineExpr":
        items = tuple(sorted((v, c) for v, c in (coeffs or {}).items() if c != 0))
        return AffineExpr(items, const)

    @staticmethod
    def constant(k: int) -> "AffineExpr":
        return AffineExpr((), k)

    @staticmethod
    def var(name: str, coeff: int = 1) -> "AffineExpr":
        return AffineExpr.make({name: coeff})

    def coeff(self, name: str) -> int:
        for v, c in self.coeffs:
            if v == name:
                return c
        return 0

    def vars(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "AffineExpr | int") -> "AffineExpr":
        if isinstance(other, int):
            return AffineExpr(self.coeffs, self.const + other)
        merged = dict(self.coeffs)
        for v, c in other.coeffs:
            merged[v] = merged.get(v, 0) + c
        return AffineExpr.make(merged, self.const + other.const)

    def __sub__(self, other: "AffineExpr | int") -> "AffineExpr":
        if isinstance(other, int):
            return AffineExpr(self.coeffs, self.const - other)
        return self + other.scale(-1)

    def __neg__(self) -> "AffineExpr":
        return self.scale(-1)

    def scale(self, k: int) -> "AffineExpr":
        if k == 0:
            return AffineExpr((), 0)
        return AffineExpr(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    def subst(self, mapping: Mapping[str, "AffineExpr"]) -> "AffineExpr":
        """Replace variables with affine expressions (still affine)."""
        out = AffineExpr.constant(self.const)
        for v, c in self.coeffs:
            repl = mapping.get(v)
            out = out + (repl.scale(c) if repl is not None else AffineExpr.var(v, c))
        return out

    def eval(self, env: Mapping[str, int]) -> int:
        total = self.const
        for v, c in self.coeffs:
            if v not in env:
                raise KeyError(v)
            total += c * env[v]
        return total

    def __str__(self) -> str:
        parts = []
        for v, c in self.coeffs:
            if c == 1:
                parts.append(v)
            elif c == -1:
                parts.append(f"-{v}")
            else:
                parts.append(f"{c}*{v}")
        if self.const or not parts:
            parts.append(str(self.const))
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out


def affine_min_max(
    expr: AffineExpr, box: Mapping[str, tuple[int | None, int | None]]
) -> tuple[int | None, int | None]:
    """Interval of an affine form over a box; None encodes an unbounded end.

    Variables missing from the box (model parameters) are unbounded.
    """
    lo: int | None = expr.const
    hi: int | None = expr.const
    for v, c in expr.coeffs:
        vlo, vhi = box.get(v, (None, None))
        if c > 0:
            lo = None if (lo is None or vlo is None) else lo + c * vlo
            hi = None if (hi is None or vhi is None) else hi + c * vhi
        else:
            lo = None if (lo is None or vhi is None) else lo + c * vhi
            hi = None if (hi is None or vlo is None) else hi + c * vlo
    return lo, hi


def provably_nonnegative(
    expr: AffineExpr, box: Mapping[str, tuple[int | None, int | None]]
) -> bool:
    lo, _ = affine_min_max(expr, box)
    return lo is not None and lo >= 0


def provably_negative(
    expr: AffineExpr, box: Mapping[str, tuple[int | None, int | None]]
) -> bool:
    _, hi = affine_min_max(expr, box)
    return hi is not None and hi < 0
