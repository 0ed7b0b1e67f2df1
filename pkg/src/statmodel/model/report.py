"""Derived reports: instruction distribution and arithmetic intensity."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

from ..binary.archdesc import ArchDescription
from ..errors import ZeroDenominator
from .core import EvaluationResult, Model, evaluate


@dataclass
class DistributionReport:
    rows: list[tuple[str, int, str]]  # (category, count, percentage text)
    total: int

    def text(self) -> str:
        width = max([len(c) for c, _, _ in self.rows] + [8])
        out = [f"{'category'.ljust(width)}  {'count':>16}  {'share':>7}"]
        for category, count, pct in self.rows:
            out.append(f"{category.ljust(width)}  {count:>16}  {pct:>6}%")
        out.append(f"{'total'.ljust(width)}  {self.total:>16}  {'100.0':>6}%")
        return "\n".join(out)

    def to_json_dict(self) -> dict:
        return {
            "kind": "distribution",
            "rows": [
                {"category": c, "count": n, "percent": p} for c, n, p in self.rows
            ],
            "total": self.total,
        }


@dataclass
class IntensityReport:
    fp_total: int
    mem_total: int
    ratio: Fraction
    rendered: str  # two decimals, round-half-even

    def text(self) -> str:
        return (
            f"floating-point instructions: {self.fp_total}\n"
            f"data-movement instructions:  {self.mem_total}\n"
            f"arithmetic intensity:        {self.rendered} "
            f"(exact {self.ratio.numerator}/{self.ratio.denominator})"
        )

    def to_json_dict(self) -> dict:
        return {
            "kind": "arithmetic_intensity",
            "fp_total": self.fp_total,
            "mem_total": self.mem_total,
            "ratio": [self.ratio.numerator, self.ratio.denominator],
            "value": self.rendered,
        }


def distribution_report(result: EvaluationResult) -> DistributionReport:
    """Counts with largest-remainder percentages that sum to exactly 100.0."""
    items = sorted(result.per_category.items(), key=lambda kv: (-kv[1], kv[0]))
    total = sum(n for _, n in items)
    if total == 0:
        return DistributionReport([(c, 0, "0.0") for c, _ in items], 0)
    tenths_floor = []
    remainders = []
    for _, count in items:
        exact = Fraction(count * 1000, total)  # tenths of a percent
        tenths_floor.append(exact.numerator // exact.denominator)
        remainders.append(exact - (exact.numerator // exact.denominator))
    leftover = 1000 - sum(tenths_floor)
    order = sorted(range(len(items)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        tenths_floor[i] += 1
    rows = [
        (category, count, f"{tenths // 10}.{tenths % 10}")
        for (category, count), tenths in zip(items, tenths_floor)
    ]
    return DistributionReport(rows, total)


def intensity_report(result: EvaluationResult, arch: ArchDescription) -> IntensityReport:
    fp_total = sum(result.per_category.get(c, 0) for c in arch.fp_categories)
    mem_total = sum(result.per_category.get(c, 0) for c in arch.mem_categories)
    if mem_total == 0:
        raise ZeroDenominator(
            "no data-movement instructions: arithmetic intensity is undefined"
        )
    ratio = Fraction(fp_total, mem_total)
    rendered = str(
        (Decimal(ratio.numerator) / Decimal(ratio.denominator)).quantize(
            Decimal("0.01"), rounding=ROUND_HALF_EVEN
        )
    )
    return IntensityReport(fp_total, mem_total, ratio, rendered)


def report(
    model: Model,
    root: str,
    binding: dict[str, int],
    kind: str,
    arch: ArchDescription | None = None,
):
    result = evaluate(model, root, binding)
    if kind == "distribution":
        return distribution_report(result)
    if kind in ("ai", "arithmetic_intensity"):
        if arch is None:
            raise ValueError("arithmetic intensity needs the architecture description")
        return intensity_report(result, arch)
    raise ValueError(f"unknown report kind {kind!r}")
