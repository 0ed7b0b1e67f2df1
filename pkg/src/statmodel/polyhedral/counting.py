"""Lattice-point counting for affine loop-nest iteration domains.

A LoopNestDomain describes nested integer loops: each level iterates its
index from an affine lower bound to an affine inclusive upper bound with a
positive constant stride, where bounds may reference outer indices and free
parameters. Branch conditions intersect the domain as residual affine
constraints (`expr >= 0`).

Two counting routes exist and are kept strictly apart:

* `count_enumerate` walks the nest point by point. It is the oracle every
  symbolic result is tested against.
* `count_symbolic` builds a CountExpr evaluable under any parameter binding.
  Innermost-out, each level sums the inner count. Polynomial bodies are
  closed-formed with power-sum (Faulhaber) identities when the level extent
  is provably non-negative; otherwise the sum is guarded by an emptiness
  indicator, reduced to `max0(extent) * body` when the body does not use the
  level index, or emitted as a LazySum evaluated by iteration. All integer
  arithmetic is exact (Fraction intermediates), so symbolic results agree
  with enumeration bit for bit.

Non-convex domains are out of scope; callers handle them via the
complement rule (`complement_count`) or annotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Iterable, Mapping, Sequence

from ..errors import EnumerationTooLarge, NonAffineBound, NonAffineCondition, UnboundParameter
from .affine import AffineExpr, affine_min_max, provably_negative, provably_nonnegative
from .countexpr import (
    ONE,
    ZERO,
    CountExpr,
    IntConst,
    LazySum,
    Param,
    Var,
    cadd,
    cfloordiv,
    cmax0,
    cmax2,
    cmin2,
    cmul,
    cpow,
    csub,
    indicator_nonnegative,
    indicator_positive,
    references_var,
)

MAX_POWER_SUM_DEGREE = 6
DEFAULT_ENUMERATION_CAP = 10**8


@dataclass(frozen=True)
class Level:
    """One loop level: index from `lower` to `upper` inclusive, stride `step`.

    The iteration set is {lower + t*step | t >= 0} intersected with
    [lower, upper]; the stride is anchored at `lower`.
    """

    index: str
    lower: AffineExpr
    upper: AffineExpr
    step: int = 1


@dataclass(frozen=True)
class LoopNestDomain:
    """Ordered loop levels (outermost first) plus residual constraints."""

    levels: tuple[Level, ...]
    params: frozenset[str]
    residuals: tuple[AffineExpr, ...] = ()

    @property
    def dims(self) -> tuple[str, ...]:
        return tuple(lv.index for lv in self.levels)

    def validate(self) -> None:
        seen: set[str] = set()
        for lv in self.levels:
            if lv.step < 1:
                raise NonAffineBound(lv.index, "step must be a positive constant")
            for v in lv.lower.vars() | lv.upper.vars():
                if v == lv.index:
                    raise NonAffineBound(lv.index, "bound references its own index")
                if v not in seen and v not in self.params:
                    raise NonAffineBound(lv.index, f"unknown variable '{v}' in bound")
            if lv.index in seen:
                raise NonAffineBound(lv.index, "duplicate loop index")
            seen.add(lv.index)
        scope = seen | self.params
        for r in self.residuals:
            bad = r.vars() - scope
            if bad:
                raise NonAffineCondition(f"constraint uses out-of-scope variable(s) {sorted(bad)}")


@dataclass(frozen=True)
class ConstraintSystem:
    """Conjunction of affine inequalities (each `expr >= 0`) over dims+params.

    Strides are not representable here; levels with step > 1 are relaxed to
    their step-1 hull. Used for validation and partition-style reasoning.
    """

    dims: tuple[str, ...]
    params: frozenset[str]
    constraints: tuple[AffineExpr, ...]

    @staticmethod
    def from_domain(domain: LoopNestDomain) -> "ConstraintSystem":
        cons: list[AffineExpr] = []
        for lv in domain.levels:
            idx = AffineExpr.var(lv.index)
            cons.append(idx - lv.lower)  # index - lower >= 0
            cons.append(lv.upper - idx)  # upper - index >= 0
        cons.extend(domain.residuals)
        return ConstraintSystem(domain.dims, domain.params, tuple(cons))

    def validate(self) -> None:
        scope = set(self.dims) | self.params
        for c in self.constraints:
            bad = c.vars() - scope
            if bad:
                raise NonAffineCondition(f"constraint uses out-of-scope variable(s) {sorted(bad)}")


def negate_constraint(constraint: AffineExpr) -> AffineExpr:
    """Integer negation of `expr >= 0` is `-expr - 1 >= 0`."""
    return (-constraint) + (-1)


def domain_from_scops(scops: Sequence, params: Iterable[str] = ()) -> LoopNestDomain:
    """Build a domain from per-loop bound records, outermost first.

    Each record needs attributes index / lower / upper / step, with bounds as
    AffineExpr (or None when unanalyzable) and a signed non-zero constant
    step. Decreasing loops are normalized by index negation, which preserves
    the iteration set exactly (including stride phase). Free bound variables
    that are not enclosing indices become parameters.
    """
    negated: set[str] = set()
    seen: set[str] = set()
    all_params = set(params)
    levels: list[Level] = []
    for scop in scops:
        index = scop.index
        lower, upper, step = scop.lower, scop.upper, scop.step
        if lower is None or upper is None or step is None:
            raise NonAffineBound(index, getattr(scop, "failure_reason", "") or "unanalyzable bound or step")
        if step == 0:
            raise NonAffineBound(index, "zero step")
        lower = _negate_vars(lower, negated)
        upper = _negate_vars(upper, negated)
        if step < 0:
            lower, upper, step = -upper, -lower, -step
            negated.add(index)
        for v in lower.vars() | upper.vars():
            if v == index:
                raise NonAffineBound(index, "bound references its own index")
            if v not in seen:
                all_params.add(v)
        levels.append(Level(index, lower, upper, step))
        seen.add(index)
    domain = LoopNestDomain(tuple(levels), frozenset(all_params))
    domain.validate()
    return domain


def _negate_vars(expr: AffineExpr, negated: set[str]) -> AffineExpr:
    if not negated or not (expr.vars() & negated):
        return expr
    return AffineExpr.make(
        {v: (-c if v in negated else c) for v, c in expr.coeffs}, expr.const
    )


def intersect_branch(domain: LoopNestDomain, constraint: AffineExpr) -> LoopNestDomain:
    """Domain restricted to points with `constraint >= 0`.

    The constraint is kept residual; `count_symbolic` folds it into level
    bounds where that is sound.
    """
    scope = set(domain.dims) | domain.params
    bad = constraint.vars() - scope
    if bad:
        raise NonAffineCondition(
            f"branch condition uses out-of-scope variable(s) {sorted(bad)}"
        )
    return LoopNestDomain(domain.levels, domain.params, domain.residuals + (constraint,))


def complement_count(total: CountExpr, false_branch: CountExpr) -> CountExpr:
    """Count of the complement arm: max0(total - false_branch)."""
    return cmax0(csub(total, false_branch))


# --- enumeration oracle -----------------------------------------------------


def count_enumerate(
    domain: LoopNestDomain,
    binding: Mapping[str, int] | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> int:
    """Exact lattice-point count by explicit iteration."""
    binding = dict(binding or {})
    missing = domain.params - binding.keys()
    if missing:
        raise UnboundParameter(missing)
    env: dict[str, int] = dict(binding)
    order = {lv.index: k for k, lv in enumerate(domain.levels)}
    per_level: list[list[AffineExpr]] = [[] for _ in domain.levels]
    global_res: list[AffineExpr] = []
    for r in domain.residuals:
        deepest = max((order[v] for v in r.vars() if v in order), default=None)
        if deepest is None:
            global_res.append(r)
        else:
            per_level[deepest].append(r)
    if any(r.eval(env) < 0 for r in global_res):
        return 0
    visited = 0

    def rec(k: int) -> int:
        nonlocal visited
        if k == len(domain.levels):
            return 1
        lv = domain.levels[k]
        lo = lv.lower.eval(env)
        hi = lv.upper.eval(env)
        total = 0
        for v in range(lo, hi + 1, lv.step):
            visited += 1
            if visited > cap:
                raise EnumerationTooLarge(f"more than {cap} points visited")
            env[lv.index] = v
            if all(r.eval(env) >= 0 for r in per_level[k]):
                total += rec(k + 1)
        env.pop(lv.index, None)
        return total

    return rec(0)


# --- exact multivariate polynomials ----------------------------------------

Monomial = tuple[tuple[str, int], ...]


class Poly:
    """Multivariate polynomial with exact Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {
            m: Fraction(c) for m, c in (terms or {}).items() if c != 0
        }

    @staticmethod
    def const(c) -> "Poly":
        return Poly({(): Fraction(c)})

    @staticmethod
    def var(name: str) -> "Poly":
        return Poly({((name, 1),): Fraction(1)})

    @staticmethod
    def from_affine(expr: AffineExpr) -> "Poly":
        terms: dict[Monomial, Fraction] = {}
        if expr.const:
            terms[()] = Fraction(expr.const)
        for v, c in expr.coeffs:
            terms[((v, 1),)] = Fraction(c)
        return Poly(terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def vars(self) -> frozenset[str]:
        return frozenset(v for m in self.terms for v, _ in m)

    def degree_in(self, name: str) -> int:
        deg = 0
        for m in self.terms:
            for v, e in m:
                if v == name:
                    deg = max(deg, e)
        return deg

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(Fraction(-1))

    def scale(self, k) -> "Poly":
        k = Fraction(k)
        return Poly({m: c * k for m, c in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Poly(out)

    def pow_int(self, k: int) -> "Poly":
        out = Poly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def collect(self, name: str) -> dict[int, "Poly"]:
        """Coefficients by power of `name`; values do not mention `name`."""
        out: dict[int, dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            deg = 0
            rest = []
            for v, e in m:
                if v == name:
                    deg = e
                else:
                    rest.append((v, e))
            bucket = out.setdefault(deg, {})
            key = tuple(rest)
            bucket[key] = bucket.get(key, Fraction(0)) + c
        return {deg: Poly(terms) for deg, terms in out.items()} or {0: Poly()}

    def subst_affine(self, name: str, repl: AffineExpr) -> "Poly":
        repl_poly = Poly.from_affine(repl)
        out = Poly()
        for deg, coeff in self.collect(name).items():
            out = out + coeff * repl_poly.pow_int(deg)
        return out

    def eval(self, env: Mapping[str, int]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            val = c
            for v, e in m:
                val *= Fraction(env[v]) ** e
            total += val
        return total

    def __repr__(self) -> str:
        return f"Poly({self.terms!r})"


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    merged: dict[str, int] = dict(a)
    for v, e in b:
        merged[v] = merged.get(v, 0) + e
    return tuple(sorted(merged.items()))


_SUM_VAR = "__n"


@lru_cache(maxsize=None)
def power_sum(k: int) -> Poly:
    """sum(t**k for t in range(n)) as a polynomial in the reserved var __n.

    Built by exact Lagrange interpolation through k+2 sample points, so no
    Bernoulli-number bookkeeping is needed; verified against brute force in
    the test suite.
    """
    if k < 0 or k > MAX_POWER_SUM_DEGREE:
        raise ValueError(f"power sums supported up to degree {MAX_POWER_SUM_DEGREE}")
    npts = k + 2
    xs = list(range(npts))
    ys = [sum(t**k for t in range(n)) for n in xs]
    # interpolate: coeffs[j] of __n**j
    coeffs = [Fraction(0)] * npts
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        # basis polynomial prod_{j != i} (x - xj) / (xi - xj)
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(xs):
            if j == i:
                continue
            # multiply basis by (x - xj)
            nxt = [Fraction(0)] * (len(basis) + 1)
            for d, c in enumerate(basis):
                nxt[d + 1] += c
                nxt[d] -= c * xj
            basis = nxt
            denom *= xi - xj
        w = Fraction(yi) / denom
        for d, c in enumerate(basis):
            coeffs[d] += w * c
    terms: dict[Monomial, Fraction] = {}
    for d, c in enumerate(coeffs):
        if c:
            terms[() if d == 0 else ((_SUM_VAR, d),)] = c
    return Poly(terms)


class _DegreeTooHigh(Exception):
    pass


def faulhaber_sum(p: Poly, name: str, lower: AffineExpr, upper: AffineExpr) -> Poly:
    """Closed form of sum(p for name = lower..upper), valid when upper >= lower-1."""
    total = Poly()
    for deg, coeff in p.collect(name).items():
        if deg > MAX_POWER_SUM_DEGREE:
            raise _DegreeTooHigh
        sk = power_sum(deg)
        part = sk.subst_affine(_SUM_VAR, upper + 1) - sk.subst_affine(_SUM_VAR, lower)
        total = total + coeff * part
    return total


def poly_to_count_expr(p: Poly, params: frozenset[str]) -> CountExpr:
    """Exact CountExpr for an integer-valued polynomial.

    Fractional coefficients are cleared by a common denominator and one
    trailing floor division, which is exact wherever the polynomial takes an
    integer value.
    """
    if p.is_zero:
        return ZERO
    denom = lcm(*(c.denominator for c in p.terms.values()))
    args: list[CountExpr] = []
    for mono, coeff in sorted(p.terms.items()):
        k = int(coeff * denom)
        factors: list[CountExpr] = [IntConst(k)]
        for v, e in mono:
            node: CountExpr = Param(v) if v in params else Var(v)
            factors.append(cpow(node, e))
        args.append(cmul(*factors))
    expr = cadd(*args)
    return cfloordiv(expr, denom)


def affine_to_count_expr(expr: AffineExpr, params: frozenset[str]) -> CountExpr:
    args: list[CountExpr] = []
    for v, c in expr.coeffs:
        node: CountExpr = Param(v) if v in params else Var(v)
        args.append(cmul(IntConst(c), node))
    args.append(IntConst(expr.const))
    return cadd(*args)


# --- symbolic counting -------------------------------------------------------

# Candidate bounds derived from residual constraints. Value semantics:
#   ("affine", e)       -> e
#   ("ceildiv", e, d)   -> ceil(e / d)   (lower-bound candidates)
#   ("floordiv", e, d)  -> floor(e / d)  (upper-bound candidates)
_Cand = tuple


def _cand_interval(cand: _Cand, box) -> tuple[int | None, int | None]:
    kind = cand[0]
    lo, hi = affine_min_max(cand[1], box)
    if kind == "affine":
        return lo, hi
    d = cand[2]
    if kind == "ceildiv":
        return (None if lo is None else -((-lo) // d), None if hi is None else -((-hi) // d))
    return (None if lo is None else lo // d, None if hi is None else hi // d)


def _cand_expr(cand: _Cand, params: frozenset[str]) -> CountExpr:
    kind = cand[0]
    e = affine_to_count_expr(cand[1], params)
    if kind == "affine":
        return e
    d = cand[2]
    if kind == "ceildiv":
        return cfloordiv(cadd(e, IntConst(d - 1)), d)
    return cfloordiv(e, d)


def _prove_ge(a: _Cand, b: _Cand, box) -> bool:
    """Is candidate a >= candidate b everywhere over the box?"""
    if a[0] == "affine" and b[0] == "affine":
        return provably_nonnegative(a[1] - b[1], box)
    alo, _ = _cand_interval(a, box)
    _, bhi = _cand_interval(b, box)
    return alo is not None and bhi is not None and alo >= bhi


def _select_extreme(cands: list[_Cand], box, want_max: bool) -> _Cand | None:
    for c in cands:
        if all(
            c is o or (_prove_ge(c, o, box) if want_max else _prove_ge(o, c, box))
            for o in cands
        ):
            return c
    return None


def count_symbolic(domain: LoopNestDomain) -> CountExpr:
    """Parametric count of lattice points, exactly equal to enumeration.

    The result's free names are exactly (a subset of) domain.params.
    """
    domain.validate()
    levels = domain.levels
    params = domain.params
    order = {lv.index: k for k, lv in enumerate(levels)}

    # Absorb residual constraints into per-level bound candidates keyed by
    # the deepest index they mention; index-free residuals gate everything.
    extra_lowers: list[list[_Cand]] = [[] for _ in levels]
    extra_uppers: list[list[_Cand]] = [[] for _ in levels]
    guards: list[CountExpr] = []
    for r in domain.residuals:
        idx_levels = [order[v] for v in r.vars() if v in order]
        if not idx_levels:
            guards.append(indicator_nonnegative(affine_to_count_expr(r, params)))
            continue
        k = max(idx_levels)
        index = levels[k].index
        a = r.coeff(index)
        rest = r - AffineExpr.var(index, a)
        if a > 0:  # a*i + rest >= 0  =>  i >= ceil(-rest / a)
            extra_lowers[k].append(("affine", -rest) if a == 1 else ("ceildiv", -rest, a))
        else:  # i <= floor(rest / -a)
            extra_uppers[k].append(("affine", rest) if a == -1 else ("floordiv", rest, -a))

    # Conservative interval box per index, outermost first. Live index values
    # always lie inside the box, which makes interval proofs sound below.
    box: dict[str, tuple[int | None, int | None]] = {}
    for k, lv in enumerate(levels):
        lows = [("affine", lv.lower)] + extra_lowers[k]
        ups = [("affine", lv.upper)] + extra_uppers[k]
        known_lo = [x for x in (_cand_interval(c, box)[0] for c in lows) if x is not None]
        known_hi = [x for x in (_cand_interval(c, box)[1] for c in ups) if x is not None]
        box[lv.index] = (max(known_lo) if known_lo else None, min(known_hi) if known_hi else None)

    # Innermost-out accumulation. `body` is the exact count of the inner
    # levels as either an exact polynomial or a CountExpr, as a function of
    # outer indices and parameters.
    body: Poly | CountExpr = Poly.const(1)

    def as_expr(b: Poly | CountExpr) -> CountExpr:
        return poly_to_count_expr(b, params) if isinstance(b, Poly) else b

    def depends_on(b: Poly | CountExpr, name: str) -> bool:
        if isinstance(b, Poly):
            return name in b.vars()
        return references_var(b, name)

    for k in range(len(levels) - 1, -1, -1):
        lv = levels[k]
        i, s = lv.index, lv.step
        lows = [("affine", lv.lower)] + extra_lowers[k]
        ups = [("affine", lv.upper)] + extra_uppers[k]
        eff_up = _select_extreme(ups, box, want_max=False)

        if s == 1:
            # Stride 1 has no phase, so constraint-derived lower bounds may
            # re-anchor the level.
            eff_low = _select_extreme(lows, box, want_max=True)
            if (
                eff_low is not None
                and eff_up is not None
                and eff_low[0] == "affine"
                and eff_up[0] == "affine"
            ):
                body = _close_level_unit(
                    body, i, eff_low[1], eff_up[1], box, params, as_expr, depends_on
                )
                continue
            # Unorderable or divisor-carrying candidates: exact min/max
            # combination bounds, closed only through counting expressions.
            low_expr = _fold_combo(lows, params, cmax2)
            up_expr = _fold_combo(ups, params, cmin2)
            if depends_on(body, i):
                body = LazySum(i, low_expr, up_expr, 1, as_expr(body))
            else:
                extent = cadd(csub(up_expr, low_expr), ONE)
                body = cmul(cmax0(extent), as_expr(body))
            continue

        # Stride > 1: the anchor is the loop's own lower bound; extra lower
        # candidates must filter values, not re-anchor the stride.
        anchor = lv.lower
        if not extra_lowers[k] and eff_up is not None and eff_up[0] == "affine":
            upper = eff_up[1]
            diff = upper - anchor
            if isinstance(body, Poly):
                if diff.is_constant:
                    if diff.const < 0:
                        body = Poly()
                    else:
                        n = diff.const // s + 1
                        shifted = body.subst_affine(i, anchor + AffineExpr.var("__t", s))
                        try:
                            body = faulhaber_sum(
                                shifted, "__t", AffineExpr.constant(0), AffineExpr.constant(n - 1)
                            )
                        except _DegreeTooHigh:
                            body = LazySum(
                                i,
                                affine_to_count_expr(anchor, params),
                                affine_to_count_expr(upper, params),
                                s,
                                as_expr(body),
                            )
                    continue
                if not depends_on(body, i):
                    n_expr = cmax0(cadd(cfloordiv(affine_to_count_expr(diff, params), s), ONE))
                    body = cmul(n_expr, as_expr(body))
                    continue
            elif not depends_on(body, i):
                n_expr = cmax0(cadd(cfloordiv(affine_to_count_expr(diff, params), s), ONE))
                body = cmul(n_expr, body)
                continue
            body = LazySum(
                i,
                affine_to_count_expr(anchor, params),
                affine_to_count_expr(upper, params),
                s,
                as_expr(body),
            )
            continue
        # Guarded strided level: iterate from the anchor, filter by extra
        # lower candidates inside the body.
        up_expr = _fold_combo(ups, params, cmin2)
        guarded = as_expr(body)
        for cand in extra_lowers[k]:
            guarded = cmul(
                indicator_nonnegative(csub(Var(i), _cand_expr(cand, params))), guarded
            )
        body = LazySum(i, affine_to_count_expr(anchor, params), up_expr, s, guarded)

    result = as_expr(body)
    for g in guards:
        result = cmul(g, result)
    leftover = result.free_names() - params
    if leftover:  # pragma: no cover - internal invariant
        raise AssertionError(f"unbound iteration variables {sorted(leftover)} in count")
    return result


def _fold_combo(cands: list[_Cand], params: frozenset[str], combine) -> CountExpr:
    out = _cand_expr(cands[0], params)
    for c in cands[1:]:
        out = combine(out, _cand_expr(c, params))
    return out


def _close_level_unit(
    body: Poly | CountExpr,
    index: str,
    lower: AffineExpr,
    upper: AffineExpr,
    box,
    params: frozenset[str],
    as_expr,
    depends_on,
) -> Poly | CountExpr:
    """Sum `body` over a unit-stride level with single affine bounds."""
    extent = upper - lower + 1
    if provably_negative(extent, box):
        return Poly()
    if isinstance(body, Poly):
        try:
            if provably_nonnegative(extent, box):
                return faulhaber_sum(body, index, lower, upper)
            if not depends_on(body, index):
                return cmul(
                    cmax0(affine_to_count_expr(extent, params)),
                    as_expr(body),
                )
            closed = faulhaber_sum(body, index, lower, upper)
            guard = indicator_positive(affine_to_count_expr(extent, params))
            return cmul(guard, poly_to_count_expr(closed, params))
        except _DegreeTooHigh:
            return LazySum(
                index,
                affine_to_count_expr(lower, params),
                affine_to_count_expr(upper, params),
                1,
                as_expr(body),
            )
    if depends_on(body, index):
        return LazySum(
            index,
            affine_to_count_expr(lower, params),
            affine_to_count_expr(upper, params),
            1,
            body,
        )
    return cmul(cmax0(affine_to_count_expr(extent, params)), body)
