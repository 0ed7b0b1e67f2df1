"""Random affine loop-nest generator shared by property and acceptance tests.

Generates nests of depth <= 3 with integer bound constants in [-10, 10],
steps in {1, 2, 3}, optional parameters in bounds, and (for a configurable
fraction) one affine branch constraint. Parameter bindings are sampled from
the same [-10, 10] range.
"""

from __future__ import annotations

import random

from statmodel.polyhedral import AffineExpr, Level, LoopNestDomain, intersect_branch

INDEX_NAMES = ("i", "j", "k")
PARAM_NAMES = ("N", "M")


def random_bound(rng: random.Random, outer: list[str], params: set[str]) -> AffineExpr:
    roll = rng.random()
    const = rng.randint(-10, 10)
    if roll < 0.5 or (not outer and roll < 0.75):
        return AffineExpr.constant(const)
    if roll < 0.75:
        coeff = rng.choice((1, -1))
        return AffineExpr.var(rng.choice(outer), coeff) + const
    name = rng.choice(PARAM_NAMES)
    params.add(name)
    return AffineExpr.var(name) + const


def random_domain(rng: random.Random, branch_fraction: float = 0.3) -> LoopNestDomain:
    depth = rng.randint(1, 3)
    params: set[str] = set()
    levels = []
    outer: list[str] = []
    for d in range(depth):
        index = INDEX_NAMES[d]
        lower = random_bound(rng, outer, params)
        upper = random_bound(rng, outer, params)
        step = rng.choice((1, 1, 2, 3))
        levels.append(Level(index, lower, upper, step))
        outer.append(index)
    domain = LoopNestDomain(tuple(levels), frozenset(params))
    if rng.random() < branch_fraction:
        coeffs = {}
        for v in rng.sample(outer, k=rng.randint(1, len(outer))):
            c = rng.choice((-2, -1, 1, 2))
            coeffs[v] = c
        constraint = AffineExpr.make(coeffs, rng.randint(-10, 10))
        domain = intersect_branch(domain, constraint)
    return domain


def random_binding(rng: random.Random, domain: LoopNestDomain) -> dict[str, int]:
    return {p: rng.randint(-10, 10) for p in domain.params}
