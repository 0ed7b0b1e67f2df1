"""Architecture description files: instruction categories, match rules,
machine parameters, and category roles for derived metrics."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..errors import ArchDescriptionError

MISC_CATEGORY = "misc"


@dataclass(frozen=True)
class ArchDescription:
    categories: tuple[tuple[str, str], ...]  # (id, display name), ordered
    rules: tuple[tuple[str, str, str], ...]  # (kind, pattern, category), ordered
    machine: dict[str, float]
    fp_categories: frozenset[str]
    mem_categories: frozenset[str]
    identity: str  # content hash, recorded in models
    _exact: dict[str, str] = field(default_factory=dict, repr=False, compare=False)

    @property
    def category_ids(self) -> tuple[str, ...]:
        return tuple(cid for cid, _ in self.categories)


def parse_archdesc(text: str, origin: str = "<archdesc>") -> ArchDescription:
    categories: list[tuple[str, str]] = []
    rules: list[tuple[str, str, str]] = []
    machine: dict[str, float] = {}
    roles: dict[str, list[str]] = {"fp": [], "mem": []}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("categories", "rules", "machine", "roles"):
                raise ArchDescriptionError(f"{origin}:{lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise ArchDescriptionError(f"{origin}:{lineno}: content before any section")
        if "=" not in line:
            raise ArchDescriptionError(f"{origin}:{lineno}: expected 'key = value'")
        left, _, right = line.partition("=")
        left, right = left.strip(), right.strip()
        if not left or not right:
            raise ArchDescriptionError(f"{origin}:{lineno}: empty key or value")
        if section == "categories":
            categories.append((left, right))
        elif section == "rules":
            parts = left.split()
            if len(parts) != 2 or parts[0] not in ("exact", "prefix"):
                raise ArchDescriptionError(
                    f"{origin}:{lineno}: rule must be 'exact|prefix <pattern> = <category>'"
                )
            rules.append((parts[0], parts[1].lower(), right))
        elif section == "machine":
            try:
                value = float(right)
            except ValueError:
                raise ArchDescriptionError(f"{origin}:{lineno}: machine value must be numeric") from None
            machine[left] = value
        else:  # roles
            if left not in roles:
                raise ArchDescriptionError(f"{origin}:{lineno}: unknown role '{left}' (fp or mem)")
            roles[left].extend(v.strip() for v in right.split(",") if v.strip())

    ids = [cid for cid, _ in categories]
    if len(set(ids)) != len(ids):
        raise ArchDescriptionError(f"{origin}: duplicate category id")
    if MISC_CATEGORY not in ids:
        raise ArchDescriptionError(f"{origin}: the catch-all '{MISC_CATEGORY}' category is required")
    declared = set(ids)
    for kind, pattern, target in rules:
        if target not in declared:
            raise ArchDescriptionError(f"{origin}: rule '{kind} {pattern}' targets undeclared category '{target}'")
    for role, members in roles.items():
        for cat in members:
            if cat not in declared:
                raise ArchDescriptionError(f"{origin}: role '{role}' references undeclared category '{cat}'")

    identity = hashlib.sha256(text.encode("utf-8")).hexdigest()
    exact = {}
    for kind, pattern, target in rules:
        if kind == "exact" and pattern not in exact:
            exact[pattern] = target
    return ArchDescription(
        tuple(categories),
        tuple(rules),
        machine,
        frozenset(roles["fp"]),
        frozenset(roles["mem"]),
        identity,
        exact,
    )


def load_archdesc(path: str | Path) -> ArchDescription:
    text = Path(path).read_text(encoding="utf-8")
    return parse_archdesc(text, str(path))


def default_archdesc() -> ArchDescription:
    """The bundled x86-64 description (seven categories, ~60 rules)."""
    text = resources.files("statmodel").joinpath("data/default_arch.txt").read_text("utf-8")
    return parse_archdesc(text, "default_arch.txt")


def categorize(mnemonic: str, arch: ArchDescription) -> str:
    """Deterministic, total categorization: exact rules first (immune to rule
    order relative to prefix rules), then prefix rules in file order, then misc."""
    m = mnemonic.lower()
    hit = arch._exact.get(m)
    if hit is not None:
        return hit
    for kind, pattern, target in arch.rules:
        if kind == "prefix" and m.startswith(pattern):
            return target
    return MISC_CATEGORY
