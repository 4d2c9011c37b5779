"""One-hot encoding of writer profiles: language, age bin, categoricals."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import ProfileRecord
from .errors import DataError
from .features import FeatureVector

AGE_BINS: tuple[str, ...] = (
    "kid",
    "teenager",
    "youth",
    "young_adult",
    "middle_age",
    "elderly",
    "missing",
)
# Upper edges of the half-open bins [lo, hi).
_AGE_EDGES = ((10, "kid"), (18, "teenager"), (24, "youth"), (40, "young_adult"), (65, "middle_age"))

UNKNOWN_LANGUAGE = "unknown"
MISSING = "missing"

# Known HappyDB inventories; encoders fitted on data extend these.
DEFAULT_CATEGORIES: dict[str, tuple[str, ...]] = {
    "gender": ("f", "m", "o"),
    "married": ("divorced", "married", "separated", "single", "widowed"),
    "parenthood": ("n", "y"),
    "reflection": ("24h", "3m"),
    "duration": (),
}
CATEGORICAL_FIELDS = tuple(DEFAULT_CATEGORIES)


def age_bin(age: float | None) -> str:
    """Map an age onto its bin; ``None`` maps to ``"missing"``."""
    if age is None:
        return "missing"
    if isinstance(age, float) and math.isnan(age):
        return "missing"
    if not math.isfinite(age) or age < 0:
        raise DataError(f"invalid age {age!r}")
    for hi, name in _AGE_EDGES:
        if age < hi:
            return name
    return "elderly"


def load_language_table(path: str | Path | None = None) -> dict[str, str]:
    """Read a headerless two-column ``country,language`` CSV.

    Without a path the bundled table is used.
    """
    if path is None:
        text = resources.files("affectkit").joinpath("data/country_language.csv").read_text("utf-8")
        lines = text.splitlines()
        source = "bundled table"
    else:
        path = Path(path)
        if not path.exists():
            raise DataError(f"file not found: {path}")
        lines = path.read_text("utf-8").splitlines()
        source = str(path)
    table = {}
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise DataError(f"{source} line {lineno}: expected 'country,language'")
        table[row[0].strip().upper()] = row[1].strip()
    return table


def country_to_language(country: str | None, table: Mapping[str, str]) -> str:
    if not country:
        return UNKNOWN_LANGUAGE
    return table.get(country.strip().upper(), UNKNOWN_LANGUAGE)


@dataclass(frozen=True)
class ProfileEncoder:
    """Fixed-width one-hot layout for profiles.

    Blocks, in order: language (+ ``unknown``), age bin (7 slots), then
    gender, married, parenthood, reflection, duration, each with a trailing
    ``missing`` slot. Values outside a block's inventory fall into its
    missing slot, so every block has exactly one active slot.
    """

    languages: tuple[str, ...]
    categories: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_CATEGORIES))
    table: Mapping[str, str] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_table(cls, table: Mapping[str, str], categories=None) -> "ProfileEncoder":
        langs = tuple(sorted(set(table.values()) - {UNKNOWN_LANGUAGE}))
        cats = dict(DEFAULT_CATEGORIES)
        if categories:
            cats.update({k: tuple(v) for k, v in categories.items()})
        return cls(languages=langs, categories=cats, table=dict(table))

    @classmethod
    def fit(cls, profiles: Iterable[ProfileRecord], table: Mapping[str, str]) -> "ProfileEncoder":
        """Extend the default inventories with categories seen in ``profiles``."""
        seen = {k: set(v) for k, v in DEFAULT_CATEGORIES.items()}
        for p in profiles:
            for name in CATEGORICAL_FIELDS:
                v = getattr(p, name)
                if v is not None:
                    seen[name].add(v.strip().lower())
        return cls.from_table(table, {k: tuple(sorted(v)) for k, v in seen.items()})

    def blocks(self) -> list[tuple[str, list[str]]]:
        out = [("language", list(self.languages) + [UNKNOWN_LANGUAGE]), ("age", list(AGE_BINS))]
        for name in CATEGORICAL_FIELDS:
            out.append((name, list(self.categories.get(name, ())) + [MISSING]))
        return out

    @property
    def names(self) -> list[str]:
        return [f"profile:{block}={slot}" for block, slots in self.blocks() for slot in slots]

    @property
    def width(self) -> int:
        return sum(len(slots) for _, slots in self.blocks())

    def encode(self, profile: ProfileRecord | None) -> FeatureVector:
        values = np.zeros(self.width)
        offset = 0
        for block, slots in self.blocks():
            if block == "language":
                active = country_to_language(profile.country if profile else None, self.table)
                if active not in slots:
                    active = UNKNOWN_LANGUAGE
            elif block == "age":
                active = age_bin(profile.age if profile else None)
            else:
                raw = getattr(profile, block) if profile else None
                active = raw.strip().lower() if raw else MISSING
                if active not in slots:
                    active = MISSING
            values[offset + slots.index(active)] = 1.0
            offset += len(slots)
        return FeatureVector(self.names, values)


def encode_profile(
    profile: ProfileRecord | None,
    mapping_table: Mapping[str, str],
    encoder: ProfileEncoder | None = None,
) -> FeatureVector:
    if encoder is None:
        encoder = ProfileEncoder.from_table(mapping_table)
    return encoder.encode(profile)


def profile_matrix(
    profiles: Sequence[ProfileRecord | None], encoder: ProfileEncoder
) -> np.ndarray:
    return np.vstack([encoder.encode(p).values for p in profiles]) if profiles else np.zeros((0, encoder.width))
