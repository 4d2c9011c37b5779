"""Loading happy-moment records and profiles, splits and CV fold plans."""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, RowError, SchemaError

log = logging.getLogger(__name__)

# Fixed concept vocabulary; Family is the most frequent, Religion the rarest.
CONCEPTS: tuple[str, ...] = (
    "Family",
    "Food",
    "Career",
    "Entertainment",
    "Shopping",
    "Animals",
    "Romance",
    "Conversation",
    "Weather",
    "Education",
    "Party",
    "Exercise",
    "Vacation",
    "Technology",
    "Religion",
)
_CONCEPT_LOOKUP = {c.lower(): c for c in CONCEPTS}

_TRUE_TOKENS = {"yes", "1", "true"}
_FALSE_TOKENS = {"no", "0", "false"}

DEFAULT_SCHEMA: dict[str, str] = {
    "id": "hmid",
    "text": "moment",
    "agency": "agency",
    "social": "social",
    "concepts": "concepts",
}

DEFAULT_PROFILE_SCHEMA: dict[str, str] = {
    "profile_id": "hmid",
    "age": "age",
    "country": "country",
    "gender": "gender",
    "married": "married",
    "parenthood": "parenthood",
    "reflection": "reflection",
    "duration": "duration",
}

PROFILE_FIELDS = ("age", "country", "gender", "married", "parenthood", "reflection", "duration")


class LabelSource(str, Enum):
    GOLD = "gold"
    PSEUDO = "pseudo"


@dataclass(frozen=True)
class MomentRecord:
    id: str
    text: str
    agency: bool | None = None
    social: bool | None = None
    concepts: frozenset[str] | None = None
    profile_id: str | None = None
    label_source: LabelSource = LabelSource.GOLD

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise DataError(f"record {self.id!r}: empty text")
        if self.concepts is not None:
            bad = [c for c in self.concepts if c not in CONCEPTS]
            if bad:
                raise DataError(f"record {self.id!r}: unknown concepts {sorted(bad)}")

    def label(self, task: str):
        if task == "agency":
            return self.agency
        if task == "social":
            return self.social
        if task == "concepts":
            return self.concepts
        raise ValueError(f"unknown task {task!r}")

    @property
    def is_gold(self) -> bool:
        return self.label_source is LabelSource.GOLD


@dataclass(frozen=True)
class ProfileRecord:
    profile_id: str
    age: float | None = None
    country: str | None = None
    gender: str | None = None
    married: str | None = None
    parenthood: str | None = None
    reflection: str | None = None
    duration: str | None = None

    def __post_init__(self):
        if self.age is not None and (not math.isfinite(self.age) or self.age < 0):
            raise DataError(f"profile {self.profile_id!r}: invalid age {self.age!r}")


def parse_label(token: str | None) -> bool | None:
    """Parse a yes/no style label token; blank means absent."""
    if token is None:
        return None
    t = token.strip().lower()
    if not t:
        return None
    if t in _TRUE_TOKENS:
        return True
    if t in _FALSE_TOKENS:
        return False
    raise ValueError(f"unparseable label token {token!r}")


def parse_concepts(cell: str | None, separator: str = "|") -> frozenset[str]:
    if cell is None or not cell.strip():
        return frozenset()
    out = set()
    for part in cell.split(separator):
        name = part.strip()
        if not name:
            continue
        canon = _CONCEPT_LOOKUP.get(name.lower())
        if canon is None:
            raise ValueError(f"unknown concept {name!r}")
        out.add(canon)
    return frozenset(out)


def _open_rows(path: str | Path, required: Iterable[str]):
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            fh.close()
            raise SchemaError(f"{path}: missing column {col!r}")
    return fh, reader


def load_labeled(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    separator: str = "|",
) -> list[MomentRecord]:
    """Read gold-labeled moments from a CSV file.

    ``schema`` maps the logical names ``id``, ``text``, ``agency``, ``social``,
    ``concepts`` (and optionally ``profile_id``) onto column names. Row numbers
    in errors count the header as row 1.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    required = [schema[k] for k in ("id", "text", "agency", "social", "concepts")]
    pid_col = schema.get("profile_id")
    fh, reader = _open_rows(path, required + ([pid_col] if pid_col else []))
    records = []
    with fh:
        for rownum, row in enumerate(reader, start=2):
            try:
                agency = parse_label(row[schema["agency"]])
                social = parse_label(row[schema["social"]])
                concepts = parse_concepts(row[schema["concepts"]], separator)
            except ValueError as exc:
                raise RowError(rownum, str(exc)) from None
            text = (row[schema["text"]] or "").strip()
            if not text:
                raise RowError(rownum, "empty text")
            records.append(
                MomentRecord(
                    id=row[schema["id"]].strip(),
                    text=text,
                    agency=agency,
                    social=social,
                    concepts=concepts,
                    profile_id=(row[pid_col].strip() or None) if pid_col else None,
                    label_source=LabelSource.GOLD,
                )
            )
    return records


def load_unlabeled(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
) -> list[MomentRecord]:
    """Read unlabeled moments. Label columns, if present, are ignored."""
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    pid_col = schema.get("profile_id")
    fh, reader = _open_rows(path, [schema["id"], schema["text"]] + ([pid_col] if pid_col else []))
    label_cols = [schema[k] for k in ("agency", "social", "concepts") if k in schema]
    records = []
    ignored = 0
    with fh:
        present = [c for c in label_cols if c in (reader.fieldnames or [])]
        for rownum, row in enumerate(reader, start=2):
            text = (row[schema["text"]] or "").strip()
            if not text:
                raise RowError(rownum, "empty text")
            if any((row[c] or "").strip() for c in present):
                ignored += 1
            records.append(
                MomentRecord(
                    id=row[schema["id"]].strip(),
                    text=text,
                    profile_id=(row[pid_col].strip() or None) if pid_col else None,
                )
            )
    if ignored:
        log.warning("ignored labels on %d rows of unlabeled file %s", ignored, path)
    return records


def save_records(
    records: Sequence[MomentRecord],
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    separator: str = "|",
) -> None:
    """Write records in the format read by :func:`load_labeled`."""
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    cols = ["id", "text", "agency", "social", "concepts"]
    if "profile_id" in schema:
        cols.append("profile_id")

    def fmt_label(v):
        return "" if v is None else ("yes" if v else "no")

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([schema[c] for c in cols])
        for r in records:
            concepts = "" if not r.concepts else separator.join(c for c in CONCEPTS if c in r.concepts)
            row = [r.id, r.text, fmt_label(r.agency), fmt_label(r.social), concepts]
            if "profile_id" in schema:
                row.append(r.profile_id or "")
            writer.writerow(row)


def _parse_age(raw: str) -> float | None:
    raw = (raw or "").strip()
    if not raw or raw.lower() in {"nan", "na", "none"}:
        return None
    try:
        age = float(raw)
    except ValueError:
        return None
    if not math.isfinite(age) or age < 0:
        return None
    return age


def load_profiles(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
) -> dict[str, ProfileRecord]:
    """Read writer profiles keyed by profile id.

    Only the id column is required; absent or unparseable ages become missing.
    """
    schema = dict(DEFAULT_PROFILE_SCHEMA if schema is None else schema)
    fh, reader = _open_rows(path, [schema["profile_id"]])
    header = set(reader.fieldnames or [])
    profiles: dict[str, ProfileRecord] = {}
    bad_ages = 0
    with fh:
        for row in reader:
            pid = row[schema["profile_id"]].strip()
            values: dict = {}
            for name in PROFILE_FIELDS:
                col = schema.get(name)
                raw = row[col] if col in header else ""
                if name == "age":
                    values["age"] = _parse_age(raw)
                    if values["age"] is None and (raw or "").strip().lower() not in {"", "nan", "na", "none"}:
                        bad_ages += 1
                else:
                    raw = (raw or "").strip()
                    values[name] = raw if raw and raw.lower() != "nan" else None
            profiles.setdefault(pid, ProfileRecord(profile_id=pid, **values))
    if bad_ages:
        log.warning("%d unparseable ages treated as missing in %s", bad_ages, path)
    return profiles


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of gold record ids to ``k`` cross-validation folds."""

    k: int
    assignments: Mapping[str, int] = field(default_factory=dict)

    def test_ids(self, fold: int) -> list[str]:
        return [rid for rid, f in self.assignments.items() if f == fold]

    def train_ids(self, fold: int) -> list[str]:
        return [rid for rid, f in self.assignments.items() if f != fold]

    def fold_sizes(self) -> list[int]:
        sizes = [0] * self.k
        for f in self.assignments.values():
            sizes[f] += 1
        return sizes

    def validate(self, records: Sequence[MomentRecord]) -> None:
        gold = {r.id for r in records if r.is_gold}
        pseudo = {r.id for r in records if not r.is_gold}
        if set(self.assignments) != gold:
            raise DataError("fold plan does not cover exactly the gold records")
        if pseudo & set(self.assignments):
            raise DataError("pseudo-labeled ids present in fold plan")
        if any(not 0 <= f < self.k for f in self.assignments.values()):
            raise DataError("fold index out of range")


def _stratum_key(record: MomentRecord, stratify_on: str | None):
    if stratify_on is None:
        return None
    value = record.label(stratify_on)
    if isinstance(value, frozenset):
        return tuple(c for c in CONCEPTS if c in value)
    return value


def make_folds(
    records: Sequence[MomentRecord],
    k: int = 10,
    seed: int = 0,
    stratify_on: str | None = None,
) -> FoldPlan:
    """Deal gold records into ``k`` folds, stratified on one label.

    Each stratum is shuffled and dealt round-robin; the dealing position
    carries over between strata so fold sizes differ by at most one.
    """
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    gold = [r for r in records if r.is_gold]
    if len(gold) < k:
        raise DataError(f"need at least {k} gold records for {k} folds, got {len(gold)}")
    strata: dict = defaultdict(list)
    for r in gold:
        strata[_stratum_key(r, stratify_on)].append(r.id)
    if stratify_on is not None:
        small = {key: len(ids) for key, ids in strata.items() if len(ids) < k}
        if small:
            raise DataError(f"strata with fewer than {k} gold records: {small}")
    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}
    pos = 0
    for key in sorted(strata, key=repr):
        ids = sorted(strata[key])
        for idx in rng.permutation(len(ids)):
            assignments[ids[idx]] = pos % k
            pos += 1
    return FoldPlan(k=k, assignments=assignments)


def split_train_test(
    records: Sequence[MomentRecord],
    train_fraction: float = 0.67,
    seed: int = 0,
) -> tuple[list[MomentRecord], list[MomentRecord]]:
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    if not records:
        raise DataError("cannot split an empty record list")
    n = len(records)
    n_train = int(math.floor(train_fraction * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    train = [records[i] for i in sorted(perm[:n_train])]
    test = [records[i] for i in sorted(perm[n_train:])]
    return train, test


def filter_single_concept(records: Iterable[MomentRecord]) -> list[MomentRecord]:
    return [r for r in records if r.concepts is not None and len(r.concepts) == 1]


def single_concept(record: MomentRecord) -> str:
    (name,) = record.concepts
    return name


def with_pseudo_labels(record: MomentRecord, **labels) -> MomentRecord:
    return replace(record, label_source=LabelSource.PSEUDO, **labels)


@dataclass(frozen=True)
class GroupStats:
    group: str
    count: int
    p_agency: float
    p_social: float


def group_label_stats(
    records: Sequence[MomentRecord],
    profiles: Mapping[str, ProfileRecord],
    grouping: str | Callable[[MomentRecord, ProfileRecord | None], str] = "age_bin",
    groups: Sequence[str] | None = None,
) -> list[GroupStats]:
    """Per-group counts and positive rates of the agency and social labels.

    ``grouping="age_bin"`` groups by the writer's age bin. Groups listed in
    ``groups`` but without members are reported with count 0.
    """
    if grouping == "age_bin":
        from .profile import AGE_BINS, age_bin

        def grouping(rec, prof):
            return age_bin(prof.age if prof is not None else None)

        if groups is None:
            groups = AGE_BINS
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for r in records:
        g = grouping(r, profiles.get(r.profile_id) if r.profile_id else None)
        c = counts[g]
        c[0] += 1
        c[1] += bool(r.agency)
        c[2] += bool(r.social)
    order = list(groups) if groups is not None else []
    order += sorted(g for g in counts if g not in order)
    out = []
    for g in order:
        n, a, s = counts.get(g, (0, 0, 0))
        out.append(GroupStats(g, n, a / n if n else 0.0, s / n if n else 0.0))
    return out
