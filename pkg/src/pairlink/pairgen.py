"""Comparison-pattern construction from raw person records.

Candidate pairs come from six blocking criteria over phonetic name codes,
date-of-birth components, and gender; each selected pair is then scored
attribute by attribute into the agreement-pattern layout that the rest of
the pipeline consumes. Name components get a string similarity in [0, 1],
everything else an exact 0/1 comparison, and absent attributes yield absent
scores rather than guesses.

The phonetic code (Soundex) and the name scorer (Jaro-Winkler) are
registry-pluggable; both defaults are stated assumptions of this
implementation, chosen for ubiquity, not facts about how any particular
published corpus was produced.
"""

from __future__ import annotations

import unicodedata
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import ConfigError, InvalidInputError, ParseError, ValidationError
from .ingest import ComparisonVector
from .table import PartitionedTable

__all__ = [
    "RawRecord",
    "RAW_COLUMNS",
    "normalize_name",
    "soundex",
    "jaro",
    "jaro_winkler",
    "phonetic_code",
    "agreement_score",
    "build_comparison_vector",
    "generate_candidate_pairs",
    "load_raw_records",
    "PHONETIC_ALGORITHMS",
    "NAME_SIMILARITIES",
]

RAW_COLUMNS = (
    "id",
    "first_name_1",
    "first_name_2",
    "last_name_1",
    "last_name_2",
    "gender",
    "birth_day",
    "birth_month",
    "birth_year",
    "postal_code",
)


@dataclass(slots=True, frozen=True)
class RawRecord:
    """One person record as it arrives from a registry extract."""

    id: int
    first_name_1: str | None = None
    first_name_2: str | None = None
    last_name_1: str | None = None
    last_name_2: str | None = None
    gender: str | None = None
    birth_day: int | None = None
    birth_month: int | None = None
    birth_year: int | None = None
    postal_code: str | None = None

    def __post_init__(self):
        if self.birth_day is not None and not 1 <= self.birth_day <= 31:
            raise ValidationError(f"birth_day {self.birth_day} outside 1..31")
        if self.birth_month is not None and not 1 <= self.birth_month <= 12:
            raise ValidationError(f"birth_month {self.birth_month} outside 1..12")
        if self.birth_year is not None and not 1000 <= self.birth_year <= 9999:
            raise ValidationError(f"birth_year {self.birth_year} is not a 4-digit year")


def normalize_name(name: str | None) -> str:
    """Uppercase, fold diacritics to ASCII, drop everything but letters."""
    if name is None:
        return ""
    folded = unicodedata.normalize("NFKD", name)
    return "".join(ch for ch in folded.upper() if "A" <= ch <= "Z")


# Soundex digit classes; vowels and Y separate, H and W are transparent.
_SOUNDEX_DIGITS = {}
for _letters, _digit in (
    ("BFPV", "1"),
    ("CGJKQSXZ", "2"),
    ("DT", "3"),
    ("L", "4"),
    ("MN", "5"),
    ("R", "6"),
):
    for _ch in _letters:
        _SOUNDEX_DIGITS[_ch] = _digit


def soundex(name: str | None) -> str | None:
    """American Soundex code (letter + 3 digits), or None for empty names.

    Letters coding the same digit collapse when adjacent or separated only
    by H or W; vowels (and Y) break such runs without coding a digit.
    """
    s = normalize_name(name)
    if not s:
        return None
    first = s[0]
    last_code = _SOUNDEX_DIGITS.get(first, "")
    digits = []
    for ch in s[1:]:
        if ch in "HW":
            continue
        code = _SOUNDEX_DIGITS.get(ch, "")
        if not code:
            last_code = ""
            continue
        if code != last_code:
            digits.append(code)
            last_code = code
            if len(digits) == 3:
                break
    return first + "".join(digits).ljust(3, "0")


def jaro(a: str, b: str) -> float:
    """Jaro similarity of two strings, in [0, 1]."""
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(max(la, lb) // 2 - 1, 0)
    match_a = [False] * la
    match_b = [False] * lb
    m = 0
    for i, ca in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb, i + window + 1)
        for j in range(lo, hi):
            if not match_b[j] and b[j] == ca:
                match_a[i] = match_b[j] = True
                m += 1
                break
    if m == 0:
        return 0.0
    t = 0
    k = 0
    for i in range(la):
        if match_a[i]:
            while not match_b[k]:
                k += 1
            if a[i] != b[k]:
                t += 1
            k += 1
    t //= 2
    return (m / la + m / lb + (m - t) / m) / 3.0


def jaro_winkler(a: str, b: str, prefix_scale: float = 0.1, max_prefix: int = 4) -> float:
    """Jaro similarity boosted toward 1.0 for strings sharing a prefix."""
    j = jaro(a, b)
    l = 0
    for ca, cb in zip(a, b):
        if ca != cb or l == max_prefix:
            break
        l += 1
    return j + l * prefix_scale * (1.0 - j)


PHONETIC_ALGORITHMS: dict[str, Callable[[str | None], str | None]] = {"soundex": soundex}
NAME_SIMILARITIES: dict[str, Callable[[str, str], float]] = {"jaro-winkler": jaro_winkler}


def phonetic_code(name: str | None, algorithm: str = "soundex") -> str | None:
    """Phonetic code of a name, or None when nothing survives normalization."""
    try:
        fn = PHONETIC_ALGORITHMS[algorithm]
    except KeyError:
        raise ConfigError(
            f"unknown phonetic algorithm {algorithm!r}; choose from {sorted(PHONETIC_ALGORITHMS)}"
        ) from None
    return fn(name)


def _normalize_exact(value) -> str:
    if value is None:
        return ""
    return str(value).strip().upper()


def agreement_score(a, b, kind: str = "name", name_sim: str = "jaro-winkler") -> float | None:
    """Score agreement of two attribute values, absent if either is absent.

    kind="exact" compares normalized values for equality (0.0 or 1.0);
    kind="name" runs the configured string similarity over normalized names
    and equals 1.0 exactly when they normalize identically.
    """
    if kind == "exact":
        na, nb = _normalize_exact(a), _normalize_exact(b)
        if not na or not nb:
            return None
        return 1.0 if na == nb else 0.0
    if kind == "name":
        na, nb = normalize_name(a), normalize_name(b)
        if not na or not nb:
            return None
        if na == nb:
            return 1.0
        try:
            sim = NAME_SIMILARITIES[name_sim]
        except KeyError:
            raise ConfigError(
                f"unknown name similarity {name_sim!r}; choose from {sorted(NAME_SIMILARITIES)}"
            ) from None
        return sim(na, nb)
    raise ConfigError(f"unknown agreement kind {kind!r}; use 'name' or 'exact'")


def build_comparison_vector(
    r1: RawRecord, r2: RawRecord, name_sim: str = "jaro-winkler"
) -> ComparisonVector:
    """Agreement pattern for one record pair; ids ordered, label left absent."""
    a, b = (r1, r2) if r1.id < r2.id else (r2, r1)
    return ComparisonVector(
        id_1=a.id,
        id_2=b.id,
        fn1=agreement_score(a.first_name_1, b.first_name_1, "name", name_sim),
        fn2=agreement_score(a.first_name_2, b.first_name_2, "name", name_sim),
        ln1=agreement_score(a.last_name_1, b.last_name_1, "name", name_sim),
        ln2=agreement_score(a.last_name_2, b.last_name_2, "name", name_sim),
        gender=agreement_score(a.gender, b.gender, "exact"),
        bg=agreement_score(a.birth_day, b.birth_day, "exact"),
        bm=agreement_score(a.birth_month, b.birth_month, "exact"),
        by=agreement_score(a.birth_year, b.birth_year, "exact"),
        plz=agreement_score(a.postal_code, b.postal_code, "exact"),
    )


def _criterion_keys(record: RawRecord, phonetic: str):
    """Blocking keys for one record under the six criteria (None = not blockable)."""
    sx_fn = phonetic_code(record.first_name_1, phonetic)
    sx_ln = phonetic_code(record.last_name_1, phonetic)
    bd, bm, by = record.birth_day, record.birth_month, record.birth_year
    gender = _normalize_exact(record.gender) or None
    full_dob = (bd, bm, by) if None not in (bd, bm, by) else None
    return (
        (sx_fn, sx_ln) + full_dob if (sx_fn and sx_ln and full_dob) else None,
        (sx_fn, bd) if (sx_fn and bd is not None) else None,
        (sx_fn, bm) if (sx_fn and bm is not None) else None,
        (sx_fn, by) if (sx_fn and by is not None) else None,
        full_dob,
        (sx_ln, gender) if (sx_ln and gender) else None,
    )


def generate_candidate_pairs(
    records: PartitionedTable | Sequence[RawRecord] | Iterable[RawRecord],
    phonetic: str = "soundex",
) -> set[tuple[int, int]]:
    """Union of within-block pairs over the six criteria, deduplicated.

    The criteria pair two records when: (1) both name codes and the full
    birth date agree; (2) first-name code and birth day; (3) first-name code
    and birth month; (4) first-name code and birth year; (5) the full birth
    date; (6) last-name code and gender. Records missing a criterion's
    fields simply never enter that criterion's blocks.
    """
    if isinstance(records, PartitionedTable):
        rows = records.to_list()
    else:
        rows = list(records)
    seen_ids = set()
    for r in rows:
        if r.id in seen_ids:
            raise InvalidInputError(f"duplicate record id {r.id}")
        seen_ids.add(r.id)

    keyed = [(r.id, _criterion_keys(r, phonetic)) for r in rows]
    pairs: set[tuple[int, int]] = set()
    for criterion in range(6):
        blocks: dict = defaultdict(list)
        for rid, keys in keyed:
            key = keys[criterion]
            if key is not None:
                blocks[key].append(rid)
        for members in blocks.values():
            if len(members) < 2:
                continue
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    x, y = members[i], members[j]
                    pairs.add((x, y) if x < y else (y, x))
    return pairs


def _parse_optional_int(token: str, field_name: str, line_number: int, path: str) -> int | None:
    if token == "" or token == "?":
        return None
    try:
        return int(token)
    except ValueError:
        raise ParseError(
            f"{field_name} must be an integer, got {token!r}",
            path=path,
            line_number=line_number,
        ) from None


def load_raw_records(path: str | Path) -> list[RawRecord]:
    """Read raw person records from CSV (header must be the RAW_COLUMNS)."""
    path = Path(path)
    records = []
    with open(path, "rt", encoding="utf-8") as fh:
        header = [t.strip() for t in fh.readline().strip().split(",")]
        if tuple(header) != RAW_COLUMNS:
            raise ParseError(
                f"expected header {','.join(RAW_COLUMNS)}, got {','.join(header)}",
                path=str(path),
                line_number=1,
            )
        for line_number, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            tokens = [t.strip() for t in line.rstrip("\r\n").split(",")]
            if len(tokens) != len(RAW_COLUMNS):
                raise ParseError(
                    f"expected {len(RAW_COLUMNS)} fields, got {len(tokens)}",
                    path=str(path),
                    line_number=line_number,
                )
            text = [t if t not in ("", "?") else None for t in tokens[1:6]]
            try:
                rid = int(tokens[0])
            except ValueError:
                raise ParseError(
                    f"id must be an integer, got {tokens[0]!r}",
                    path=str(path),
                    line_number=line_number,
                ) from None
            try:
                records.append(
                    RawRecord(
                        id=rid,
                        first_name_1=text[0],
                        first_name_2=text[1],
                        last_name_1=text[2],
                        last_name_2=text[3],
                        gender=text[4],
                        birth_day=_parse_optional_int(tokens[6], "birth_day", line_number, str(path)),
                        birth_month=_parse_optional_int(tokens[7], "birth_month", line_number, str(path)),
                        birth_year=_parse_optional_int(tokens[8], "birth_year", line_number, str(path)),
                        postal_code=tokens[9] if tokens[9] not in ("", "?") else None,
                    )
                )
            except ValidationError as exc:
                raise ValidationError(f"{path}:{line_number}: {exc}") from None
    return records
