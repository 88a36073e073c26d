"""Comparison-pattern corpus ingestion.

Reads the block CSV files (plain or gzip) containing one comparison pattern
per line, aggregates them in lexicographic file-name order into a single
:class:`~pairlink.table.PartitionedTable` of :class:`ComparisonVector` rows,
and records a :class:`CorpusManifest` of what was read.

The expected record layout is two record identifiers, nine agreement scores,
and a boolean match label. Name-component scores are reals in [0, 1]; the
gender, date, and postal scores are exactly 0 or 1. Header names may use
either the short attribute names (fn1, bg, ...) or the published corpus
header names (cmp_fname_c1, cmp_bd, ...); a custom header mapping can extend
or override these aliases.
"""

from __future__ import annotations

import gzip
import hashlib
import shutil
import zipfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Mapping

from .errors import (
    CorpusNotFoundError,
    ExtractionError,
    ParseError,
    SchemaError,
    ValidationError,
)
from .table import PartitionedTable

__all__ = [
    "COLUMNS",
    "SCORE_COLUMNS",
    "NAME_SCORE_COLUMNS",
    "BINARY_SCORE_COLUMNS",
    "HEADER_ALIASES",
    "ComparisonVector",
    "CorpusManifest",
    "parse_row",
    "serialize_row",
    "resolve_schema",
    "load_corpus",
    "extract_archive",
]

# Canonical column order: ids, name-component scores, exact-agreement scores, label.
COLUMNS = ("id_1", "id_2", "fn1", "fn2", "ln1", "ln2", "gender", "bg", "bm", "by", "plz", "is_match")
NAME_SCORE_COLUMNS = ("fn1", "fn2", "ln1", "ln2")
BINARY_SCORE_COLUMNS = ("gender", "bg", "bm", "by", "plz")
SCORE_COLUMNS = NAME_SCORE_COLUMNS + BINARY_SCORE_COLUMNS

# Published corpus header names accepted out of the box.
HEADER_ALIASES = {
    "cmp_fname_c1": "fn1",
    "cmp_fname_c2": "fn2",
    "cmp_lname_c1": "ln1",
    "cmp_lname_c2": "ln2",
    "cmp_sex": "gender",
    "cmp_bd": "bg",
    "cmp_bm": "bm",
    "cmp_by": "by",
    "cmp_plz": "plz",
}

DEFAULT_GLOB = "block_*.csv*"
DEFAULT_MISSING_TOKEN = "?"


@dataclass(slots=True, eq=True)
class ComparisonVector:
    """Agreement scores for one candidate record pair, plus its match label.

    Absent scores are None. Name-component scores (fn1, fn2, ln1, ln2) are
    reals in [0, 1]; gender/date/postal scores are exactly 0.0 or 1.0. The
    label is None only for freshly generated, not-yet-labeled pairs.
    """

    id_1: int
    id_2: int
    fn1: float | None = None
    fn2: float | None = None
    ln1: float | None = None
    ln2: float | None = None
    gender: float | None = None
    bg: float | None = None
    bm: float | None = None
    by: float | None = None
    plz: float | None = None
    is_match: bool | None = None

    def __post_init__(self):
        if self.id_1 == self.id_2:
            raise ValidationError(f"record pair ids must differ, both are {self.id_1}")
        for name in NAME_SCORE_COLUMNS:
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} score {v!r} outside [0, 1]")
        for name in BINARY_SCORE_COLUMNS:
            v = getattr(self, name)
            if v is not None and v != 0.0 and v != 1.0:
                raise ValidationError(f"{name} score {v!r} must be exactly 0 or 1")

    def score(self, column: str) -> float | None:
        return getattr(self, column)


@dataclass(slots=True)
class CorpusManifest:
    """What the loader read: file names, per-file row counts, schema identity."""

    file_names: tuple[str, ...]
    file_rows: tuple[int, ...]
    total_rows: int
    columns: tuple[str, ...]
    header_fingerprint: str

    def __post_init__(self):
        if sum(self.file_rows) != self.total_rows:
            raise ValidationError(
                f"per-file counts sum to {sum(self.file_rows)}, manifest says {self.total_rows}"
            )

    def to_text(self) -> str:
        lines = [
            "manifest_version=1",
            f"total_rows={self.total_rows}",
            f"columns={','.join(self.columns)}",
            f"header_fingerprint={self.header_fingerprint}",
            f"file_count={len(self.file_names)}",
        ]
        for i, (name, rows) in enumerate(zip(self.file_names, self.file_rows)):
            lines.append(f"file.{i}.name={name}")
            lines.append(f"file.{i}.rows={rows}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CorpusManifest":
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            kv[key] = value
        count = int(kv["file_count"])
        return cls(
            file_names=tuple(kv[f"file.{i}.name"] for i in range(count)),
            file_rows=tuple(int(kv[f"file.{i}.rows"]) for i in range(count)),
            total_rows=int(kv["total_rows"]),
            columns=tuple(kv["columns"].split(",")),
            header_fingerprint=kv["header_fingerprint"],
        )


def _clean_token(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == '"' and token[-1] == '"':
        token = token[1:-1].strip()
    return token


def resolve_schema(
    header_tokens: list[str] | tuple[str, ...],
    header_map: Mapping[str, str] | None = None,
) -> tuple[str, ...]:
    """Map a header line's column names onto the canonical attribute names.

    Accepts canonical names, built-in aliases, and any caller-supplied
    mapping (which wins over the built-ins). All twelve canonical columns
    must be present exactly once, in any order.
    """
    aliases = dict(HEADER_ALIASES)
    if header_map:
        aliases.update(header_map)
    resolved = []
    for raw in header_tokens:
        name = _clean_token(raw)
        canonical = aliases.get(name, name)
        if canonical not in COLUMNS:
            raise SchemaError(f"unknown column {raw!r} (no alias maps it to a known attribute)")
        resolved.append(canonical)
    missing = [c for c in COLUMNS if c not in resolved]
    if missing:
        raise SchemaError(f"header is missing column(s): {', '.join(missing)}")
    dupes = {c for c in resolved if resolved.count(c) > 1}
    if dupes:
        raise SchemaError(f"header repeats column(s): {', '.join(sorted(dupes))}")
    return tuple(resolved)


def _make_row_parser(
    schema: tuple[str, ...],
    missing_token: str,
) -> Callable[[str, int, str | None], ComparisonVector]:
    """Build the hot-loop parser for one resolved schema.

    Field tokens are split on commas, stripped of surrounding whitespace and
    one layer of double quotes, then converted. Shared token caches intern
    repeated score values, which both speeds up parsing and deduplicates
    float objects across millions of rows.
    """
    n_fields = len(schema)
    field_order = [schema.index(c) for c in COLUMNS]
    kinds = []
    for c in COLUMNS:
        if c in ("id_1", "id_2"):
            kinds.append(0)
        elif c in NAME_SCORE_COLUMNS:
            kinds.append(1)
        elif c in BINARY_SCORE_COLUMNS:
            kinds.append(2)
        else:
            kinds.append(3)
    id_cache: dict[str, int] = {}
    score_cache: dict[str, float] = {"0": 0.0, "1": 1.0, "0.0": 0.0, "1.0": 1.0}
    label_map = {"TRUE": True, "FALSE": False}

    def parse(line: str, line_number: int = 0, path: str | None = None) -> ComparisonVector:
        tokens = line.rstrip("\r\n").split(",")
        if len(tokens) != n_fields:
            raise ParseError(
                f"expected {n_fields} fields, got {len(tokens)}",
                path=path,
                line_number=line_number,
            )
        values: list = [None] * 12
        try:
            for slot, pos in enumerate(field_order):
                token = _clean_token(tokens[pos])
                kind = kinds[slot]
                if kind == 0:
                    v = id_cache.get(token)
                    if v is None:
                        v = int(token)
                        id_cache[token] = v
                    values[slot] = v
                elif kind == 3:
                    flag = label_map.get(token.upper())
                    if flag is None:
                        raise ParseError(
                            f"label must be TRUE or FALSE, got {token!r}",
                            path=path,
                            line_number=line_number,
                        )
                    values[slot] = flag
                elif token == missing_token:
                    values[slot] = None
                else:
                    v = score_cache.get(token)
                    if v is None:
                        v = float(token)
                        score_cache[token] = v
                    values[slot] = v
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line_number=line_number) from None
        try:
            return ComparisonVector(*values)
        except ValidationError as exc:
            raise ValidationError(f"{path or '<input>'}:{line_number}: {exc}") from None

    return parse


def parse_row(
    line: str,
    schema: tuple[str, ...] = COLUMNS,
    missing_token: str = DEFAULT_MISSING_TOKEN,
) -> ComparisonVector:
    """Parse one non-header CSV record into a ComparisonVector."""
    return _make_row_parser(schema, missing_token)(line, 0, None)


def serialize_row(
    vec: ComparisonVector,
    schema: tuple[str, ...] = COLUMNS,
    missing_token: str = DEFAULT_MISSING_TOKEN,
    include_label: bool = True,
) -> str:
    """Canonical CSV line for a ComparisonVector (inverse of parse_row)."""
    out = []
    for col in schema:
        if col == "is_match":
            if not include_label:
                continue
            if vec.is_match is None:
                raise ValidationError("cannot serialize an unlabeled vector with a label column")
            out.append("TRUE" if vec.is_match else "FALSE")
        elif col in ("id_1", "id_2"):
            out.append(str(getattr(vec, col)))
        else:
            v = getattr(vec, col)
            if v is None:
                out.append(missing_token)
            elif v == 0.0:
                out.append("0")
            elif v == 1.0:
                out.append("1")
            else:
                out.append(repr(v))
    return ",".join(out)


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8", errors="strict", newline="")
    return open(path, "rt", encoding="utf-8", errors="strict", newline="")


def _scan_file(path: Path, header_map: Mapping[str, str] | None) -> tuple[tuple[str, ...], int]:
    """Read one file's header and count its non-blank data lines."""
    try:
        with _open_text(path) as fh:
            header_line = fh.readline()
            if not header_line.strip():
                raise SchemaError(f"{path.name}: empty file or blank header line")
            try:
                schema = resolve_schema(header_line.strip().split(","), header_map)
            except SchemaError as exc:
                raise SchemaError(f"{path.name}: {exc}") from None
            count = sum(1 for line in fh if line.strip())
    except UnicodeDecodeError as exc:
        raise ParseError(f"non-UTF-8 byte in input: {exc}", path=str(path)) from None
    return schema, count


def load_corpus(
    directory: str | Path,
    pattern: str = DEFAULT_GLOB,
    *,
    missing_token: str = DEFAULT_MISSING_TOKEN,
    header_map: Mapping[str, str] | None = None,
    partitions: int = 1,
    workers: int = 1,
) -> tuple[PartitionedTable, CorpusManifest]:
    """Aggregate every matching block file into one table of ComparisonVectors.

    Files are read in lexicographic name order and their rows concatenated;
    row ids are assigned in read order. The returned table is deferred: each
    use re-parses the files until `.cache()` pins the rows in memory.
    """
    directory = Path(directory)
    files = sorted(directory.glob(pattern), key=lambda p: p.name)
    files = [p for p in files if p.is_file()]
    if not files:
        raise CorpusNotFoundError(f"no files match {pattern!r} under {directory}")

    schema: tuple[str, ...] | None = None
    first_file = None
    counts = []
    for path in files:
        file_schema, count = _scan_file(path, header_map)
        if schema is None:
            schema, first_file = file_schema, path
        elif file_schema != schema:
            raise SchemaError(
                f"header of {path.name} does not match header of {first_file.name}"
            )
        counts.append(count)

    total = sum(counts)
    fingerprint = hashlib.sha256(",".join(schema).encode()).hexdigest()[:16]
    manifest = CorpusManifest(
        file_names=tuple(p.name for p in files),
        file_rows=tuple(counts),
        total_rows=total,
        columns=schema,
        header_fingerprint=fingerprint,
    )

    parse = _make_row_parser(schema, missing_token)

    def reader() -> Iterator[ComparisonVector]:
        for path in files:
            with _open_text(path) as fh:
                fh.readline()  # header, validated during the scan
                for line_number, line in enumerate(fh, start=2):
                    if not line.strip():
                        continue
                    yield parse(line, line_number, str(path))

    table = PartitionedTable.deferred(reader, total, partitions, workers=workers)
    return table, manifest


def extract_archive(archive: str | Path, dest: str | Path) -> list[Path]:
    """Unpack a zip or gzip container under dest and return the member paths."""
    archive = Path(archive)
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    if zipfile.is_zipfile(archive):
        out = []
        try:
            with zipfile.ZipFile(archive) as zf:
                for info in zf.infolist():
                    if info.is_dir():
                        continue
                    target = dest / info.filename
                    resolved = target.resolve()
                    if not resolved.is_relative_to(dest.resolve()):
                        raise ExtractionError(f"member path escapes destination: {info.filename}")
                    resolved.parent.mkdir(parents=True, exist_ok=True)
                    with zf.open(info) as src, open(resolved, "wb") as dst:
                        shutil.copyfileobj(src, dst)
                    out.append(resolved)
        except zipfile.BadZipFile as exc:
            raise ExtractionError(f"corrupt zip archive {archive.name}: {exc}") from None
        return sorted(out)
    if archive.suffix == ".gz":
        target = dest / archive.name[: -len(".gz")]
        try:
            with gzip.open(archive, "rb") as src, open(target, "wb") as dst:
                shutil.copyfileobj(src, dst)
        except (gzip.BadGzipFile, EOFError, zlib.error) as exc:
            raise ExtractionError(f"corrupt gzip file {archive.name}: {exc}") from None
        return [target]
    raise ExtractionError(f"unsupported archive type: {archive.name}")
