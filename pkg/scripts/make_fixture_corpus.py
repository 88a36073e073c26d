#!/usr/bin/env python3
"""Regenerate the committed test fixtures (seeded, fully deterministic).

Produces tests/fixtures/corpus_1k/ (1,000 comparison patterns over three
block files, one gzipped) and tests/fixtures/raw_people.csv (raw person
records for the pairgen subcommand). The corpus mimics the published data's
shape: sparse second-name columns that fail the 20% missing-value filter,
a few rows too empty to pass the row filter, quoted and padded tokens, and
"?" as the missing marker.
"""

from __future__ import annotations

import gzip
import random
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
HEADER = (
    '"id_1","id_2","cmp_fname_c1","cmp_fname_c2","cmp_lname_c1","cmp_lname_c2",'
    '"cmp_sex","cmp_bd","cmp_bm","cmp_by","cmp_plz","is_match"'
)
FILE_SIZES = {"block_01.csv": 400, "block_02.csv": 350, "block_03.csv.gz": 250}
SEED = 20240811


def name_score(rng: random.Random, positive: bool) -> str:
    if positive:
        if rng.random() < 0.55:
            return "1"
        return repr(rng.uniform(0.82, 1.0))
    if rng.random() < 0.30:
        return "0"
    return repr(rng.uniform(0.0, 0.65))


def binary_score(rng: random.Random, p_agree: float) -> str:
    return "1" if rng.random() < p_agree else "0"


def maybe_missing(rng: random.Random, token: str, p_missing: float) -> str:
    return "?" if rng.random() < p_missing else token


def make_row(rng: random.Random, id_1: int, id_2: int) -> str:
    positive = rng.random() < 0.12
    sparse = rng.random() < 0.03
    if sparse:
        # too empty to pass the 3-present row filter on the retained columns
        fields = [name_score(rng, positive), "?", "?", "?",
                  binary_score(rng, 0.5), "?", "?", "?", "?"]
    else:
        fields = [
            maybe_missing(rng, name_score(rng, positive), 0.02),
            maybe_missing(rng, name_score(rng, positive), 0.72),
            maybe_missing(rng, name_score(rng, positive), 0.03),
            maybe_missing(rng, name_score(rng, positive), 0.75),
            maybe_missing(rng, binary_score(rng, 0.98 if positive else 0.55), 0.01),
            maybe_missing(rng, binary_score(rng, 0.95 if positive else 0.04), 0.02),
            maybe_missing(rng, binary_score(rng, 0.96 if positive else 0.08), 0.02),
            maybe_missing(rng, binary_score(rng, 0.97 if positive else 0.05), 0.02),
            maybe_missing(rng, binary_score(rng, 0.92 if positive else 0.02), 0.04),
        ]
    tokens = [str(id_1), str(id_2), *fields, "TRUE" if positive else "FALSE"]
    # sprinkle the quoting and padding quirks real exports carry
    if rng.random() < 0.02:
        tokens[2] = f'"{tokens[2]}"'
    if rng.random() < 0.02:
        tokens[0] = f" {tokens[0]}"
    return ",".join(tokens)


def write_corpus() -> None:
    rng = random.Random(SEED)
    ids = iter(rng.sample(range(10_000, 100_000), 2 * sum(FILE_SIZES.values())))
    out_dir = FIXTURES / "corpus_1k"
    out_dir.mkdir(parents=True, exist_ok=True)
    for file_name, n_rows in FILE_SIZES.items():
        lines = [HEADER]
        lines.extend(make_row(rng, next(ids), next(ids)) for _ in range(n_rows))
        data = ("\n".join(lines) + "\n").encode("utf-8")
        path = out_dir / file_name
        if file_name.endswith(".gz"):
            with open(path, "wb") as f:
                with gzip.GzipFile(filename="", mode="wb", fileobj=f, mtime=0) as gz:
                    gz.write(data)
        else:
            path.write_bytes(data)
        print(f"wrote {path} ({n_rows} rows)")


PEOPLE = [
    # a Soundex cluster (MEIER/MEYER/MAIER -> M600) sharing gender F
    (1, "ANNA", "", "MEIER", "", "F", 3, 5, 1971, "04177"),
    (2, "ANNA", "LUISE", "MEYER", "", "F", 3, 5, 1971, "04177"),
    (3, "ANNE", "", "MAIER", "", "F", 14, 9, 1983, "21073"),
    # same full date of birth, unrelated names (criterion: full DOB)
    (4, "KURT", "", "SCHNEIDER", "", "M", 3, 5, 1971, "80331"),
    (5, "HEIKE", "", "WAGNER", "", "F", 3, 5, 1971, ""),
    # first-name code + one date part each
    (6, "ROBERT", "", "FISCHER", "", "M", 3, 11, 1954, "50667"),
    (7, "RUPERT", "", "WEBER", "", "M", 3, 2, 1962, "50667"),
    (8, "ROBERTA", "", "BECKER", "", "F", 22, 5, 1954, "10115"),
    # umlaut folding meets Soundex (MUELLER vs MULLER)
    (9, "JOERG", "", "MÜLLER", "", "M", 7, 1, 1948, "01067"),
    (10, "JORG", "", "MULLER", "", "M", 7, 1, 1948, "01067"),
    # holes everywhere: missing names, missing date parts
    (11, "", "", "HOFFMANN", "", "F", 9, 4, 1990, "34117"),
    (12, "PETRA", "", "", "", "F", None, 4, 1990, "34117"),
    (13, "PETER", "KLAUS", "SCHULZ", "", "M", 28, None, 1975, ""),
    (14, "PETRO", "", "SCHOLZ", "", "M", 28, 12, None, "60311"),
    # plain singletons that should pair with nobody
    (15, "XENIA", "", "ZIMMERMANN", "", "F", 17, 7, 2001, "99084"),
    (16, "OTTO", "", "KRAUSE", "", "M", 30, 10, 1939, "18055"),
]


def write_people() -> None:
    header = ("id,first_name_1,first_name_2,last_name_1,last_name_2,"
              "gender,birth_day,birth_month,birth_year,postal_code")
    lines = [header]
    for row in PEOPLE:
        lines.append(",".join("" if v is None else str(v) for v in row))
    path = FIXTURES / "raw_people.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(PEOPLE)} records)")


if __name__ == "__main__":
    write_corpus()
    write_people()
