#!/usr/bin/env python3
"""Generate a full-scale synthetic stand-in for the public corpus.

Emits ten block files with exactly 5,749,132 comparison patterns, of which
20,931 are matches, mirroring the published corpus's shape: near-total
missingness on the second name components, rare underfilled rows, "?" as
the missing marker, and agreement-score distributions under which matches
are nearly separable from blocked non-matches. Useful for exercising the
corpus-scale acceptance tests when the real download is unavailable; the
published metric values themselves can only come from the real data.

Usage: python3 scripts/make_synthetic_corpus.py [DEST_DIR] [--seed N]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

TOTAL_ROWS = 5_749_132
TOTAL_POSITIVES = 20_931
N_FILES = 10
HEADER = (
    '"id_1","id_2","cmp_fname_c1","cmp_fname_c2","cmp_lname_c1","cmp_lname_c2",'
    '"cmp_sex","cmp_bd","cmp_bm","cmp_by","cmp_plz","is_match"'
)


def spread(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def name_tokens(rng, pos, *, p_missing_pos, p_missing_neg, p_one_pos, p_one_neg,
                p_zero_neg, lo_pos=0.55, hi_pos=0.995, lo_neg=0.0, hi_neg=0.72):
    """Token array for one fractional name-score column."""
    n = len(pos)
    u = rng.random(n)
    frac = np.where(pos, lo_pos + u * (hi_pos - lo_pos), lo_neg + u * (hi_neg - lo_neg))
    tokens = np.char.mod("%.3f", frac)
    roll = rng.random(n)
    one = np.where(pos, roll < p_one_pos, roll < p_one_neg)
    zero = ~pos & ~one & (roll > 1 - p_zero_neg)
    tokens[one] = "1"
    tokens[zero] = "0"
    missing = rng.random(n) < np.where(pos, p_missing_pos, p_missing_neg)
    tokens[missing] = "?"
    return tokens


def binary_tokens(rng, pos, p_agree_pos, p_agree_neg, p_missing):
    n = len(pos)
    agree = rng.random(n) < np.where(pos, p_agree_pos, p_agree_neg)
    tokens = np.where(agree, "1", "0").astype("U5")
    if p_missing:
        tokens[rng.random(n) < p_missing] = "?"
    return tokens


def make_file(rng, n_rows: int, n_pos: int) -> list[str]:
    pos = np.zeros(n_rows, dtype=bool)
    pos[:n_pos] = True
    rng.shuffle(pos)

    # a sliver of non-matches that look like matches keeps precision honest
    hard = ~pos & (rng.random(n_rows) < 0.002)
    pos_like = pos | hard

    id_1 = rng.integers(1, 100_000_000, n_rows)
    id_2 = rng.integers(1, 100_000_000, n_rows)
    id_2[id_2 == id_1] += 1

    # Blocked non-matches mostly share a phonetically equal first name and
    # often gender, but rarely agree on the remaining fields all at once;
    # matches agree nearly everywhere.
    cols = [
        id_1.astype("U9"),
        id_2.astype("U9"),
        name_tokens(rng, pos_like, p_missing_pos=0.005, p_missing_neg=0.01,
                    p_one_pos=0.965, p_one_neg=0.62, p_zero_neg=0.0,
                    lo_pos=0.6, lo_neg=0.1, hi_neg=0.8),
        name_tokens(rng, pos_like, p_missing_pos=0.988, p_missing_neg=0.99,
                    p_one_pos=0.9, p_one_neg=0.05, p_zero_neg=0.3),
        name_tokens(rng, pos_like, p_missing_pos=0.004, p_missing_neg=0.01,
                    p_one_pos=0.95, p_one_neg=0.08, p_zero_neg=0.35,
                    lo_pos=0.5, hi_neg=0.7),
        name_tokens(rng, pos_like, p_missing_pos=0.988, p_missing_neg=0.99,
                    p_one_pos=0.85, p_one_neg=0.05, p_zero_neg=0.3),
        binary_tokens(rng, pos_like, 0.998, 0.955, 0.0),
        binary_tokens(rng, pos_like, 0.996, 0.22, 0.002),
        binary_tokens(rng, pos_like, 0.997, 0.49, 0.002),
        binary_tokens(rng, pos_like, 0.997, 0.22, 0.002),
        binary_tokens(rng, pos, 0.985, 0.005, 0.005),
    ]

    # a few rows too sparse to pass the 3-present row filter
    sparse = rng.random(n_rows) < 0.0015
    for c in cols[2:6] + cols[7:]:
        c[sparse] = "?"

    label = np.where(pos, "TRUE", "FALSE")
    return [",".join(row) for row in zip(*cols, label)]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dest", nargs="?", default="synthetic_corpus")
    parser.add_argument("--seed", type=int, default=210)
    args = parser.parse_args()

    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    rows_per_file = spread(TOTAL_ROWS, N_FILES)
    pos_per_file = spread(TOTAL_POSITIVES, N_FILES)
    for i, (n_rows, n_pos) in enumerate(zip(rows_per_file, pos_per_file), start=1):
        lines = make_file(rng, n_rows, n_pos)
        path = dest / f"block_{i}.csv"
        with open(path, "w", encoding="utf-8") as out:
            out.write(HEADER + "\n")
            out.write("\n".join(lines))
            out.write("\n")
        print(f"wrote {path} ({n_rows:,} rows, {n_pos:,} matches)")
    print(f"total: {TOTAL_ROWS:,} rows, {TOTAL_POSITIVES:,} matches")
    print(f'\nexport PAIRLINK_CORPUS_DIR="{dest.resolve()}"')
    return 0


if __name__ == "__main__":
    sys.exit(main())
