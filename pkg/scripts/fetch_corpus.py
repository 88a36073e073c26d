#!/usr/bin/env python3
"""Download the public record-linkage comparison-pattern corpus.

Fetches the UCI ML repository's "Record Linkage Comparison Patterns"
archive (10 block files, 5,749,132 labeled comparison patterns from an
epidemiological cancer-registry deduplication) and unpacks it so that
block_*.csv files sit directly in the destination directory. Point
PAIRLINK_CORPUS_DIR at that directory to enable the corpus-backed
acceptance tests.

Usage: python3 scripts/fetch_corpus.py [DEST_DIR]
"""

from __future__ import annotations

import gzip
import shutil
import sys
import urllib.request
import zipfile
from pathlib import Path

URL = "https://archive.ics.uci.edu/static/public/210/record+linkage+comparison+patterns.zip"


def download(url: str, dest: Path) -> Path:
    archive = dest / "corpus.zip"
    if archive.exists():
        print(f"using existing {archive}")
        return archive
    print(f"downloading {url}")
    with urllib.request.urlopen(url) as response, open(archive, "wb") as out:
        shutil.copyfileobj(response, out)
    print(f"saved {archive} ({archive.stat().st_size:,} bytes)")
    return archive


def unpack_nested(dest: Path) -> None:
    """Extract zip/gz members until the block CSVs lie flat in dest."""
    for _ in range(3):  # the archive nests at most a couple of levels
        progressed = False
        for inner in sorted(dest.rglob("*.zip")):
            if inner.name == "corpus.zip":
                continue
            with zipfile.ZipFile(inner) as zf:
                for member in zf.namelist():
                    name = Path(member).name
                    if not name:
                        continue
                    target = dest / name
                    with zf.open(member) as src, open(target, "wb") as out:
                        shutil.copyfileobj(src, out)
            inner.unlink()
            progressed = True
        for inner in sorted(dest.rglob("block_*.csv.gz")):
            target = dest / inner.name[: -len(".gz")]
            with gzip.open(inner, "rb") as src, open(target, "wb") as out:
                shutil.copyfileobj(src, out)
            inner.unlink()
            progressed = True
        if not progressed:
            break


def main() -> int:
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("corpus")
    dest.mkdir(parents=True, exist_ok=True)
    archive = download(URL, dest)
    with zipfile.ZipFile(archive) as zf:
        zf.extractall(dest)
    unpack_nested(dest)
    blocks = sorted(dest.glob("block_*.csv*"))
    if not blocks:
        print("no block_*.csv files found after extraction", file=sys.stderr)
        return 1
    print(f"{len(blocks)} block files in {dest}:")
    for b in blocks:
        print(f"  {b.name}")
    print(f'\nexport PAIRLINK_CORPUS_DIR="{dest.resolve()}"')
    return 0


if __name__ == "__main__":
    sys.exit(main())
