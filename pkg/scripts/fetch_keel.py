#!/usr/bin/env python3
"""Download the 16 KEEL imbalanced benchmark datasets into data/keel/.

Each dataset arrives as a zip holding a single <name>.dat file in KEEL's
@-header format; this script extracts that file and nothing else.  Run it
on a machine with network access, then copy data/keel/ next to the
repository checkout used for testing.  Tests touching these files skip
when they are absent.
"""

import io
import sys
import urllib.error
import urllib.request
import zipfile
from pathlib import Path

DATASETS = (
    "glass1",
    "pima",
    "wisconsin",
    "haberman",
    "vehicle0",
    "yeast3",
    "ecoli3",
    "ecoli-0-1_vs_2-3-5",
    "vowel0",
    "ecoli-0-1_vs_5",
    "yeast-1_vs_7",
    "abalone9-18",
    "flare-F",
    "yeast4",
    "yeast5",
    "abalone19",
)

# KEEL serves the imbalanced collection from a handful of sibling folders;
# try each until one answers
URL_PATTERNS = (
    "https://sci2s.ugr.es/keel/dataset/data/imbalanced/{name}.zip",
    "https://sci2s.ugr.es/keel/keel-dataset/datasets/imbalanced/"
    "imb_IRlowerThan9/{name}.zip",
    "https://sci2s.ugr.es/keel/keel-dataset/datasets/imbalanced/"
    "imb_IRhigherThan9p1/{name}.zip",
    "https://sci2s.ugr.es/keel/keel-dataset/datasets/imbalanced/"
    "imb_IRhigherThan9p2/{name}.zip",
)

OUT_DIR = Path(__file__).resolve().parents[1] / "data" / "keel"


def fetch_one(name: str) -> bool:
    target = OUT_DIR / f"{name}.dat"
    if target.exists():
        print(f"{name}: already present")
        return True
    last_error = None
    for pattern in URL_PATTERNS:
        url = pattern.format(name=name)
        try:
            with urllib.request.urlopen(url, timeout=60) as resp:
                blob = resp.read()
        except (urllib.error.URLError, TimeoutError) as exc:
            last_error = exc
            continue
        try:
            with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                dat_names = [n for n in zf.namelist() if n.endswith(".dat")]
                if not dat_names:
                    last_error = ValueError(f"no .dat member in {url}")
                    continue
                target.write_bytes(zf.read(dat_names[0]))
        except zipfile.BadZipFile as exc:
            last_error = exc
            continue
        print(f"{name}: saved from {url}")
        return True
    print(f"{name}: FAILED ({last_error})", file=sys.stderr)
    return False


def main() -> int:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    failures = sum(not fetch_one(name) for name in DATASETS)
    if failures:
        print(f"{failures} of {len(DATASETS)} datasets missing", file=sys.stderr)
        return 1
    print(f"all {len(DATASETS)} datasets in {OUT_DIR}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
