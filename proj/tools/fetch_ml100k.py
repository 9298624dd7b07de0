#!/usr/bin/env python3
# Copyright 2026 The TriMLP Authors
# SPDX-License-Identifier: Apache-2.0
"""Fetch MovieLens-100K as a tab-separated u.data (user, item, rating, timestamp).

Tries the GroupLens archive first. If that host is unreachable, falls back to
the copy bundled in the pytorch-widedeep wheel (same 100,000 rows).
"""

import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
WHEEL_MEMBER = "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli"


def from_grouplens() -> bytes:
    with urllib.request.urlopen(GROUPLENS, timeout=30) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data")


def from_wheel() -> bytes:
    import pandas as pd

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "pytorch-widedeep==1.7.0",
             "--no-deps", "-d", tmp],
            check=True, capture_output=True)
        wheel = next(pathlib.Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as z:
            df = pd.read_parquet(io.BytesIO(z.read(WHEEL_MEMBER)))
    return df.to_csv(sep="\t", header=False, index=False).encode()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/ml-100k/u.data")
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        data = from_grouplens()
        source = "grouplens"
    except Exception as err:  # network policy varies between machines
        print(f"grouplens unavailable ({err}); using the pytorch-widedeep copy",
              file=sys.stderr)
        data = from_wheel()
        source = "pytorch-widedeep"
    out.write_bytes(data)
    rows = data.count(b"\n")
    print(f"wrote {out} ({rows} rows, source={source})")
    return 0 if rows == 100000 else 1


if __name__ == "__main__":
    sys.exit(main())
