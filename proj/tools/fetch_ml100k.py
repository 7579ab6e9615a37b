#!/usr/bin/env python3
"""Materialize MovieLens-100K as u.data / u.user under data/raw/ml-100k.

GroupLens does not allow redistribution, so the data is not committed. This
script rebuilds the two raw files from the copy bundled in the
pytorch-widedeep wheel on PyPI (same 100,000 ratings and 943 users as the
GroupLens archive). If you already have ml-100k.zip from grouplens.org, just
unpack u.data and u.user into the output directory instead.
"""
import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

WHEEL = "pytorch-widedeep==1.7.0"
PREFIX = "pytorch_widedeep/datasets/data/"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data/raw/ml-100k"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    if (out / "u.data").exists() and (out / "u.user").exists():
        print(f"{out} already populated")
        return 0

    import pandas as pd  # needs pyarrow or fastparquet

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps", "-q", WHEEL, "-d", tmp])
        whl = next(pathlib.Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(whl) as z:
            ratings = pd.read_parquet(io.BytesIO(z.read(PREFIX + "MovieLens100k_data.parquet.brotli")))
            users = pd.read_parquet(io.BytesIO(z.read(PREFIX + "MovieLens100k_users.parquet.brotli")))

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "u.data", "w", newline="\n") as f:
        for r in ratings.itertuples(index=False):
            f.write(f"{r.user_id}\t{r.movie_id}\t{r.rating}\t{r.timestamp}\n")
    with open(out / "u.user", "w", newline="\n") as f:
        for u in users.itertuples(index=False):
            f.write(f"{u.user_id}|{u.age}|{u.gender}|{u.occupation}|{u.zip_code}\n")
    print(f"wrote {len(ratings)} ratings and {len(users)} users to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
