"""Rebuild the gzipped CSVs under src/shadowgb/datasets/.

The raw files come from two PyPI wheels that ship UCI-derived data offline:
``keel-ds`` (KEEL repository copies) and ``imbalanced-databases``. Download
them first::

    pip download --no-deps -d wheels keel-ds==0.2.5 imbalanced-databases==0.1.1
    python scripts/build_bundled_data.py wheels

Multi-class sets are binarized one-vs-rest to the class ratios used in the
benchmark table (Segment: class 1 vs rest, Satimage: red soil vs rest).
Categorical columns are ordinally encoded by sorted symbol.
"""

import csv
import glob
import gzip
import io
import sys
import zipfile
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "shadowgb" / "datasets"


def _keel_rows(text):
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        yield [v.strip() for v in line.split(",")]


def _ordinal(rows, n_features):
    symbols = [sorted({r[j] for r in rows}) for j in range(n_features)]
    codes = [{s: k for k, s in enumerate(col)} for col in symbols]
    return [[codes[j][r[j]] for j in range(n_features)] + [r[-1]] for r in rows]


def _write(name, rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    # mtime=0 keeps the archive bytes reproducible
    with open(OUT / f"{name}.csv.gz", "wb") as fh:
        with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0) as gz:
            gz.write(buf.getvalue().encode())
    print(f"{name}: {len(rows)} rows")


def main(wheel_dir):
    keel = zipfile.ZipFile(glob.glob(f"{wheel_dir}/keel_ds-*.whl")[0])
    imb = zipfile.ZipFile(glob.glob(f"{wheel_dir}/imbalanced_databases-*.whl")[0])

    def keel_raw(name):
        return keel.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()

    rows = list(_keel_rows(keel_raw("tic-tac-toe")))
    _write("endgame", _ordinal(rows, 9))

    rows = list(_keel_rows(keel_raw("mushroom")))
    _write("mushroom", _ordinal(rows, 22))

    rows = list(_keel_rows(keel_raw("segment")))
    _write("segment", [r[:-1] + ["1" if r[-1] == "1" else "rest"] for r in rows])

    rows = list(_keel_rows(keel_raw("satimage")))
    _write("satimage", [r[:-1] + ["1" if r[-1] == "1" else "rest"] for r in rows])

    rows = []
    for part in ("SPECTF.train.txt", "SPECTF.test.txt"):
        text = imb.read(f"imbalanced_databases/data/spect_f/{part}").decode()
        for line in text.splitlines():
            vals = [v.strip() for v in line.split(",") if v.strip()]
            if vals:
                rows.append(vals[1:] + [vals[0]])
    _write("spectf", rows)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "wheels")
