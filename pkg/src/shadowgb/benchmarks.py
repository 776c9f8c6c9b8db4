"""Named benchmark datasets.

Five UCI-derived sets ship with the package (see ``datasets/README.md``).
Fourclass and Banknote Authentication are not redistributable from here and
are looked up on disk instead: put ``fourclass`` (LIBSVM format or CSV) and
``data_banknote_authentication.txt`` (or ``banknote.csv``) into a directory
named by ``$SHADOWGB_DATA_DIR`` or ``./data``.

Synthetic sets are generated deterministically from a fixed seed.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

import numpy as np

from .data import Dataset, load_csv
from .errors import DatasetError, DatasetParseError, EmptyDatasetError

BUNDLED = ("spectf", "endgame", "segment", "satimage", "mushroom")

EXTERNAL = {
    "fourclass": ("fourclass", "fourclass.txt", "fourclass.csv", "fourclass_scale"),
    "banknote": ("data_banknote_authentication.txt", "banknote.csv", "banknote.txt"),
}


def load_libsvm(path, name=None) -> Dataset:
    """Read ``label idx:value ...`` lines; missing indices are zero."""
    path = Path(path)
    rows, raw_labels = [], []
    width = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            row = {}
            for tok in parts[1:]:
                try:
                    k, v = tok.split(":", 1)
                    row[int(k)] = float(v)
                except ValueError:
                    raise DatasetParseError(path, lineno, f"bad feature token {tok!r}") from None
            if row and min(row) < 1:
                raise DatasetParseError(path, lineno, "feature indices start at 1")
            width = max(width, max(row, default=0))
            rows.append(row)
            raw_labels.append(parts[0])
    if not rows or width == 0:
        raise EmptyDatasetError(f"{path}: no data rows")
    X = np.zeros((len(rows), width))
    for i, row in enumerate(rows):
        for k, v in row.items():
            X[i, k - 1] = v
    codes: dict = {}
    y = [codes.setdefault(lab, len(codes)) for lab in raw_labels]
    return Dataset(X, y, len(codes), label_names=tuple(codes), name=name or path.name)


def _looks_like_libsvm(path: Path) -> bool:
    with open(path) as fh:
        for line in fh:
            if line.strip():
                return ":" in line and "," not in line
    return False


def load_any(path, name=None) -> Dataset:
    path = Path(path)
    if path.suffix != ".gz" and _looks_like_libsvm(path):
        return load_libsvm(path, name=name)
    return load_csv(path, name=name)


def data_dirs():
    dirs = []
    if os.environ.get("SHADOWGB_DATA_DIR"):
        dirs.append(Path(os.environ["SHADOWGB_DATA_DIR"]))
    dirs.append(Path.cwd() / "data")
    dirs.append(Path(__file__).resolve().parents[2] / "data")
    return list(dict.fromkeys(dirs))


def find_external(name: str):
    for d in data_dirs():
        for fname in EXTERNAL[name]:
            p = d / fname
            if p.is_file():
                return p
    return None


def make_rings(n=5000, seed=11, noise=0.06) -> Dataset:
    """Two concentric noisy rings in 2-d, inner ring labelled 0."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    radius = np.where(y == 0, 0.5, 1.0) + rng.normal(0, noise, n)
    angle = rng.uniform(0, 2 * np.pi, n)
    X = np.c_[radius * np.cos(angle), radius * np.sin(angle)]
    return Dataset(X, y, 2, label_names=("inner", "outer"), name="synth-rings")


def make_checkerboard(n=6000, seed=12, cells=4) -> Dataset:
    """Uniform points on the unit square labelled by a ``cells x cells`` board."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 2))
    y = (np.floor(X[:, 0] * cells) + np.floor(X[:, 1] * cells)).astype(int) % 2
    return Dataset(X, y, 2, label_names=("white", "black"), name="synth-checkerboard")


def make_moons(n=8000, seed=13, noise=0.12) -> Dataset:
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    t = rng.uniform(0, np.pi, n)
    X = np.where(
        y[:, None] == 0,
        np.c_[np.cos(t), np.sin(t)],
        np.c_[1 - np.cos(t), 0.5 - np.sin(t)],
    )
    X = X + rng.normal(0, noise, X.shape)
    return Dataset(X, y, 2, label_names=("upper", "lower"), name="synth-moons")


def make_blobs(n=1000, seed=14, d=4) -> Dataset:
    """Two Gaussian clouds with unequal priors (30/70) in ``d`` dimensions."""
    rng = np.random.default_rng(seed)
    y = (rng.uniform(size=n) >= 0.3).astype(int)
    centers = np.array([np.zeros(d), np.full(d, 1.5)])
    X = centers[y] + rng.normal(0, 1.0, (n, d))
    return Dataset(X, y, 2, name="synth-blobs")


SYNTHETIC = {
    "synth-rings": make_rings,
    "synth-checkerboard": make_checkerboard,
    "synth-moons": make_moons,
    "synth-blobs": make_blobs,
}


def available() -> list:
    names = list(BUNDLED) + list(SYNTHETIC)
    names += [k for k in EXTERNAL if find_external(k) is not None]
    return names


def load_benchmark(name: str) -> Dataset:
    if name in BUNDLED:
        ref = resources.files("shadowgb") / "datasets" / f"{name}.csv.gz"
        with resources.as_file(ref) as p:
            return load_csv(p, name=name)
    if name in SYNTHETIC:
        return SYNTHETIC[name]()
    if name in EXTERNAL:
        p = find_external(name)
        if p is None:
            where = ", ".join(str(d) for d in data_dirs())
            raise DatasetError(f"{name} data file not found (looked for {EXTERNAL[name]} in {where})")
        return load_any(p, name=name)
    raise DatasetError(f"unknown dataset {name!r}")


def resolve(spec: str) -> Dataset:
    """A file path if one exists, otherwise a benchmark name."""
    p = Path(spec)
    if p.is_file():
        return load_any(p)
    if spec in BUNDLED or spec in SYNTHETIC or spec in EXTERNAL:
        return load_benchmark(spec)
    raise DatasetError(f"dataset not found: {spec}")
