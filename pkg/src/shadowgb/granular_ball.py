"""Granular-ball container, attribute computation and the binary split."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, ContractViolation

SPLIT_METHODS = ("two_means", "two_division")
MAX_LLOYD_ITERATIONS = 100


class PreSplit(NamedTuple):
    delta: float
    children: tuple


@dataclass(frozen=True, eq=False)
class GranularBall:
    """A subset of sample indices plus its cached summary.

    ``members`` is sorted ascending. ``label_counts[k]`` is the number of
    members labelled ``k``; the modal label is the smallest id among ties.
    """

    members: np.ndarray
    center: np.ndarray
    radius: float
    label: int
    purity: float
    splittable: bool
    label_counts: np.ndarray
    pre_split: Optional[PreSplit] = None

    @property
    def size(self) -> int:
        return self.members.size

    @property
    def is_pure(self) -> bool:
        return self.purity == 1.0

    def without_pre_split(self) -> "GranularBall":
        return self if self.pre_split is None else replace(self, pre_split=None)

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "radius": self.radius,
            "label": self.label,
            "purity": self.purity,
            "size": self.size,
        }


def compute_attributes(members, ds: Dataset) -> GranularBall:
    idx = np.unique(np.asarray(members, dtype=np.int64))
    if idx.size == 0:
        raise ContractViolation("a granular-ball needs at least one member")
    X = ds.features[idx]
    center = X.mean(axis=0)
    radius = float(np.linalg.norm(X - center, axis=1).mean())
    counts = np.bincount(ds.labels[idx], minlength=ds.class_count)
    label = int(np.argmax(counts))
    purity = counts[label] / idx.size
    splittable = idx.size >= 2 and bool(np.any(X.max(axis=0) > X.min(axis=0)))
    idx.setflags(write=False)
    center.setflags(write=False)
    counts.setflags(write=False)
    return GranularBall(idx, center, radius, label, float(purity), splittable, counts)


def _farthest_pair(X, center):
    a = X[np.argmax(((X - center) ** 2).sum(axis=1))]
    b = X[np.argmax(((X - a) ** 2).sum(axis=1))]
    return np.vstack([a, b])


def _class_anchors(X, y, counts):
    # two most frequent classes, ties toward the smaller id
    order = sorted(np.flatnonzero(counts), key=lambda k: (-counts[k], k))
    return np.vstack([X[y == order[0]].mean(axis=0), X[y == order[1]].mean(axis=0)])


def _assign(X, anchors):
    d0 = ((X - anchors[0]) ** 2).sum(axis=1)
    d1 = ((X - anchors[1]) ** 2).sum(axis=1)
    return d1 < d0


def _both_sides(side) -> bool:
    return 0 < np.count_nonzero(side) < side.size


def split_ball(gb: GranularBall, ds: Dataset, method: str = "two_means", seed: int = 0):
    """Split into two non-empty children.

    Anchors are the centroids of the two most frequent classes, or for a pure
    ball the member farthest from the center and the member farthest from
    that one. ``two_division`` is one nearest-anchor pass; ``two_means`` then
    runs Lloyd iterations to a fixpoint. Both are deterministic, so ``seed``
    only exists to keep the signature uniform across split strategies.
    """
    if method not in SPLIT_METHODS:
        raise ConfigurationError(f"unknown split method {method!r}")
    if not gb.splittable:
        raise ContractViolation("ball is not splittable (single member or coincident points)")
    X = ds.features[gb.members]
    y = ds.labels[gb.members]

    side = None
    if np.count_nonzero(gb.label_counts) >= 2:
        side = _assign(X, _class_anchors(X, y, gb.label_counts))
        if not _both_sides(side):
            side = None
    if side is None:
        side = _assign(X, _farthest_pair(X, gb.center))

    if method == "two_means":
        for _ in range(MAX_LLOYD_ITERATIONS):
            centroids = np.vstack([X[~side].mean(axis=0), X[side].mean(axis=0)])
            new_side = _assign(X, centroids)
            if not _both_sides(new_side) or np.array_equal(new_side, side):
                break
            side = new_side

    return (
        compute_attributes(gb.members[~side], ds),
        compute_attributes(gb.members[side], ds),
    )


@dataclass(frozen=True, eq=False)
class BallSpace:
    """A set of balls whose member lists partition ``range(dataset_size)``.

    ``current_L`` is the justifiable-granularity measure of ``balls`` under
    ``theta`` and ``epsilon``; ``history`` holds one record per split taken
    during generation (empty for spaces not built by the greedy search).
    """

    balls: tuple
    dataset_size: int
    current_L: float
    theta: float
    epsilon: float
    history: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.balls)

    def check_partition(self) -> None:
        seen = np.concatenate([b.members for b in self.balls])
        if seen.size != self.dataset_size or not np.array_equal(np.sort(seen), np.arange(self.dataset_size)):
            raise ContractViolation("balls do not partition the dataset")

    def to_dict(self) -> dict:
        return {
            "dataset_size": self.dataset_size,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "L": self.current_L,
            "balls": [b.to_dict() for b in self.balls],
        }
