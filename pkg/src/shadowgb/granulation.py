"""Entropy measures and granular-ball space generation.

The generator minimizes

    L = theta * H_cov + epsilon * (1 - theta) * H_spec

where H_cov sums -(|gb|/n) ln(|gb|/n) over balls and H_spec is the
size-weighted label entropy inside balls. Both terms are additive over
balls, so the change caused by splitting one ball only depends on that ball
and its two children; this is what makes the incremental bookkeeping exact.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .data import Dataset
from .errors import ConfigurationError
from .granular_ball import (
    BallSpace,
    GranularBall,
    PreSplit,
    compute_attributes,
    split_ball,
)


def _entropy_of_counts(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    counts = counts[counts > 0]
    total = counts.sum()
    if counts.size <= 1:
        return 0.0
    p = counts / total
    return float(-(p * np.log(p)).sum())


def coverage_entropy(gb: GranularBall, n: int) -> float:
    return _coverage_of_size(gb.size, n)


def _coverage_of_size(size: int, n: int) -> float:
    if size == n:
        return 0.0
    p = size / n
    return -p * math.log(p)


def specificity_entropy(gb: GranularBall, ds: Optional[Dataset] = None) -> float:
    # label_counts is cached from ds at construction time
    return _entropy_of_counts(gb.label_counts)


def label_entropy(ds: Dataset) -> float:
    return _entropy_of_counts(ds.class_counts())


def adaptive_epsilon(ds: Dataset) -> float:
    """ln(n) over the whole-dataset label entropy.

    ln(n) is the coverage entropy of the all-singletons space and the label
    entropy is the specificity entropy of the single initial ball; these are
    the two maxima, so the ratio puts both terms on the same scale.
    """
    h = label_entropy(ds)
    if h == 0.0:
        return 1.0
    return math.log(ds.n) / h


@dataclass(frozen=True)
class EntropyReport:
    coverage: float
    specificity: float
    epsilon: float
    theta: float
    L: float


def _check_theta(theta):
    if not 0.0 <= theta <= 1.0:
        raise ConfigurationError(f"theta must lie in [0, 1], got {theta}")


def space_measures(balls, ds: Dataset, theta: float) -> EntropyReport:
    _check_theta(theta)
    BallSpace(tuple(balls), ds.n, 0.0, theta, 1.0).check_partition()
    n = ds.n
    coverage = sum(coverage_entropy(b, n) for b in balls)
    specificity = sum(b.size / n * specificity_entropy(b, ds) for b in balls)
    eps = adaptive_epsilon(ds)
    L = theta * coverage + eps * (1 - theta) * specificity
    return EntropyReport(coverage, specificity, eps, theta, L)


class StepRecord(NamedTuple):
    step: int
    delta: float
    current_L: float
    ball_count: int
    # smallest delta left in the heap right after the pop, inf if empty
    runner_up_delta: float

    def to_json(self) -> str:
        return json.dumps(
            {"step": self.step, "delta": self.delta, "current_L": self.current_L, "ball_count": self.ball_count}
        )


def write_trace(history, fh) -> None:
    for rec in history:
        fh.write(rec.to_json() + "\n")


def generate_justifiable(
    ds: Dataset,
    theta: float = 0.5,
    split_method: str = "two_means",
    seed: int = 0,
    callback: Optional[Callable] = None,
    pure_terminal: bool = True,
) -> BallSpace:
    """Greedy minimum-L granular-ball space.

    Every candidate ball is pre-split when it enters the space, and keyed in
    a min-heap by the change in L its split would cause. The smallest-change
    ball is split repeatedly until no splittable impure ball remains; the
    space with the lowest L along the way is returned.

    Splitting a pure ball can only raise L, so by default pure balls are
    final and never enter the heap. ``pure_terminal=False`` keeps them as
    candidates; they are then popped whenever their (positive) change is the
    smallest, which tends to shatter small pure balls before large impure
    ones are resolved.

    ``callback(record, balls)`` is invoked after each split with the
    :class:`StepRecord` and the list of balls currently in the space.
    """
    _check_theta(theta)
    n = ds.n
    eps = adaptive_epsilon(ds)
    spec_weight = eps * (1.0 - theta)

    def contribution(b: GranularBall) -> float:
        return theta * _coverage_of_size(b.size, n) + spec_weight * (b.size / n) * specificity_entropy(b)

    created: list = []  # every ball ever inserted, by id, without pre-split
    alive: dict = {}
    heap: list = []
    impure_in_heap = 0

    def insert(ball: GranularBall) -> None:
        nonlocal impure_in_heap
        bid = len(created)
        created.append(ball)
        if ball.splittable and not (pure_terminal and ball.is_pure):
            c1, c2 = split_ball(ball, ds, split_method, seed)
            delta = contribution(c1) + contribution(c2) - contribution(ball)
            ball = replace(ball, pre_split=PreSplit(delta, (c1, c2)))
            heapq.heappush(heap, (delta, bid))
            if not ball.is_pure:
                impure_in_heap += 1
        alive[bid] = ball

    root = compute_attributes(np.arange(n), ds)
    insert(root)
    current_L = contribution(root)
    min_L, best_step = current_L, 0
    split_log: list = []
    history: list = []

    while impure_in_heap > 0:
        delta, bid = heapq.heappop(heap)
        ball = alive.pop(bid)
        if not ball.is_pure:
            impure_in_heap -= 1
        runner_up = heap[0][0] if heap else math.inf
        first_child = len(created)
        for child in ball.pre_split.children:
            insert(child)
        split_log.append((bid, first_child, first_child + 1))
        current_L += delta
        rec = StepRecord(len(split_log), delta, current_L, len(alive), runner_up)
        history.append(rec)
        if current_L < min_L:
            min_L, best_step = current_L, rec.step
        if callback is not None:
            callback(rec, list(alive.values()))

    best = {0}
    for parent, c1, c2 in split_log[:best_step]:
        best.remove(parent)
        best.update((c1, c2))
    balls = tuple(created[i] for i in sorted(best))
    return BallSpace(balls, n, min_L, theta, eps, tuple(history))


def generate_purity_baseline(
    ds: Dataset,
    purity_threshold: float = 1.0,
    split_method: str = "two_means",
    seed: int = 0,
    theta: float = 0.5,
) -> BallSpace:
    """Split every splittable ball whose purity is below the threshold until none is left."""
    if not 0.5 < purity_threshold <= 1.0:
        raise ConfigurationError(f"purity_threshold must lie in (0.5, 1], got {purity_threshold}")
    _check_theta(theta)
    pending = [compute_attributes(np.arange(ds.n), ds)]
    done = []
    while pending:
        nxt = []
        for b in pending:
            if b.splittable and b.purity < purity_threshold:
                nxt.extend(split_ball(b, ds, split_method, seed))
            else:
                done.append(b)
        pending = nxt
    done.sort(key=lambda b: b.members[0])
    report = space_measures(done, ds, theta)
    return BallSpace(tuple(done), ds.n, report.L, theta, report.epsilon)
