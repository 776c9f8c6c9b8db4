"""Three-way classification over shadowed granular-balls, and a GB-kNN baseline.

For a query x every ball i yields a membership mu_i and its own thresholds
(alpha_i, 1 - alpha_i). The controlling region is

* COR if some mu_i >= 1 - alpha_i: commit only when all such balls agree;
* IMP otherwise, if some mu_i > alpha_i: sum mu_i per label over those balls
  and commit to a label holding strictly more than half of the total;
* UNE otherwise: defer.

A single comparison of squared distances against per-ball cut-offs discards
every (query, ball) pair with mu <= alpha, which is nearly all of them; only
the surviving pairs get an ``exp`` and are decided on their memberships.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from . import __version__
from .data import Dataset, MinMaxScaling
from .errors import ConfigurationError, ContractViolation, ModelFormatError
from .granular_ball import BallSpace
from .granulation import generate_justifiable, generate_purity_baseline
from .shadowing import (
    DEFAULT_ALPHA_STEP,
    DEFAULT_SIGMA,
    ShadowedBall,
    effective_radius,
    membership,
    membership_scale,
    optimal_alpha,
    smallest_positive_radius,
)

COR, IMP, UNE = "COR", "IMP", "UNE"
REGIONS = (COR, IMP, UNE)
UNCERTAIN = -1
MODEL_FORMAT = "shadowgb-classifier"
MODEL_VERSION = 1

_GUARD = 1e-9
# upper bound on the (queries x balls) block held in memory at once
_BLOCK = 1 << 20


@dataclass(frozen=True)
class ImpSupport:
    sums: dict
    total: float

    def proportion(self, label: int) -> float:
        return self.sums.get(label, 0.0) / self.total


@dataclass(frozen=True)
class ThreeWayPrediction:
    label: Optional[int]
    region: str
    support: Optional[ImpSupport] = None

    @property
    def certain(self) -> bool:
        return self.label is not None


class BatchPrediction(NamedTuple):
    labels: np.ndarray  # UNCERTAIN (-1) where deferred
    regions: np.ndarray  # indices into REGIONS


def _sq_dists(Q: np.ndarray, C: np.ndarray):
    """Yield ``(row_slice, d2)`` blocks of squared Euclidean distances.

    Accumulates one coordinate at a time, which keeps the working set at one
    (queries x balls) block and matches a left-to-right sum of squares.
    """
    step = max(1, _BLOCK // max(1, C.shape[0]))
    CT = np.ascontiguousarray(C.T)
    for start in range(0, Q.shape[0], step):
        q = Q[start : start + step]
        d2 = np.subtract.outer(q[:, 0], CT[0])
        d2 *= d2
        buf = np.empty_like(d2)
        for k in range(1, CT.shape[0]):
            np.subtract.outer(q[:, k], CT[k], out=buf)
            buf *= buf
            d2 += buf
        yield slice(start, start + q.shape[0]), d2


def _check_queries(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise ContractViolation(f"queries must have {d} features, got shape {X.shape}")
    return X


@dataclass(frozen=True, eq=False)
class ShadowClassifier:
    balls: tuple
    class_count: int
    label_names: tuple = ()
    config: dict = field(default_factory=dict)
    scaling: Optional[MinMaxScaling] = None
    space: Optional[BallSpace] = None

    def __post_init__(self):
        if not self.balls:
            raise ContractViolation("a classifier needs at least one ball")
        if any(not 0 <= b.label < self.class_count for b in self.balls):
            raise ContractViolation("ball label outside [0, class_count)")
        dims = {b.center.size for b in self.balls}
        if len(dims) != 1:
            raise ContractViolation("balls disagree on dimension")
        names = tuple(self.label_names) or tuple(str(k) for k in range(self.class_count))
        object.__setattr__(self, "label_names", names)
        centers = np.vstack([b.center for b in self.balls])
        labels = np.array([b.label for b in self.balls], dtype=np.int64)
        alpha = np.array([b.alpha for b in self.balls])
        den = np.array([membership_scale(b.sigma, b.effective_radius) for b in self.balls])
        # mu > alpha  <=>  d2 < -den ln(alpha); everything farther is ZERO for its ball.
        # The cut-off is stored already widened by _GUARD.
        imp_d2 = -den * np.log(alpha) * (1.0 + _GUARD)
        for a in (centers, labels, alpha, den, imp_d2):
            a.setflags(write=False)
        object.__setattr__(self, "_arrays", (centers, labels, alpha, den, imp_d2))

    @property
    def dimension(self) -> int:
        return self.balls[0].center.size

    def __len__(self) -> int:
        return len(self.balls)

    # -- prediction -------------------------------------------------------

    def _candidates(self, d2):
        """Sparse (row, ball, mu) for every pair that may have mu > alpha.

        The cut-off is widened by a relative ``_GUARD`` so no pair is lost to
        rounding; region decisions are then taken on the exact memberships.
        """
        _, _, _, den, imp_d2 = self._arrays
        r, c = np.divmod(np.flatnonzero(d2 < imp_d2), d2.shape[1])
        mu = np.exp(-d2[r, c] / den[c])
        return r, c, mu

    def predict_batch(self, X) -> BatchPrediction:
        X = _check_queries(X, self.dimension)
        centers, labels, alpha, _, _ = self._arrays
        K = self.class_count
        out_labels = np.full(X.shape[0], UNCERTAIN, dtype=np.int64)
        out_regions = np.full(X.shape[0], REGIONS.index(UNE), dtype=np.int64)
        for rows, d2 in _sq_dists(X, centers):
            m = d2.shape[0]
            r, c, mu = self._candidates(d2)
            lab = out_labels[rows]
            reg = out_regions[rows]

            in_cor = mu >= 1.0 - alpha[c]
            has_cor = np.zeros(m, dtype=bool)
            has_cor[r[in_cor]] = True
            if has_cor.any():
                lo = np.full(m, K)
                hi = np.full(m, -1)
                np.minimum.at(lo, r[in_cor], labels[c[in_cor]])
                np.maximum.at(hi, r[in_cor], labels[c[in_cor]])
                reg[has_cor] = REGIONS.index(COR)
                lab[has_cor] = np.where(lo[has_cor] == hi[has_cor], lo[has_cor], UNCERTAIN)

            in_imp = (mu > alpha[c]) & ~has_cor[r]
            if in_imp.any():
                sums = np.bincount(r[in_imp] * K + labels[c[in_imp]], weights=mu[in_imp], minlength=m * K).reshape(m, K)
                total = sums.sum(axis=1)
                has_imp = total > 0
                best = sums.argmax(axis=1)
                wins = has_imp & (sums[np.arange(m), best] > 0.5 * total)
                reg[has_imp] = REGIONS.index(IMP)
                lab[has_imp] = np.where(wins[has_imp], best[has_imp], UNCERTAIN)
        return BatchPrediction(out_labels, out_regions)

    def resolve_controlled_region(self, x):
        """``(region, evidence)``: COR -> sorted distinct labels, IMP -> :class:`ImpSupport`, UNE -> None."""
        x = _check_queries(x, self.dimension)
        centers, labels, alpha, _, _ = self._arrays
        ((_, d2),) = _sq_dists(x, centers)
        _, c, mu = self._candidates(d2)
        cor = mu >= 1.0 - alpha[c]
        if cor.any():
            return COR, tuple(sorted(set(labels[c[cor]].tolist())))
        imp = mu > alpha[c]
        if imp.any():
            sums: dict = {}
            for i, v in zip(c[imp], mu[imp]):
                sums[int(labels[i])] = sums.get(int(labels[i]), 0.0) + float(v)
            return IMP, ImpSupport(sums, sum(sums.values()))
        return UNE, None

    def predict(self, x) -> ThreeWayPrediction:
        region, evidence = self.resolve_controlled_region(x)
        if region == COR:
            return ThreeWayPrediction(evidence[0] if len(evidence) == 1 else None, COR)
        if region == IMP:
            label = max(evidence.sums, key=evidence.sums.get)
            ok = evidence.proportion(label) > 0.5
            return ThreeWayPrediction(label if ok else None, IMP, evidence)
        return ThreeWayPrediction(None, UNE)

    def predict_raw(self, X) -> BatchPrediction:
        """Predict queries given in original units, scaled like the training data."""
        X = _check_queries(X, self.dimension)
        if self.scaling is not None:
            X = self.scaling.apply(X)
        return self.predict_batch(X)

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "package_version": __version__,
            "class_count": self.class_count,
            "label_names": list(self.label_names),
            "sigma": self.balls[0].sigma,
            "config": self.config,
            "scaling": self.scaling.to_dict() if self.scaling is not None else None,
            "balls": [b.to_dict() for b in self.balls],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_dict(cls, doc) -> "ShadowClassifier":
        try:
            if doc.get("format") != MODEL_FORMAT:
                raise ModelFormatError(f"not a {MODEL_FORMAT} document")
            if doc.get("version") != MODEL_VERSION:
                raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
            sigma = float(doc["sigma"])
            balls = tuple(
                ShadowedBall(
                    np.asarray(b["center"], dtype=float),
                    float(b["radius"]),
                    int(b["label"]),
                    float(b["purity"]),
                    int(b["size"]),
                    float(b["alpha"]),
                    sigma,
                    float(b["effective_radius"]),
                )
                for b in doc["balls"]
            )
            scaling = MinMaxScaling.from_dict(doc["scaling"]) if doc.get("scaling") else None
            clf = cls(balls, int(doc["class_count"]), tuple(doc["label_names"]), dict(doc.get("config", {})), scaling)
        except ModelFormatError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ModelFormatError(f"malformed model document: {exc}") from None
        if scaling is not None and scaling.low.size != clf.dimension:
            raise ModelFormatError("scaling and ball dimensions differ")
        return clf

    @classmethod
    def load(cls, path) -> "ShadowClassifier":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ModelFormatError(f"{path}: expected a JSON object")
        return cls.from_dict(doc)


def shadow_space(space: BallSpace, ds: Dataset, sigma=DEFAULT_SIGMA, alpha_step=DEFAULT_ALPHA_STEP, alpha_weight=0.5):
    floor = smallest_positive_radius(space.balls)
    out = []
    for gb in space.balls:
        r = effective_radius(gb.radius, floor)
        alpha, _ = optimal_alpha(gb, ds, sigma, alpha_step, alpha_weight, effective_radius=r)
        out.append(ShadowedBall.from_ball(gb, alpha, sigma, r))
    return tuple(out)


def fit(
    train: Dataset,
    theta: float = 0.5,
    sigma: float = DEFAULT_SIGMA,
    *,
    alpha_step: float = DEFAULT_ALPHA_STEP,
    alpha_weight: float = 0.5,
    split_method: str = "two_means",
    seed: int = 0,
    scaling: Optional[MinMaxScaling] = None,
    callback=None,
) -> ShadowClassifier:
    """Generate a minimum-L ball space on ``train`` and shadow every ball."""
    if train.n == 0:
        raise ConfigurationError("empty training set")
    if not train.normalized:
        raise ContractViolation("training data must be min-max normalized")
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    space = generate_justifiable(train, theta, split_method, seed, callback=callback)
    config = {
        "theta": theta,
        "sigma": sigma,
        "alpha_step": alpha_step,
        "alpha_weight": alpha_weight,
        "split_method": split_method,
        "seed": seed,
    }
    balls = shadow_space(space, train, sigma, alpha_step, alpha_weight)
    return ShadowClassifier(balls, train.class_count, train.label_names, config, scaling, space)


# -- reference implementation -------------------------------------------------


def predict_naive(clf: ShadowClassifier, x) -> ThreeWayPrediction:
    """The rules applied literally, one ball at a time, from memberships."""
    mus = [membership(b, x) for b in clf.balls]
    cor = {b.label for b, mu in zip(clf.balls, mus) if mu >= 1.0 - b.alpha}
    if cor:
        return ThreeWayPrediction(next(iter(cor)) if len(cor) == 1 else None, COR)
    sums: dict = {}
    for b, mu in zip(clf.balls, mus):
        if mu > b.alpha:
            sums[b.label] = sums.get(b.label, 0.0) + mu
    if sums:
        support = ImpSupport(sums, sum(sums.values()))
        for label in sums:
            if support.proportion(label) > 0.5:
                return ThreeWayPrediction(label, IMP, support)
        return ThreeWayPrediction(None, IMP, support)
    return ThreeWayPrediction(None, UNE)


# -- GB-kNN baseline ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BallTable:
    """Centers, radii and labels of a ball space, as arrays."""

    centers: np.ndarray
    radii: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_balls(cls, balls) -> "BallTable":
        balls = list(balls)
        if not balls:
            raise ContractViolation("need at least one ball")
        return cls(
            np.vstack([b.center for b in balls]),
            np.array([b.radius for b in balls], dtype=float),
            np.array([b.label for b in balls], dtype=np.int64),
        )


def predict_gbknn_batch(table: BallTable, X) -> np.ndarray:
    """Label of the ball minimizing ``d(x, c) - r``; ties: smaller radius, then smaller label."""
    X = _check_queries(X, table.centers.shape[1])
    out = np.empty(X.shape[0], dtype=np.int64)
    for rows, d2 in _sq_dists(X, table.centers):
        score = np.sqrt(d2) - table.radii
        best = score.argmin(axis=1)
        out[rows] = table.labels[best]
        lowest = score[np.arange(best.size), best]
        tied = np.flatnonzero((score == lowest[:, None]).sum(axis=1) > 1)
        for i in tied:
            cand = np.flatnonzero(score[i] == lowest[i])
            j = min(cand, key=lambda k: (table.radii[k], table.labels[k]))
            out[rows.start + i] = table.labels[j]
    return out


def predict_gbknn_baseline(balls, x) -> int:
    table = balls if isinstance(balls, BallTable) else BallTable.from_balls(balls)
    return int(predict_gbknn_batch(table, x)[0])


def fit_gbknn(train: Dataset, split_method: str = "two_means", seed: int = 0, purity_threshold: float = 1.0):
    space = generate_purity_baseline(train, purity_threshold, split_method, seed)
    return BallTable.from_balls(space.balls), space


__all__ = [
    "COR",
    "IMP",
    "UNE",
    "REGIONS",
    "UNCERTAIN",
    "BallTable",
    "BatchPrediction",
    "ImpSupport",
    "ShadowClassifier",
    "ThreeWayPrediction",
    "fit",
    "fit_gbknn",
    "predict_gbknn_baseline",
    "predict_gbknn_batch",
    "predict_naive",
    "shadow_space",
]
