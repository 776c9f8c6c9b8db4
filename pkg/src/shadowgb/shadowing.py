"""Ball membership, per-ball threshold selection and the three-valued shadow map.

A query ``x`` belongs to ball ``gb`` with grade

    mu = exp(-|x - c|^2 / (2 sigma^2 r^2))

and a threshold pair ``(alpha, 1 - alpha)`` turns grades into ONE (core),
ZERO (outside) or a FUZZY band in between. ``alpha`` is chosen per ball by
trading the mass lost to rounding (uncertainty variance) against the
ambiguity kept in the band.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, ContractViolation
from .granular_ball import GranularBall

DEFAULT_SIGMA = 1.0
DEFAULT_ALPHA_STEP = 0.005
DEGENERATE_ALPHA = 0.25
RADIUS_FLOOR = 1e-6


class Shadow(enum.Enum):
    ZERO = 0
    FUZZY = 1
    ONE = 2


@dataclass(frozen=True, eq=False)
class ShadowedBall:
    """Ball summary plus its threshold pair.

    ``ball`` is the generating :class:`GranularBall` when one is available;
    classifiers reloaded from disk only keep the summary fields.
    """

    center: np.ndarray
    radius: float
    label: int
    purity: float
    size: int
    alpha: float
    sigma: float = DEFAULT_SIGMA
    effective_radius: float = 0.0
    ball: Optional[GranularBall] = None

    def __post_init__(self):
        center = np.array(self.center, dtype=np.float64)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not self.effective_radius:
            object.__setattr__(self, "effective_radius", self.radius if self.radius > 0 else RADIUS_FLOOR)
        if not 0.0 < self.alpha < 0.5:
            raise ContractViolation(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if self.sigma <= 0 or self.effective_radius <= 0:
            raise ContractViolation("sigma and effective radius must be positive")

    @classmethod
    def from_ball(cls, gb: GranularBall, alpha: float, sigma=DEFAULT_SIGMA, effective_radius=None):
        return cls(
            gb.center,
            gb.radius,
            gb.label,
            gb.purity,
            gb.size,
            alpha,
            sigma,
            effective_radius or 0.0,
            gb.without_pre_split(),
        )

    @property
    def thresholds(self) -> tuple:
        return (self.alpha, 1.0 - self.alpha)

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "radius": self.radius,
            "effective_radius": self.effective_radius,
            "label": self.label,
            "purity": self.purity,
            "size": self.size,
            "alpha": self.alpha,
        }


def effective_radius(radius: float, space_min_radius: Optional[float]) -> float:
    """Zero-radius balls borrow the smallest positive radius of their space."""
    if radius > 0:
        return radius
    return space_min_radius if space_min_radius else RADIUS_FLOOR


def smallest_positive_radius(balls) -> Optional[float]:
    radii = [b.radius for b in balls if b.radius > 0]
    return min(radii) if radii else None


def membership_scale(sigma: float, r: float) -> float:
    return 2.0 * sigma * sigma * r * r


def membership_from_sq_dist(d2, sigma: float, r: float):
    return np.exp(-np.asarray(d2) / membership_scale(sigma, r))


def membership(sb: ShadowedBall, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != sb.center.shape:
        raise ContractViolation(f"query has dimension {x.size}, ball has {sb.center.size}")
    d2 = float(((x - sb.center) ** 2).sum())
    return float(membership_from_sq_dist(d2, sb.sigma, sb.effective_radius))


def shadow_map(sb: ShadowedBall, mu: float):
    """``Shadow.ONE``, ``Shadow.ZERO`` or ``(Shadow.FUZZY, mu)``."""
    if not 0.0 <= mu <= 1.0:
        raise ContractViolation(f"membership must lie in [0, 1], got {mu}")
    if mu >= 1.0 - sb.alpha:
        return Shadow.ONE
    if mu <= sb.alpha:
        return Shadow.ZERO
    return (Shadow.FUZZY, mu)


def uncertainty_variance(memberships, alpha: float) -> float:
    mu = np.asarray(memberships, dtype=np.float64)
    return float(mu[mu <= alpha].sum() + (1.0 - mu[mu >= 1.0 - alpha]).sum())


def band_fuzziness(memberships, alpha: float) -> float:
    mu = np.asarray(memberships, dtype=np.float64)
    band = mu[(mu > alpha) & (mu < 1.0 - alpha)]
    return float((4.0 * band * (1.0 - band)).sum())


def alpha_grid(step: float) -> np.ndarray:
    """``step, 2 step, ...`` strictly below 0.5."""
    if not 0.0 < step <= 0.1:
        raise ConfigurationError(f"alpha grid step must lie in (0, 0.1], got {step}")
    count = math.ceil(0.5 / step - 1e-9) - 1
    return step * np.arange(1, count + 1)


def variance_curve(memberships, grid) -> np.ndarray:
    mu = np.asarray(memberships, dtype=np.float64)[:, None]
    g = np.asarray(grid)[None, :]
    return (np.where(mu <= g, mu, 0.0) + np.where(mu >= 1.0 - g, 1.0 - mu, 0.0)).sum(axis=0)


def fuzziness_curve(memberships, grid) -> np.ndarray:
    mu = np.asarray(memberships, dtype=np.float64)[:, None]
    g = np.asarray(grid)[None, :]
    band = (mu > g) & (mu < 1.0 - g)
    return np.where(band, 4.0 * mu * (1.0 - mu), 0.0).sum(axis=0)


def _min_max(curve: np.ndarray) -> np.ndarray:
    lo, hi = curve.min(), curve.max()
    if hi == lo:
        return np.zeros_like(curve)
    return (curve - lo) / (hi - lo)


@dataclass(frozen=True, eq=False)
class AlphaDiagnostics:
    grid: np.ndarray
    variance_curve: np.ndarray
    fuzziness_curve: np.ndarray
    objective_curve: np.ndarray
    chosen: float

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "V", "F", "f"])
        for row in zip(self.grid, self.variance_curve, self.fuzziness_curve, self.objective_curve):
            w.writerow([repr(float(v)) for v in row])


def alpha_objective(memberships, grid, weight: float = 0.5):
    """Return ``(V, F, f)`` over ``grid``; V and F are range-normalized before mixing."""
    V = variance_curve(memberships, grid)
    F = fuzziness_curve(memberships, grid)
    return V, F, weight * _min_max(V) + (1.0 - weight) * _min_max(F)


def optimal_alpha(
    ball: GranularBall,
    ds: Dataset,
    sigma: float = DEFAULT_SIGMA,
    grid_step: float = DEFAULT_ALPHA_STEP,
    weight: float = 0.5,
    effective_radius: Optional[float] = None,
):
    """Grid argmin of the normalized variance/fuzziness mix over the ball's own members.

    Ties go to the smaller alpha. Balls without a trade-off get
    ``DEGENERATE_ALPHA``: a single member, or members sharing one membership
    below 1 (e.g. two points, both at distance r). In the latter case V and F
    jump by opposite unit steps at the same alpha, so f is the constant 0.5
    and the tie rule would otherwise pick the smallest alpha. Coincident
    members (all memberships exactly 1) leave both curves flat at zero and
    fall through to the tie rule.
    """
    if not 0.0 <= weight <= 1.0:
        raise ConfigurationError(f"alpha weight must lie in [0, 1], got {weight}")
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    grid = alpha_grid(grid_step)
    if ball.size <= 1:
        flat = np.zeros_like(grid)
        return DEGENERATE_ALPHA, AlphaDiagnostics(grid, flat, flat, flat, DEGENERATE_ALPHA)
    r = effective_radius if effective_radius else (ball.radius if ball.radius > 0 else RADIUS_FLOOR)
    d2 = ((ds.features[ball.members] - ball.center) ** 2).sum(axis=1)
    mu = membership_from_sq_dist(d2, sigma, r)
    # two-point balls put both members at distance r up to rounding
    if mu.max() - mu.min() <= 1e-12 and mu.max() < 1.0:
        flat = np.zeros_like(grid)
        return DEGENERATE_ALPHA, AlphaDiagnostics(grid, flat, flat, flat, DEGENERATE_ALPHA)
    V, F, f = alpha_objective(mu, grid, weight)
    alpha = float(grid[int(np.argmin(f))])
    return alpha, AlphaDiagnostics(grid, V, F, f, alpha)
