"""Perturbation response of controlled measurements.

A sweep compares the collapse probabilities of two nearby states under
truncated uniform densities whose unbreakable control region grows as
epsilon shrinks. Above the geometry threshold epsilon_tilde, where the
zone swept by the moving region boundaries stays breakable, the change
obeys |dP_i| = |dx_i| / epsilon, so control (small epsilon) buys
determinism at the price of sensitivity, and the uncontrolled
measurement (epsilon = 1) is the most robust one.

The default control geometry leaves breakable a simplex-shaped
neighbourhood of the centroid. For two outcomes its covering threshold
is exact: the swept zone is the segment between the two states, and it
lies in the breakable interval exactly when epsilon >= epsilon_tilde =
max over the two states of |2 x1 - 1|. For more outcomes the swept
zone fans out to the simplex corners, the threshold depends on the
chosen geometry, and reported values are geometry-specific lower
bounds; sweeps then run on the Monte Carlo path.

Driving epsilon to zero instead, with ball-shaped breakable zones
around chosen points, concentrates the density on those points and the
measurement becomes a mixture of deterministic collapses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .density import (
    BallComplement,
    CentroidNeighborhood,
    TruncatedUniformDensity,
    UniformDensity,
    truncate,
)
from .montecarlo import estimate, standard_error
from .simplex import SUM_TOL, BarycentricState, region_of


@dataclass(frozen=True)
class RobustnessReport:
    """Measured versus predicted probability changes along an epsilon grid."""

    outcome: int
    delta: float
    epsilon_grid: tuple[float, ...]
    measured: tuple[float, ...]
    predicted: tuple[float, ...]
    standard_errors: tuple[float, ...]
    epsilon_tilde: float
    epsilon_tilde_exact: bool
    method: str

    def rows(self) -> list[dict]:
        out = []
        for eps, meas, pred in zip(self.epsilon_grid, self.measured, self.predicted):
            out.append(
                {
                    "epsilon": eps,
                    "measured": meas,
                    "predicted": pred,
                    "ratio": meas / pred if pred else float("nan"),
                }
            )
        return out


def perturb_state(x: BarycentricState, delta_x) -> BarycentricState:
    """State x + delta for a perturbation with components summing to zero."""
    delta = np.asarray(delta_x, dtype=float)
    if delta.shape != x.coords.shape:
        raise ValueError("perturbation dimension does not match the state")
    if abs(delta.sum()) > SUM_TOL:
        raise ValueError("perturbation components must sum to zero")
    moved = x.coords + delta
    if moved.min() < 0.0:
        raise ValueError("perturbation pushes the state off the simplex")
    return BarycentricState(moved)


def robustness_sweep(
    x: BarycentricState,
    delta_x,
    epsilon_grid,
    outcome: int = 1,
    control_factory=None,
    method: str = "analytic",
    n_samples: int = 200_000,
    seed=None,
    epsilon_tilde: float | None = None,
) -> RobustnessReport:
    """Measure |dP_outcome| across an epsilon grid and compare with
    |dx_outcome| / epsilon.

    `control_factory` maps an epsilon to a ControlRegion and defaults to
    the centroid neighbourhood. The analytic path needs a two-outcome
    geometry with an interval description; the Monte Carlo path needs a
    seed and reports the combined standard error of each measured value.
    The report flags the threshold epsilon where the scaling law starts
    to hold; thresholds are exact for two outcomes under the default
    geometry and geometry-dependent estimates otherwise.
    """
    n = x.n_outcomes
    if not 1 <= outcome <= n:
        raise ValueError(f"outcome must be in 1..{n}")
    if method not in ("analytic", "mc"):
        raise ValueError("method must be 'analytic' or 'mc'")
    if method == "mc" and seed is None:
        raise ValueError("the Monte Carlo path needs a seed")
    x_moved = perturb_state(x, delta_x)
    delta_i = float(np.asarray(delta_x, dtype=float)[outcome - 1])
    if control_factory is None:
        control_factory = lambda eps: CentroidNeighborhood(n, eps)

    if epsilon_tilde is None:
        probe = control_factory(1.0)
        try:
            epsilon_tilde = probe.min_epsilon_covering([x, x_moved])
            tilde_exact = n == 2
        except NotImplementedError:
            epsilon_tilde = float("nan")
            tilde_exact = False
    else:
        tilde_exact = False

    grid = [float(e) for e in epsilon_grid]
    if any(not 0.0 < e <= 1.0 for e in grid):
        raise ValueError("epsilon values must lie in (0, 1]")
    measured, predicted, errors = [], [], []
    for idx, eps in enumerate(grid):
        density = truncate(UniformDensity(n), control_factory(eps))
        if method == "analytic":
            p_a = float(density.region_probability(x, outcome))
            p_b = float(density.region_probability(x_moved, outcome))
            err = 0.0
        else:
            seq_a = np.random.SeedSequence(seed, spawn_key=(idx, 0))
            seq_b = np.random.SeedSequence(seed, spawn_key=(idx, 1))
            est_a = estimate(x, density, n_samples, seq_a)
            est_b = estimate(x_moved, density, n_samples, seq_b)
            p_a = float(est_a.probabilities[outcome - 1])
            p_b = float(est_b.probabilities[outcome - 1])
            err = float(
                np.hypot(
                    standard_error(p_a, n_samples), standard_error(p_b, n_samples)
                )
            )
        measured.append(abs(p_b - p_a))
        predicted.append(abs(delta_i) / eps)
        errors.append(err)
    return RobustnessReport(
        outcome=outcome,
        delta=delta_i,
        epsilon_grid=tuple(grid),
        measured=tuple(measured),
        predicted=tuple(predicted),
        standard_errors=tuple(errors),
        epsilon_tilde=float(epsilon_tilde),
        epsilon_tilde_exact=tilde_exact,
        method=method,
    )


@dataclass(frozen=True)
class DiracLimitReport:
    """Outcome distributions along a shrinking-epsilon sequence."""

    epsilon_sequence: tuple[float, ...]
    distributions: tuple[tuple[float, ...], ...]
    tv_distances: tuple[float, ...]
    target_distribution: tuple[float, ...]

    def rows(self) -> list[dict]:
        return [
            {"epsilon": eps, "tv_distance": tv}
            for eps, tv in zip(self.epsilon_sequence, self.tv_distances)
        ]


def dirac_limit_demo(
    x: BarycentricState,
    points,
    epsilon_sequence,
    n_samples: int = 100_000,
    seed=None,
) -> DiracLimitReport:
    """Shrink ball-shaped breakable zones around `points` and watch the
    outcome distribution converge to the classification of the points.

    The target distribution weighs each point 1/k and assigns it to its
    collapse region (lowest index on a tie). Ball geometry is validated
    at the largest epsilon requested, so overlapping balls or balls
    poking out of the simplex fail before any sampling; smaller epsilons
    reuse the same centres with smaller radii and stay valid.
    """
    if seed is None:
        raise ValueError("the Dirac limit demo samples; it needs a seed")
    points = list(points)
    if len(points) < 1:
        raise ValueError("need at least one point")
    coords = np.array([p.coords for p in points])
    if len(points) > 1:
        gaps = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
        if np.any(gaps[np.triu_indices(len(points), k=1)] == 0.0):
            raise ValueError("points must be pairwise distinct")
    eps_seq = [float(e) for e in epsilon_sequence]
    if any(not 0.0 < e <= 1.0 for e in eps_seq):
        raise ValueError("epsilon values must lie in (0, 1]")
    BallComplement(points, max(eps_seq))  # geometry check at the largest zone

    n = x.n_outcomes
    weight = Fraction(1, len(points))
    target = np.zeros(n)
    for p in points:
        target[region_of(p, x).outcome - 1] += float(weight)

    distributions, tvs = [], []
    for idx, eps in enumerate(eps_seq):
        density = TruncatedUniformDensity(BallComplement(points, eps))
        est = estimate(
            x, density, n_samples, np.random.SeedSequence(seed, spawn_key=(idx,))
        )
        probs = est.probabilities
        distributions.append(tuple(float(p) for p in probs))
        tvs.append(float(0.5 * np.abs(probs - target).sum()))
    return DiracLimitReport(
        epsilon_sequence=tuple(eps_seq),
        distributions=tuple(distributions),
        tv_distances=tuple(tvs),
        target_distribution=tuple(float(t) for t in target),
    )
