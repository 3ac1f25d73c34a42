"""Probability densities over the simplex and their breaking-point samplers.

Five families are provided. The uniform density is the reference
measure; cellular densities are indicator densities, constant on the
breakable cells of a tessellation and zero on the unbreakable ones (1-D
cells on the two-outcome segment, hyperrectangular grid cells in
general); truncated densities vanish on an experimenter-chosen control
region; Dirac mixtures are finite point masses. Analytic variants
expose exact region integrals, every variant exposes sampling.

Orientation of the two-outcome segment: positions are tracked by the
first barycentric coordinate x1 in [0, 1], growing from vertex 2 (left
end) to vertex 1 (right end), and cell indices grow left to right. A
break at position p < x1 lies in region 1 and collapses the state onto
vertex 1; breaks on one side of the state pull it to the opposite end.
The physical cell length is sqrt(2)/n_cells, x1 being an affine
reparametrisation of arc length.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .simplex import (
    BarycentricState,
    from_internal_batch,
    internal_basis,
    region_of,
    simplex_measure,
    to_internal_coords,
)

#: subsample budget per straddling grid cell
GRID_SUBSAMPLES = 256
#: rounds of batched rejection before giving up
MAX_REJECTION_ROUNDS = 10_000


class NotAnalyticError(Exception):
    """The density has no closed-form region integral for this case;
    callers fall back to Monte Carlo estimation."""


@dataclass(frozen=True)
class CellularMask:
    """Breakable/unbreakable assignment for the cells of a tessellation.

    Cell i (1-based) is breakable when breakable[i-1] is True; the
    all-unbreakable assignment is rejected, it produces no outcomes.
    """

    breakable: tuple[bool, ...]

    def __post_init__(self):
        if len(self.breakable) < 1:
            raise ValueError("a mask needs at least one cell")
        if not any(self.breakable):
            raise ValueError("a mask needs at least one breakable cell")

    @classmethod
    def from_string(cls, text: str) -> "CellularMask":
        """Parse a left-to-right cell string of 'b' and 'u' characters."""
        if set(text) - {"b", "u"}:
            raise ValueError(f"mask string must use only 'b'/'u': {text!r}")
        return cls(tuple(c == "b" for c in text))

    @classmethod
    def from_bits(cls, bits: int, n_cells: int) -> "CellularMask":
        """Bit i of `bits` is cell i+1; at least one bit must be set."""
        if not 0 < bits < (1 << n_cells):
            raise ValueError("bits must be a nonzero n_cells-bit pattern")
        return cls(tuple(bool((bits >> i) & 1) for i in range(n_cells)))

    @property
    def n_cells(self) -> int:
        return len(self.breakable)

    @property
    def n_breakable(self) -> int:
        return sum(self.breakable)

    def as_bits(self) -> int:
        return sum(1 << i for i, b in enumerate(self.breakable) if b)

    def __str__(self) -> str:
        return "".join("b" if b else "u" for b in self.breakable)


class Density(abc.ABC):
    """Probability density over S_{N-1} with respect to the hyperplane's
    Lebesgue measure; total mass one."""

    n_outcomes: int

    @abc.abstractmethod
    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` breaking points, returned as a (size, N) array of
        barycentric coordinates. Deterministic given the generator state."""

    def sample(self, rng: np.random.Generator) -> BarycentricState:
        """Draw a single breaking point."""
        return BarycentricState(self.sample_batch(rng, 1)[0])

    def region_probability(self, x: BarycentricState, outcome: int):
        """Integral of the density over collapse region `outcome` of state
        `x`; Fraction on the exact code paths, float otherwise."""
        raise NotAnalyticError(
            f"{type(self).__name__} has no analytic region integral"
        )

    def region_probabilities(self, x: BarycentricState) -> list:
        return [
            self.region_probability(x, i) for i in range(1, self.n_outcomes + 1)
        ]

    def _check_state(self, x: BarycentricState, outcome: int) -> None:
        if x.n_outcomes != self.n_outcomes:
            raise ValueError("state dimension does not match the density")
        if not 1 <= outcome <= self.n_outcomes:
            raise ValueError(f"outcome must be in 1..{self.n_outcomes}")


class UniformDensity(Density):
    """Flat density: every patch of the simplex is equally likely to break.

    Sampling draws a flat Dirichlet vector (normalised unit-rate
    exponentials); because the barycentric-to-internal change of basis
    is orthonormal, this is uniform for the hyperplane's Lebesgue
    measure. The region integrals are the barycentric coordinates of the
    state itself.
    """

    def __init__(self, n_outcomes: int):
        if n_outcomes < 2:
            raise ValueError("need at least two outcomes")
        self.n_outcomes = n_outcomes

    def sample_batch(self, rng, size):
        return rng.dirichlet(np.ones(self.n_outcomes), size=size)

    def region_probability(self, x, outcome):
        self._check_state(x, outcome)
        if x.exact_coords is not None:
            return x.exact_coords[outcome - 1]
        return float(x.coords[outcome - 1])


class Cellular1DDensity(Density):
    """Indicator density on n equal cells of the two-outcome segment.

    The density is 1/(n_breakable * sqrt(2)/n_cells) on breakable cells
    and zero elsewhere; in x1 units each cell is [j/n, (j+1)/n). Region
    integrals are exact Fractions whenever the state carries exact
    coordinates.
    """

    def __init__(self, mask: CellularMask):
        self.mask = mask
        self.n_outcomes = 2
        self._breakable_idx = np.flatnonzero(np.array(mask.breakable))

    def sample_batch(self, rng, size):
        n = self.mask.n_cells
        cells = self._breakable_idx[rng.integers(0, len(self._breakable_idx), size)]
        x1 = (cells + rng.random(size)) / n
        return np.column_stack([x1, 1.0 - x1])

    def region_probability(self, x, outcome):
        self._check_state(x, outcome)
        n = self.mask.n_cells
        if x.exact_coords is not None:
            x1 = x.exact_coords[0]
            cell = Fraction(1, n)
            zero = Fraction(0)
        else:
            x1 = float(x.coords[0])
            cell = 1.0 / n
            zero = 0.0
        overlap = zero
        for j in self._breakable_idx:
            lo = int(j) * cell
            seg = x1 - lo
            if seg <= 0:
                break
            overlap += seg if seg < cell else cell
        p_region_1 = overlap / (self.mask.n_breakable * cell)
        return p_region_1 if outcome == 1 else 1 - p_region_1


class DiracMixtureDensity(Density):
    """Finite mixture of point masses at fixed breaking points.

    Weights default to the uniform mixture 1/k (kept as Fractions so the
    region integrals stay exact); each draw returns one of the support
    points verbatim.
    """

    def __init__(self, points, weights=None):
        points = list(points)
        if not points:
            raise ValueError("need at least one support point")
        n = points[0].n_outcomes
        if any(p.n_outcomes != n for p in points):
            raise ValueError("support points must share a dimension")
        self.n_outcomes = n
        self.points = tuple(points)
        if weights is None:
            weights = [Fraction(1, len(points))] * len(points)
        else:
            weights = list(weights)
            if len(weights) != len(points):
                raise ValueError("one weight per support point")
            if any(w < 0 for w in weights) or sum(weights) == 0:
                raise ValueError("weights must be non-negative, not all zero")
            total = sum(weights)
            weights = [w / total for w in weights]
        self.weights = tuple(weights)
        self._points_arr = np.array([p.coords for p in points])
        self._weights_arr = np.array([float(w) for w in weights])

    def sample_batch(self, rng, size):
        idx = rng.choice(len(self.points), size=size, p=self._weights_arr)
        return self._points_arr[idx]

    def region_probability(self, x, outcome):
        self._check_state(x, outcome)
        total = 0
        for point, w in zip(self.points, self.weights):
            if region_of(point, x).outcome == outcome:
                total += w
        return total


class ControlRegion(abc.ABC):
    """Region of the simplex made unbreakable by the experimenter.

    `epsilon` is the fraction of simplex measure left breakable; the
    control region itself has measure (1 - epsilon) * simplex_measure(N).
    """

    n_outcomes: int
    epsilon: float

    @abc.abstractmethod
    def contains_batch(self, ys: np.ndarray) -> np.ndarray:
        """Mask of points (rows of barycentric coordinates) lying in the
        unbreakable control region."""

    def sample_breakable_batch(self, rng, size) -> np.ndarray | None:
        """Direct sampler for the breakable zone, or None when only
        rejection from the uniform density is available."""
        return None

    def breakable_intervals(self) -> list[tuple[float, float]]:
        """Breakable zone as disjoint x1 intervals (two outcomes only)."""
        raise NotAnalyticError(
            f"{type(self).__name__} has no interval description"
        )

    def min_epsilon_covering(self, states) -> float:
        """Smallest epsilon of this geometry family whose breakable zone
        contains the given states."""
        raise NotImplementedError(
            f"{type(self).__name__} does not define a covering threshold"
        )


class CentroidNeighborhood(ControlRegion):
    """Control region leaving breakable a simplex-shaped neighbourhood of
    the centroid.

    The breakable zone is c + t*(S - c) with t = epsilon**(1/(N-1)), the
    centroid-scaled copy of the simplex with measure fraction epsilon;
    equivalently {y : min_j y_j >= (1 - t)/N}. The zone is convex, so a
    covering epsilon for a set of states covers their convex hull too.
    """

    def __init__(self, n_outcomes: int, epsilon: float):
        if n_outcomes < 2:
            raise ValueError("need at least two outcomes")
        if not 0.0 < epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        self.n_outcomes = n_outcomes
        self.epsilon = float(epsilon)
        self._t = self.epsilon ** (1.0 / (n_outcomes - 1))
        self._threshold = (1.0 - self._t) / n_outcomes

    def contains_batch(self, ys):
        return ys.min(axis=1) < self._threshold

    def sample_breakable_batch(self, rng, size):
        n = self.n_outcomes
        p = rng.dirichlet(np.ones(n), size=size)
        centroid = 1.0 / n
        return centroid + self._t * (p - centroid)

    def breakable_intervals(self):
        if self.n_outcomes != 2:
            raise NotAnalyticError("interval description needs two outcomes")
        return [((1.0 - self._t) / 2.0, (1.0 + self._t) / 2.0)]

    def min_epsilon_covering(self, states):
        n = self.n_outcomes
        worst = max(1.0 - n * float(min(s.coords)) for s in states)
        return float(np.clip(worst, 0.0, 1.0)) ** (n - 1)


class BallComplement(ControlRegion):
    """Control region leaving breakable a union of equal-measure balls.

    Each of the k balls is centred at one of the given points and has
    measure fraction epsilon/k of the simplex. Construction fails when a
    ball leaves the simplex or two balls overlap, so shrinking epsilon
    afterwards always stays valid. Distances are Euclidean between
    barycentric coordinate vectors, which equal internal-chart distances.
    """

    def __init__(self, centers, epsilon: float):
        centers = list(centers)
        if not centers:
            raise ValueError("need at least one ball centre")
        n = centers[0].n_outcomes
        if any(c.n_outcomes != n for c in centers):
            raise ValueError("ball centres must share a dimension")
        if not 0.0 < epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        self.n_outcomes = n
        self.epsilon = float(epsilon)
        self.centers = tuple(centers)
        d = n - 1
        ball_volume = self.epsilon / len(centers) * simplex_measure(n)
        unit_volume = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
        self.radius = (ball_volume / unit_volume) ** (1.0 / d)
        self._centers_arr = np.array([c.coords for c in centers])
        self._centers_z = np.array([to_internal_coords(c) for c in centers])
        face_scale = math.sqrt(1.0 - 1.0 / n)
        for c in centers:
            if float(min(c.coords)) / face_scale < self.radius:
                raise ValueError(
                    f"ball of radius {self.radius:.4g} around {c!r} leaves the simplex"
                )
        for a in range(len(centers)):
            for b in range(a + 1, len(centers)):
                gap = np.linalg.norm(self._centers_arr[a] - self._centers_arr[b])
                if gap <= 2.0 * self.radius:
                    raise ValueError("breakable balls overlap at this epsilon")

    def contains_batch(self, ys):
        dists = np.linalg.norm(
            ys[:, None, :] - self._centers_arr[None, :, :], axis=2
        )
        return dists.min(axis=1) > self.radius

    def sample_breakable_batch(self, rng, size):
        d = self.n_outcomes - 1
        idx = rng.integers(0, len(self.centers), size)
        direction = rng.normal(size=(size, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radii = self.radius * rng.random(size) ** (1.0 / d)
        z = self._centers_z[idx] + direction * radii[:, None]
        ys = from_internal_batch(z, self.n_outcomes)
        return np.clip(ys, 0.0, None)

    def breakable_intervals(self):
        if self.n_outcomes != 2:
            raise NotAnalyticError("interval description needs two outcomes")
        # x1 distance = euclidean distance / sqrt(2) on the segment
        half = self.radius / math.sqrt(2.0)
        return [
            (float(c.coords[0]) - half, float(c.coords[0]) + half)
            for c in sorted(self.centers, key=lambda c: float(c.coords[0]))
        ]


class IntervalControl(ControlRegion):
    """Two-outcome control region specified by its breakable x1 intervals.

    Covers half-space cuts (a single interval touching an end) and any
    finite union of disjoint segments; epsilon is the total breakable
    length since x1 is an affine chart of arc length.
    """

    def __init__(self, breakable: list[tuple[float, float]]):
        ivals = sorted((float(lo), float(hi)) for lo, hi in breakable)
        if not ivals:
            raise ValueError("need at least one breakable interval")
        last = -1.0
        for lo, hi in ivals:
            if not 0.0 <= lo < hi <= 1.0:
                raise ValueError(f"bad interval ({lo}, {hi})")
            if lo < last:
                raise ValueError("breakable intervals must be disjoint")
            last = hi
        self.n_outcomes = 2
        self._intervals = ivals
        self.epsilon = float(sum(hi - lo for lo, hi in ivals))

    @classmethod
    def cut_left(cls, epsilon: float) -> "IntervalControl":
        """Half-space cut: the leftmost fraction 1 - epsilon is controlled."""
        if not 0.0 < epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        return cls([(1.0 - epsilon, 1.0)])

    def contains_batch(self, ys):
        x1 = ys[:, 0]
        inside_breakable = np.zeros(len(ys), dtype=bool)
        for lo, hi in self._intervals:
            inside_breakable |= (x1 >= lo) & (x1 <= hi)
        return ~inside_breakable

    def sample_breakable_batch(self, rng, size):
        lengths = np.array([hi - lo for lo, hi in self._intervals])
        idx = rng.choice(len(self._intervals), size=size, p=lengths / lengths.sum())
        los = np.array([lo for lo, _ in self._intervals])
        x1 = los[idx] + rng.random(size) * lengths[idx]
        return np.column_stack([x1, 1.0 - x1])

    def breakable_intervals(self):
        return list(self._intervals)


class PredicateControl(ControlRegion):
    """Arbitrary control region given by a membership predicate.

    Only Monte Carlo sampling is supported; `epsilon` must be supplied by
    the caller and is trusted.
    """

    def __init__(self, n_outcomes: int, epsilon: float, predicate):
        if not 0.0 < epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        self.n_outcomes = n_outcomes
        self.epsilon = float(epsilon)
        self._predicate = predicate

    def contains_batch(self, ys):
        return np.fromiter(
            (bool(self._predicate(y)) for y in ys), dtype=bool, count=len(ys)
        )


class TruncatedUniformDensity(Density):
    """Uniform density forced to zero on a control region.

    The value is (N-1)!/(epsilon * sqrt(N)) on the breakable zone and
    zero on the control region. Region integrals are exact for two
    outcomes whenever the geometry has an interval description;
    elsewhere Monte Carlo is the route.
    """

    def __init__(self, control: ControlRegion):
        self.control = control
        self.n_outcomes = control.n_outcomes
        self.epsilon = control.epsilon

    def sample_batch(self, rng, size):
        direct = self.control.sample_breakable_batch(rng, size)
        if direct is not None:
            return direct
        return _rejection_sample(
            UniformDensity(self.n_outcomes),
            lambda ys: ~self.control.contains_batch(ys),
            rng,
            size,
        )

    def region_probability(self, x, outcome):
        self._check_state(x, outcome)
        if self.n_outcomes != 2:
            raise NotAnalyticError(
                "exact truncated-uniform integrals cover two outcomes only"
            )
        intervals = self.control.breakable_intervals()
        x1 = float(x.coords[0])
        total = sum(hi - lo for lo, hi in intervals)
        below = sum(max(0.0, min(hi, x1) - lo) for lo, hi in intervals)
        p_region_1 = below / total
        return p_region_1 if outcome == 1 else 1.0 - p_region_1


class TruncatedDensity(Density):
    """Truncation of an arbitrary base density by rejection.

    Draws from the base density are kept when they avoid the control
    region, which renormalises the base on the breakable zone without
    needing its controlled mass in closed form.
    """

    def __init__(self, base: Density, control: ControlRegion):
        if base.n_outcomes != control.n_outcomes:
            raise ValueError("control region dimension does not match density")
        self.base = base
        self.control = control
        self.n_outcomes = base.n_outcomes

    def sample_batch(self, rng, size):
        return _rejection_sample(
            self.base,
            lambda ys: ~self.control.contains_batch(ys),
            rng,
            size,
        )


def _rejection_sample(base: Density, accept, rng, size) -> np.ndarray:
    out = np.empty((size, base.n_outcomes))
    filled = 0
    for _ in range(MAX_REJECTION_ROUNDS):
        want = size - filled
        draw = base.sample_batch(rng, max(want, 32))
        good = draw[accept(draw)][:want]
        out[filled : filled + len(good)] = good
        filled += len(good)
        if filled == size:
            return out
    raise RuntimeError(
        "rejection sampling failed; the breakable zone carries almost no mass"
    )


def truncate(rho: Density, control: ControlRegion) -> Density:
    """Zero out `rho` on the control region and renormalise.

    With epsilon = 1 the control region is empty and `rho` is returned
    unchanged. A control region absorbing all of a Dirac mixture's mass
    raises ValueError (degenerate truncation).
    """
    if rho.n_outcomes != control.n_outcomes:
        raise ValueError("control region dimension does not match density")
    if control.epsilon >= 1.0:
        return rho
    if isinstance(rho, UniformDensity):
        return TruncatedUniformDensity(control)
    if isinstance(rho, DiracMixtureDensity):
        ys = np.array([p.coords for p in rho.points])
        keep = ~control.contains_batch(ys)
        if not keep.any():
            raise ValueError(
                "degenerate truncation: the control region absorbs all mass"
            )
        points = [p for p, k in zip(rho.points, keep) if k]
        weights = [w for w, k in zip(rho.weights, keep) if k]
        return DiracMixtureDensity(points, weights)
    return TruncatedDensity(rho, control)


class CellularGridDensity(Density):
    """Indicator density on an axis-aligned grid over the simplex's
    enclosing box in internal coordinates.

    Cell weights are the Lebesgue measure of the cell-simplex overlap:
    exact for cells entirely inside or outside the simplex (the
    barycentric coordinate functions are affine in the chart, so box
    corners decide), estimated with a fixed stratified lattice of
    GRID_SUBSAMPLES points for straddling cells. Cells outside the
    simplex carry weight zero whatever the mask says. Region integrals
    attribute straddling cells fractionally with the same lattice; they
    are approximations meant for discretisation demos, not for exactness
    claims.
    """

    def __init__(self, n_outcomes: int, resolution: int, mask=None):
        if n_outcomes < 2:
            raise ValueError("need at least two outcomes")
        if resolution < 1:
            raise ValueError("resolution must be positive")
        self.n_outcomes = n_outcomes
        self.resolution = resolution
        d = n_outcomes - 1
        vertices_z = internal_basis(n_outcomes)[:-1, :].T  # vertex j = row j
        lo = vertices_z.min(axis=0)
        hi = vertices_z.max(axis=0)
        self._box_lo = lo
        self._box_hi = hi
        self._widths = (hi - lo) / resolution
        n_cells = resolution**d
        if mask is None:
            breakable = np.ones(n_cells, dtype=bool)
        else:
            breakable = np.asarray(list(mask), dtype=bool)
            if breakable.size != n_cells:
                raise ValueError(f"mask must cover {n_cells} grid cells")
            if not breakable.any():
                raise ValueError("a mask needs at least one breakable cell")
        self.mask = breakable
        side = max(2, math.ceil(GRID_SUBSAMPLES ** (1.0 / d)))
        self._lattice = _unit_lattice(d, side)
        self._corners = _unit_lattice(d, 2, midpoints=False)
        self._weights = np.array(
            [self._overlap_fraction(c) for c in range(n_cells)]
        ) * float(np.prod(self._widths))
        total = float(self._weights[breakable].sum())
        if total <= 0.0:
            raise ValueError("no breakable cell intersects the simplex")
        self._total_breakable = total

    def _cell_origin(self, cell: int) -> np.ndarray:
        d = self.n_outcomes - 1
        idx = np.empty(d, dtype=int)
        rem = cell
        for axis in range(d):
            idx[axis] = rem % self.resolution
            rem //= self.resolution
        return self._box_lo + idx * self._widths

    def _cell_points(self, cell: int, rel: np.ndarray) -> np.ndarray:
        return self._cell_origin(cell) + rel * self._widths

    def _overlap_fraction(self, cell: int) -> float:
        corners = self._cell_points(cell, self._corners)
        ys = from_internal_batch(corners, self.n_outcomes)
        if ys.min() >= 0.0:
            return 1.0
        if (ys.max(axis=0) < 0.0).any():
            return 0.0
        pts = self._cell_points(cell, self._lattice)
        ys = from_internal_batch(pts, self.n_outcomes)
        return float((ys.min(axis=1) >= 0.0).mean())

    def sample_batch(self, rng, size):
        cells = np.flatnonzero(self.mask & (self._weights > 0.0))
        probs = self._weights[cells] / self._total_breakable
        chosen = cells[rng.choice(len(cells), size=size, p=probs)]
        out = np.empty((size, self.n_outcomes))
        pending = np.arange(size)
        for _ in range(MAX_REJECTION_ROUNDS):
            rel = rng.random((len(pending), self.n_outcomes - 1))
            origins = np.array([self._cell_origin(c) for c in chosen[pending]])
            z = origins + rel * self._widths
            ys = from_internal_batch(z, self.n_outcomes)
            ok = ys.min(axis=1) >= 0.0
            out[pending[ok]] = ys[ok]
            pending = pending[~ok]
            if len(pending) == 0:
                return out
        raise RuntimeError("grid cell rejection sampling failed")

    def region_probability(self, x, outcome):
        self._check_state(x, outcome)
        from .simplex import classify_batch

        attributed = 0.0
        total = 0.0
        for cell in np.flatnonzero(self.mask & (self._weights > 0.0)):
            pts = self._cell_points(cell, self._lattice)
            ys = from_internal_batch(pts, self.n_outcomes)
            inside = ys.min(axis=1) >= 0.0
            if not inside.any():
                continue
            outcomes, _ = classify_batch(ys[inside], x)
            vol = float(np.prod(self._widths))
            total += vol * inside.mean()
            attributed += vol * (
                (outcomes == outcome - 1).sum() / len(self._lattice)
            )
        return attributed / total


def _unit_lattice(d: int, side: int, midpoints: bool = True) -> np.ndarray:
    if midpoints:
        axis = (np.arange(side) + 0.5) / side
    else:
        axis = np.linspace(0.0, 1.0, side)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def cellular_approximation(target_cdf, m: int, ell: int) -> Cellular1DDensity:
    """Cellular density on m*ell cells approximating a target on the segment.

    `target_cdf` maps the first barycentric coordinate in [0, 1] to
    cumulative probability, with cdf(0) = 0 and cdf(1) = 1. Each of the
    m blocks holds ell elementary cells; block i receives
    round(ell * p_i / p_max) breakable cells, filled leftmost-first, so
    after global renormalisation the breakable fraction of each block is
    a denominator-(m*ell) rational approximation of the block mass p_i.
    The block-sum error shrinks like 1/ell and the within-block rest
    like 1/m.
    """
    if m < 1 or ell < 1:
        raise ValueError("m and ell must be positive")
    masses = []
    prev = 0.0
    for i in range(1, m + 1):
        cur = float(target_cdf(i / m))
        masses.append(max(0.0, cur - prev))
        prev = cur
    if abs(sum(masses) - 1.0) > 1e-9:
        raise ValueError("target_cdf must increase from 0 to 1 on [0, 1]")
    p_max = max(masses)
    if p_max <= 0.0:
        raise ValueError("target density has no mass")
    bits: list[bool] = []
    for p in masses:
        count = round(ell * p / p_max)
        bits.extend([True] * count + [False] * (ell - count))
    return Cellular1DDensity(CellularMask(tuple(bits)))


def density_from_spec(spec, n_outcomes: int | None = None) -> Density:
    """Build a density from the tagged dictionary used by config files.

    Supported variants:

    - {"type": "uniform"}
    - {"type": "cellular1d", "mask": "bub..."}
    - {"type": "dirac", "points": [[...], ...], "weights": [...]?}
    - {"type": "grid", "resolution": r, "mask": [...]?}
    - {"type": "truncated-uniform", "epsilon": e, "control": {...}}

    Control regions: {"type": "centroid"}, {"type": "balls",
    "centers": [[...], ...]}, {"type": "intervals",
    "breakable": [[lo, hi], ...]}. The plain string "uniform" is accepted
    as shorthand for the uniform variant.
    """
    if isinstance(spec, str):
        spec = {"type": spec}
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError("density spec must be a dict with a 'type' tag")
    kind = spec["type"]
    if kind == "uniform":
        if n_outcomes is None:
            raise ValueError("uniform density needs the number of outcomes")
        return UniformDensity(n_outcomes)
    if kind == "cellular1d":
        return Cellular1DDensity(CellularMask.from_string(spec["mask"]))
    if kind == "dirac":
        points = [BarycentricState(p) for p in spec["points"]]
        return DiracMixtureDensity(points, spec.get("weights"))
    if kind == "grid":
        if n_outcomes is None:
            raise ValueError("grid density needs the number of outcomes")
        return CellularGridDensity(
            n_outcomes, int(spec["resolution"]), spec.get("mask")
        )
    if kind == "truncated-uniform":
        if n_outcomes is None:
            raise ValueError("truncated density needs the number of outcomes")
        control = control_from_spec(
            spec["control"], n_outcomes, float(spec["epsilon"])
        )
        return truncate(UniformDensity(n_outcomes), control)
    raise ValueError(f"unknown density type {kind!r}")


def control_from_spec(spec, n_outcomes: int, epsilon: float) -> ControlRegion:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError("control spec must be a dict with a 'type' tag")
    kind = spec["type"]
    if kind == "centroid":
        return CentroidNeighborhood(n_outcomes, epsilon)
    if kind == "balls":
        centers = [BarycentricState(c) for c in spec["centers"]]
        return BallComplement(centers, epsilon)
    if kind == "intervals":
        return IntervalControl([tuple(iv) for iv in spec["breakable"]])
    raise ValueError(f"unknown control region type {kind!r}")
