"""Barycentric geometry of the (N-1)-simplex.

Conventions used throughout the package:

* A state is a point x on the simplex
      S_{N-1} = {x in R^N : x_i >= 0, sum_i x_i = 1},
  spanned by N orthonormal vertex vectors. The same representation
  doubles as the breaking point lambda of a membrane stretched over the
  simplex.
* The state splits the simplex into N collapse regions: region i is the
  convex hull of the N vertices with vertex i replaced by x, and a
  break landing in region i collapses the state onto vertex i.
* Region membership is decided by the ratio rule

      region(lam, x) = argmin_j lam_j / x_j,   ratio := +inf if x_j = 0.

  Writing lam = mu*x + sum_{j!=i} nu_j e_j with mu + sum_j nu_j = 1 and
  eliminating mu = lam_i / x_i gives nu_j = lam_j - (lam_i/x_i) x_j, so
  feasibility (all nu_j >= 0) holds exactly when i minimises the ratio.
  `hull_membership` solves that feasibility problem directly with a
  linear program and serves as the independent oracle for the rule.

States built from ints or `fractions.Fraction` keep an exact copy of
their coordinates next to the float view; operations that can stay in
rational arithmetic (tie detection, cellular integrals) do so when both
operands carry exact coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

#: absolute tolerance on the sum-to-one constraint for float coordinates
SUM_TOL = 1e-12
#: relative tolerance for declaring two breaking-point ratios tied
TIE_RTOL = 1e-12


class OutsideSimplexError(ValueError):
    """Point does not lie on the simplex."""


def _as_exact(values) -> tuple[Fraction, ...] | None:
    out = []
    for v in values:
        if isinstance(v, (Fraction, int)) and not isinstance(v, bool):
            out.append(Fraction(v))
        else:
            return None
    return tuple(out)


class BarycentricState:
    """Point on S_{N-1}: N non-negative weights summing to one.

    Floats are validated within SUM_TOL; ints and Fractions must sum to
    exactly one and are retained in `exact_coords` for the exact code
    paths (float view always available in `coords`).
    """

    __slots__ = ("coords", "exact_coords")

    def __init__(self, coords):
        if isinstance(coords, np.ndarray):
            exact = None
        else:
            coords = tuple(coords)
            exact = _as_exact(coords)
        arr = np.array([float(c) for c in coords], dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("a state needs at least two outcome weights")
        if np.any(arr < 0.0):
            raise ValueError("barycentric weights must be non-negative")
        if exact is not None:
            if sum(exact) != 1:
                raise ValueError("exact weights must sum to exactly 1")
        elif abs(arr.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"weights sum to {arr.sum():.17g}, expected 1")
        arr.flags.writeable = False
        self.coords = arr
        self.exact_coords = exact

    @property
    def n_outcomes(self) -> int:
        return self.coords.size

    def __repr__(self) -> str:
        inner = ", ".join(repr(c) for c in (self.exact_coords or self.coords))
        return f"BarycentricState([{inner}])"


@dataclass(frozen=True)
class RegionLabel:
    """Collapse-region classification of a breaking point.

    `indices` holds the 1-based outcome indices attaining the minimal
    ratio, sorted ascending. One index means the point lies strictly
    inside that region; two or more mean the point sits on a boundary
    between regions (a measure-zero tie, reported rather than silently
    resolved).
    """

    indices: tuple[int, ...]

    def __post_init__(self):
        if not self.indices:
            raise ValueError("a region label needs at least one index")
        if self.is_boundary and len(set(self.indices)) < 2:
            raise ValueError("boundary labels need distinct indices")

    @property
    def is_boundary(self) -> bool:
        return len(self.indices) > 1

    @property
    def outcome(self) -> int:
        """Lowest tied index: the deterministic tie-break used by samplers."""
        return self.indices[0]


def region_of(lam: BarycentricState, x: BarycentricState) -> RegionLabel:
    """Classify breaking point `lam` relative to state `x`.

    Exact rational arithmetic is used when both points carry exact
    coordinates; otherwise ties are detected within TIE_RTOL (relative).
    """
    if lam.n_outcomes != x.n_outcomes:
        raise ValueError(
            f"dimension mismatch: {lam.n_outcomes} vs {x.n_outcomes} outcomes"
        )
    if lam.exact_coords is not None and x.exact_coords is not None:
        ratios = [
            lj / xj if xj > 0 else None
            for lj, xj in zip(lam.exact_coords, x.exact_coords)
        ]
        rmin = min(r for r in ratios if r is not None)
        tied = tuple(j + 1 for j, r in enumerate(ratios) if r == rmin)
        return RegionLabel(tied)
    ratios = _breaking_ratios(lam.coords, x.coords)
    rmin = ratios.min()
    tied = np.flatnonzero(ratios <= rmin * (1.0 + TIE_RTOL))
    return RegionLabel(tuple(int(j) + 1 for j in tied))


def _breaking_ratios(lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.divide(lam, x, out=np.full_like(lam, np.inf), where=x > 0)


def classify_batch(
    lams: np.ndarray, x: BarycentricState, tie_rtol: float = TIE_RTOL
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised region classification for a (size, N) batch of points.

    Returns (outcomes, on_boundary): 0-based outcome indices after the
    lowest-index tie-break, and the mask of points whose minimal ratio
    is attained more than once within `tie_rtol`.
    """
    xs = x.coords
    if lams.ndim != 2 or lams.shape[1] != xs.size:
        raise ValueError("batch shape does not match the state dimension")
    ratios = np.divide(
        lams, xs[None, :], out=np.full_like(lams, np.inf), where=xs > 0
    )
    rmin = ratios.min(axis=1)
    outcomes = ratios.argmin(axis=1)
    n_tied = (ratios <= rmin[:, None] * (1.0 + tie_rtol)).sum(axis=1)
    return outcomes, n_tied > 1


def hull_membership(lam: BarycentricState, x: BarycentricState, outcome: int) -> bool:
    """Independent linear-feasibility test that `lam` lies in region `outcome`.

    Solves for mu, nu_j >= 0 with lam = mu*x + sum_{j != outcome} nu_j e_j;
    the affine constraint mu + sum nu_j = 1 is implied because the
    weights sum to one on both sides. Does not use the ratio rule.
    """
    from scipy.optimize import linprog

    n = x.n_outcomes
    if lam.n_outcomes != n:
        raise ValueError("dimension mismatch")
    if not 1 <= outcome <= n:
        raise ValueError(f"outcome must be in 1..{n}")
    a_eq = np.zeros((n, n))
    a_eq[:, 0] = x.coords
    col = 1
    for j in range(n):
        if j != outcome - 1:
            a_eq[j, col] = 1.0
            col += 1
    res = linprog(
        c=np.zeros(n),
        A_eq=a_eq,
        b_eq=lam.coords,
        bounds=[(0, None)] * n,
        method="highs",
    )
    return res.status == 0


@lru_cache(maxsize=None)
def internal_basis(n: int) -> np.ndarray:
    """Orthonormal basis of R^n whose last row is (1, ..., 1)/sqrt(n).

    Row k (1-based, k < n) is the normalised vector with entry k at
    position n-k, -1 at the positions right of it and 0 elsewhere, up to
    a sign chosen so that n = 2 gives z1 = (y1 - y2)/sqrt(2) and n = 3
    gives z1 = (y3 - y2)/sqrt(2), z2 = (2 y1 - y2 - y3)/sqrt(6). The
    first n-1 rows span the directions of the simplex hyperplane, so the
    induced chart is an isometry for points on the simplex.
    """
    if n < 2:
        raise ValueError("need at least two outcomes")
    rows = np.zeros((n, n))
    for k in range(1, n):
        v = np.zeros(n)
        v[n - 1 - k] = k
        v[n - k :] = -1.0
        v *= (-1.0) ** (n - 1 - k) / math.sqrt(k * (k + 1))
        rows[k - 1] = v
    rows[n - 1] = 1.0 / math.sqrt(n)
    rows.flags.writeable = False
    return rows


def to_internal_coords(p: BarycentricState) -> np.ndarray:
    """First N-1 coordinates of `p` in the internal orthonormal basis.

    The last coordinate is constant (1/sqrt(N)) on the simplex and is
    dropped; the map is invertible on the hyperplane sum(y) = 1.
    """
    basis = internal_basis(p.n_outcomes)
    return basis[:-1] @ p.coords


def from_internal_coords(z, n: int) -> BarycentricState:
    """Inverse of `to_internal_coords` for an N-outcome simplex.

    Raises OutsideSimplexError when the reconstructed weights dip below
    zero by more than SUM_TOL; smaller excursions are clipped.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (n - 1,):
        raise ValueError(f"expected {n - 1} internal coordinates, got {z.shape}")
    basis = internal_basis(n)
    y = basis.T @ np.concatenate([z, [1.0 / math.sqrt(n)]])
    if y.min() < -SUM_TOL:
        raise OutsideSimplexError(
            f"point lies outside the simplex (weight {y.min():.3e})"
        )
    return BarycentricState(np.clip(y, 0.0, None))


def from_internal_batch(zs: np.ndarray, n: int) -> np.ndarray:
    """Map a (size, N-1) batch of internal coordinates to barycentric ones.

    No simplex-membership check is performed; callers that may produce
    outside points must validate or reject themselves.
    """
    basis = internal_basis(n)
    grad = basis[:-1, :]
    return zs @ grad + 1.0 / n


def simplex_measure(n: int) -> float:
    """Lebesgue measure of S_{n-1} within its hyperplane: sqrt(n)/(n-1)!."""
    if n < 2:
        raise ValueError("need at least two outcomes")
    return math.sqrt(n) / math.factorial(n - 1)
