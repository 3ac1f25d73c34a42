"""Exact mask-averaged collapse probabilities for cellular structures.

All 2**n - 1 nonzero breakable/unbreakable assignments of an n-cell
structure are enumerated with integer bookkeeping and the averages are
Fractions, never floats. Cells are numbered 1..n left to right and cell
c maps to bit c-1 of the mask integer. With the state at contact point
i (so i cells lie to its left), a break in one of the k_i breakable
cells on the right pulls the state to the left end, hence

    P(i -> left | mask) = k_i / k,

where k is the total breakable count. Averaging that over every nonzero
mask reproduces the all-breakable value (n - i)/n for every n, which is
what makes the uniform average of all cellular structures behave like
the uniformly breakable one.

The same enumeration covers higher-dimensional tessellations: order the
i cells outside a target region before the n_c - i cells inside it on a
line, and the probability that a breakable cell inside the region
breaks is again k_i / k.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .density import CellularMask

#: guard on full-mask enumeration; 2**24 masks take a few seconds
MAX_ENUMERABLE_CELLS = 24
#: masks visited per chunk during enumeration
_CHUNK = 1 << 20

_POP16 = np.zeros(1 << 16, dtype=np.uint8)
for _b in range(16):
    _POP16[1 << _b : 1 << (_b + 1)] = _POP16[: 1 << _b] + 1


def _popcount(a: np.ndarray) -> np.ndarray:
    return _POP16[a & 0xFFFF].astype(np.int64) + _POP16[(a >> 16) & 0xFFFF]


@dataclass(frozen=True)
class ElasticConfiguration1D:
    """An n-cell structure with the state at the contact point between
    cells `position` and `position + 1`.

    End positions are excluded: they are eigenstates, unaffected by a
    measurement.
    """

    mask: CellularMask
    position: int

    def __post_init__(self):
        if not 1 <= self.position <= self.mask.n_cells - 1:
            raise ValueError(
                f"position must be in 1..{self.mask.n_cells - 1}"
            )


def _check_target(target: str) -> None:
    if target not in ("left", "right"):
        raise ValueError("target must be 'left' or 'right'")


def transition_probability_1d(
    config: ElasticConfiguration1D, target: str = "left"
) -> Fraction:
    """Exact collapse probability of a single cellular configuration.

    `target` is the end the state is pulled to: 'left' (end 0) or
    'right' (end n). Breaks right of the contact point pull left, so
    P(left) counts breakable cells right of the position.
    """
    _check_target(target)
    bits = config.mask.as_bits()
    k = config.mask.n_breakable
    k_right = (bits >> config.position).bit_count()
    p_left = Fraction(k_right, k)
    return p_left if target == "left" else 1 - p_left


def _check_enumerable(n: int) -> None:
    if n > MAX_ENUMERABLE_CELLS:
        raise ValueError(
            f"enumeration over 2**{n} masks exceeds the default bound of "
            f"{MAX_ENUMERABLE_CELLS} cells"
        )


def _suffix_sums(n: int, shift: int) -> np.ndarray:
    """Per-k sums of popcount(mask >> shift) over all nonzero n-bit masks.

    Entry k of the result is sum over masks with k breakable cells of
    the number of breakable cells right of the first `shift` cells;
    bucketing by k lets the Fraction arithmetic happen on n terms
    instead of 2**n.
    """
    sums = np.zeros(n + 1, dtype=np.int64)
    for start in range(1, 1 << n, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        k = _popcount(masks)
        k_right = _popcount(masks >> shift)
        sums += np.bincount(k, weights=k_right, minlength=n + 1).astype(np.int64)
    return sums


def universal_average_1d(n: int, i: int, target: str = "left") -> Fraction:
    """Average collapse probability over all 2**n - 1 nonzero masks.

    Enumerates every mask of an n-cell structure with the state at
    contact point i and averages P(i -> target | mask) exactly. The
    result equals the all-breakable value, (n - i)/n for the left end.
    """
    _check_target(target)
    if n < 2:
        raise ValueError("need at least two cells for an interior position")
    if not 1 <= i <= n - 1:
        raise ValueError(f"position must be in 1..{n - 1}")
    _check_enumerable(n)
    sums = _suffix_sums(n, i)
    p_left = sum(
        (Fraction(int(sums[k]), k) for k in range(1, n + 1)), Fraction(0)
    ) / (2**n - 1)
    return p_left if target == "left" else 1 - p_left


def universal_average_abstract(n_cells: int, cells_in_complement: int) -> Fraction:
    """Mask-averaged probability that a breakable cell inside a target
    region breaks, for a tessellation linearised as n_cells cells with
    the complement's `cells_in_complement` cells placed first.

    Equals (n_cells - cells_in_complement)/n_cells exactly; the edge
    positions 0 and n_cells (empty complement or empty region) are
    allowed and give 1 and 0.
    """
    n, i = n_cells, cells_in_complement
    if n < 1:
        raise ValueError("need at least one cell")
    if not 0 <= i <= n:
        raise ValueError(f"complement size must be in 0..{n}")
    _check_enumerable(n)
    sums = _suffix_sums(n, i)
    return sum(
        (Fraction(int(sums[k]), k) for k in range(1, n + 1)), Fraction(0)
    ) / (2**n - 1)


def binomial_identity_a(n: int) -> tuple[Fraction, Fraction]:
    """Sum of k/(k+1) * C(n, k) versus its closed form (2**n (n-1) + 1)/(n+1).

    The left side is summed term by term in exact arithmetic, the right
    side instantiated independently; a mismatch raises.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    lhs = sum(
        (Fraction(k, k + 1) * comb(n, k) for k in range(n + 1)), Fraction(0)
    )
    rhs = Fraction((1 << n) * (n - 1) + 1, n + 1)
    if lhs != rhs:
        raise ArithmeticError(f"identity failed at n={n}: {lhs} != {rhs}")
    return lhs, rhs


def binomial_identity_b(n: int) -> tuple[Fraction, Fraction]:
    """Sum of 1/(k+1) * C(n, k) versus its closed form (2**(n+1) - 1)/(n+1)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    lhs = sum(
        (Fraction(1, k + 1) * comb(n, k) for k in range(n + 1)), Fraction(0)
    )
    rhs = Fraction((1 << (n + 1)) - 1, n + 1)
    if lhs != rhs:
        raise ArithmeticError(f"identity failed at n={n}: {lhs} != {rhs}")
    return lhs, rhs


@dataclass(frozen=True)
class RecurrenceReport:
    """Enumerated and closed-form values for one induction step i -> i+1.

    Sums over masks (always the 2**n - 1 nonzero ones) of left-end
    collapse probabilities, the split at cell i+1, and the per-mask
    difference law. `index_convention` records which binomial form the
    enumerated difference sum matched: "n-1" stands for
    -sum_{k=0}^{n-1} C(n-1, k)/(k+1), "n" for the same form with n.
    """

    n: int
    i: int
    sum_at_i: Fraction
    sum_at_i_closed: Fraction
    sum_at_i_plus_1: Fraction
    sum_at_i_plus_1_closed: Fraction
    unbreakable_split_sum: Fraction
    unbreakable_shifted_sum: Fraction
    difference_sum: Fraction
    difference_sum_closed: Fraction
    difference_binomial_nm1: Fraction
    difference_binomial_n: Fraction
    per_mask_difference_law_holds: bool
    index_convention: str
    all_match: bool

    def as_dict(self) -> dict:
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, Fraction):
                out[key] = str(val)
        return out


def recurrence_step_check(n: int, i: int) -> RecurrenceReport:
    """Verify one induction step of the mask-average identity by brute force.

    Enumerates all nonzero n-cell masks and checks, exactly: the sums of
    P(i -> left) and P(i+1 -> left) against (2**n - 1)(n - i)/n and the
    i+1 analogue; that masks with an unbreakable cell i+1 contribute the
    same at both positions; that every mask with a breakable cell i+1
    satisfies P(i+1 -> left) - P(i -> left) = -1/k; and that the total
    difference sum equals -(2**n - 1)/n, reconciling the two candidate
    binomial index conventions.
    """
    if n < 3:
        raise ValueError("an induction step needs at least three cells")
    if not 1 <= i <= n - 2:
        raise ValueError(f"position must be in 1..{n - 2}")
    _check_enumerable(n)

    sums_i = np.zeros(n + 1, dtype=np.int64)
    sums_i1 = np.zeros(n + 1, dtype=np.int64)
    sums_u_i1 = np.zeros(n + 1, dtype=np.int64)
    sums_u_i = np.zeros(n + 1, dtype=np.int64)
    count_b = np.zeros(n + 1, dtype=np.int64)
    difference_law = True
    for start in range(1, 1 << n, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        k = _popcount(masks)
        ki = _popcount(masks >> i)
        ki1 = _popcount(masks >> (i + 1))
        bit = ((masks >> i) & 1).astype(bool)
        sums_i += np.bincount(k, weights=ki, minlength=n + 1).astype(np.int64)
        sums_i1 += np.bincount(k, weights=ki1, minlength=n + 1).astype(np.int64)
        sums_u_i1 += np.bincount(
            k[~bit], weights=ki1[~bit], minlength=n + 1
        ).astype(np.int64)
        sums_u_i += np.bincount(
            k[~bit], weights=ki[~bit], minlength=n + 1
        ).astype(np.int64)
        count_b += np.bincount(k[bit], minlength=n + 1).astype(np.int64)
        difference_law &= bool(np.all((ki - ki1)[bit] == 1))
        difference_law &= bool(np.all((ki - ki1)[~bit] == 0))

    def bucket_total(sums: np.ndarray) -> Fraction:
        return sum(
            (Fraction(int(sums[k]), k) for k in range(1, n + 1)), Fraction(0)
        )

    total = (1 << n) - 1
    sum_at_i = bucket_total(sums_i)
    sum_at_i1 = bucket_total(sums_i1)
    unbreakable_split = bucket_total(sums_u_i1)
    unbreakable_shifted = bucket_total(sums_u_i)
    difference = -sum(
        (Fraction(int(count_b[k]), k) for k in range(1, n + 1)), Fraction(0)
    )
    closed_i = total * Fraction(n - i, n)
    closed_i1 = total * Fraction(n - i - 1, n)
    closed_diff = -Fraction(total, n)
    binom_nm1 = -sum(
        (Fraction(comb(n - 1, k), k + 1) for k in range(n)), Fraction(0)
    )
    binom_n = -sum(
        (Fraction(comb(n, k), k + 1) for k in range(n + 1)), Fraction(0)
    )
    if difference == binom_nm1:
        convention = "n-1"
    elif difference == binom_n:
        convention = "n"
    else:
        convention = "neither"
    all_match = (
        sum_at_i == closed_i
        and sum_at_i1 == closed_i1
        and unbreakable_split == unbreakable_shifted
        and difference == closed_diff
        and difference_law
        and convention == "n-1"
    )
    return RecurrenceReport(
        n=n,
        i=i,
        sum_at_i=sum_at_i,
        sum_at_i_closed=closed_i,
        sum_at_i_plus_1=sum_at_i1,
        sum_at_i_plus_1_closed=closed_i1,
        unbreakable_split_sum=unbreakable_split,
        unbreakable_shifted_sum=unbreakable_shifted,
        difference_sum=difference,
        difference_sum_closed=closed_diff,
        difference_binomial_nm1=binom_nm1,
        difference_binomial_n=binom_n,
        per_mask_difference_law_holds=difference_law,
        index_convention=convention,
        all_match=all_match,
    )


def theorem_report(max_cells: int) -> dict:
    """JSON-ready table of mask averages versus uniform values for every
    cell count up to `max_cells` and every interior position."""
    rows = []
    for n in range(2, max_cells + 1):
        for i in range(1, n):
            avg = universal_average_1d(n, i)
            uniform = Fraction(n - i, n)
            rows.append(
                {
                    "n_cells": n,
                    "position": i,
                    "average": str(avg),
                    "uniform": str(uniform),
                    "equal": avg == uniform,
                }
            )
    return {"max_cells": max_cells, "rows": rows}


def identity_report(n_max: int) -> dict:
    """JSON-ready table of both binomial identities for n up to n_max."""
    rows = []
    for n in range(n_max + 1):
        lhs_a, rhs_a = binomial_identity_a(n)
        lhs_b, rhs_b = binomial_identity_b(n)
        rows.append(
            {
                "n": n,
                "lhs_a": str(lhs_a),
                "rhs_a": str(rhs_a),
                "equal_a": lhs_a == rhs_a,
                "lhs_b": str(lhs_b),
                "rhs_b": str(rhs_b),
                "equal_b": lhs_b == rhs_b,
            }
        )
    return {"n_max": n_max, "rows": rows}
