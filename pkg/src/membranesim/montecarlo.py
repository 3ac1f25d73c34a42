"""Monte Carlo estimation of collapse probabilities.

Streams are splittable and content-addressed: logical block b of a run
seeded with `seed` always draws from

    numpy.random.default_rng(numpy.random.SeedSequence(seed, spawn_key=(b,)))

with a fixed block size of 2**16 samples. Blocks are the unit of
parallelism, counts merge by integer addition, and the block-to-stream
rule never depends on the worker layout, so a run partitioned over k
workers reproduces the single-threaded counts bit for bit. The same
rule extends downward: callers that need several independent estimates
from one seed pass SeedSequence(seed, spawn_key=(tag,)) instead of an
integer.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .density import Density
from .simplex import BarycentricState, classify_batch

#: samples per logical block; fixed, part of the reproducibility contract
BLOCK_SIZE = 1 << 16
#: two-sided 95% normal quantile used by the Wilson intervals
WILSON_Z = 1.959963984540054
#: rejection-free cap on two-level mask sampling
MAX_UNIVERSAL_CELLS = 30


def substream(seed, block: int) -> np.random.Generator:
    """Generator for logical block `block` of the run seeded by `seed`.

    `seed` may be an int or a SeedSequence; the block index is appended
    to the spawn key, which is the whole splitting rule.
    """
    if isinstance(seed, np.random.SeedSequence):
        base = np.random.SeedSequence(
            entropy=seed.entropy, spawn_key=tuple(seed.spawn_key) + (block,)
        )
    else:
        base = np.random.SeedSequence(seed, spawn_key=(block,))
    return np.random.default_rng(base)


def wilson_interval(count, n_samples: int, z: float = WILSON_Z):
    """Wilson score interval for a binomial proportion; vectorises over
    `count`."""
    count = np.asarray(count, dtype=float)
    p_hat = count / n_samples
    denom = 1.0 + z * z / n_samples
    center = (p_hat + z * z / (2.0 * n_samples)) / denom
    half = (
        z
        * np.sqrt(p_hat * (1.0 - p_hat) / n_samples + z * z / (4.0 * n_samples**2))
        / denom
    )
    lo = np.clip(center - half, 0.0, 1.0)
    hi = np.clip(center + half, 0.0, 1.0)
    # the interval endpoints are analytically exact at the extremes
    lo = np.where(count == 0, 0.0, lo)
    hi = np.where(count == n_samples, 1.0, hi)
    return lo, hi


@dataclass(frozen=True)
class TransitionEstimate:
    """Per-outcome collapse counts with Wilson 95% intervals.

    Breaking points landing on a region boundary are resolved to the
    lowest tied outcome and included in `counts`, so the counts sum to
    `n_samples`; `boundary_hits` reports how many such resolutions
    happened.
    """

    counts: np.ndarray
    boundary_hits: int
    n_samples: int
    probabilities: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray

    @classmethod
    def from_counts(
        cls, counts: np.ndarray, boundary_hits: int, n_samples: int
    ) -> "TransitionEstimate":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.sum() != n_samples:
            raise ValueError("counts must sum to the number of samples")
        lo, hi = wilson_interval(counts, n_samples)
        for arr in (counts, lo, hi):
            arr.flags.writeable = False
        probs = counts / n_samples
        probs.flags.writeable = False
        return cls(
            counts=counts,
            boundary_hits=int(boundary_hits),
            n_samples=int(n_samples),
            probabilities=probs,
            ci_lo=lo,
            ci_hi=hi,
        )

    @property
    def n_outcomes(self) -> int:
        return self.counts.size

    @property
    def ci_half_widths(self) -> np.ndarray:
        return (self.ci_hi - self.ci_lo) / 2.0

    def to_csv_rows(self) -> list[dict]:
        return [
            {
                "outcome_index": i + 1,
                "count": int(self.counts[i]),
                "p_hat": float(self.probabilities[i]),
                "ci_lo": float(self.ci_lo[i]),
                "ci_hi": float(self.ci_hi[i]),
            }
            for i in range(self.n_outcomes)
        ]

    def to_json_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "boundary_hits": self.boundary_hits,
            "outcomes": self.to_csv_rows(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def summary_lines(self) -> list[str]:
        return [
            "outcome {0}: p_hat={1:.6f}  ci95=[{2:.6f}, {3:.6f}]  count={4}".format(
                r["outcome_index"], r["p_hat"], r["ci_lo"], r["ci_hi"], r["count"]
            )
            for r in self.to_csv_rows()
        ]


def _block_sizes(n_samples: int) -> list[int]:
    full, rest = divmod(n_samples, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _run_blocks(worker, sizes, n_outcomes: int, threads: int):
    counts = np.zeros(n_outcomes, dtype=np.int64)
    boundary = 0
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(worker, range(len(sizes)), sizes))
    else:
        results = [worker(b, size) for b, size in enumerate(sizes)]
    for c, b in results:
        counts += c
        boundary += b
    return counts, boundary


def estimate(
    x: BarycentricState,
    rho: Density,
    n_samples: int,
    seed,
    threads: int = 1,
) -> TransitionEstimate:
    """Estimate the collapse probabilities of state `x` under density `rho`.

    Each sample draws a breaking point from `rho` and classifies its
    region; boundary ties resolve to the lowest index and are tallied in
    `boundary_hits`. Deterministic given (x, rho, n_samples, seed),
    whatever the thread count.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if x.n_outcomes != rho.n_outcomes:
        raise ValueError("state dimension does not match the density")
    n = x.n_outcomes

    def worker(block: int, size: int):
        rng = substream(seed, block)
        lams = rho.sample_batch(rng, size)
        outcomes, on_boundary = classify_batch(lams, x)
        return (
            np.bincount(outcomes, minlength=n).astype(np.int64),
            int(on_boundary.sum()),
        )

    counts, boundary = _run_blocks(worker, _block_sizes(n_samples), n, threads)
    return TransitionEstimate.from_counts(counts, boundary, n_samples)


def estimate_universal(
    x: BarycentricState,
    n_cells: int,
    n_mask_draws: int,
    seed,
    samples_per_mask: int = 1,
    threads: int = 1,
) -> TransitionEstimate:
    """Two-level estimate of the mask-averaged collapse probabilities.

    Every draw first picks a cellular structure uniformly among the
    2**n_cells - 1 nonzero masks of the two-outcome segment, then draws
    a breaking point from that structure (uniform over its breakable
    cells, `samples_per_mask` points per picked mask). The estimate
    converges to the uniform-density value as cells and draws grow.
    """
    if x.n_outcomes != 2:
        raise ValueError("two-level estimation runs on the two-outcome segment")
    if n_cells < 1:
        raise ValueError("need at least one cell")
    if n_cells > MAX_UNIVERSAL_CELLS:
        raise ValueError(
            f"uniform nonzero-mask sampling is guaranteed up to "
            f"{MAX_UNIVERSAL_CELLS} cells"
        )
    if n_mask_draws < 1 or samples_per_mask < 1:
        raise ValueError("draw counts must be positive")
    bit_idx = np.arange(n_cells, dtype=np.int64)

    def worker(block: int, size: int):
        rng = substream(seed, block)
        masks = rng.integers(1, 1 << n_cells, size=size, dtype=np.int64)
        bits = ((masks[:, None] >> bit_idx) & 1).astype(np.int64)
        k = bits.sum(axis=1)
        cum = np.cumsum(bits, axis=1)
        counts = np.zeros(2, dtype=np.int64)
        boundary = 0
        for _ in range(samples_per_mask):
            r = rng.integers(0, k)
            cell = (cum <= r[:, None]).sum(axis=1)
            pos = (cell + rng.random(size)) / n_cells
            lams = np.column_stack([pos, 1.0 - pos])
            outcomes, on_boundary = classify_batch(lams, x)
            counts += np.bincount(outcomes, minlength=2).astype(np.int64)
            boundary += int(on_boundary.sum())
        return counts, boundary

    sizes = _block_sizes(n_mask_draws)
    counts, boundary = _run_blocks(worker, sizes, 2, threads)
    return TransitionEstimate.from_counts(
        counts, boundary, n_mask_draws * samples_per_mask
    )


def standard_error(p: float, n_samples: int) -> float:
    """Plain binomial standard error, the usual sigma for tolerance bands."""
    return math.sqrt(max(p * (1.0 - p), 0.0) / n_samples)
