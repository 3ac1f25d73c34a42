import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from membranesim.density import (
    BallComplement,
    Cellular1DDensity,
    CellularGridDensity,
    CellularMask,
    CentroidNeighborhood,
    DiracMixtureDensity,
    IntervalControl,
    NotAnalyticError,
    PredicateControl,
    TruncatedDensity,
    TruncatedUniformDensity,
    UniformDensity,
    cellular_approximation,
    density_from_spec,
    truncate,
)
from membranesim.montecarlo import estimate
from membranesim.simplex import BarycentricState, classify_batch


def random_state(rng, n):
    return BarycentricState(rng.dirichlet(np.ones(n)))


class TestCellularMask:
    def test_needs_a_breakable_cell(self):
        with pytest.raises(ValueError):
            CellularMask((False, False))

    def test_string_round_trip(self):
        mask = CellularMask.from_string("bub")
        assert str(mask) == "bub"
        assert mask.n_cells == 3
        assert mask.n_breakable == 2
        assert CellularMask.from_bits(mask.as_bits(), 3) == mask

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            CellularMask.from_string("bxu")
        with pytest.raises(ValueError):
            CellularMask.from_bits(0, 3)


class TestUniformDensity:
    def test_region_probability_is_the_coordinate(self):
        rng = np.random.default_rng(1)
        for n in range(2, 7):
            rho = UniformDensity(n)
            for _ in range(100):
                x = random_state(rng, n)
                for i in range(1, n + 1):
                    assert rho.region_probability(x, i) == x.coords[i - 1]

    def test_exact_states_give_exact_values(self):
        rho = UniformDensity(3)
        x = BarycentricState([Fraction(1, 3)] * 3)
        assert rho.region_probability(x, 2) == Fraction(1, 3)

    def test_center_of_three_outcomes(self):
        rho = UniformDensity(3)
        x = BarycentricState([1 / 3, 1 / 3, 1 / 3])
        assert rho.region_probabilities(x) == pytest.approx([1 / 3] * 3)

    def test_sampler_is_uniform_on_the_segment(self):
        draws = UniformDensity(2).sample_batch(np.random.default_rng(42), 100_000)
        ks = stats.kstest(draws[:, 0], "uniform")
        assert ks.statistic < 1.6276 / math.sqrt(len(draws))

    def test_sampler_stays_on_simplex(self):
        draws = UniformDensity(5).sample_batch(np.random.default_rng(0), 1000)
        assert draws.min() >= 0
        assert np.abs(draws.sum(axis=1) - 1.0).max() < 1e-12


class TestCellular1D:
    def test_two_cell_left_breakable_at_midpoint(self):
        # left cell breaking sends the state to the right vertex
        rho = Cellular1DDensity(CellularMask.from_string("bu"))
        x = BarycentricState([Fraction(1, 2), Fraction(1, 2)])
        assert rho.region_probability(x, 1) == 1
        assert rho.region_probability(x, 2) == 0

    def test_support_restriction(self):
        rho = Cellular1DDensity(CellularMask.from_string("bu"))
        draws = rho.sample_batch(np.random.default_rng(0), 5000)
        assert draws[:, 0].max() < 0.5

    def test_exact_mass_conservation(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n_cells = int(rng.integers(1, 12))
            bits = int(rng.integers(1, 2**n_cells))
            rho = Cellular1DDensity(CellularMask.from_bits(bits, n_cells))
            num = int(rng.integers(0, 1000))
            x = BarycentricState([Fraction(num, 1000), Fraction(1000 - num, 1000)])
            total = rho.region_probability(x, 1) + rho.region_probability(x, 2)
            assert total == 1

    def test_matches_direct_integration(self):
        rho = Cellular1DDensity(CellularMask.from_string("bubb"))
        x = BarycentricState([Fraction(5, 8), Fraction(3, 8)])
        # breakable length in [0, 5/8]: 1/4 (first cell) + 1/8 (third cell)
        assert rho.region_probability(x, 1) == Fraction(3, 8) / Fraction(3, 4)


class TestDiracMixture:
    def test_point_mass_sampling(self):
        lam = BarycentricState([0.25, 0.35, 0.4])
        rho = DiracMixtureDensity([lam])
        draws = rho.sample_batch(np.random.default_rng(0), 64)
        assert np.array_equal(draws, np.tile(lam.coords, (64, 1)))

    def test_deterministic_region_probability(self):
        lam = BarycentricState([0.6, 0.1, 0.3])
        x = BarycentricState([Fraction(1, 3)] * 3)
        rho = DiracMixtureDensity([lam])
        assert rho.region_probabilities(x) == [0, 1, 0]

    def test_mixture_weights(self):
        pts = [BarycentricState([0.5, 0.3, 0.2]), BarycentricState([0.2, 0.5, 0.3])]
        rho = DiracMixtureDensity(pts)
        x = BarycentricState([Fraction(1, 3)] * 3)
        probs = rho.region_probabilities(x)
        assert probs == [Fraction(1, 2), 0, Fraction(1, 2)]


SAMPLER_CASES = [
    lambda: (UniformDensity(3), 3),
    lambda: (Cellular1DDensity(CellularMask.from_string("bubb")), 2),
    lambda: (TruncatedUniformDensity(IntervalControl.cut_left(0.5)), 2),
    lambda: (TruncatedUniformDensity(CentroidNeighborhood(2, 0.4)), 2),
    lambda: (
        DiracMixtureDensity(
            [BarycentricState([0.5, 0.3, 0.2]), BarycentricState([0.2, 0.5, 0.3])]
        ),
        3,
    ),
]


@pytest.mark.parametrize("case", range(len(SAMPLER_CASES)))
def test_sampler_matches_analytic_integrals(case):
    rho, n = SAMPLER_CASES[case]()
    n_samples = 200_000
    for trial in range(3):
        x = random_state(np.random.default_rng(17 * case + trial), n)
        est = estimate(x, rho, n_samples, seed=1000 * case + trial)
        for i in range(1, n + 1):
            p = float(rho.region_probability(x, i))
            se = math.sqrt(max(p * (1 - p), 1e-12) / n_samples)
            assert abs(est.probabilities[i - 1] - p) <= 4 * se + 1e-9


@pytest.mark.slow
@pytest.mark.parametrize("case", range(len(SAMPLER_CASES)))
def test_sampler_matches_analytic_integrals_bulk(case):
    """Full-size invariant: 20 random states, a million samples each."""
    rho, n = SAMPLER_CASES[case]()
    n_samples = 1_000_000
    for trial in range(20):
        x = random_state(np.random.default_rng(17 * case + trial), n)
        est = estimate(x, rho, n_samples, seed=5000 * case + trial, threads=4)
        for i in range(1, n + 1):
            p = float(rho.region_probability(x, i))
            se = math.sqrt(max(p * (1 - p), 1e-12) / n_samples)
            assert abs(est.probabilities[i - 1] - p) <= 4 * se + 1e-9


class TestTruncation:
    def test_epsilon_one_is_identity(self):
        rho = UniformDensity(3)
        assert truncate(rho, CentroidNeighborhood(3, 1.0)) is rho

    def test_left_cut_matches_piecewise_integration(self):
        eps = 0.5
        rho = truncate(UniformDensity(2), IntervalControl.cut_left(eps))
        for x1 in (0.55, 0.75, 0.9, 1.0):
            x = BarycentricState([x1, 1.0 - x1])
            expected = max(0.0, x1 - (1.0 - eps)) / eps
            assert rho.region_probability(x, 1) == pytest.approx(expected)

    def test_interval_mass_conservation(self):
        rho = TruncatedUniformDensity(
            IntervalControl([(0.1, 0.3), (0.6, 0.9)])
        )
        x = BarycentricState([0.65, 0.35])
        total = rho.region_probability(x, 1) + rho.region_probability(x, 2)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_no_analytic_path_beyond_two_outcomes(self):
        rho = TruncatedUniformDensity(CentroidNeighborhood(3, 0.5))
        with pytest.raises(NotAnalyticError):
            rho.region_probability(BarycentricState([1 / 3, 1 / 3, 1 / 3]), 1)

    def test_shrinking_ball_concentrates_samples(self):
        lam = BarycentricState([0.45, 0.3, 0.25])
        spreads = []
        for eps in (0.3, 0.05, 0.005):
            rho = truncate(UniformDensity(3), BallComplement([lam], eps))
            draws = rho.sample_batch(np.random.default_rng(3), 2000)
            spreads.append(np.linalg.norm(draws - lam.coords, axis=1).max())
        assert spreads[0] > spreads[1] > spreads[2]
        assert spreads[2] < 0.05

    def test_dirac_truncation_renormalises(self):
        pts = [BarycentricState([0.2, 0.8]), BarycentricState([0.9, 0.1])]
        rho = truncate(DiracMixtureDensity(pts), IntervalControl([(0.85, 0.95)]))
        assert len(rho.points) == 1
        assert rho.weights == (Fraction(1),)

    def test_degenerate_truncation_errors(self):
        pts = [BarycentricState([0.2, 0.8])]
        with pytest.raises(ValueError, match="degenerate"):
            truncate(DiracMixtureDensity(pts), IntervalControl([(0.5, 0.6)]))

    def test_generic_wrapper_rejects_control_region(self):
        base = Cellular1DDensity(CellularMask.from_string("bb"))
        control = IntervalControl([(0.0, 0.25)])  # breakable zone [0, 0.25]
        rho = truncate(base, control)
        assert isinstance(rho, TruncatedDensity)
        draws = rho.sample_batch(np.random.default_rng(1), 2000)
        assert draws[:, 0].max() <= 0.25 + 1e-12

    def test_predicate_control_is_mc_only(self):
        control = PredicateControl(3, 0.5, lambda y: y[0] > 0.5)
        rho = truncate(UniformDensity(3), control)
        draws = rho.sample_batch(np.random.default_rng(2), 500)
        assert draws[:, 0].max() <= 0.5
        with pytest.raises(NotAnalyticError):
            rho.region_probability(BarycentricState([1 / 3, 1 / 3, 1 / 3]), 1)


class TestControlRegions:
    def test_centroid_interval(self):
        ctrl = CentroidNeighborhood(2, 0.5)
        (lo, hi), = ctrl.breakable_intervals()
        assert (lo, hi) == pytest.approx((0.25, 0.75))

    def test_centroid_covering_threshold(self):
        ctrl = CentroidNeighborhood(2, 1.0)
        states = [BarycentricState([0.45, 0.55]), BarycentricState([0.6, 0.4])]
        assert ctrl.min_epsilon_covering(states) == pytest.approx(0.2)

    def test_ball_validation(self):
        with pytest.raises(ValueError, match="leaves the simplex"):
            BallComplement([BarycentricState([0.05, 0.95])], 0.5)
        close = [
            BarycentricState([0.48, 0.26, 0.26]),
            BarycentricState([0.52, 0.24, 0.24]),
        ]
        with pytest.raises(ValueError, match="overlap"):
            BallComplement(close, 0.4)

    def test_ball_measure_fraction(self):
        # fraction of uniform draws landing in the breakable balls ~ epsilon
        pts = [BarycentricState([0.5, 0.3, 0.2]), BarycentricState([0.2, 0.5, 0.3])]
        ctrl = BallComplement(pts, 0.15)
        draws = UniformDensity(3).sample_batch(np.random.default_rng(4), 200_000)
        frac = 1.0 - ctrl.contains_batch(draws).mean()
        assert frac == pytest.approx(0.15, abs=4 * math.sqrt(0.15 * 0.85 / 200_000))

    def test_interval_validation(self):
        with pytest.raises(ValueError):
            IntervalControl([(0.2, 0.1)])
        with pytest.raises(ValueError):
            IntervalControl([(0.0, 0.5), (0.4, 0.8)])


class TestCellularApproximation:
    def test_uniform_target_is_all_breakable(self):
        rho = cellular_approximation(lambda u: u, 8, 4)
        assert rho.mask.n_breakable == rho.mask.n_cells == 32
        x = BarycentricState([Fraction(3, 8), Fraction(5, 8)])
        assert rho.region_probability(x, 1) == Fraction(3, 8)

    def test_ramp_error_bound(self):
        rho = cellular_approximation(lambda u: u * u, 32, 32)
        x = BarycentricState([0.5, 0.5])
        assert abs(float(rho.region_probability(x, 1)) - 0.25) <= 0.05

    def test_ramp_error_shrinks(self):
        x = BarycentricState([0.5, 0.5])
        errs = {}
        for m in (8, 64):
            rho = cellular_approximation(lambda u: u * u, m, m)
            errs[m] = abs(float(rho.region_probability(x, 1)) - 0.25)
        assert errs[64] < errs[8]

    @pytest.mark.parametrize(
        "name,cdf,exact",
        [
            ("uniform", lambda u: u, 0.5),
            ("ramp", lambda u: u * u, 0.25),
            ("cut", lambda u: max(0.0, (u - 1 / 3) / (2 / 3)), 0.25),
        ],
    )
    def test_error_monotone_along_doubling(self, name, cdf, exact):
        x = BarycentricState([0.5, 0.5])
        errs = []
        for k in range(3, 7):
            rho = cellular_approximation(cdf, 2**k, 2**k)
            errs.append(abs(float(rho.region_probability(x, 1)) - exact))
        assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))

    def test_rejects_bad_cdf(self):
        with pytest.raises(ValueError):
            cellular_approximation(lambda u: 0.5 * u, 8, 8)


class TestCellularGrid:
    def test_outside_cells_carry_no_weight(self):
        grid = CellularGridDensity(3, 8)
        weights = grid._weights.reshape(8, 8)
        # the corner cell opposite the simplex is empty
        assert weights.min() == 0.0
        assert weights.sum() == pytest.approx(
            math.sqrt(3) / 2, rel=0.02
        )

    def test_samples_stay_on_the_simplex(self):
        grid = CellularGridDensity(3, 6)
        draws = grid.sample_batch(np.random.default_rng(0), 5000)
        assert draws.min() >= 0.0
        assert np.abs(draws.sum(axis=1) - 1.0).max() < 1e-9

    def test_all_breakable_grid_approximates_uniform(self):
        grid = CellularGridDensity(3, 16)
        x = BarycentricState([0.2, 0.3, 0.5])
        probs = grid.region_probabilities(x)
        assert probs == pytest.approx([0.2, 0.3, 0.5], abs=0.02)
        assert sum(probs) == pytest.approx(1.0, abs=1e-12)

    def test_masked_grid_mass_is_one(self):
        mask = np.zeros(36, dtype=bool)
        mask[::2] = True
        grid = CellularGridDensity(3, 6, mask)
        x = BarycentricState([0.4, 0.35, 0.25])
        assert sum(grid.region_probabilities(x)) == pytest.approx(1.0, abs=1e-12)

    def test_sampler_matches_attribution(self):
        mask = np.zeros(64, dtype=bool)
        mask[:40] = True
        grid = CellularGridDensity(3, 8, mask)
        x = BarycentricState([0.3, 0.4, 0.3])
        est = estimate(x, grid, 100_000, seed=5)
        probs = grid.region_probabilities(x)
        assert est.probabilities == pytest.approx(probs, abs=0.02)


class TestDensitySpec:
    def test_uniform(self):
        rho = density_from_spec("uniform", 4)
        assert isinstance(rho, UniformDensity) and rho.n_outcomes == 4

    def test_cellular(self):
        rho = density_from_spec({"type": "cellular1d", "mask": "bub"})
        assert isinstance(rho, Cellular1DDensity)
        assert str(rho.mask) == "bub"

    def test_dirac(self):
        rho = density_from_spec(
            {"type": "dirac", "points": [[0.5, 0.5], [0.25, 0.75]]}
        )
        assert isinstance(rho, DiracMixtureDensity)
        assert len(rho.points) == 2

    def test_truncated_uniform(self):
        rho = density_from_spec(
            {"type": "truncated-uniform", "epsilon": 0.5, "control": {"type": "centroid"}},
            3,
        )
        assert isinstance(rho, TruncatedUniformDensity)
        assert rho.epsilon == 0.5

    def test_grid(self):
        rho = density_from_spec({"type": "grid", "resolution": 4}, 3)
        assert isinstance(rho, CellularGridDensity)

    def test_errors(self):
        with pytest.raises(ValueError):
            density_from_spec({"type": "nope"}, 2)
        with pytest.raises(ValueError):
            density_from_spec({"mask": "bb"}, 2)
        with pytest.raises(ValueError):
            density_from_spec("uniform")
