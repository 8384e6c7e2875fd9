import numpy as np
import pytest

from setbayes import (
    CategorySpace,
    ClassifiedSet,
    CompositeProportion,
    DimensionMismatch,
    IndifferenceZone,
    InvariantPenalty,
    MapZeroOne,
    NotConvex,
    OutOfRange,
    PenaltySequence,
    PosteriorVector,
    ProportionBased,
    RipleyReject,
    TooManyCategories,
    UnsupportedReward,
    brute_force_optimal,
    composite_classifier,
    conformal_classifier,
    indifference_zone_classifier,
    map_classifier,
    mmp_convex,
    mmp_general,
    optimal_set,
    proportion_classifier,
    rho_classifier,
    ripley_classifier,
    value_function,
)

from conftest import random_posterior, random_space


P532 = PosteriorVector([0.5, 0.3, 0.2])


class TestWorkedExamples:
    """Hand-checked instances with frozen expected sets and values."""

    def test_map(self):
        assert map_classifier(P532).members == (1,)

    def test_map_tie_takes_smaller_index(self):
        assert map_classifier(PosteriorVector([0.5, 0.5])).members == (1,)

    def test_mmp_general_plateau_penalty(self):
        got = mmp_general(P532, PenaltySequence((0.0, 0.0, 1.0, 1.0)))
        assert got.chosen.members == (1,)
        assert got.size == 1
        assert got.value == pytest.approx(0.5)

    def test_mmp_convex_quarter_per_member(self):
        got = mmp_convex(P532, PenaltySequence.linear(0.25, 3))
        assert got.chosen.members == (1, 2)
        assert got.value == pytest.approx(0.3)

    def test_proportion_quarter(self):
        got = proportion_classifier(P532, 0.25)
        assert got.chosen.members == (1, 2)
        assert got.value == pytest.approx(0.55)

    def test_proportion_high_cost_gives_singleton(self):
        got = proportion_classifier(P532, 0.51)
        assert got.chosen.members == (1,)
        assert got.value == pytest.approx(0.5)

    def test_proportion_zero_cost_gives_everything(self):
        got = proportion_classifier(P532, 0.0)
        assert got.chosen.is_full
        assert got.value == pytest.approx(1.0)

    def test_composite_two_blocks(self):
        space = CategorySpace(4, (2, 2))
        p = PosteriorVector([0.4, 0.1, 0.3, 0.2], space)
        got = composite_classifier(p, 0.15, 0.35)
        assert got.chosen.members == (1, 3)
        assert got.block_sizes == (1, 1)
        assert got.value == pytest.approx(0.35)

    def test_ripley_both_branches(self):
        assert ripley_classifier(P532, 0.45).members == (1,)
        assert ripley_classifier(P532, 0.6).is_full
        # equality goes to the full space: both actions earn the same
        assert ripley_classifier(P532, 0.5).is_full

    def test_conformal_cut(self):
        assert conformal_classifier(P532, 0.25).members == (1, 2)
        assert conformal_classifier(P532, 0.2).members == (1, 2, 3)
        assert conformal_classifier(P532, 0.51).is_empty

    def test_rho_cut(self):
        p = PosteriorVector([0.5, 0.3, 0.1, 0.1])
        assert rho_classifier(p, 0.6).members == (1, 2)
        assert rho_classifier(p, 1.0).members == (1,)
        assert rho_classifier(p, 0.0).is_full

    def test_indifference_zone(self):
        # last entry is the zone
        assert indifference_zone_classifier([0.5, 0.2, 0.3], 1.5).members == (1,)
        assert indifference_zone_classifier([0.3, 0.2, 0.5], 1.5).is_empty
        # equality keeps the singleton
        assert indifference_zone_classifier([0.4, 0.2, 0.4], 1.0).members == (1,)


class TestTieRules:
    def test_mmp_general_prefers_larger_size(self):
        # objective ties exactly at m = 1, 2, 3; the rule reports 3
        p = PosteriorVector([0.5, 0.25, 0.25])
        got = mmp_general(p, PenaltySequence((0.0, 0.0, 0.25, 0.5)))
        assert got.size == 3

    def test_brute_force_tie_takes_smallest_lexicographic_set(self):
        got = brute_force_optimal(MapZeroOne(), PosteriorVector([0.5, 0.5]))
        assert got.chosen.members == (1,)

    def test_proportion_includes_category_at_exact_cost(self):
        p = PosteriorVector([0.5, 0.25, 0.25])
        got = proportion_classifier(p, 0.25)
        assert got.chosen.is_full  # both 0.25 entries sit exactly at the cost


class TestBruteForceAgreement:
    """Every fast path must reach the exhaustive-search value."""

    N_INSTANCES = 400

    def _penalties(self, rng, n):
        base = np.concatenate([[0.0], np.cumsum(rng.random(n))])
        convex = np.concatenate([[0.0], np.cumsum(np.sort(rng.random(n)))])
        return (
            PenaltySequence(tuple(base)),
            PenaltySequence(tuple(convex), convex=True),
        )

    def test_all_families(self):
        rng = np.random.default_rng(101)
        for _ in range(self.N_INSTANCES):
            space = random_space(rng, n_lo=2, n_hi=8)
            n = space.n_categories
            p = random_posterior(rng, space)
            general, convex = self._penalties(rng, n)
            specs = [
                MapZeroOne(),
                InvariantPenalty(general),
                InvariantPenalty(convex),
                ProportionBased(float(rng.random() * 1.5)),
                RipleyReject(float(rng.uniform(1.0 / n + 1e-6, 1.0 - 1e-9))),
                CompositeProportion(float(rng.random()), float(rng.random()) + 1.0),
            ]
            for spec in specs:
                chosen, value = optimal_set(spec, p)
                oracle = brute_force_optimal(spec, p)
                assert value == pytest.approx(oracle.value, abs=1e-12)
                # the returned set really achieves the claimed value
                achieved = value_function(spec, p, chosen)
                assert achieved == pytest.approx(value, abs=1e-12)

    def test_convex_equals_general(self):
        rng = np.random.default_rng(103)
        for _ in range(300):
            space = random_space(rng)
            n = space.n_categories
            increments = np.sort(rng.random(n))
            g = PenaltySequence(tuple(np.concatenate([[0.0], np.cumsum(increments)])), convex=True)
            p = random_posterior(rng, space)
            a = mmp_convex(p, g)
            b = mmp_general(p, g)
            assert a.chosen == b.chosen
            assert a.value == pytest.approx(b.value, abs=1e-12)

    def test_proportion_equals_induced_penalty(self):
        rng = np.random.default_rng(107)
        for _ in range(300):
            space = random_space(rng)
            n = space.n_categories
            c = float(rng.random() * 1.2)
            p = random_posterior(rng, space)
            a = proportion_classifier(p, c)
            b = mmp_general(p, PenaltySequence.proportional(c, n))
            assert a.chosen == b.chosen
            assert a.value == pytest.approx(b.value, abs=1e-12)

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_composite_single_block_equals_proportion(self):
        rng = np.random.default_rng(109)
        for _ in range(300):
            n = int(rng.integers(2, 9))
            p = random_posterior(rng, CategorySpace(n))
            a = float(rng.random())
            b = float(rng.random() * 2)
            comp = composite_classifier(p, a, b)
            prop = proportion_classifier(p, a)
            assert comp.chosen == prop.chosen
            assert comp.value == pytest.approx(prop.value, abs=1e-12)

    def test_ripley_equals_plateau_penalty(self):
        rng = np.random.default_rng(113)
        for _ in range(300):
            space = random_space(rng, n_lo=3)
            n = space.n_categories
            r = float(rng.uniform(1.0 / n + 1e-6, 1.0 - 1e-9))
            p = random_posterior(rng, space)
            direct = ripley_classifier(p, r)
            via_penalty = mmp_general(p, PenaltySequence.reject_plateau(r, n))
            assert direct == via_penalty.chosen

    def test_rho_matches_proportion_scaling(self):
        """The ratio cut equals the probability cut at ratio * max."""
        rng = np.random.default_rng(127)
        for _ in range(200):
            space = random_space(rng)
            p = random_posterior(rng, space)
            ratio = float(rng.random())
            assert rho_classifier(p, ratio) == conformal_classifier(
                p, ratio * p.max_prob()
            )


class TestMapRecovery:
    def test_cost_above_max_probability(self):
        """A per-extra-category cost above the top probability forces the
        plain single most probable category."""
        rng = np.random.default_rng(131)
        for _ in range(200):
            space = random_space(rng)
            p = random_posterior(rng, space)
            got = proportion_classifier(p, p.max_prob() + 0.01)
            assert got.chosen == map_classifier(p)
            assert got.size == 1


class TestGuards:
    def test_brute_force_category_limit(self):
        p = PosteriorVector(np.full(21, 1.0 / 21))
        with pytest.raises(TooManyCategories):
            brute_force_optimal(MapZeroOne(), p)

    def test_brute_force_rejects_zone_reward(self):
        with pytest.raises(UnsupportedReward):
            brute_force_optimal(IndifferenceZone(0.8), P532)

    def test_penalty_length_checked(self):
        with pytest.raises(DimensionMismatch):
            mmp_general(P532, PenaltySequence((0.0, 0.5)))
        with pytest.raises(DimensionMismatch):
            mmp_convex(P532, PenaltySequence.linear(0.1, 5))

    def test_convex_path_requires_convexity(self):
        with pytest.raises(NotConvex):
            mmp_convex(P532, PenaltySequence((0.0, 0.0, 1.0, 1.0)))

    def test_negative_costs_rejected(self):
        with pytest.raises(OutOfRange):
            proportion_classifier(P532, -0.1)
        with pytest.raises(OutOfRange):
            conformal_classifier(P532, -1.0)
        with pytest.raises(OutOfRange):
            rho_classifier(P532, 1.5)

    def test_zone_needs_regular_category(self):
        with pytest.raises(DimensionMismatch):
            indifference_zone_classifier([1.0], 0.5)


class TestOptimalSetDispatch:
    def test_routes_convex_flag(self):
        convex = PenaltySequence.linear(0.25, 3)
        chosen, value = optimal_set(InvariantPenalty(convex), P532)
        assert chosen.members == (1, 2)
        assert value == pytest.approx(0.3)

    def test_zone_dispatch(self):
        chosen, value = optimal_set(IndifferenceZone(1.5), PosteriorVector([0.5, 0.2, 0.3]))
        assert chosen.members == (1,)
        assert value == pytest.approx(0.5)

    def test_value_is_value_function_of_choice(self):
        rng = np.random.default_rng(137)
        for _ in range(100):
            space = random_space(rng)
            p = random_posterior(rng, space)
            spec = CompositeProportion(0.2, 0.4)
            chosen, value = optimal_set(spec, p)
            assert value == pytest.approx(value_function(spec, p, chosen), abs=1e-12)
