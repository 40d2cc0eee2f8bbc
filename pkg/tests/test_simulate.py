"""Monte Carlo auction simulator and solution comparison metrics."""

from __future__ import annotations

import numpy as np
import pytest

from seqbid.continuous import HybridValueFunction, UniformFixed, solve_grid
from seqbid.core import terminal_value
from seqbid.discrete import solve_discrete
from seqbid.simulate import (
    collect_rounds,
    compare_solutions,
    constant_bid_policy,
    estimate_policy_value,
    greedy_policy,
    relative_sq_error,
    simulate_round,
    summarize_utilities,
    table_policy,
)
from seqbid.pwl import PwlFunction


def hybrid_from_discrete(sol) -> HybridValueFunction:
    """Exact discrete values reinterpreted as PWL curves on the integer lattice."""
    e = sol.endowment
    xs = tuple(float(d) for d in range(e + 1))
    components = [
        {
            mask: PwlFunction(xs, tuple(float(v) for v in values))
            for mask, values in sol.stage_values[t].items()
        }
        for t in range(sol.n + 1)
    ]
    return HybridValueFunction(components, float(e))


class TestRelativeSqError:
    def test_normalized(self):
        assert relative_sq_error(9.0, 10.0) == pytest.approx(0.01)

    def test_exact_is_zero(self):
        assert relative_sq_error(7.35, 7.35) == 0.0

    def test_small_targets_unnormalized(self):
        assert relative_sq_error(1.0, 0.5) == pytest.approx(0.25)
        assert relative_sq_error(0.0, 0.0) == 0.0


class TestSimulateRound:
    def test_sure_win_policy(self, t1):
        for seed in range(5):
            tr = simulate_round(t1, constant_bid_policy(2.0), seed)
            assert tr.won == (True,)
            assert tr.utility == pytest.approx(10.0)
            assert tr.final_holdings == frozenset({1})

    def test_zero_bid_always_loses(self, t1):
        for seed in range(5):
            tr = simulate_round(t1, constant_bid_policy(0.0), seed)
            assert tr.won == (False,)
            assert tr.utility == pytest.approx(1.4)

    def test_replay_is_identical(self, t2):
        bidder = table_policy(solve_discrete(t2))
        assert simulate_round(t2, bidder, 7) == simulate_round(t2, bidder, 7)

    def test_trace_invariants(self, t2):
        bidder = table_policy(solve_discrete(t2))
        for seed in range(20):
            tr = simulate_round(t2, bidder, seed)
            assert len(tr.bids) == len(tr.high_bids) == len(tr.won) == t2.n
            assert len(tr.endowments) == t2.n
            before = t2.endowment
            for i in range(t2.n):
                assert tr.won[i] == (tr.bids[i] > tr.high_bids[i])
                assert 0.0 <= tr.bids[i] <= before
                spent = tr.bids[i] if tr.won[i] else 0.0
                assert tr.endowments[i] == pytest.approx(before - spent)
                before = tr.endowments[i]
            assert tr.utility == pytest.approx(
                terminal_value(tr.final_holdings, tr.endowments[-1], t2)
            )

    def test_infeasible_bid_rejected(self, t1):
        with pytest.raises(ValueError):
            simulate_round(t1, lambda t, held, d: d + 1.0, 0)


class TestCollectRounds:
    def test_deterministic(self, t2):
        bidder = table_policy(solve_discrete(t2))
        a = collect_rounds(t2, bidder, 50, seed=3)
        b = collect_rounds(t2, bidder, 50, seed=3)
        assert a == b

    def test_insensitive_to_batching(self, t2):
        bidder = table_policy(solve_discrete(t2))
        assert collect_rounds(t2, bidder, 20, seed=3)[:5] == collect_rounds(
            t2, bidder, 5, seed=3
        )

    def test_seed_changes_the_draws(self, t2):
        bidder = table_policy(solve_discrete(t2))
        a = collect_rounds(t2, bidder, 50, seed=0)
        b = collect_rounds(t2, bidder, 50, seed=1)
        assert a != b


class TestSummarize:
    def test_degenerate_outcome(self, t1):
        mean, stderr = estimate_policy_value(t1, constant_bid_policy(2.0), 200, 0)
        assert (mean, stderr) == (pytest.approx(10.0), 0.0)

    def test_single_round(self):
        assert summarize_utilities([4.2]) == (pytest.approx(4.2), 0.0)

    def test_matches_numpy(self):
        vals = [1.0, 2.0, 4.0, 8.0]
        mean, stderr = summarize_utilities(vals)
        assert mean == pytest.approx(np.mean(vals))
        assert stderr == pytest.approx(np.std(vals, ddof=1) / np.sqrt(len(vals)))

    def test_closed_form_expectation(self, t1):
        mean, stderr = estimate_policy_value(t1, constant_bid_policy(1.0), 2000, 11)
        assert abs(mean - 6.05) <= 4 * stderr

    def test_optimal_policy_on_t2(self, t2):
        bidder = table_policy(solve_discrete(t2))
        mean, stderr = estimate_policy_value(t2, bidder, 3000, 5)
        assert abs(mean - 7.35) <= 4 * stderr


class TestGreedyPolicy:
    def test_rounds_are_feasible_and_deterministic(self, c1):
        sol = solve_grid(c1, UniformFixed(5))
        bidder = greedy_policy(sol.values, c1)
        a = collect_rounds(c1, bidder, 40, seed=2)
        b = collect_rounds(c1, bidder, 40, seed=2)
        assert a == b
        for tr in a:
            assert 0.0 <= tr.bids[0] <= c1.endowment
            assert 0.0 <= tr.utility <= 11.4 + 1e-9

    def test_beats_walking_away(self, c1):
        sol = solve_grid(c1, UniformFixed(9))
        mean, _ = estimate_policy_value(c1, greedy_policy(sol.values, c1), 400, 0)
        assert mean > 1.4


class TestCompareSolutions:
    def test_self_comparison_has_zero_value_error(self, t2):
        exact = solve_discrete(t2)
        report = compare_solutions(exact, hybrid_from_discrete(exact), t2)
        assert report.mean_value_err == 0.0
        assert report.max_value_err == 0.0
        assert report.states == exact.state_count
        for row in report.per_stage:
            assert row.mean_value_err == 0.0 and row.max_value_err == 0.0

    def test_per_stage_state_counts(self, t2):
        exact = solve_discrete(t2)
        report = compare_solutions(exact, hybrid_from_discrete(exact), t2)
        assert [row.stage for row in report.per_stage] == [0, 1]
        assert [row.states for row in report.per_stage] == [4, 8]

    def test_grid_errors_are_finite_and_ordered(self, c1):
        from seqbid.core import to_discrete

        exact = solve_discrete(to_discrete(c1))
        sol = solve_grid(c1, UniformFixed(5))
        report = compare_solutions(exact, sol.values, c1)
        assert 0.0 <= report.mean_value_err <= report.max_value_err
        assert 0.0 <= report.mean_policy_err <= report.max_policy_err
        assert report.states == exact.state_count
