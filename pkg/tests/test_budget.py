import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import tc
from regsched import Rtw, Schedule, cost, feasible_prefix, scope, scope_bruteforce
from regsched.errors import InvalidCostError, OracleLimitError

costs_strategy = st.lists(st.integers(1, 20), min_size=0, max_size=8)


def suite(costs):
    return [tc(f"t{i:02d}", exectime=c, setup=0) for i, c in enumerate(costs)]


class TestCost:
    def test_sum_of_exectime_and_setup(self):
        assert cost(tc("a", exectime=3, setup=2)) == 5

    def test_zero_total_duration_rejected(self):
        with pytest.raises(InvalidCostError):
            cost(tc("a", exectime=0, setup=0))

    def test_zero_setup_allowed(self):
        assert cost(tc("a", exectime=7, setup=0)) == 7


class TestRtw:
    def test_budget_is_end_minus_start(self):
        assert Rtw(start=3, end=10).budget() == 7

    def test_unbounded_budget_is_none(self):
        window = Rtw.unbounded()
        assert window.is_unbounded
        assert window.budget() is None

    def test_end_before_start_rejected(self):
        with pytest.raises(ValueError):
            Rtw(start=5, end=4)

    def test_of_budget(self):
        assert Rtw.of_budget(9).budget() == 9
        assert Rtw.of_budget(None).is_unbounded


class TestScope:
    def test_known_instance(self):
        # Brute-forced over all 16 subsets: no 3 costs fit in 9, two do.
        result = scope(suite([3, 5, 7, 2]), Rtw.of_budget(9))
        assert result.count == 2
        assert result.total_cost <= 9

    def test_zero_budget_admits_nothing(self):
        result = scope(suite([3, 5]), Rtw.of_budget(0))
        assert result.count == 0
        assert result.witness == ()

    def test_unbounded_admits_everything(self):
        tests = suite([3, 5, 7])
        result = scope(tests, Rtw.unbounded())
        assert result.count == 3
        assert set(result.witness) == {t.id for t in tests}
        assert result.total_cost == 15

    def test_invalid_cost_propagates(self):
        with pytest.raises(InvalidCostError):
            scope([tc("a", exectime=0, setup=0)], Rtw.of_budget(5))

    def test_witness_ties_break_by_id(self):
        tests = [tc("b", exectime=4, setup=0), tc("a", exectime=4, setup=0)]
        result = scope(tests, Rtw.of_budget(4))
        assert result.witness == ("a",)


class TestScopeBruteforce:
    def test_empty_set(self):
        assert scope_bruteforce([], Rtw.of_budget(5)).count == 0

    def test_unit_costs(self):
        assert scope_bruteforce(suite([1, 1, 1]), Rtw.of_budget(2)).count == 2

    def test_single_infeasible_item(self):
        assert scope_bruteforce(suite([10]), Rtw.of_budget(9)).count == 0

    def test_enumeration_guard(self):
        with pytest.raises(OracleLimitError):
            scope_bruteforce(suite([1] * 21), Rtw.of_budget(5))


class TestScopeProperties:
    @given(costs_strategy, st.integers(0, 60))
    @settings(max_examples=150)
    def test_matches_bruteforce(self, costs, budget):
        tests = suite(costs)
        window = Rtw.of_budget(budget)
        assert scope(tests, window).count == scope_bruteforce(tests, window).count

    @given(costs_strategy, st.integers(0, 50), st.integers(1, 30))
    def test_monotone_in_budget(self, costs, small, delta):
        tests = suite(costs)
        narrow = scope(tests, Rtw.of_budget(small)).count
        wide = scope(tests, Rtw.of_budget(small + delta)).count
        assert narrow <= wide

    @given(costs_strategy)
    def test_saturation(self, costs):
        tests = suite(costs)
        assert scope(tests, Rtw.of_budget(sum(costs))).count == len(costs)

    @given(costs_strategy, st.integers(0, 40))
    def test_witness_is_feasible_and_consistent(self, costs, budget):
        tests = suite(costs)
        result = scope(tests, Rtw.of_budget(budget))
        by_id = {t.id: t for t in tests}
        recomputed = sum(cost(by_id[i]) for i in result.witness)
        assert recomputed == result.total_cost <= budget
        assert len(result.witness) == result.count

    @given(costs_strategy, st.integers(0, 40), st.data())
    def test_subset_monotonicity(self, costs, budget, data):
        tests = suite(costs)
        subset = data.draw(st.sets(st.sampled_from(tests)) if tests else st.just(set()))
        window = Rtw.of_budget(budget)
        assert scope(subset, window).count <= scope(tests, window).count


class TestSchedule:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            Schedule(("a", "a"), 10)

    def test_from_ids_computes_cost(self):
        sched = Schedule.from_ids(["b", "a"], {"a": 3, "b": 4}, technique="x")
        assert sched.total_cost == 7
        assert sched.ids == ("b", "a")
        assert sched.meta["technique"] == "x"

    def test_feasible_prefix_stops_at_first_overflow(self):
        ids, total = feasible_prefix(["a", "b", "c"], {"a": 2, "b": 3, "c": 4}, Rtw.of_budget(5))
        assert ids == ("a", "b")
        assert total == 5
