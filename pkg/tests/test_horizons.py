import numpy as np
import pytest

from chargeplan.errors import NoFeasibleSolution
from chargeplan.horizons import (
    MAX_COVERAGE_LOOKAHEAD,
    MAX_COVERAGE_MYOPIC,
    MEDIAN_COVERAGE_LOOKAHEAD,
    PAPER_THETAS,
    get_policy,
    run_scenario,
    select_solution,
    sensitivity_sweep,
)
from chargeplan.nsga2 import NSGA2Params
from chargeplan.planmodel import HorizonSolution

from test_planmodel import make_instance

FAST = NSGA2Params(pop_size=40, generations=30)


def _sol(cov, cost, look=0.0, x=(0,)):
    return HorizonSolution(1, x, (), cost=cost, coverage=cov, lookahead_coverage=look)


def test_paper_thetas():
    assert PAPER_THETAS == (0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6)


def test_policy_names():
    assert get_policy("scenario1") is MAX_COVERAGE_LOOKAHEAD
    assert get_policy("scenario2") is MEDIAN_COVERAGE_LOOKAHEAD
    assert get_policy("scenario3") is MAX_COVERAGE_MYOPIC
    assert get_policy("max_coverage_myopic") is MAX_COVERAGE_MYOPIC
    with pytest.raises(ValueError):
        get_policy("scenario4")


def test_select_max_and_ties():
    front = [_sol(10, 0.1), _sol(30, 0.9, 5, (1,)), _sol(30, 0.8, 5, (2,)), _sol(30, 0.5, 1, (3,))]
    assert select_solution(front, MAX_COVERAGE_LOOKAHEAD).x == (2,)


def test_select_median_even_takes_lower():
    front = [_sol(c, c / 100, x=(i,)) for i, c in enumerate([40, 10, 30, 20])]
    assert select_solution(front, MEDIAN_COVERAGE_LOOKAHEAD).coverage == 20
    assert select_solution(front[:3], MEDIAN_COVERAGE_LOOKAHEAD).coverage == 30
    with pytest.raises(NoFeasibleSolution):
        select_solution([], MEDIAN_COVERAGE_LOOKAHEAD)


def _small():
    xy = [(4.0 * i, 0.0) for i in range(6)]
    return make_instance([150.0, 90.0, 60.0, 120.0, 40.0, 80.0], [30.0, 20.0], xy_km=xy)


@pytest.mark.parametrize("policy", ["scenario1", "scenario2", "scenario3"])
def test_scenario_invariants(policy):
    inst = _small()
    tl = run_scenario(inst, None, policy, seed=2, params=FAST)
    tl.check(inst)
    assert [e.k for e in tl.entries] == list(range(6))
    assert len(tl.fronts) == 5
    for a, b in zip(tl.entries, tl.entries[1:]):
        assert all(v >= u for u, v in zip(a.solution.x, b.solution.x))
        assert b.cost <= inst.params.b_k[b.k - 1] + 1e-9
        assert b.coverage >= a.coverage - 1e-9
    assert tl.total_cost == pytest.approx(sum(tl.costs))


def test_scenario_deterministic():
    inst = _small()
    a = run_scenario(inst, None, "scenario1", seed=7, params=FAST)
    b = run_scenario(inst, None, "scenario1", seed=7, params=FAST)
    assert a == b


def test_layout0_is_horizon_zero():
    inst = _small()
    tl = run_scenario(inst, {"s0": 2}, "scenario3", seed=0, params=FAST)
    assert tl.entries[0].solution.x[0] == 2 and tl.entries[0].cost == 0
    assert all(e.solution.x[0] >= 2 for e in tl.entries)


def test_zero_budget_keeps_coverage_flat():
    inst = _small()
    rows = sensitivity_sweep(inst, {"s0": 1, "s3": 1}, "scenario1", thetas=[0.0, 1.0], seed=[0, 1], params=FAST)
    flat = rows[0].coverages
    # nothing new can be built, so coverage only rises with penetration until capacity binds
    for k, c in enumerate(flat, start=1):
        assert c == pytest.approx(min(150 * inst.params.p_k[k - 1], 30) + min(120 * inst.params.p_k[k - 1], 30))
    assert rows[0].total_cost == 0.0
    assert rows[1].coverages[-1] >= flat[-1]
    assert rows[1].cost_pct == pytest.approx(100.0)


def test_sweep_rejects_negative():
    with pytest.raises(ValueError):
        sensitivity_sweep(_small(), thetas=[-0.1])


def test_sweep_more_budget_more_coverage():
    inst = _small()
    rows = sensitivity_sweep(inst, None, "scenario1", thetas=[0.5, 1.0, 2.0], seed=list(range(4)), params=FAST)
    finals = [r.coverages[-1] for r in rows]
    assert finals[0] <= finals[1] + 1e-6 <= finals[2] + 2e-6


def test_infeasible_names_horizon():
    inst = make_instance([100.0, 50.0], [], Nmin_k=[0, 0, 3, 0, 0])
    with pytest.raises(NoFeasibleSolution) as exc:
        run_scenario(inst, None, "scenario1", seed=0, params=FAST)
    assert exc.value.horizon == 3
