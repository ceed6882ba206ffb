import numpy as np
import pytest

from oracles import minimal_infeasible_subsets, potentials_exist
from llfba.backend import HighsBackend
from llfba.benders import (
    BendersConfig,
    CutStrategy,
    InfeasibleSubsystem,
    build_master,
    cb_cut,
    check_subproblem,
    enumerate_mis,
    find_mis,
    is_minimal,
    no_good_cut,
    select_cuts,
    solve_llfba_benders,
)
from llfba.formulations import aname
from llfba.model import Status, internal_submatrix, random_model
from llfba.verifier import verify_loopless, verify_via_nullspace


def assignment(a):
    return {aname(k): float(x) for k, x in enumerate(a)}


def test_subproblem_feasible_and_infeasible(example):
    S_I = internal_submatrix(example)
    mu, dmu = check_subproblem(S_I, [1, 1, 1])
    assert np.all(dmu <= -1 + 1e-7)
    # r2, r3 forward and r4 backward closes A -> B -> C -> A
    assert check_subproblem(S_I, [1, 1, 0]) is None


def test_mis_of_the_example_loop(example):
    S_I = internal_submatrix(example)
    mis = find_mis(S_I, [1, 1, 0])
    assert mis.indices == (0, 1, 2)
    assert mis.directions == (1, 1, 0)
    assert is_minimal(S_I, [1, 1, 0], mis)
    assert find_mis(S_I, [1, 1, 1]) is None


def test_cb_cut_excludes_refuted_assignment(example):
    mis = find_mis(internal_submatrix(example), [1, 1, 0])
    cut = cb_cut(mis)
    assert not cut.is_satisfied(assignment([1, 1, 0]))
    for other in ([1, 1, 1], [0, 1, 0], [0, 0, 0]):
        assert cut.is_satisfied(assignment(other))


def test_cb_cut_on_full_index_set_is_no_good():
    a = (1, 0, 1, 1)
    full = InfeasibleSubsystem(tuple(range(4)), a)
    assert cb_cut(full) == no_good_cut(a)


def test_strategy_parsing():
    assert CutStrategy.parse("KSmallest(3)") == CutStrategy("KSmallest", k=3)
    assert str(CutStrategy.parse("DensityLimit(0.25)")) == "DensityLimit(0.25)"
    with pytest.raises(ValueError):
        CutStrategy.parse("Distinct(2)")
    with pytest.raises(ValueError):
        CutStrategy("Biggest")


def test_select_cuts():
    small = InfeasibleSubsystem((0, 1), (1, 0))
    big = InfeasibleSubsystem((0, 2, 3, 4), (1, 1, 0, 0))
    pool = [big, small, small]
    assert select_cuts(pool, CutStrategy("All"), 5) == pool
    assert select_cuts(pool, CutStrategy("Distinct"), 5) == [big, small]
    assert select_cuts(pool, CutStrategy("KSmallest", k=1), 5) == [small]
    assert select_cuts(pool, CutStrategy("DensityLimit", density=0.5), 5) == [small]
    # nothing under the limit: fall back to the smallest
    assert select_cuts([big], CutStrategy("DensityLimit", density=0.1), 5) == [big]
    with pytest.raises(ValueError):
        select_cuts([], CutStrategy("All"), 5)


def test_cuts_per_iteration():
    assert BendersConfig().cuts_per_iteration(95) == 1
    assert BendersConfig(cuts_per_iter_pct=10).cuts_per_iteration(95) == 10
    assert BendersConfig(cuts_per_iter_pct=0.1).cuts_per_iteration(95) == 1
    with pytest.raises(ValueError):
        BendersConfig(cuts_per_iter_pct=150)


@pytest.mark.parametrize("seed", range(15))
def test_enumerated_mis_match_oracle(seed):
    """Every MIS found is among the oracle's minimal infeasible subsets."""
    m = random_model(seed)
    S_I = internal_submatrix(m)
    dense = S_I.toarray()
    rng = np.random.default_rng(seed)
    for _ in range(3):
        a = rng.integers(0, 2, m.n_internal)
        found = enumerate_mis(S_I, a, max_count=m.n_internal + 1)
        if potentials_exist(dense, a, range(m.n_internal)):
            assert found == []
            continue
        truth = set(minimal_infeasible_subsets(dense, a))
        assert found
        for mis in found:
            assert mis.indices in truth
        assert len({mis.key for mis in found}) == len(found)


def test_benders_example(example):
    sol, rep = solve_llfba_benders(example)
    assert sol.status == Status.OPTIMAL
    assert sol.objective_value == pytest.approx(20.0, abs=1e-6)
    assert rep.iterations == 2 and rep.cuts == 1
    assert rep.master_objectives[0] == pytest.approx(40.0, abs=1e-5)
    assert verify_loopless(example, sol.v) and verify_via_nullspace(example, sol.v)
    sol.check(example)


def test_master_objectives_never_increase(two_cycles):
    _, rep = solve_llfba_benders(two_cycles)
    obj = rep.master_objectives
    assert all(b <= a + 1e-5 for a, b in zip(obj, obj[1:]))


# frozen from runs verified against the brute-force optimum of 40
TWO_CYCLE_CB_ITERATIONS = 3
TWO_CYCLE_NO_GOOD_ITERATIONS = 10


def test_two_cycles_cb_vs_no_good(two_cycles):
    cb, rep_cb = solve_llfba_benders(two_cycles)
    ng, rep_ng = solve_llfba_benders(two_cycles, BendersConfig(no_good_only=True))
    assert cb.objective_value == pytest.approx(40.0, abs=1e-6)
    assert ng.objective_value == pytest.approx(40.0, abs=1e-6)
    assert rep_cb.iterations == TWO_CYCLE_CB_ITERATIONS
    assert rep_ng.iterations == TWO_CYCLE_NO_GOOD_ITERATIONS


@pytest.mark.parametrize("form", ["BigM", "Indicator", "Both"])
def test_master_formulations(example, form):
    sol, _ = solve_llfba_benders(example, BendersConfig(master_formulation=form))
    assert sol.objective_value == pytest.approx(20.0, abs=1e-6)


def test_master_indicator_on_bigm_backend(example):
    sol, _ = solve_llfba_benders(example, BendersConfig(master_formulation="Indicator"),
                                 backend=HighsBackend(indicators=False))
    assert sol.objective_value == pytest.approx(20.0, abs=1e-6)


def test_master_sizes(example):
    p = build_master(example, BendersConfig())
    assert p.n_variables == 5 + 3
    assert p.n_constraints == 3 + 2 * 3


def test_iteration_cap_reports_time_limit(two_cycles):
    sol, rep = solve_llfba_benders(two_cycles, BendersConfig(max_iterations=1))
    assert rep.status == Status.TIME_LIMIT and sol.v is None


def test_records_subsystems(two_cycles):
    _, rep = solve_llfba_benders(two_cycles, BendersConfig(cuts_per_iter_pct=50))
    assert rep.subsystems
    for a, pool in rep.subsystems:
        for mis in pool:
            assert not cb_cut(mis).is_satisfied(assignment(a))


def test_zero_flux_directions_are_completed():
    """Seed 142: a master point whose only defect is a_k on zero fluxes."""
    from llfba.benders import complete_assignment

    m = random_model(142)
    S_I = internal_submatrix(m)
    a = np.array([0, 0, 1, 1, 0, 0, 1])
    vI = np.array([-15.4, 0.0, 0.2, 0.0, 0.0, -7.8, 31.0])
    assert check_subproblem(S_I, a) is None
    b = complete_assignment(S_I, a, vI)
    assert b is not None and check_subproblem(S_I, b) is not None
    active = np.abs(vI) > 1e-6
    assert np.array_equal(b[active], a[active])
    # fully active or already feasible assignments are left to the cut loop
    assert complete_assignment(S_I, b, vI) is None
    assert complete_assignment(S_I, a, np.ones(7)) is None
