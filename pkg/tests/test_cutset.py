from __future__ import annotations

import random

import pytest

from resha.cutset import (
    CutSet,
    CutSetError,
    EvaluationError,
    ResourceLimitError,
    brute_force_cut_sets,
    evaluate_structure_function,
    extract_spofs,
    order_histogram,
    random_coherent_tree,
    solve_minimal_cut_sets,
    tree_fingerprint,
    witness_check,
)
from resha.faulttree import BasicEvent, EventKind, FaultTree, Gate, GateKind
from resha.sysmodel import NodeId


def ev(eid: str, kind=EventKind.HW_INDEP) -> BasicEvent:
    subjects = (NodeId("XA", 0, 0, 1),)
    if kind in (EventKind.HW_CCF, EventKind.SW_CCF):
        subjects = (NodeId("XA", 0, 0, 1), NodeId("XB", 0, 0, 1))
    return BasicEvent(id=eid, kind=kind, subjects=subjects)


def tree(top: str, gates: dict[str, Gate], event_ids, ccf=()) -> FaultTree:
    events = {e: ev(e, EventKind.HW_CCF if e in ccf else EventKind.HW_INDEP) for e in event_ids}
    return FaultTree(top=top, gates=gates, events=events)


def simple_or():
    return tree(
        "TOP",
        {"TOP": Gate(id="TOP", kind=GateKind.OR, children=("A", "B"))},
        ["A", "B"],
    )


def test_or_gives_singletons():
    css = solve_minimal_cut_sets(simple_or())
    assert {c.events for c in css.cut_sets} == {frozenset({"A"}), frozenset({"B"})}


def test_absorption_law():
    ft = tree(
        "TOP",
        {
            "TOP": Gate(id="TOP", kind=GateKind.OR, children=("G1", "A")),
            "G1": Gate(id="G1", kind=GateKind.AND, children=("A", "B")),
        },
        ["A", "B"],
    )
    css = solve_minimal_cut_sets(ft)
    assert {c.events for c in css.cut_sets} == {frozenset({"A"})}


def test_vote_two_of_three():
    ft = tree(
        "TOP",
        {"TOP": Gate(id="TOP", kind=GateKind.VOTE, k=2, children=("A", "B", "C"))},
        ["A", "B", "C"],
    )
    css = solve_minimal_cut_sets(ft)
    assert {c.events for c in css.cut_sets} == {
        frozenset({"A", "B"}),
        frozenset({"A", "C"}),
        frozenset({"B", "C"}),
    }


def test_brute_force_and():
    ft = tree(
        "TOP",
        {"TOP": Gate(id="TOP", kind=GateKind.AND, children=("A", "B"))},
        ["A", "B"],
    )
    css = brute_force_cut_sets(ft)
    assert {c.events for c in css.cut_sets} == {frozenset({"A", "B"})}


def test_single_event_tree():
    ft = tree("TOP", {"TOP": Gate(id="TOP", kind=GateKind.OR, children=("E",))}, ["E"])
    assert {c.events for c in solve_minimal_cut_sets(ft).cut_sets} == {frozenset({"E"})}
    assert {c.events for c in brute_force_cut_sets(ft).cut_sets} == {frozenset({"E"})}


def test_event_as_top():
    ft = FaultTree(top="E", gates={}, events={"E": ev("E")})
    assert {c.events for c in solve_minimal_cut_sets(ft).cut_sets} == {frozenset({"E"})}
    assert {c.events for c in brute_force_cut_sets(ft).cut_sets} == {frozenset({"E"})}


def test_brute_force_event_limit():
    ids = [f"E{i:02d}" for i in range(21)]
    ft = tree("TOP", {"TOP": Gate(id="TOP", kind=GateKind.OR, children=tuple(ids))}, ids)
    with pytest.raises(CutSetError):
        brute_force_cut_sets(ft)


def test_evaluate_all_false_and_all_true(full_tree):
    ids = sorted(full_tree.events)
    assert evaluate_structure_function(full_tree, {e: False for e in ids}) is False
    assert evaluate_structure_function(full_tree, {e: True for e in ids}) is True


def test_evaluate_requires_total_assignment(full_tree):
    ids = sorted(full_tree.events)
    with pytest.raises(EvaluationError):
        evaluate_structure_function(full_tree, {e: False for e in ids[:-1]})


def test_oracle_equivalence_randomized():
    rng = random.Random(12345)
    for _ in range(200):
        ft = random_coherent_tree(rng)
        solver = {c.events for c in solve_minimal_cut_sets(ft).cut_sets}
        oracle = {c.events for c in brute_force_cut_sets(ft).cut_sets}
        assert solver == oracle


def test_truncation_soundness_randomized():
    rng = random.Random(999)
    for _ in range(60):
        ft = random_coherent_tree(rng)
        untruncated = solve_minimal_cut_sets(ft)
        full = {c.events for c in untruncated.cut_sets}
        previous: list[tuple[int, int]] = []
        for k in range(1, 7):
            truncated = solve_minimal_cut_sets(ft, k)
            got = {c.events for c in truncated.cut_sets}
            want = {s for s in full if len(s) <= k}
            assert got == want
            hist = order_histogram(truncated)
            rows = [(o, c) for o, c, _ in hist.rows()]
            assert rows[: len(previous)] == previous
            previous = rows
        assert untruncated.truncation is None


def test_witness_property_randomized():
    rng = random.Random(321)
    for _ in range(60):
        ft = random_coherent_tree(rng)
        for cut in solve_minimal_cut_sets(ft).cut_sets:
            assert witness_check(ft, cut)


def test_antichain_randomized():
    rng = random.Random(777)
    for _ in range(60):
        ft = random_coherent_tree(rng)
        sets = [c.events for c in solve_minimal_cut_sets(ft).cut_sets]
        for i, a in enumerate(sets):
            for j, b in enumerate(sets):
                if i != j:
                    assert not a <= b


def test_solver_deterministic_and_thread_invariant():
    rng = random.Random(5150)
    for _ in range(10):
        ft = random_coherent_tree(rng)
        serial = solve_minimal_cut_sets(ft)
        again = solve_minimal_cut_sets(ft)
        threaded = solve_minimal_cut_sets(ft, threads=4)
        assert serial.to_csv() == again.to_csv() == threaded.to_csv()
        assert serial.fingerprint == tree_fingerprint(ft)


def test_resource_budget_reports_progress():
    ids = [f"E{i:02d}" for i in range(12)]
    gates = {
        "TOP": Gate(id="TOP", kind=GateKind.VOTE, k=6, children=tuple(ids)),
    }
    ft = tree("TOP", gates, ids)
    with pytest.raises(ResourceLimitError) as exc:
        solve_minimal_cut_sets(ft, max_sets=100)
    assert "progress" in str(exc.value)


def test_cut_set_must_be_non_empty():
    with pytest.raises(CutSetError):
        CutSet(events=frozenset(), contains_ccf=False)


def test_spofs_flag_ccf_only_sets():
    ft = tree(
        "TOP",
        {
            "TOP": Gate(id="TOP", kind=GateKind.OR, children=("X", "G1", "CCF-Y")),
            "G1": Gate(id="G1", kind=GateKind.AND, children=("A", "B")),
        },
        ["X", "A", "B", "CCF-Y"],
        ccf=["CCF-Y"],
    )
    css = solve_minimal_cut_sets(ft)
    report = extract_spofs(css)
    names = {c.sorted_events()[0]: c.contains_ccf for c in report.spofs}
    assert names == {"X": False, "CCF-Y": True}


def test_spofs_fall_back_to_next_lowest_order():
    ft = tree(
        "TOP",
        {"TOP": Gate(id="TOP", kind=GateKind.VOTE, k=2, children=("A", "B", "C"))},
        ["A", "B", "C"],
    )
    report = extract_spofs(solve_minimal_cut_sets(ft))
    assert not report.has_spofs
    assert report.fallback_order == 2
    assert len(report.fallback_sets) == 3


def test_spofs_empty_collection():
    ft = tree("TOP", {"TOP": Gate(id="TOP", kind=GateKind.OR, children=())}, [])
    report = extract_spofs(solve_minimal_cut_sets(ft))
    assert not report.has_spofs
    assert report.fallback_order is None


def test_histogram_cumulative_counts():
    ft = tree(
        "TOP",
        {
            "TOP": Gate(id="TOP", kind=GateKind.OR, children=("X", "G1")),
            "G1": Gate(id="G1", kind=GateKind.AND, children=("A", "B")),
        },
        ["X", "A", "B"],
    )
    hist = order_histogram(solve_minimal_cut_sets(ft))
    assert hist.count(1) == 1
    assert hist.count(2) == 1
    assert hist.cumulative(1) == 1
    assert hist.cumulative(2) == 2


def test_histogram_empty_collection_zeroes():
    ft = tree("TOP", {"TOP": Gate(id="TOP", kind=GateKind.OR, children=())}, [])
    hist = order_histogram(solve_minimal_cut_sets(ft, 3))
    assert hist.rows() == ((1, 0, 0), (2, 0, 0), (3, 0, 0))


def test_collection_csv_format():
    css = solve_minimal_cut_sets(simple_or())
    lines = css.to_csv().splitlines()
    assert lines[0] == "order,events,contains_ccf"
    assert lines[1] == "1,A,no"


def test_threads_argument_validated(full_tree):
    with pytest.raises(CutSetError):
        solve_minimal_cut_sets(full_tree, threads=0)
    with pytest.raises(CutSetError):
        solve_minimal_cut_sets(full_tree, max_order=0)
