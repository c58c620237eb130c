from __future__ import annotations

import itertools
import random
import xml.etree.ElementTree as ET

import pytest

from resha.cutset import (
    brute_force_cut_sets,
    evaluate_structure_function,
    random_coherent_tree,
    solve_minimal_cut_sets,
)
from resha.faulttree import (
    BasicEvent,
    EventKind,
    FaultTree,
    FaultTreeError,
    Gate,
    GateKind,
    HARDWARE_KINDS,
    IntegrationError,
    build_hardware_fault_tree,
    extract_subtree,
    failure_vote_threshold,
    filter_events,
    from_exchange_json,
    integrate_ucas,
    is_vacuous,
    to_exchange_json,
    to_open_psa_xml,
)
from resha.fixtures import TOP_FULL, TOP_RPS
from resha.sysmodel import parse_system_model


def event(eid: str, kind=EventKind.HW_INDEP) -> BasicEvent:
    from resha.sysmodel import NodeId

    subjects = (NodeId("XA", 0, 0, 1),)
    if kind in (EventKind.HW_CCF, EventKind.SW_CCF):
        subjects = (NodeId("XA", 0, 0, 1), NodeId("XB", 0, 0, 1))
    return BasicEvent(id=eid, kind=kind, subjects=subjects, uca_id="UCA1a" if kind is EventKind.SW_UCA else None)


def tree_of(top: str, gates: dict[str, Gate], events: dict[str, BasicEvent]) -> FaultTree:
    return FaultTree(top=top, gates=gates, events=events)


def test_vote_gate_arity_enforced():
    with pytest.raises(FaultTreeError):
        Gate(id="G", kind=GateKind.VOTE, children=("a", "b"), k=3)


def test_cycle_detected():
    gates = {
        "G1": Gate(id="G1", kind=GateKind.OR, children=("G2",)),
        "G2": Gate(id="G2", kind=GateKind.OR, children=("G1",)),
    }
    with pytest.raises(FaultTreeError):
        tree_of("G1", gates, {})


def test_unreachable_gate_rejected():
    gates = {
        "G1": Gate(id="G1", kind=GateKind.OR, children=("E1",)),
        "G2": Gate(id="G2", kind=GateKind.OR, children=("E1",)),
    }
    with pytest.raises(FaultTreeError):
        tree_of("G1", gates, {"E1": event("E1")})


def test_failure_side_vote_complements_two_of_four_success():
    # Trip succeeds when at least 2 of 4 divisions demand it, so the failure
    # side is at least 3 of 4 division failures: checked over all 16 states.
    k_fail = failure_vote_threshold(2, 4)
    assert k_fail == 3
    gates = {
        "TOP": Gate(id="TOP", kind=GateKind.VOTE, k=k_fail, children=("D1", "D2", "D3", "D4")),
    }
    events = {f"D{i}": event(f"D{i}") for i in range(1, 5)}
    ft = tree_of("TOP", gates, events)
    for states in itertools.product([False, True], repeat=4):
        assignment = {f"D{i+1}": states[i] for i in range(4)}
        divisions_ok = sum(1 for failed in states if not failed)
        success = divisions_ok >= 2
        assert evaluate_structure_function(ft, assignment) == (not success)


def test_failure_vote_threshold_exhaustive():
    for n in range(1, 6):
        for k_success in range(1, n + 1):
            k_fail = failure_vote_threshold(k_success, n)
            for states in itertools.product([False, True], repeat=n):
                working = sum(1 for failed in states if not failed)
                failed = sum(1 for f in states if f)
                assert (working >= k_success) == (failed < k_fail)


def test_build_single_component_top(rts_model):
    ft = build_hardware_fault_tree(rts_model, "A00.00.02")
    assert len(ft.events) == 1
    only = next(iter(ft.events.values()))
    assert only.kind is EventKind.HW_INDEP
    assert only.id == "RTB-UV-HD-A00.00.02"


def test_build_unknown_top(rts_model):
    with pytest.raises(FaultTreeError):
        build_hardware_fault_tree(rts_model, "NOPE")


def test_hardware_tree_has_only_hardware_events(rts_model):
    ft = build_hardware_fault_tree(rts_model, TOP_FULL)
    assert {e.kind for e in ft.events.values()} <= HARDWARE_KINDS


def test_replication_covers_rps_divisions(rts_model):
    ft = build_hardware_fault_tree(rts_model, TOP_FULL)
    for tag in "ABCD":
        assert ft.has_gate(f"UV-{tag}-FAILS")
        assert ft.has_gate(f"RTB-{tag}-FAILS-TO-OPEN")


def test_integrate_adds_exactly_selected(rts_model, rts_selected):
    base = build_hardware_fault_tree(rts_model, TOP_FULL)
    in_scope = tuple(u for u in rts_selected if base.fail_gate_ids(u.source))
    ft = integrate_ucas(base, in_scope)
    assert len(ft.events) == len(base.events) + len(in_scope)
    assert set(base.events) <= set(ft.events)
    for eid, original in base.events.items():
        assert ft.events[eid] == original


def test_integrate_empty_selection_is_identity(full_tree):
    assert integrate_ucas(full_tree, ()) is full_tree


def test_dom1_gains_uca18_events(rts_model, rts_selected):
    base = build_hardware_fault_tree(rts_model, TOP_FULL)
    in_scope = tuple(u for u in rts_selected if base.fail_gate_ids(u.source))
    ft = integrate_ucas(base, in_scope)
    assert "LC-DOM-SF-UCA18A" in ft.events
    assert "LC-DOM-SF-UCA18C" in ft.events
    sw_gate = ft.gate("SW::A01.09.00")
    assert "LC-DOM-SF-UCA18A" in sw_gate.children
    assert "LC-DOM-SF-UCA18C" in sw_gate.children


def test_mcr_operator_events_are_human_kind(full_tree):
    human = [e for e in full_tree.events.values() if e.kind is EventKind.HUMAN_UCA]
    assert {e.subjects[0].division for e in human} == {"MC", "RS"}
    mcr = [e for e in human if e.subjects[0].division == "MC"]
    assert {e.category for e in mcr} == {"a", "c"}
    for e in mcr:
        assert e.id.startswith("MCR-OP-HF-")


def test_integration_error_when_source_missing(rts_model, rts_selected):
    rps_only = build_hardware_fault_tree(rts_model, TOP_RPS)
    mcr_ucas = [u for u in rts_selected if u.source.division == "MC"]
    with pytest.raises(IntegrationError):
        integrate_ucas(rps_only, mcr_ucas)


def test_extract_subtree_identity(full_tree):
    again = extract_subtree(full_tree, full_tree.top)
    assert set(again.gates) == set(full_tree.gates)
    assert set(again.events) == set(full_tree.events)


def test_extract_subtree_unknown_gate(full_tree):
    with pytest.raises(FaultTreeError):
        extract_subtree(full_tree, "NOPE")


def test_extract_subtree_preserves_ids(full_tree):
    sub = extract_subtree(full_tree, "UV-A-FAILS")
    assert sub.top == "UV-A-FAILS"
    for gate_id, gate in sub.gates.items():
        assert full_tree.gate(gate_id) == gate


def test_extract_basic_event_only_gate(full_tree):
    # A hardware OR holds only basic events; extraction yields a one-gate tree.
    sub = extract_subtree(full_tree, "HW::A00.00.02")
    assert len(sub.gates) == 1
    assert set(sub.events) == {"RTB-UV-HD-A00.00.02", "RTB-UV-HD-CCF"}


def test_per_unit_replication_macro():
    doc = {
        "resha_model_version": 1,
        "equipment_classes": [{"tag": "proc", "prefix": "PRC", "display": "Processor"}],
        "nodes": [
            {"id": "A00.00.00", "name": "A", "kind": "division", "technology": "digital"},
            {"id": "A01.00.00", "name": "A1", "kind": "unit", "technology": "digital"},
            {"id": "A02.00.00", "name": "A2", "kind": "unit", "technology": "digital"},
            {"id": "A01.00.01", "name": "P11", "kind": "component", "technology": "digital",
             "equipment_class": "proc"},
            {"id": "A02.00.01", "name": "P21", "kind": "component", "technology": "digital",
             "equipment_class": "proc"},
        ],
        "links": [],
        "losses": [{"id": "L1", "description": "loss"}],
        "hazards": [{"id": "H1", "description": "hazard", "losses": ["L1"]}],
        "control_actions": [],
        "gates": [
            {
                "id": "TOP",
                "kind": "and",
                "children": [{"gate": "UNIT-A-01-DOWN"}, {"gate": "UNIT-A-02-DOWN"}],
            },
            {
                "id": "UNIT-$D-$U-DOWN",
                "kind": "or",
                "children": [{"fail": "$D$U.00.01"}],
                "replicate": "per-unit",
            },
        ],
        "ccf_policy": {},
    }
    model = parse_system_model(doc)
    ft = build_hardware_fault_tree(model, "TOP")
    assert ft.has_gate("UNIT-A-01-DOWN")
    assert ft.has_gate("UNIT-A-02-DOWN")
    sets = {c.events for c in brute_force_cut_sets(ft).cut_sets}
    assert sets == {frozenset({"PRC-HD-A01.00.01", "PRC-HD-A02.00.01"})}


def test_cycle_in_declarations_detected():
    doc = {
        "resha_model_version": 1,
        "equipment_classes": [{"tag": "proc", "prefix": "PRC", "display": "Processor"}],
        "nodes": [
            {"id": "A00.00.00", "name": "A", "kind": "division", "technology": "digital"},
            {"id": "A00.00.01", "name": "P", "kind": "component", "technology": "digital",
             "equipment_class": "proc"},
        ],
        "links": [],
        "losses": [{"id": "L1", "description": "loss"}],
        "hazards": [{"id": "H1", "description": "hazard", "losses": ["L1"]}],
        "control_actions": [],
        "gates": [
            {"id": "G1", "kind": "or", "children": [{"gate": "G2"}]},
            {"id": "G2", "kind": "or", "children": [{"gate": "G1"}, {"fail": "A00.00.01"}]},
        ],
        "ccf_policy": {},
    }
    model = parse_system_model(doc)
    with pytest.raises(FaultTreeError, match="cycle"):
        build_hardware_fault_tree(model, "G1")


def test_replication_macro_with_no_instantiations_is_error():
    doc = {
        "resha_model_version": 1,
        "equipment_classes": [{"tag": "proc", "prefix": "PRC", "display": "Processor"}],
        "nodes": [
            {"id": "A00.00.00", "name": "A", "kind": "division", "technology": "digital"},
            {"id": "A00.00.01", "name": "P", "kind": "component", "technology": "digital",
             "equipment_class": "proc"},
        ],
        "links": [],
        "losses": [{"id": "L1", "description": "loss"}],
        "hazards": [{"id": "H1", "description": "hazard", "losses": ["L1"]}],
        "control_actions": [],
        "gates": [
            {
                "id": "G-$D",
                "kind": "or",
                "children": [{"fail": "$D99.00.01"}],
                "replicate": "per-division",
            },
        ],
        "ccf_policy": {},
    }
    model = parse_system_model(doc)
    with pytest.raises(FaultTreeError):
        build_hardware_fault_tree(model, "G-A")


def test_filter_keep_all_is_identity(full_tree):
    ft = filter_events(full_tree, EventKind)
    assert set(ft.events) == set(full_tree.events)
    assert set(ft.gates) == set(full_tree.gates)


def test_filter_hardware_removes_software(full_tree):
    ft = filter_events(full_tree, HARDWARE_KINDS)
    kinds = {e.kind for e in ft.events.values()}
    assert kinds <= HARDWARE_KINDS
    assert not is_vacuous(ft)


def test_filter_false_kills_and_branch():
    gates = {
        "TOP": Gate(id="TOP", kind=GateKind.OR, children=("G1", "E3")),
        "G1": Gate(id="G1", kind=GateKind.AND, children=("E1", "E2")),
    }
    events = {
        "E1": event("E1"),
        "E2": event("E2", EventKind.SW_UCA),
        "E3": event("E3"),
    }
    ft = tree_of("TOP", gates, events)
    filtered = filter_events(ft, HARDWARE_KINDS)
    assert "G1" not in filtered.gates
    assert "E1" not in filtered.events
    assert set(filtered.events) == {"E3"}


def test_filter_empty_top_reported_vacuous():
    gates = {"TOP": Gate(id="TOP", kind=GateKind.OR, children=("E1",))}
    events = {"E1": event("E1", EventKind.SW_UCA)}
    ft = tree_of("TOP", gates, events)
    filtered = filter_events(ft, HARDWARE_KINDS)
    assert is_vacuous(filtered)
    assert len(solve_minimal_cut_sets(filtered).cut_sets) == 0


def test_filter_rewrites_vote_over_remaining():
    gates = {
        "TOP": Gate(id="TOP", kind=GateKind.VOTE, k=2, children=("E1", "E2", "E3")),
    }
    events = {
        "E1": event("E1"),
        "E2": event("E2"),
        "E3": event("E3", EventKind.SW_UCA),
    }
    ft = tree_of("TOP", gates, events)
    filtered = filter_events(ft, HARDWARE_KINDS)
    top = filtered.gate("TOP")
    assert top.children == ("E1", "E2")
    assert top.k == 2
    sets = {c.events for c in solve_minimal_cut_sets(filtered).cut_sets}
    assert sets == {frozenset({"E1", "E2"})}


def test_filter_commutes_with_extract_small_scope_via_oracle(full_tree):
    # ST-A-FAILS is small enough for exhaustive enumeration.
    scope = "ST-A-FAILS"
    a = filter_events(extract_subtree(full_tree, scope), HARDWARE_KINDS)
    b = extract_subtree(filter_events(full_tree, HARDWARE_KINDS), scope)
    sets_a = {c.events for c in brute_force_cut_sets(a).cut_sets}
    sets_b = {c.events for c in brute_force_cut_sets(b).cut_sets}
    assert sets_a == sets_b


def test_filter_commutes_with_extract_wider_scope_via_solver(full_tree):
    scope = "UV-A-FAILS"
    a = filter_events(extract_subtree(full_tree, scope), HARDWARE_KINDS)
    b = extract_subtree(filter_events(full_tree, HARDWARE_KINDS), scope)
    sets_a = {c.events for c in solve_minimal_cut_sets(a).cut_sets}
    sets_b = {c.events for c in solve_minimal_cut_sets(b).cut_sets}
    assert sets_a == sets_b


def test_coherence_monotone_under_random_flips(full_tree):
    rng = random.Random(7)
    ids = sorted(full_tree.events)
    for _ in range(25):
        assignment = {eid: rng.random() < 0.3 for eid in ids}
        before = evaluate_structure_function(full_tree, assignment)
        flipped = dict(assignment)
        off = [eid for eid in ids if not assignment[eid]]
        if not off:
            continue
        flipped[rng.choice(off)] = True
        after = evaluate_structure_function(full_tree, flipped)
        assert after or not before


def test_operations_preserve_coherence_no_negation(full_tree):
    for ft in (
        full_tree,
        extract_subtree(full_tree, "UV-B-FAILS"),
        filter_events(full_tree, HARDWARE_KINDS),
    ):
        assert all(g.kind in GateKind for g in ft.gates.values())


def test_event_names_unique_across_fixture(full_tree):
    assert len(full_tree.events) == len(set(full_tree.events))
    assert len(full_tree.gates) == len(set(full_tree.gates))
    assert not (set(full_tree.gates) & set(full_tree.events))


def test_exchange_round_trip(full_tree):
    text = to_exchange_json(full_tree)
    again = from_exchange_json(text)
    assert again.top == full_tree.top
    assert set(again.gates) == set(full_tree.gates)
    assert set(again.events) == set(full_tree.events)
    assert to_exchange_json(again) == text


def test_exchange_round_trip_random_trees():
    rng = random.Random(3)
    for _ in range(20):
        ft = random_coherent_tree(rng)
        again = from_exchange_json(to_exchange_json(ft))
        assert {c.events for c in brute_force_cut_sets(ft).cut_sets} == {
            c.events for c in brute_force_cut_sets(again).cut_sets
        }


def test_open_psa_emit_parses(full_tree):
    text = to_open_psa_xml(full_tree, name="rts")
    root = ET.fromstring(text)
    assert root.tag == "opsa-mef"
    tree_el = root.find("define-fault-tree")
    assert tree_el is not None and tree_el.get("name") == "rts"
    gates = tree_el.findall("define-gate")
    assert len(gates) == len(full_tree.gates)
    data = root.find("model-data")
    assert len(data.findall("define-basic-event")) == len(full_tree.events)
    votes = [g for g in gates if g.find("atleast") is not None]
    assert votes, "vote gates should emit atleast elements"
