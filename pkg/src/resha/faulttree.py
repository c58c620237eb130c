"""Coherent fault trees: hardware tree construction from gate declarations,
software/human failure integration, subtree extraction, and event filtering.

Trees are immutable DAGs of AND/OR/VOTE(k, n) gates over basic events; shared
children are allowed, negation is not. Every operation returns a new tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

from .stpa import UcaRecord
from .sysmodel import (
    GateChildSpec,
    GateSpec,
    NodeId,
    NodeKind,
    SystemModel,
    Technology,
    parse_node_id,
)


class FaultTreeError(Exception):
    """Raised for structural problems: cycles, missing references, bad votes."""


class IntegrationError(FaultTreeError):
    """Raised when a UCA cannot be attached to the tree."""


class GateKind(str, Enum):
    AND = "and"
    OR = "or"
    VOTE = "vote"


class EventKind(str, Enum):
    HW_INDEP = "HW_INDEP"
    HW_CCF = "HW_CCF"
    SW_UCA = "SW_UCA"
    SW_CCF = "SW_CCF"
    HUMAN_UCA = "HUMAN_UCA"


HARDWARE_KINDS = frozenset({EventKind.HW_INDEP, EventKind.HW_CCF})
SOFTWARE_KINDS = frozenset({EventKind.SW_UCA, EventKind.SW_CCF, EventKind.HUMAN_UCA})
CCF_KINDS = frozenset({EventKind.HW_CCF, EventKind.SW_CCF})


@dataclass(frozen=True)
class BasicEvent:
    id: str
    kind: EventKind
    subjects: tuple[NodeId, ...]
    description: str = ""
    category: str | None = None
    uca_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind in CCF_KINDS and len(self.subjects) < 2:
            raise FaultTreeError(f"CCF event {self.id} must reference >= 2 subjects")
        if self.kind is EventKind.SW_UCA and self.uca_id is None:
            raise FaultTreeError(f"software UCA event {self.id} must reference its UCA")


@dataclass(frozen=True)
class Gate:
    id: str
    kind: GateKind
    children: tuple[str, ...]
    k: int | None = None
    description: str | None = None

    def __post_init__(self) -> None:
        if self.kind is GateKind.VOTE:
            if self.k is None or not 1 <= self.k <= len(self.children):
                raise FaultTreeError(
                    f"vote gate {self.id} needs 1 <= k <= {len(self.children)}, got {self.k}"
                )
        elif self.k is not None:
            raise FaultTreeError(f"gate {self.id}: k only applies to vote gates")
        # Empty OR is a never-fails placeholder; an empty AND has no sound reading.
        if self.kind is GateKind.AND and not self.children:
            raise FaultTreeError(f"AND gate {self.id} must have children")


@dataclass(frozen=True)
class FaultTree:
    """Immutable coherent fault tree rooted at ``top``."""

    top: str
    gates: Mapping[str, Gate]
    events: Mapping[str, BasicEvent]

    def __post_init__(self) -> None:
        validate_tree(self)

    def gate(self, gate_id: str) -> Gate:
        return self.gates[gate_id]

    def event(self, event_id: str) -> BasicEvent:
        return self.events[event_id]

    def has_gate(self, gate_id: str) -> bool:
        return gate_id in self.gates

    def event_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.events))

    def events_of_kind(self, kinds: Iterable[EventKind]) -> tuple[BasicEvent, ...]:
        wanted = set(kinds)
        return tuple(e for _, e in sorted(self.events.items()) if e.kind in wanted)

    def fail_gate_ids(self, node: NodeId) -> tuple[str, ...]:
        """Failure gates belonging to a node: whole-node plus per-action ones."""
        whole = fail_gate_id(node)
        prefix = whole + "::"
        found = [g for g in self.gates if g == whole or g.startswith(prefix)]
        return tuple(sorted(found))


def validate_tree(ft: FaultTree) -> None:
    """Check reference integrity, vote arity, reachability, and acyclicity."""
    overlap = set(ft.gates) & set(ft.events)
    if overlap:
        raise FaultTreeError(f"ids used as both gate and event: {sorted(overlap)[:3]}")
    if ft.top not in ft.gates and ft.top not in ft.events:
        raise FaultTreeError(f"top reference {ft.top!r} does not exist")
    for gate in ft.gates.values():
        for child in gate.children:
            if child not in ft.gates and child not in ft.events:
                raise FaultTreeError(f"gate {gate.id} references unknown child {child!r}")
    # Iterative DFS: detects cycles and collects reachable ids.
    reached: set[str] = set()
    state: dict[str, int] = {}
    if ft.top in ft.gates:
        stack: list[tuple[str, int]] = [(ft.top, 0)]
        state[ft.top] = 1
        reached.add(ft.top)
        while stack:
            gate_id, idx = stack.pop()
            gate = ft.gates[gate_id]
            if idx < len(gate.children):
                stack.append((gate_id, idx + 1))
                child = gate.children[idx]
                reached.add(child)
                if child in ft.gates:
                    mark = state.get(child, 0)
                    if mark == 1:
                        raise FaultTreeError(f"cycle detected through gate {child!r}")
                    if mark == 0:
                        state[child] = 1
                        stack.append((child, 0))
            else:
                state[gate_id] = 2
    else:
        reached.add(ft.top)
    unreachable = set(ft.gates) - {g for g in reached if g in ft.gates}
    if unreachable:
        raise FaultTreeError(
            f"gates unreachable from top: {sorted(unreachable)[:3]}"
        )
    unreferenced = set(ft.events) - {e for e in reached if e in ft.events}
    if unreferenced:
        raise FaultTreeError(
            f"events unreachable from top: {sorted(unreferenced)[:3]}"
        )


def failure_vote_threshold(k_success: int, n: int) -> int:
    """Failure-side threshold complementing k-of-n success logic.

    A function succeeding when at least ``k_success`` of ``n`` redundant
    members work fails when at least ``n - k_success + 1`` of them fail;
    declared failure gates should use this threshold (2-of-4 success logic
    yields a VOTE(3, 4) failure gate).
    """
    if not 1 <= k_success <= n:
        raise FaultTreeError(f"need 1 <= k_success <= n, got {k_success}-of-{n}")
    return n - k_success + 1


# ---------------------------------------------------------------------------
# Canonical naming
# ---------------------------------------------------------------------------


def fail_gate_id(node: NodeId, ca_target: NodeId | None = None) -> str:
    if ca_target is None:
        return f"FAIL::{node.text}"
    return f"FAIL::{node.text}::{ca_target.text}"


def hw_gate_id(node: NodeId) -> str:
    return f"HW::{node.text}"


def sw_gate_id(node: NodeId, ca_target: NodeId | None = None) -> str:
    if ca_target is None:
        return f"SW::{node.text}"
    return f"SW::{node.text}::{ca_target.text}"


def independent_event_id(prefix: str, node: NodeId) -> str:
    return f"{prefix}-HD-{node.text}"


def uca_event_id(prefix: str, uca_id: str, human: bool) -> str:
    mode = "HF" if human else "SF"
    return f"{prefix}-{mode}-{uca_id.upper()}"


def ccf_event_id(
    prefix: str,
    hardware: bool,
    division: str | None = None,
    category: str | None = None,
    division_subset: Sequence[str] | None = None,
) -> str:
    parts = [prefix]
    if division is not None:
        parts.append(f"DIV{division}")
    elif division_subset is not None:
        parts.append("DIV" + "".join(division_subset))
    parts.append("HD" if hardware else "SF")
    parts.append("CCF")
    if category is not None:
        parts.append(f"T{category.upper()}")
    return "-".join(parts)


# ---------------------------------------------------------------------------
# Hardware tree construction
# ---------------------------------------------------------------------------


@dataclass
class _Builder:
    """Mutable scratch space used while instantiating a tree."""

    gates: dict[str, Gate] = field(default_factory=dict)
    events: dict[str, BasicEvent] = field(default_factory=dict)

    def add_event(self, event: BasicEvent) -> str:
        existing = self.events.get(event.id)
        if existing is None:
            self.events[event.id] = event
        return event.id

    def add_gate(self, gate: Gate) -> str:
        self.gates[gate.id] = gate
        return gate.id


def _expand_gate_specs(m: SystemModel) -> dict[str, GateSpec]:
    """Instantiate replication templates; returns concrete specs by id."""
    expanded: dict[str, GateSpec] = {}

    def substitute(spec: GateSpec, mapping: Mapping[str, str]) -> GateSpec:
        def sub(text: str | None) -> str | None:
            if text is None:
                return None
            for token, value in mapping.items():
                text = text.replace(token, value)
            return text

        return GateSpec(
            id=sub(spec.id) or spec.id,
            kind=spec.kind,
            children=tuple(
                GateChildSpec(gate=sub(c.gate), fail=sub(c.fail), ca_to=sub(c.ca_to))
                for c in spec.children
            ),
            k=spec.k,
            replicate=None,
            description=sub(spec.description),
        )

    def instantiations(spec: GateSpec) -> list[GateSpec]:
        if spec.replicate is None:
            return [spec]
        out = []
        if spec.replicate == "per-division":
            contexts = [{"$D": tag} for tag in _division_tags(m)]
        else:  # per-unit
            contexts = [
                {"$D": node.id.division, "$U": f"{node.id.unit:02d}"}
                for node in sorted(m.nodes.values(), key=lambda n: n.id)
                if node.kind is NodeKind.UNIT
            ]
        for ctx in contexts:
            candidate = substitute(spec, ctx)
            if _node_refs_exist(m, candidate):
                out.append(candidate)
        if not out:
            raise FaultTreeError(
                f"replicated gate {spec.id!r} instantiates for no division/unit: "
                "referenced nodes are absent from the model"
            )
        return out

    for spec in m.gates:
        for concrete in instantiations(spec):
            if concrete.id in expanded:
                raise FaultTreeError(f"gate id {concrete.id!r} expands more than once")
            expanded[concrete.id] = concrete
    return expanded


def _division_tags(m: SystemModel) -> list[str]:
    return [
        n.id.division
        for n in sorted(m.nodes.values(), key=lambda x: x.id)
        if n.kind is NodeKind.DIVISION
    ]


def _node_refs_exist(m: SystemModel, spec: GateSpec) -> bool:
    for child in spec.children:
        for ref in (child.fail, child.ca_to):
            if ref is None:
                continue
            try:
                node_id = parse_node_id(ref)
            except Exception:
                return False
            if not m.has_node(node_id):
                return False
    return True


def build_hardware_fault_tree(m: SystemModel, top: str) -> FaultTree:
    """Build the hardware-failure tree rooted at a declared gate.

    ``top`` may also name a node, in which case the tree is that node's
    failure gate alone. Component-failure references expand to an OR holding
    the node's independent hardware event (none for human controllers);
    common-cause and software events are attached by later pipeline stages.
    """
    specs = _expand_gate_specs(m)
    builder = _Builder()

    def ensure_fail_gate(node_ref: str, ca_to: str | None) -> str:
        node_id = parse_node_id(node_ref)
        if not m.has_node(node_id):
            raise FaultTreeError(f"gate declaration references unknown node {node_ref!r}")
        node = m.node(node_id)
        hw_id = hw_gate_id(node_id)
        if hw_id not in builder.gates:
            children: tuple[str, ...] = ()
            if node.technology is not Technology.HUMAN:
                prefix = m.class_prefix(node.equipment_class)
                event = BasicEvent(
                    id=independent_event_id(prefix, node_id),
                    kind=EventKind.HW_INDEP,
                    subjects=(node_id,),
                    description=f"{node.name} hardware failure.",
                )
                children = (builder.add_event(event),)
            builder.add_gate(Gate(id=hw_id, kind=GateKind.OR, children=children))
        target = parse_node_id(ca_to) if ca_to is not None else None
        fid = fail_gate_id(node_id, target)
        if fid not in builder.gates:
            builder.add_gate(
                Gate(
                    id=fid,
                    kind=GateKind.OR,
                    children=(hw_id,),
                    description=f"{node.name} fails" + (f" (action toward {ca_to})" if ca_to else ""),
                )
            )
        return fid

    def instantiate(gate_id: str, trail: tuple[str, ...]) -> str:
        if gate_id in trail:
            cycle = " -> ".join(trail + (gate_id,))
            raise FaultTreeError(f"cycle detected in gate declarations: {cycle}")
        if gate_id in builder.gates:
            return gate_id
        spec = specs.get(gate_id)
        if spec is None:
            raise FaultTreeError(f"unknown gate {gate_id!r}")
        children: list[str] = []
        for child in spec.children:
            if child.gate is not None:
                children.append(instantiate(child.gate, trail + (gate_id,)))
            else:
                assert child.fail is not None
                children.append(ensure_fail_gate(child.fail, child.ca_to))
        builder.add_gate(
            Gate(
                id=spec.id,
                kind=GateKind(spec.kind),
                children=tuple(children),
                k=spec.k,
                description=spec.description,
            )
        )
        return spec.id

    if top in specs:
        root = instantiate(top, ())
    else:
        try:
            node_id = parse_node_id(top)
        except Exception:
            raise FaultTreeError(f"unknown top event {top!r}") from None
        if not m.has_node(node_id):
            raise FaultTreeError(f"unknown top event {top!r}")
        root = ensure_fail_gate(top, None)

    return FaultTree(top=root, gates=dict(builder.gates), events=dict(builder.events))


# ---------------------------------------------------------------------------
# UCA integration
# ---------------------------------------------------------------------------


def integrate_ucas(ft: FaultTree, selected: Sequence[UcaRecord]) -> FaultTree:
    """Attach selected UCAs as basic events under their sources' failure gates.

    Each affected failure gate becomes OR(hardware subtree, software subtree);
    the software subtree is an OR of that action's UCA events, one basic
    event per UCA, and later receives common-cause events. Human-controller
    UCAs are attached exactly like software ones.
    """
    if not selected:
        return ft
    gates = dict(ft.gates)
    events = dict(ft.events)

    for record in selected:
        if not record.applicable:
            raise IntegrationError(f"{record.uca_id} is not applicable; cannot integrate")
        if record.source_technology is Technology.ANALOG:
            raise IntegrationError(
                f"{record.uca_id}: source {record.source.text} is analog and carries no software"
            )
        exact = fail_gate_id(record.source, record.target)
        whole = fail_gate_id(record.source)
        if exact in gates:
            fail_id = exact
            sw_id = sw_gate_id(record.source, record.target)
        elif whole in gates:
            fail_id = whole
            sw_id = sw_gate_id(record.source)
        else:
            raise IntegrationError(
                f"{record.uca_id}: source {record.source.text} has no failure node in the tree"
            )
        human = record.source_technology is Technology.HUMAN
        event = BasicEvent(
            id=uca_event_id(record.source_class_prefix, record.uca_id, human),
            kind=EventKind.HUMAN_UCA if human else EventKind.SW_UCA,
            subjects=(record.source,),
            description=record.text,
            category=record.category.letter,
            uca_id=record.uca_id,
        )
        if event.id in events:
            raise IntegrationError(f"duplicate UCA event id {event.id}")
        events[event.id] = event
        sw_gate = gates.get(sw_id)
        if sw_gate is None:
            gates[sw_id] = Gate(id=sw_id, kind=GateKind.OR, children=(event.id,))
            parent = gates[fail_id]
            gates[fail_id] = Gate(
                id=parent.id,
                kind=parent.kind,
                children=parent.children + (sw_id,),
                k=parent.k,
                description=parent.description,
            )
        else:
            gates[sw_id] = Gate(id=sw_id, kind=GateKind.OR, children=sw_gate.children + (event.id,))

    return FaultTree(top=ft.top, gates=gates, events=events)


def attach_shared_event(
    ft_gates: dict[str, Gate], event_id: str, gate_ids: Sequence[str]
) -> None:
    """Append one (shared) event id under each listed gate, in place."""
    for gate_id in gate_ids:
        gate = ft_gates[gate_id]
        if event_id in gate.children:
            continue
        ft_gates[gate_id] = Gate(
            id=gate.id,
            kind=gate.kind,
            children=gate.children + (event_id,),
            k=gate.k,
            description=gate.description,
        )


# ---------------------------------------------------------------------------
# Subtrees and filtering
# ---------------------------------------------------------------------------


def extract_subtree(ft: FaultTree, gate_id: str) -> FaultTree:
    """New tree rooted at an existing gate; reachable ids are preserved."""
    if gate_id not in ft.gates:
        raise FaultTreeError(f"unknown gate {gate_id!r}")
    gates: dict[str, Gate] = {}
    events: dict[str, BasicEvent] = {}
    stack = [gate_id]
    seen: set[str] = set()
    while stack:
        current = stack.pop()
        if current in seen:
            continue
        seen.add(current)
        if current in ft.gates:
            gate = ft.gates[current]
            gates[current] = gate
            stack.extend(gate.children)
        else:
            events[current] = ft.events[current]
    return FaultTree(top=gate_id, gates=gates, events=events)


def filter_events(ft: FaultTree, keep_kinds: Iterable[EventKind]) -> FaultTree:
    """Fix events outside ``keep_kinds`` to FALSE and simplify.

    FALSE children vanish under OR, kill AND branches, and shrink VOTE gates
    (a vote needing more children than remain is FALSE). A top simplified to
    FALSE yields a tree whose root is an empty OR: no cut sets, reported as a
    vacuous top rather than an error.
    """
    wanted = set(keep_kinds)
    if wanted >= {e.kind for e in ft.events.values()}:
        return ft
    memo: dict[str, str | None] = {}
    gates: dict[str, Gate] = {}
    events: dict[str, BasicEvent] = {}

    def visit(ref: str) -> str | None:
        """Returns surviving id, or None when the subtree is FALSE."""
        if ref in memo:
            return memo[ref]
        if ref in ft.events:
            event = ft.events[ref]
            if event.kind in wanted:
                events[ref] = event
                memo[ref] = ref
            else:
                memo[ref] = None
            return memo[ref]
        gate = ft.gates[ref]
        kept = [c for c in (visit(child) for child in gate.children) if c is not None]
        result: str | None
        if gate.kind is GateKind.OR:
            result = ref if kept else None
        elif gate.kind is GateKind.AND:
            result = ref if len(kept) == len(gate.children) else None
        else:
            assert gate.k is not None
            result = ref if gate.k <= len(kept) else None
        if result is not None:
            gates[ref] = Gate(
                id=gate.id,
                kind=gate.kind,
                children=tuple(kept),
                k=gate.k,
                description=gate.description,
            )
        memo[ref] = result
        return result

    if ft.top in ft.events:
        survivor = visit(ft.top)
        if survivor is not None:
            # Single-event tree: wrap stays unnecessary, keep identity.
            return FaultTree(top=ft.top, gates={}, events={ft.top: ft.events[ft.top]})
        return FaultTree(
            top="TOP-UNREACHABLE",
            gates={"TOP-UNREACHABLE": Gate(id="TOP-UNREACHABLE", kind=GateKind.OR, children=())},
            events={},
        )

    survivor = visit(ft.top)
    if survivor is None:
        return FaultTree(
            top=ft.top,
            gates={ft.top: Gate(id=ft.top, kind=GateKind.OR, children=(),
                                description=ft.gates[ft.top].description)},
            events={},
        )
    # Drop gates and events no longer reachable (children of killed branches).
    pruned = _prune(gates, ft.top)
    live_events = {
        child
        for gate in pruned.values()
        for child in gate.children
        if child in events
    }
    return FaultTree(
        top=ft.top,
        gates=pruned,
        events={e: events[e] for e in sorted(live_events)},
    )


def _prune(gates: Mapping[str, Gate], top: str) -> dict[str, Gate]:
    reachable: set[str] = set()
    stack = [top]
    while stack:
        current = stack.pop()
        if current in reachable or current not in gates:
            continue
        reachable.add(current)
        stack.extend(gates[current].children)
    return {g: gates[g] for g in gates if g in reachable}


def is_vacuous(ft: FaultTree) -> bool:
    """True when the top simplified away entirely (no failure can occur)."""
    top = ft.gates.get(ft.top)
    return top is not None and not top.children


# ---------------------------------------------------------------------------
# Exchange formats
# ---------------------------------------------------------------------------


def to_exchange_json(ft: FaultTree) -> str:
    doc = {
        "top": ft.top,
        "gates": [
            {
                "id": g.id,
                "kind": g.kind.value,
                **({"k": g.k} if g.k is not None else {}),
                "children": list(g.children),
                **({"description": g.description} if g.description else {}),
            }
            for _, g in sorted(ft.gates.items())
        ],
        "events": [
            {
                "id": e.id,
                "kind": e.kind.value,
                "subjects": [s.text for s in e.subjects],
                **({"category": e.category} if e.category else {}),
                **({"uca": e.uca_id} if e.uca_id else {}),
                **({"description": e.description} if e.description else {}),
            }
            for _, e in sorted(ft.events.items())
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def from_exchange_json(text: str) -> FaultTree:
    doc = json.loads(text)
    gates = {}
    for g in doc.get("gates", []):
        gates[g["id"]] = Gate(
            id=g["id"],
            kind=GateKind(g["kind"]),
            children=tuple(g.get("children", [])),
            k=g.get("k"),
            description=g.get("description"),
        )
    events = {}
    for e in doc.get("events", []):
        events[e["id"]] = BasicEvent(
            id=e["id"],
            kind=EventKind(e["kind"]),
            subjects=tuple(parse_node_id(s) for s in e.get("subjects", [])),
            description=e.get("description", ""),
            category=e.get("category"),
            uca_id=e.get("uca"),
        )
    return FaultTree(top=doc["top"], gates=gates, events=events)


def to_open_psa_xml(ft: FaultTree, name: str = "fault-tree") -> str:
    """Emit an Open-PSA style model exchange document (emit only)."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', "<opsa-mef>"]
    lines.append(f"  <define-fault-tree name={quoteattr(name)}>")

    def ref(child: str) -> str:
        if child in ft.gates:
            return f"<gate name={quoteattr(child)}/>"
        return f"<basic-event name={quoteattr(child)}/>"

    for _, gate in sorted(ft.gates.items()):
        lines.append(f"    <define-gate name={quoteattr(gate.id)}>")
        if gate.kind is GateKind.VOTE:
            lines.append(f'      <atleast min="{gate.k}">')
            for child in gate.children:
                lines.append(f"        {ref(child)}")
            lines.append("      </atleast>")
        else:
            tag = gate.kind.value
            if gate.children:
                lines.append(f"      <{tag}>")
                for child in gate.children:
                    lines.append(f"        {ref(child)}")
                lines.append(f"      </{tag}>")
            else:
                lines.append(f"      <{tag}/>")
        lines.append("    </define-gate>")
    lines.append("  </define-fault-tree>")
    lines.append("  <model-data>")
    for _, event in sorted(ft.events.items()):
        lines.append(f"    <define-basic-event name={quoteattr(event.id)}>")
        if event.description:
            lines.append(f"      <label>{escape(event.description)}</label>")
        lines.append("    </define-basic-event>")
    lines.append("  </model-data>")
    lines.append("</opsa-mef>")
    return "\n".join(lines) + "\n"
