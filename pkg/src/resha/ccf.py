"""Common-cause failure events: catalog enumeration from redundancy groups
and shared-event injection into an integrated fault tree.

A CCF event injected at n attachment points is one basic event with one ID,
so any cut set containing it counts it once. Hardware CCFs land under each
member's hardware OR; software CCFs land under each member's software ORs,
one event per enabled category.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .faulttree import (
    BasicEvent,
    EventKind,
    FaultTree,
    attach_shared_event,
    ccf_event_id,
    fail_gate_id,
    hw_gate_id,
    sw_gate_id,
)
from .sysmodel import CcfPolicy, GroupScope, NodeId, RedundancyGroup

logger = logging.getLogger(__name__)

_CATEGORY_WORD = {"a": "type A", "b": "type B", "c": "type C", "d": "type D"}


@dataclass(frozen=True)
class CcfEvent:
    """A catalog entry; ``injected`` candidates become shared basic events."""

    name: str
    kind: EventKind
    class_tag: str
    scope: GroupScope
    members: tuple[NodeId, ...]
    division: str | None = None
    division_subset: tuple[str, ...] | None = None
    category: str | None = None
    description: str = ""

    def to_basic_event(self) -> BasicEvent:
        return BasicEvent(
            id=self.name,
            kind=self.kind,
            subjects=self.members,
            description=self.description,
            category=self.category,
        )


def _hw_event(group: RedundancyGroup, division: str | None = None,
              subset: tuple[str, ...] | None = None,
              members: tuple[NodeId, ...] | None = None) -> CcfEvent:
    scope = group.scope if subset is None else GroupScope.CROSS_DIVISION
    where = ""
    if division is not None:
        where = f" within division {division}"
    elif subset is not None:
        where = f" across divisions {'-'.join(subset)}"
    return CcfEvent(
        name=ccf_event_id(group.prefix, hardware=True, division=division,
                          division_subset=subset),
        kind=EventKind.HW_CCF,
        class_tag=group.class_tag,
        scope=scope,
        members=members or group.members,
        division=division,
        division_subset=subset,
        description=f"{group.display} hardware CCF{where}.",
    )


def _sw_event(group: RedundancyGroup, category: str, division: str | None = None,
              subset: tuple[str, ...] | None = None,
              members: tuple[NodeId, ...] | None = None) -> CcfEvent:
    scope = group.scope if subset is None else GroupScope.CROSS_DIVISION
    where = ""
    if division is not None:
        where = f" within division {division}"
    elif subset is not None:
        where = f" across divisions {'-'.join(subset)}"
    return CcfEvent(
        name=ccf_event_id(group.prefix, hardware=False, division=division,
                          division_subset=subset, category=category),
        kind=EventKind.SW_CCF,
        class_tag=group.class_tag,
        scope=scope,
        members=members or group.members,
        division=division,
        division_subset=subset,
        category=category,
        description=f"{group.display} software CCF {_CATEGORY_WORD[category]}{where}.",
    )


def _partial_subsets(group: RedundancyGroup) -> list[tuple[tuple[str, ...], tuple[NodeId, ...]]]:
    """Division subsets of size >= 2 short of the full span."""
    divisions = sorted({m.division for m in group.members})
    out = []
    for size in range(2, len(divisions)):
        for subset in itertools.combinations(divisions, size):
            members = tuple(m for m in group.members if m.division in subset)
            out.append((subset, members))
    return out


def enumerate_ccf_catalog(
    groups: Sequence[RedundancyGroup], policy: CcfPolicy
) -> tuple[CcfEvent, ...]:
    """Complete CCF catalog for design guidance.

    The catalog covers every group at both declared scopes regardless of the
    policy's include flags, and software categories a/b/c plus any category
    the policy names, so a restrictive injection policy still yields the full
    picture. Partial inter-division combinations appear only when the policy
    enables them.
    """
    categories = sorted(set("abc") | set(policy.software_categories))
    catalog: list[CcfEvent] = []
    for group in groups:
        division = group.division if group.scope is GroupScope.INTRA_DIVISION else None
        catalog.append(_hw_event(group, division=division))
        if group.software_capable:
            for category in categories:
                catalog.append(_sw_event(group, category, division=division))
        if group.scope is GroupScope.CROSS_DIVISION and policy.include_partial_interdivision:
            for subset, members in _partial_subsets(group):
                catalog.append(_hw_event(group, subset=subset, members=members))
                if group.software_capable:
                    for category in categories:
                        catalog.append(_sw_event(group, category, subset=subset, members=members))
    catalog.sort(key=lambda e: (e.class_tag, e.scope.value, e.division or "", e.name))
    return tuple(catalog)


def _injection_candidates(
    groups: Sequence[RedundancyGroup], policy: CcfPolicy, warn: bool = False
) -> list[CcfEvent]:
    candidates: list[CcfEvent] = []

    def software_allowed(group: RedundancyGroup) -> bool:
        if group.software_capable:
            return True
        if warn and policy.software_categories:
            logger.warning(
                "skipping software CCFs for %s (%s): members have no software subtree",
                group.class_tag,
                group.scope.value,
            )
        return False

    for group in groups:
        if group.scope is GroupScope.INTRA_DIVISION:
            if not policy.include_intra_division:
                continue
            division = group.division
            candidates.append(_hw_event(group, division=division))
            if software_allowed(group):
                for category in policy.software_categories:
                    candidates.append(_sw_event(group, category, division=division))
        else:
            if policy.include_cross_all_divisions:
                candidates.append(_hw_event(group))
                if software_allowed(group):
                    for category in policy.software_categories:
                        candidates.append(_sw_event(group, category))
            if policy.include_partial_interdivision:
                for subset, members in _partial_subsets(group):
                    candidates.append(_hw_event(group, subset=subset, members=members))
                    if group.software_capable:
                        for category in policy.software_categories:
                            candidates.append(
                                _sw_event(group, category, subset=subset, members=members)
                            )
    candidates.sort(key=lambda e: e.name)
    return candidates


def inject_ccfs(
    ft: FaultTree, groups: Sequence[RedundancyGroup], policy: CcfPolicy
) -> FaultTree:
    """Attach CCF basic events to every member failure node present in the tree.

    Hardware CCFs attach under members' hardware ORs; software CCFs attach
    under members' software ORs (all of them, for components acting through
    several control actions). A group whose members have no software subtree
    is skipped with a warning. Members absent from this tree's scope are
    ignored; an event attaches only when at least two members are present.
    """
    gates = dict(ft.gates)
    events = dict(ft.events)

    for candidate in _injection_candidates(groups, policy, warn=True):
        if candidate.kind is EventKind.HW_CCF:
            points = [
                hw_gate_id(member)
                for member in candidate.members
                if hw_gate_id(member) in gates
            ]
        else:
            points = []
            for member in candidate.members:
                member_points = _software_gates_of(gates, member)
                if not member_points and _has_fail_gate(gates, member):
                    logger.warning(
                        "skipping software CCF %s for %s: no software subtree",
                        candidate.name,
                        member.text,
                    )
                points.extend(member_points)
        present_members = {p.split("::")[1] for p in points}
        if len(present_members) < 2:
            continue
        if candidate.name not in events:
            events[candidate.name] = candidate.to_basic_event()
        attach_shared_event(gates, candidate.name, sorted(points))

    return FaultTree(top=ft.top, gates=gates, events=events)


def _software_gates_of(gates: dict, member: NodeId) -> list[str]:
    whole = sw_gate_id(member)
    prefix = whole + "::"
    return sorted(g for g in gates if g == whole or g.startswith(prefix))


def _has_fail_gate(gates: dict, member: NodeId) -> bool:
    whole = fail_gate_id(member)
    prefix = whole + "::"
    return any(g == whole or g.startswith(prefix) for g in gates)


def injected_event_names(
    groups: Sequence[RedundancyGroup], policy: CcfPolicy
) -> tuple[str, ...]:
    """Names the policy would inject given full attachment availability."""
    return tuple(c.name for c in _injection_candidates(groups, policy))


def catalog_to_csv(catalog: Iterable[CcfEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "class", "scope", "kind", "category", "members"])
    for event in catalog:
        writer.writerow(
            [
                event.name,
                event.class_tag,
                event.scope.value if event.division_subset is None else "partial-interdivision",
                event.kind.value,
                event.category or "",
                " ".join(m.text for m in event.members),
            ]
        )
    return buf.getvalue()
