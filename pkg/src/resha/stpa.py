"""Redundancy-guided control structure and unsafe-control-action enumeration.

Control actions declared in the model are grouped into layers (highest
redundancy level first), numbered deterministically, and expanded into four
unsafe variants per action: not provided (a), provided when unneeded (b),
wrong timing (c), and wrong duration (d, continuous actions only).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .sysmodel import (
    ActionSpec,
    Hazard,
    Link,
    LinkType,
    NodeId,
    SystemModel,
    Technology,
    UCA_CATEGORIES,
)


class StpaError(Exception):
    """Raised for control-structure or UCA enumeration failures."""


class UcaCategory(str, Enum):
    NOT_PROVIDED = "a"
    PROVIDED_UNNEEDED = "b"
    WRONG_TIMING = "c"
    WRONG_DURATION = "d"

    @property
    def letter(self) -> str:
        return self.value


_CATEGORY_CONTEXT_KEY = {
    UcaCategory.NOT_PROVIDED: "needed",
    UcaCategory.PROVIDED_UNNEEDED: "unneeded",
    UcaCategory.WRONG_TIMING: "timing",
    UcaCategory.WRONG_DURATION: "duration",
}


class TopEventKind(str, Enum):
    FAILURE_TO_ACT = "failure-to-act"
    SPURIOUS_ACTION = "spurious-action"


# Which UCA categories feed a fault tree for each top-event kind.
CATEGORIES_FOR_TOP_EVENT = {
    TopEventKind.FAILURE_TO_ACT: (UcaCategory.NOT_PROVIDED, UcaCategory.WRONG_TIMING),
    TopEventKind.SPURIOUS_ACTION: (UcaCategory.PROVIDED_UNNEEDED,),
}


@dataclass(frozen=True)
class ControlAction:
    """A numbered control action within the layered structure."""

    number: int
    layer: int
    spec: ActionSpec
    source_technology: Technology
    source_class_prefix: str
    source_class_tag: str | None

    @property
    def ca_id(self) -> str:
        return f"CA{self.number}"

    @property
    def source(self) -> NodeId:
        return self.spec.source

    @property
    def target(self) -> NodeId:
        return self.spec.target


@dataclass(frozen=True)
class FeedbackEdge:
    number: int
    layer: int
    source: NodeId
    target: NodeId

    @property
    def fb_id(self) -> str:
        return f"FB{self.number}"


@dataclass(frozen=True)
class Layer:
    """One redundancy level of the control structure."""

    index: int
    controllers: tuple[NodeId, ...]
    processes: tuple[NodeId, ...]
    actions: tuple[ControlAction, ...]
    feedbacks: tuple[FeedbackEdge, ...]


@dataclass(frozen=True)
class ControlStructure:
    layers: tuple[Layer, ...]

    @property
    def actions(self) -> tuple[ControlAction, ...]:
        return tuple(a for layer in self.layers for a in layer.actions)

    @property
    def feedbacks(self) -> tuple[FeedbackEdge, ...]:
        return tuple(f for layer in self.layers for f in layer.feedbacks)

    def action(self, ca_id: str) -> ControlAction:
        for a in self.actions:
            if a.ca_id == ca_id:
                return a
        raise StpaError(f"unknown control action {ca_id!r}")

    def tracking_table(self) -> tuple[tuple[str, int, str, str, str], ...]:
        """(CA id, layer, source, target, verb) rows for every numbered action."""
        return tuple(
            (a.ca_id, a.layer, a.source.text, a.target.text, a.spec.verb)
            for a in self.actions
        )


@dataclass(frozen=True)
class UcaRecord:
    """One slot of the UCA table: a control action crossed with a category.

    Applicable records carry rendered text and hazard links; inapplicable
    records carry a justification. The record keeps enough of the action's
    identity (source node, technology, class prefix) to be attached to a
    fault tree without further lookups.
    """

    uca_id: str
    ca_id: str
    category: UcaCategory
    applicable: bool
    text: str
    hazards: tuple[str, ...]
    justification: str | None
    source: NodeId
    target: NodeId
    source_technology: Technology
    source_class_prefix: str

    @property
    def is_human(self) -> bool:
        return self.source_technology is Technology.HUMAN


def build_layered_control_structure(m: SystemModel) -> ControlStructure:
    """Group declared control actions into redundancy layers and number them.

    A control action's layer defaults to its source node's structural depth
    (division-level actors first) and may be overridden per declaration.
    Numbering is deterministic: by layer, then source ID, then target ID,
    then declaration order. Feedback edges are layered and numbered the same
    way.
    """
    if not any(l.type is LinkType.CONTROL for l in m.links):
        raise StpaError("model declares no control links; control structure is empty")
    if not m.actions:
        raise StpaError("model declares no control actions; control structure is empty")

    def action_layer(spec: ActionSpec) -> int:
        return spec.layer if spec.layer is not None else spec.source.structural_depth

    def feedback_layer(link: Link) -> int:
        return link.layer if link.layer is not None else link.source.structural_depth

    raw_layers = sorted(
        {action_layer(a) for a in m.actions}
        | {feedback_layer(l) for l in m.feedback_links()}
    )
    compact = {raw: idx + 1 for idx, raw in enumerate(raw_layers)}

    ordered_actions = sorted(
        enumerate(m.actions),
        key=lambda pair: (
            compact[action_layer(pair[1])],
            pair[1].source,
            pair[1].target,
            pair[0],
        ),
    )
    ordered_feedback = sorted(
        enumerate(m.feedback_links()),
        key=lambda pair: (
            compact[feedback_layer(pair[1])],
            pair[1].source,
            pair[1].target,
            pair[0],
        ),
    )

    actions_by_layer: dict[int, list[ControlAction]] = {}
    for number, (_, spec) in enumerate(ordered_actions, start=1):
        node = m.node(spec.source)
        ca = ControlAction(
            number=number,
            layer=compact[action_layer(spec)],
            spec=spec,
            source_technology=node.technology,
            source_class_prefix=m.class_prefix(node.equipment_class),
            source_class_tag=node.equipment_class,
        )
        actions_by_layer.setdefault(ca.layer, []).append(ca)

    feedback_by_layer: dict[int, list[FeedbackEdge]] = {}
    for number, (_, link) in enumerate(ordered_feedback, start=1):
        fb = FeedbackEdge(
            number=number,
            layer=compact[feedback_layer(link)],
            source=link.source,
            target=link.target,
        )
        feedback_by_layer.setdefault(fb.layer, []).append(fb)

    layers = []
    for idx in sorted(set(actions_by_layer) | set(feedback_by_layer)):
        acts = tuple(actions_by_layer.get(idx, ()))
        fbs = tuple(feedback_by_layer.get(idx, ()))
        controllers = tuple(sorted({a.source for a in acts}))
        processes = tuple(sorted({a.target for a in acts}))
        layers.append(
            Layer(index=idx, controllers=controllers, processes=processes, actions=acts, feedbacks=fbs)
        )
    return ControlStructure(layers=tuple(layers))


def render_uca_text(record: UcaRecord) -> str:
    """Canonical text of an applicable UCA record."""
    if not record.applicable:
        return "Not applicable."
    return record.text


def _render(ca: ControlAction, category: UcaCategory, hazards: Sequence[str]) -> str:
    spec = ca.spec
    context = spec.context(_CATEGORY_CONTEXT_KEY[category]) or ""
    hazard_part = f" [{', '.join(hazards)}]" if hazards else ""
    if category is UcaCategory.NOT_PROVIDED:
        body = f"{spec.source_label} does not provide {spec.action_phrase} {context}"
    else:
        body = f"{spec.source_label} provides {spec.action_phrase} {context}"
    return f"{body.rstrip()}{hazard_part}."


def enumerate_ucas(
    cs: ControlStructure,
    hazards: Sequence[Hazard],
    overrides: Mapping[str, Mapping[str, str]] | None = None,
) -> tuple[UcaRecord, ...]:
    """Produce exactly four UCA slots per control action.

    Category d applies only to continuous actions unless overridden. Each
    applicable slot renders its text and must link at least one declared
    hazard; each inapplicable slot carries a justification. ``overrides``
    maps CA id to ``{category: justification}`` for extra not-applicable
    rulings beyond those declared in the model.
    """
    declared = {h.id for h in hazards}
    overrides = overrides or {}
    known_cas = {a.ca_id for a in cs.actions}
    for ca_id in overrides:
        if ca_id not in known_cas:
            raise StpaError(f"applicability override references unknown control action {ca_id!r}")

    records: list[UcaRecord] = []
    for ca in cs.actions:
        spec = ca.spec
        extra_na = overrides.get(ca.ca_id, {})
        for category in UcaCategory:
            letter = category.letter
            justification = extra_na.get(letter) or spec.not_applicable.get(letter)
            applicable = justification is None
            if category is UcaCategory.WRONG_DURATION and not spec.continuous and applicable:
                applicable = False
                justification = (
                    "Not a continuous control action; duration-based unsafe behavior does not arise."
                )
            linked = tuple(spec.hazards.get(letter, ()))
            if applicable:
                unknown = [h for h in linked if h not in declared]
                if unknown:
                    raise StpaError(
                        f"{ca.ca_id}{letter} links undeclared hazards {unknown}"
                    )
                if not linked:
                    raise StpaError(
                        f"{ca.ca_id}{letter} is applicable but links no hazards"
                    )
            record = UcaRecord(
                uca_id=f"UCA{ca.number}{letter}",
                ca_id=ca.ca_id,
                category=category,
                applicable=applicable,
                text="Not applicable.",
                hazards=linked if applicable else (),
                justification=None if applicable else justification,
                source=ca.source,
                target=ca.target,
                source_technology=ca.source_technology,
                source_class_prefix=ca.source_class_prefix,
            )
            if applicable:
                record = replace(record, text=_render(ca, category, linked))
            records.append(record)
    return tuple(records)


def select_ucas_for_top_event(
    ucas: Iterable[UcaRecord], kind: TopEventKind | str
) -> tuple[UcaRecord, ...]:
    """Applicable UCAs feeding a fault tree of the given top-event kind.

    Failure-to-act top events take categories a and c; spurious-action top
    events take category b.
    """
    try:
        kind = TopEventKind(kind)
    except ValueError:
        raise StpaError(f"unknown top event kind {kind!r}") from None
    wanted = set(CATEGORIES_FOR_TOP_EVENT[kind])
    return tuple(u for u in ucas if u.applicable and u.category in wanted)


def potential_uca_count(records: Sequence[UcaRecord]) -> int:
    return len(records)


def identified_uca_count(records: Sequence[UcaRecord]) -> int:
    return sum(1 for r in records if r.applicable)


def unsplit_destination_count(m: SystemModel, spec: ActionSpec) -> int:
    """Number of per-destination actions this declaration stands for.

    A physically split action is declared once; its duplicate destinations
    are the physical-split links from the same source whose targets occupy
    the same in-division coordinates as the declared target.
    """
    if not spec.split:
        return 1
    extra = sum(
        1
        for link in m.split_links_from(spec.source)
        if link.target.coordinates == spec.target.coordinates
    )
    return 1 + extra


def unsplit_potential_slots(m: SystemModel, cs: ControlStructure) -> int:
    """Potential UCA slot count had split actions been declared per destination."""
    return sum(4 * unsplit_destination_count(m, ca.spec) for ca in cs.actions)


def uca_table_to_csv(records: Sequence[UcaRecord]) -> str:
    """CSV export with one row per UCA slot."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ca_id", "uca_id", "category", "applicable", "text", "hazards", "justification"])
    for r in records:
        writer.writerow(
            [
                r.ca_id,
                r.uca_id,
                r.category.letter,
                "yes" if r.applicable else "no",
                r.text,
                " ".join(r.hazards),
                r.justification or "",
            ]
        )
    return buf.getvalue()


def uca_table_to_markdown(cs: ControlStructure, records: Sequence[UcaRecord]) -> str:
    """Markdown table mirroring the four-category UCA layout."""
    by_ca: dict[str, dict[str, UcaRecord]] = {}
    for r in records:
        by_ca.setdefault(r.ca_id, {})[r.category.letter] = r
    lines = [
        "| Control Action (CA) | UCAa: CA is needed, but not given | "
        "UCAb: CA is given, but not needed | UCAc: CA is given too early, too late, wrong order | "
        "UCAd: CA is applied too long or stopped too soon |",
        "| --- | --- | --- | --- | --- |",
    ]
    for ca in cs.actions:
        row = by_ca.get(ca.ca_id, {})

        def cell(letter: str) -> str:
            record = row.get(letter)
            if record is None:
                return ""
            if not record.applicable:
                return f"{record.uca_id}: Not applicable."
            return f"{record.uca_id}: {record.text}"

        header = f"{ca.ca_id}: {ca.spec.source_label} {ca.spec.verb}"
        lines.append(
            f"| {header} | {cell('a')} | {cell('b')} | {cell('c')} | {cell('d')} |"
        )
    return "\n".join(lines) + "\n"
