"""Declarative system model: hierarchical nodes, links, losses/hazards,
control-action declarations, gate declarations, and redundancy groups.

The model is parsed from a versioned JSON document (``resha_model_version``)
and is immutable after validation. Node IDs follow the ``XXnn.nn.nn`` scheme:
a 1-2 character division tag followed by two-digit unit, module, and
component fields.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

MODEL_VERSION = 1

_NODE_ID_RE = re.compile(r"^([A-Z][A-Z0-9]?)(\d{2})\.(\d{2})\.(\d{2})$")

UCA_CATEGORIES = ("a", "b", "c", "d")


class ModelError(Exception):
    """Base class for model parsing and validation failures."""


@dataclass(frozen=True)
class ModelIssue:
    """A single validation finding, located by a JSON-path-like string."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ModelValidationError(ModelError):
    """Raised when a document fails validation; carries every issue found."""

    def __init__(self, issues: Iterable[ModelIssue]):
        self.issues = tuple(issues)
        summary = "; ".join(str(i) for i in self.issues[:5])
        extra = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
        super().__init__(f"invalid model: {summary}{extra}")


class NodeIdError(ModelError):
    """Raised for malformed node-ID text."""


@dataclass(frozen=True, order=True)
class NodeId:
    """Hierarchical node identifier ordered by (division, unit, module, component)."""

    division: str
    unit: int
    module: int
    component: int

    def __str__(self) -> str:
        return format_node_id(self)

    @property
    def text(self) -> str:
        return format_node_id(self)

    @property
    def structural_depth(self) -> int:
        """1 for a division node, one more per populated lower field."""
        if self.component:
            if self.module:
                return 4
            if self.unit:
                return 3
            return 2
        if self.module:
            return 3 if self.unit else 2
        if self.unit:
            return 2
        return 1

    @property
    def coordinates(self) -> tuple[int, int, int]:
        """Position within a division; equal coordinates across divisions mark replicas."""
        return (self.unit, self.module, self.component)

    def parent(self) -> "NodeId | None":
        """Nearest ancestor, obtained by zeroing the lowest populated field."""
        if self.component:
            return NodeId(self.division, self.unit, self.module, 0)
        if self.module:
            return NodeId(self.division, self.unit, 0, 0)
        if self.unit:
            return NodeId(self.division, 0, 0, 0)
        return None

    def division_root(self) -> "NodeId":
        return NodeId(self.division, 0, 0, 0)


def parse_node_id(text: str) -> NodeId:
    """Parse canonical ``XXnn.nn.nn`` text into a NodeId."""
    if not isinstance(text, str):
        raise NodeIdError(f"node id must be a string, got {type(text).__name__}")
    match = _NODE_ID_RE.match(text)
    if match is None:
        raise NodeIdError(
            f"malformed node id {text!r}: expected a leading 1-2 character division "
            "tag (uppercase letter first) followed by three dot-separated two-digit fields"
        )
    tag, unit, module, component = match.groups()
    return NodeId(tag, int(unit), int(module), int(component))


def format_node_id(node_id: NodeId) -> str:
    """Render a NodeId in canonical zero-padded form, e.g. ``B01.00.00``."""
    for name in ("unit", "module", "component"):
        value = getattr(node_id, name)
        if not 0 <= value <= 99:
            raise NodeIdError(f"{name} field {value} outside 0..99")
    if not _NODE_ID_RE.match(f"{node_id.division}00.00.00"):
        raise NodeIdError(f"invalid division tag {node_id.division!r}")
    return (
        f"{node_id.division}{node_id.unit:02d}.{node_id.module:02d}.{node_id.component:02d}"
    )


class NodeKind(str, Enum):
    DIVISION = "division"
    UNIT = "unit"
    MODULE = "module"
    COMPONENT = "component"


class Technology(str, Enum):
    DIGITAL = "digital"
    ANALOG = "analog"
    HUMAN = "human"


class LinkType(str, Enum):
    CONTROL = "control"
    FEEDBACK = "feedback"
    PHYSICAL_SPLIT = "physical-split"


def expected_kind(node_id: NodeId) -> NodeKind:
    """Kind implied by which ID fields are populated."""
    if node_id.component:
        return NodeKind.COMPONENT
    if node_id.module:
        return NodeKind.MODULE
    if node_id.unit:
        return NodeKind.UNIT
    return NodeKind.DIVISION


@dataclass(frozen=True)
class Node:
    id: NodeId
    name: str
    kind: NodeKind
    technology: Technology
    role: str = ""
    equipment_class: str | None = None


@dataclass(frozen=True)
class Link:
    source: NodeId
    target: NodeId
    type: LinkType
    layer: int | None = None


@dataclass(frozen=True)
class Loss:
    id: str
    description: str

    @property
    def number(self) -> int:
        return int(self.id[1:])


@dataclass(frozen=True)
class Hazard:
    id: str
    description: str
    losses: tuple[str, ...]

    @property
    def number(self) -> int:
        return int(self.id[1:])


@dataclass(frozen=True)
class EquipmentClass:
    """Metadata for an equipment-class tag used in naming and reporting."""

    tag: str
    prefix: str
    display: str


@dataclass(frozen=True)
class ActionSpec:
    """A declared control action, prior to numbering.

    ``contexts`` holds the phrase fragments used to render each unsafe-variant
    category; ``hazards`` maps category letter to linked hazard IDs;
    ``not_applicable`` maps category letter to a justification overriding the
    default applicability rules. ``layer`` overrides the redundancy layer
    derived from the source node's structural depth.
    """

    source: NodeId
    target: NodeId
    verb: str
    source_label: str
    action_phrase: str
    continuous: bool = False
    split: bool = False
    layer: int | None = None
    contexts: Mapping[str, str | None] = field(default_factory=dict)
    hazards: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    not_applicable: Mapping[str, str] = field(default_factory=dict)

    def context(self, key: str) -> str | None:
        return self.contexts.get(key)


@dataclass(frozen=True)
class GateChildSpec:
    """One child reference inside a gate declaration."""

    gate: str | None = None
    fail: str | None = None
    ca_to: str | None = None


@dataclass(frozen=True)
class GateSpec:
    """A declared fault-tree gate, possibly a replication template.

    Templates carry ``replicate`` (``per-division`` or ``per-unit``) and use
    ``$D`` (division tag) and ``$U`` (two-digit unit) tokens in their id and
    child references.
    """

    id: str
    kind: str
    children: tuple[GateChildSpec, ...]
    k: int | None = None
    replicate: str | None = None
    description: str | None = None


@dataclass(frozen=True)
class CcfPolicy:
    """Which common-cause failure scopes and software categories to instantiate."""

    include_intra_division: bool = True
    include_cross_all_divisions: bool = True
    include_partial_interdivision: bool = False
    software_categories: tuple[str, ...] = ("a", "c")


class GroupScope(str, Enum):
    INTRA_DIVISION = "intra-division"
    CROSS_DIVISION = "cross-division"


@dataclass(frozen=True)
class RedundancyGroup:
    """A set of functionally identical nodes sharing an equipment class."""

    class_tag: str
    prefix: str
    display: str
    scope: GroupScope
    members: tuple[NodeId, ...]
    division: str | None = None
    software_capable: bool = False


@dataclass(frozen=True)
class SystemModel:
    """Validated, immutable system description."""

    version: int
    nodes: Mapping[str, Node]
    links: tuple[Link, ...]
    losses: tuple[Loss, ...]
    hazards: tuple[Hazard, ...]
    actions: tuple[ActionSpec, ...]
    gates: tuple[GateSpec, ...]
    ccf_policy: CcfPolicy
    classes: Mapping[str, EquipmentClass]

    def node(self, node_id: NodeId | str) -> Node:
        key = node_id if isinstance(node_id, str) else node_id.text
        return self.nodes[key]

    def has_node(self, node_id: NodeId | str) -> bool:
        key = node_id if isinstance(node_id, str) else node_id.text
        return key in self.nodes

    def division_tags(self) -> tuple[str, ...]:
        return tuple(
            sorted({n.id.division for n in self.nodes.values() if n.kind is NodeKind.DIVISION})
        )

    def class_prefix(self, tag: str | None) -> str:
        if tag is None:
            return "NODE"
        return self.classes[tag].prefix

    def control_links(self) -> tuple[Link, ...]:
        return tuple(l for l in self.links if l.type is LinkType.CONTROL)

    def feedback_links(self) -> tuple[Link, ...]:
        return tuple(l for l in self.links if l.type is LinkType.FEEDBACK)

    def split_links_from(self, source: NodeId) -> tuple[Link, ...]:
        return tuple(
            l
            for l in self.links
            if l.type is LinkType.PHYSICAL_SPLIT and l.source == source
        )

    def hazard_ids(self) -> frozenset[str]:
        return frozenset(h.id for h in self.hazards)

    def to_document(self) -> dict[str, Any]:
        """Canonical document form: arrays sorted by ID, stable key order."""
        return _model_to_document(self)

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_document(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOP_LEVEL_KEYS = {
    "resha_model_version",
    "nodes",
    "links",
    "losses",
    "hazards",
    "control_actions",
    "gates",
    "ccf_policy",
    "equipment_classes",
}

_NODE_KEYS = {"id", "name", "kind", "technology", "role", "equipment_class"}
_LINK_KEYS = {"source", "target", "type", "layer"}
_LOSS_KEYS = {"id", "description"}
_HAZARD_KEYS = {"id", "description", "losses"}
_ACTION_KEYS = {
    "source",
    "target",
    "verb",
    "source_label",
    "action_phrase",
    "continuous",
    "split",
    "layer",
    "contexts",
    "hazards",
    "not_applicable",
}
_GATE_KEYS = {"id", "kind", "k", "children", "replicate", "description"}
_GATE_CHILD_KEYS = {"gate", "fail", "ca_to"}
_POLICY_KEYS = {
    "include_intra_division",
    "include_cross_all_divisions",
    "include_partial_interdivision",
    "software_categories",
}
_CLASS_KEYS = {"tag", "prefix", "display"}
_CONTEXT_KEYS = {"needed", "unneeded", "timing", "duration"}


def parse_system_model(source: str | Path | Mapping[str, Any]) -> SystemModel:
    """Parse and fully validate a model document.

    Accepts a path to a JSON file or an already-decoded mapping. Collects all
    validation issues before raising, so one run reports every problem.
    """
    if isinstance(source, Mapping):
        doc: Any = source
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelValidationError(
                [ModelIssue(f"{path}:{exc.lineno}:{exc.colno}", f"syntax error: {exc.msg}")]
            ) from exc

    issues: list[ModelIssue] = []
    if not isinstance(doc, Mapping):
        raise ModelValidationError([ModelIssue("$", "document must be a JSON object")])

    for key in doc:
        if key not in _TOP_LEVEL_KEYS:
            issues.append(ModelIssue(key, "unknown field"))
    version = doc.get("resha_model_version")
    if version != MODEL_VERSION:
        issues.append(
            ModelIssue("resha_model_version", f"expected {MODEL_VERSION}, got {version!r}")
        )

    classes = _parse_classes(doc.get("equipment_classes", []), issues)
    nodes = _parse_nodes(doc.get("nodes", []), classes, issues)
    links = _parse_links(doc.get("links", []), nodes, issues)
    losses = _parse_losses(doc.get("losses", []), issues)
    hazards = _parse_hazards(doc.get("hazards", []), losses, issues)
    actions = _parse_actions(doc.get("control_actions", []), nodes, links, hazards, issues)
    gates = _parse_gates(doc.get("gates", []), issues)
    policy = _parse_policy(doc.get("ccf_policy", {}), issues)

    if issues:
        raise ModelValidationError(issues)

    return SystemModel(
        version=MODEL_VERSION,
        nodes=nodes,
        links=links,
        losses=losses,
        hazards=hazards,
        actions=actions,
        gates=gates,
        ccf_policy=policy,
        classes=classes,
    )


def _check_keys(entry: Mapping[str, Any], allowed: set[str], where: str, issues: list[ModelIssue]) -> None:
    for key in entry:
        if key not in allowed:
            issues.append(ModelIssue(f"{where}.{key}", "unknown field"))


def _parse_classes(
    raw: Any, issues: list[ModelIssue]
) -> dict[str, EquipmentClass]:
    classes: dict[str, EquipmentClass] = {}
    if not isinstance(raw, list):
        issues.append(ModelIssue("equipment_classes", "must be an array"))
        return classes
    for i, entry in enumerate(raw):
        where = f"equipment_classes[{i}]"
        if not isinstance(entry, Mapping):
            issues.append(ModelIssue(where, "must be an object"))
            continue
        _check_keys(entry, _CLASS_KEYS, where, issues)
        tag = entry.get("tag")
        if not isinstance(tag, str) or not tag:
            issues.append(ModelIssue(where, "missing class tag"))
            continue
        if tag in classes:
            issues.append(ModelIssue(where, f"duplicate equipment class {tag!r}"))
            continue
        classes[tag] = EquipmentClass(
            tag=tag,
            prefix=str(entry.get("prefix", tag.upper())),
            display=str(entry.get("display", tag)),
        )
    return classes


def _parse_nodes(
    raw: Any, classes: Mapping[str, EquipmentClass], issues: list[ModelIssue]
) -> dict[str, Node]:
    nodes: dict[str, Node] = {}
    if not isinstance(raw, list):
        issues.append(ModelIssue("nodes", "must be an array"))
        return nodes
    parsed: list[Node] = []
    for i, entry in enumerate(raw):
        where = f"nodes[{i}]"
        if not isinstance(entry, Mapping):
            issues.append(ModelIssue(where, "must be an object"))
            continue
        _check_keys(entry, _NODE_KEYS, where, issues)
        try:
            node_id = parse_node_id(entry.get("id", ""))
        except NodeIdError as exc:
            issues.append(ModelIssue(f"{where}.id", str(exc)))
            continue
        try:
            kind = NodeKind(entry.get("kind", ""))
        except ValueError:
            issues.append(ModelIssue(f"{where}.kind", f"unknown kind {entry.get('kind')!r}"))
            continue
        implied = expected_kind(node_id)
        if kind is not implied:
            issues.append(
                ModelIssue(
                    f"{where}.kind",
                    f"kind {kind.value!r} inconsistent with id {node_id.text} "
                    f"(id implies {implied.value!r})",
                )
            )
        tech_raw = entry.get("technology", "digital")
        try:
            technology = Technology(tech_raw)
        except ValueError:
            issues.append(ModelIssue(f"{where}.technology", f"unknown technology {tech_raw!r}"))
            continue
        eq_class = entry.get("equipment_class")
        if kind is NodeKind.COMPONENT and eq_class is None:
            issues.append(ModelIssue(f"{where}.equipment_class", "components require an equipment class"))
        if kind in (NodeKind.DIVISION, NodeKind.UNIT) and eq_class is not None:
            issues.append(
                ModelIssue(f"{where}.equipment_class", f"{kind.value} nodes may not carry an equipment class")
            )
        if eq_class is not None and eq_class not in classes:
            issues.append(ModelIssue(f"{where}.equipment_class", f"undeclared equipment class {eq_class!r}"))
        if node_id.text in nodes:
            issues.append(ModelIssue(f"{where}.id", f"duplicate node id {node_id.text}"))
            continue
        node = Node(
            id=node_id,
            name=str(entry.get("name", node_id.text)),
            kind=kind,
            technology=technology,
            role=str(entry.get("role", "")),
            equipment_class=eq_class,
        )
        nodes[node_id.text] = node
        parsed.append(node)

    for node in parsed:
        parent = node.id.parent()
        if parent is not None and parent.text not in nodes:
            issues.append(
                ModelIssue(
                    f"nodes[{node.id.text}]",
                    f"missing parent node {parent.text} (hierarchy must nest)",
                )
            )
    return dict(sorted(nodes.items()))


def _parse_links(
    raw: Any, nodes: Mapping[str, Node], issues: list[ModelIssue]
) -> tuple[Link, ...]:
    links: list[Link] = []
    if not isinstance(raw, list):
        issues.append(ModelIssue("links", "must be an array"))
        return ()
    for i, entry in enumerate(raw):
        where = f"links[{i}]"
        if not isinstance(entry, Mapping):
            issues.append(ModelIssue(where, "must be an object"))
            continue
        _check_keys(entry, _LINK_KEYS, where, issues)
        try:
            source = parse_node_id(entry.get("source", ""))
            target = parse_node_id(entry.get("target", ""))
        except NodeIdError as exc:
            issues.append(ModelIssue(where, str(exc)))
            continue
        try:
            link_type = LinkType(entry.get("type", ""))
        except ValueError:
            issues.append(ModelIssue(f"{where}.type", f"unknown link type {entry.get('type')!r}"))
            continue
        ok = True
        for end, node_id in (("source", source), ("target", target)):
            if node_id.text not in nodes:
                issues.append(
                    ModelIssue(f"{where}.{end}", f"dangling link: no node {node_id.text}")
                )
                ok = False
        layer = entry.get("layer")
        if layer is not None and (not isinstance(layer, int) or layer < 1):
            issues.append(ModelIssue(f"{where}.layer", "layer must be an integer >= 1"))
            ok = False
        if ok:
            links.append(Link(source=source, target=target, type=link_type, layer=layer))
    links.sort(key=lambda l: (l.type.value, l.source, l.target))
    return tuple(links)


def _parse_losses(raw: Any, issues: list[ModelIssue]) -> tuple[Loss, ...]:
    losses: list[Loss] = []
    if not isinstance(raw, list):
        issues.append(ModelIssue("losses", "must be an array"))
        return ()
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        where = f"losses[{i}]"
        if not isinstance(entry, Mapping):
            issues.append(ModelIssue(where, "must be an object"))
            continue
        _check_keys(entry, _LOSS_KEYS, where, issues)
        loss_id = entry.get("id", "")
        if not re.fullmatch(r"L[1-9]\d*", str(loss_id)):
            issues.append(ModelIssue(f"{where}.id", f"loss id must look like L1, got {loss_id!r}"))
            continue
        if loss_id in seen:
            issues.append(ModelIssue(f"{where}.id", f"duplicate loss id {loss_id}"))
            continue
        seen.add(loss_id)
        losses.append(Loss(id=loss_id, description=str(entry.get("description", ""))))
    losses.sort(key=lambda l: l.number)
    expected = list(range(1, len(losses) + 1))
    if [l.number for l in losses] != expected:
        issues.append(ModelIssue("losses", "loss ids must be contiguous from L1"))
    return tuple(losses)


def _parse_hazards(
    raw: Any, losses: tuple[Loss, ...], issues: list[ModelIssue]
) -> tuple[Hazard, ...]:
    hazards: list[Hazard] = []
    if not isinstance(raw, list):
        issues.append(ModelIssue("hazards", "must be an array"))
        return ()
    loss_ids = {l.id for l in losses}
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        where = f"hazards[{i}]"
        if not isinstance(entry, Mapping):
            issues.append(ModelIssue(where, "must be an object"))
            continue
        _check_keys(entry, _HAZARD_KEYS, where, issues)
        hazard_id = entry.get("id", "")
        if not re.fullmatch(r"H[1-9]\d*", str(hazard_id)):
            issues.append(ModelIssue(f"{where}.id", f"hazard id must look like H1, got {hazard_id!r}"))
            continue
        if hazard_id in seen:
            issues.append(ModelIssue(f"{where}.id", f"duplicate hazard id {hazard_id}"))
            continue
        seen.add(hazard_id)
        linked = entry.get("losses", [])
        if not isinstance(linked, list) or not linked:
            issues.append(ModelIssue(f"{where}.losses", "hazards must link at least one loss"))
            linked = []
        for loss_id in linked:
            if loss_id not in loss_ids:
                issues.append(ModelIssue(f"{where}.losses", f"unknown loss {loss_id!r}"))
        hazards.append(
            Hazard(
                id=hazard_id,
                description=str(entry.get("description", "")),
                losses=tuple(linked),
            )
        )
    hazards.sort(key=lambda h: h.number)
    return tuple(hazards)


def _parse_actions(
    raw: Any,
    nodes: Mapping[str, Node],
    links: tuple[Link, ...],
    hazards: tuple[Hazard, ...],
    issues: list[ModelIssue],
) -> tuple[ActionSpec, ...]:
    actions: list[ActionSpec] = []
    if not isinstance(raw, list):
        issues.append(ModelIssue("control_actions", "must be an array"))
        return ()
    control_edges = {
        (l.source.text, l.target.text) for l in links if l.type is LinkType.CONTROL
    }
    hazard_ids = {h.id for h in hazards}
    for i, entry in enumerate(raw):
        where = f"control_actions[{i}]"
        if not isinstance(entry, Mapping):
            issues.append(ModelIssue(where, "must be an object"))
            continue
        _check_keys(entry, _ACTION_KEYS, where, issues)
        try:
            source = parse_node_id(entry.get("source", ""))
            target = parse_node_id(entry.get("target", ""))
        except NodeIdError as exc:
            issues.append(ModelIssue(where, str(exc)))
            continue
        ok = True
        for end, node_id in (("source", source), ("target", target)):
            if node_id.text not in nodes:
                issues.append(ModelIssue(f"{where}.{end}", f"no node {node_id.text}"))
                ok = False
        if ok and (source.text, target.text) not in control_edges:
            issues.append(
                ModelIssue(where, f"no control link {source.text} -> {target.text} declared")
            )
            ok = False
        layer = entry.get("layer")
        if layer is not None and (not isinstance(layer, int) or layer < 1):
            issues.append(ModelIssue(f"{where}.layer", "layer must be an integer >= 1"))
            ok = False
        contexts_raw = entry.get("contexts", {})
        if not isinstance(contexts_raw, Mapping):
            issues.append(ModelIssue(f"{where}.contexts", "must be an object"))
            contexts_raw = {}
        for key in contexts_raw:
            if key not in _CONTEXT_KEYS:
                issues.append(ModelIssue(f"{where}.contexts.{key}", "unknown field"))
        hazards_raw = entry.get("hazards", {})
        if not isinstance(hazards_raw, Mapping):
            issues.append(ModelIssue(f"{where}.hazards", "must be an object"))
            hazards_raw = {}
        hazard_map: dict[str, tuple[str, ...]] = {}
        for cat, hlist in hazards_raw.items():
            if cat not in UCA_CATEGORIES:
                issues.append(ModelIssue(f"{where}.hazards.{cat}", "unknown category"))
                continue
            if not isinstance(hlist, list):
                issues.append(ModelIssue(f"{where}.hazards.{cat}", "must be an array"))
                continue
            for h in hlist:
                if h not in hazard_ids:
                    issues.append(ModelIssue(f"{where}.hazards.{cat}", f"unknown hazard {h!r}"))
            hazard_map[cat] = tuple(hlist)
        na_raw = entry.get("not_applicable", {})
        if not isinstance(na_raw, Mapping):
            issues.append(ModelIssue(f"{where}.not_applicable", "must be an object"))
            na_raw = {}
        for cat in na_raw:
            if cat not in UCA_CATEGORIES:
                issues.append(ModelIssue(f"{where}.not_applicable.{cat}", "unknown category"))
        if not ok:
            continue
        actions.append(
            ActionSpec(
                source=source,
                target=target,
                verb=str(entry.get("verb", "")),
                source_label=str(entry.get("source_label", source.text)),
                action_phrase=str(entry.get("action_phrase", "")),
                continuous=bool(entry.get("continuous", False)),
                split=bool(entry.get("split", False)),
                layer=layer,
                contexts={k: contexts_raw.get(k) for k in _CONTEXT_KEYS},
                hazards=hazard_map,
                not_applicable={k: str(v) for k, v in na_raw.items() if k in UCA_CATEGORIES},
            )
        )
    return tuple(actions)


def _parse_gates(raw: Any, issues: list[ModelIssue]) -> tuple[GateSpec, ...]:
    gates: list[GateSpec] = []
    if not isinstance(raw, list):
        issues.append(ModelIssue("gates", "must be an array"))
        return ()
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        where = f"gates[{i}]"
        if not isinstance(entry, Mapping):
            issues.append(ModelIssue(where, "must be an object"))
            continue
        _check_keys(entry, _GATE_KEYS, where, issues)
        gate_id = entry.get("id")
        if not isinstance(gate_id, str) or not gate_id:
            issues.append(ModelIssue(f"{where}.id", "missing gate id"))
            continue
        if gate_id in seen:
            issues.append(ModelIssue(f"{where}.id", f"duplicate gate id {gate_id!r}"))
            continue
        seen.add(gate_id)
        kind = entry.get("kind")
        if kind not in ("and", "or", "vote"):
            issues.append(ModelIssue(f"{where}.kind", f"unknown gate kind {kind!r}"))
            continue
        k = entry.get("k")
        if kind == "vote":
            if not isinstance(k, int) or k < 1:
                issues.append(ModelIssue(f"{where}.k", "vote gates need integer k >= 1"))
                continue
        elif k is not None:
            issues.append(ModelIssue(f"{where}.k", "k only applies to vote gates"))
        replicate = entry.get("replicate")
        if replicate not in (None, "per-division", "per-unit"):
            issues.append(ModelIssue(f"{where}.replicate", f"unknown macro {replicate!r}"))
            continue
        children_raw = entry.get("children", [])
        if not isinstance(children_raw, list) or not children_raw:
            issues.append(ModelIssue(f"{where}.children", "gates need at least one child"))
            continue
        children: list[GateChildSpec] = []
        child_ok = True
        for j, child in enumerate(children_raw):
            cwhere = f"{where}.children[{j}]"
            if not isinstance(child, Mapping):
                issues.append(ModelIssue(cwhere, "must be an object"))
                child_ok = False
                continue
            _check_keys(child, _GATE_CHILD_KEYS, cwhere, issues)
            gate_ref = child.get("gate")
            fail_ref = child.get("fail")
            if (gate_ref is None) == (fail_ref is None):
                issues.append(ModelIssue(cwhere, "child must reference exactly one of gate/fail"))
                child_ok = False
                continue
            if child.get("ca_to") is not None and fail_ref is None:
                issues.append(ModelIssue(cwhere, "ca_to only applies to fail references"))
                child_ok = False
                continue
            children.append(
                GateChildSpec(
                    gate=gate_ref,
                    fail=fail_ref,
                    ca_to=child.get("ca_to"),
                )
            )
        if not child_ok:
            continue
        if kind == "vote" and isinstance(k, int) and k > len(children):
            issues.append(ModelIssue(f"{where}.k", f"k={k} exceeds {len(children)} children"))
            continue
        gates.append(
            GateSpec(
                id=gate_id,
                kind=kind,
                children=tuple(children),
                k=k,
                replicate=replicate,
                description=entry.get("description"),
            )
        )
    return tuple(gates)


def _parse_policy(raw: Any, issues: list[ModelIssue]) -> CcfPolicy:
    if not isinstance(raw, Mapping):
        issues.append(ModelIssue("ccf_policy", "must be an object"))
        return CcfPolicy()
    _check_keys(raw, _POLICY_KEYS, "ccf_policy", issues)
    cats_raw = raw.get("software_categories", ["a", "c"])
    if not isinstance(cats_raw, list) or any(c not in UCA_CATEGORIES for c in cats_raw):
        issues.append(ModelIssue("ccf_policy.software_categories", "categories must be from a/b/c/d"))
        cats_raw = ["a", "c"]
    policy = CcfPolicy(
        include_intra_division=bool(raw.get("include_intra_division", True)),
        include_cross_all_divisions=bool(raw.get("include_cross_all_divisions", True)),
        include_partial_interdivision=bool(raw.get("include_partial_interdivision", False)),
        software_categories=tuple(cats_raw),
    )
    if not (
        policy.include_intra_division
        or policy.include_cross_all_divisions
        or policy.include_partial_interdivision
    ):
        issues.append(ModelIssue("ccf_policy", "at least one CCF scope must be enabled"))
    return policy


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def _model_to_document(m: SystemModel) -> dict[str, Any]:
    nodes = []
    for key in sorted(m.nodes):
        n = m.nodes[key]
        entry: dict[str, Any] = {
            "id": n.id.text,
            "name": n.name,
            "kind": n.kind.value,
            "technology": n.technology.value,
        }
        if n.role:
            entry["role"] = n.role
        if n.equipment_class is not None:
            entry["equipment_class"] = n.equipment_class
        nodes.append(entry)
    links = []
    for l in sorted(m.links, key=lambda l: (l.type.value, l.source, l.target)):
        entry = {"source": l.source.text, "target": l.target.text, "type": l.type.value}
        if l.layer is not None:
            entry["layer"] = l.layer
        links.append(entry)
    actions = []
    for a in sorted(m.actions, key=lambda a: (a.layer or 0, a.source, a.target)):
        entry = {
            "source": a.source.text,
            "target": a.target.text,
            "verb": a.verb,
            "source_label": a.source_label,
            "action_phrase": a.action_phrase,
            "continuous": a.continuous,
            "split": a.split,
        }
        if a.layer is not None:
            entry["layer"] = a.layer
        entry["contexts"] = {k: v for k, v in sorted(a.contexts.items()) if v is not None}
        entry["hazards"] = {k: list(v) for k, v in sorted(a.hazards.items())}
        if a.not_applicable:
            entry["not_applicable"] = dict(sorted(a.not_applicable.items()))
        actions.append(entry)
    gates = []
    for g in sorted(m.gates, key=lambda g: g.id):
        children = []
        for c in g.children:
            child: dict[str, Any] = {}
            if c.gate is not None:
                child["gate"] = c.gate
            if c.fail is not None:
                child["fail"] = c.fail
            if c.ca_to is not None:
                child["ca_to"] = c.ca_to
            children.append(child)
        entry = {"id": g.id, "kind": g.kind, "children": children}
        if g.k is not None:
            entry["k"] = g.k
        if g.replicate is not None:
            entry["replicate"] = g.replicate
        if g.description is not None:
            entry["description"] = g.description
        gates.append(entry)
    return {
        "resha_model_version": m.version,
        "equipment_classes": [
            {"tag": c.tag, "prefix": c.prefix, "display": c.display}
            for c in sorted(m.classes.values(), key=lambda c: c.tag)
        ],
        "nodes": nodes,
        "links": links,
        "losses": [{"id": l.id, "description": l.description} for l in m.losses],
        "hazards": [
            {"id": h.id, "description": h.description, "losses": list(h.losses)}
            for h in m.hazards
        ],
        "control_actions": actions,
        "gates": gates,
        "ccf_policy": {
            "include_intra_division": m.ccf_policy.include_intra_division,
            "include_cross_all_divisions": m.ccf_policy.include_cross_all_divisions,
            "include_partial_interdivision": m.ccf_policy.include_partial_interdivision,
            "software_categories": list(m.ccf_policy.software_categories),
        },
    }


# ---------------------------------------------------------------------------
# Redundancy groups
# ---------------------------------------------------------------------------


def derive_redundancy_groups(m: SystemModel) -> tuple[RedundancyGroup, ...]:
    """Derive intra-division and cross-division redundancy groups.

    One intra-division group forms per (division, class) with at least two
    class members; one cross-division group forms per class present in at
    least two divisions, spanning every division that contains the class.
    Output is deterministic: groups sort by (class, scope, division) and
    members by node ID.
    """
    by_class: dict[str, list[Node]] = {}
    for node in m.nodes.values():
        if node.equipment_class is not None and node.kind in (
            NodeKind.COMPONENT,
            NodeKind.MODULE,
        ):
            by_class.setdefault(node.equipment_class, []).append(node)

    groups: list[RedundancyGroup] = []
    for tag in sorted(by_class):
        members = sorted(by_class[tag], key=lambda n: n.id)
        eq = m.classes[tag]
        software = all(n.technology is Technology.DIGITAL for n in members)
        by_division: dict[str, list[Node]] = {}
        for node in members:
            by_division.setdefault(node.id.division, []).append(node)
        for division in sorted(by_division):
            local = by_division[division]
            if len(local) >= 2:
                groups.append(
                    RedundancyGroup(
                        class_tag=tag,
                        prefix=eq.prefix,
                        display=eq.display,
                        scope=GroupScope.INTRA_DIVISION,
                        division=division,
                        members=tuple(n.id for n in local),
                        software_capable=software,
                    )
                )
        if len(by_division) >= 2:
            groups.append(
                RedundancyGroup(
                    class_tag=tag,
                    prefix=eq.prefix,
                    display=eq.display,
                    scope=GroupScope.CROSS_DIVISION,
                    division=None,
                    members=tuple(n.id for n in members),
                    software_capable=software,
                )
            )
    groups.sort(key=lambda g: (g.class_tag, g.scope.value, g.division or ""))
    return tuple(groups)


def serialize_groups(groups: Iterable[RedundancyGroup]) -> str:
    """Stable text form of a group list, used for determinism checks."""
    payload = [
        {
            "class": g.class_tag,
            "scope": g.scope.value,
            "division": g.division,
            "members": [n.text for n in g.members],
        }
        for g in groups
    ]
    return json.dumps(payload, sort_keys=True)
