"""Causal-factor worksheets and the end-to-end Markdown analysis report.

Worksheets scaffold the final analysis stage: for each basic event surviving
into the selected cut sets, prompts from a reusable guidance bank cover the
two causal categories (unsafe controller behavior; inadequate feedback or
other inputs). The report renders every pipeline stage deterministically so
identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Any, Mapping, Sequence

from .ccf import CcfEvent, catalog_to_csv
from .cutset import CutSetCollection, SpofReport, order_histogram
from .faulttree import (
    BasicEvent,
    EventKind,
    FaultTree,
    HARDWARE_KINDS,
)
from .stpa import ControlStructure, UcaRecord, identified_uca_count, potential_uca_count
from .sysmodel import SystemModel

GUIDANCE_BANK_VERSION = 1

HARDWARE_HISTORICAL_NOTE = (
    "Hardware failure causes are assessed from historical failure-rate data "
    "and industry operating experience."
)

_DEFAULT_CATEGORY1 = (
    "Physical failure of the controller itself.",
    "Inadequate control algorithm: the decision logic is wrong for this context.",
    "Inadequate process model: the controller's view of the process is incorrect.",
)
_DEFAULT_CATEGORY2 = (
    "Required feedback or input is not received by the controller.",
    "Inadequate feedback or input is received by the controller.",
    "Unsafe control input arrives from another controller.",
)

_RE_DIV_SUFFIX = re.compile(r"-DIV[A-Z][A-Z0-9]?$")


class GuidanceBankError(Exception):
    """Raised when the guidance bank file is malformed."""


@dataclass(frozen=True)
class GuidanceEntry:
    """Prompts and scenario template for one (kind, class, category) key."""

    event_kind: str
    class_tag: str | None
    category: str | None
    category1: tuple[str, ...]
    category2: tuple[str, ...]
    scenario: str
    guidance: str


class GuidanceBank:
    """Editable prompt bank keyed by event kind, equipment class, and category."""

    def __init__(self, entries: Sequence[GuidanceEntry]):
        self.entries = tuple(entries)

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "GuidanceBank":
        if doc.get("guidance_bank_version") != GUIDANCE_BANK_VERSION:
            raise GuidanceBankError(
                f"expected guidance_bank_version {GUIDANCE_BANK_VERSION}"
            )
        entries = []
        for raw in doc.get("entries", []):
            entries.append(
                GuidanceEntry(
                    event_kind=raw["event_kind"],
                    class_tag=raw.get("class"),
                    category=raw.get("category"),
                    category1=tuple(raw.get("category1", _DEFAULT_CATEGORY1)),
                    category2=tuple(raw.get("category2", _DEFAULT_CATEGORY2)),
                    scenario=raw.get("scenario", ""),
                    guidance=raw.get("guidance", ""),
                )
            )
        return cls(entries)

    @classmethod
    def packaged(cls) -> "GuidanceBank":
        text = resources.files("resha.data").joinpath("guidance_bank.json").read_text("utf-8")
        return cls.from_document(json.loads(text))

    def lookup(self, event: BasicEvent, class_prefix: str | None) -> GuidanceEntry:
        """Most specific entry wins: (kind, class, category) > (kind, class) > (kind)."""
        best: GuidanceEntry | None = None
        best_rank = -1
        for entry in self.entries:
            if entry.event_kind != event.kind.value:
                continue
            if entry.class_tag is not None and entry.class_tag != class_prefix:
                continue
            if entry.category is not None and entry.category != event.category:
                continue
            rank = (entry.class_tag is not None) * 2 + (entry.category is not None)
            if rank > best_rank:
                best, best_rank = entry, rank
        if best is None:
            return GuidanceEntry(
                event_kind=event.kind.value,
                class_tag=None,
                category=None,
                category1=_DEFAULT_CATEGORY1,
                category2=_DEFAULT_CATEGORY2,
                scenario="",
                guidance="",
            )
        return best


@dataclass(frozen=True)
class CausalFactorWorksheet:
    """Analyst worksheet for one basic event found in the selected cut sets."""

    event_id: str
    event_kind: EventKind
    description: str
    lowest_order: int
    category1_prompts: tuple[str, ...]
    category2_prompts: tuple[str, ...] | None
    scenario: str
    guidance: str
    historical_note: str | None
    hazards: tuple[str, ...] = ()
    disposition: str = ""


def generate_worksheets(
    collection: CutSetCollection | SpofReport | Sequence,
    ucas: Sequence[UcaRecord],
    tree: FaultTree,
    bank: GuidanceBank | None = None,
) -> tuple[CausalFactorWorksheet, ...]:
    """One worksheet per distinct basic event in the selected cut sets.

    Ordered by the lowest order of a containing set, then event ID. Hardware
    events carry category-1 physical prompts plus the historical-data note;
    software and human events carry both causal categories.
    """
    if isinstance(collection, SpofReport):
        cut_sets = collection.spofs or collection.fallback_sets
    elif isinstance(collection, CutSetCollection):
        cut_sets = collection.cut_sets
    else:
        cut_sets = tuple(collection)
    bank = bank or GuidanceBank.packaged()
    uca_by_id = {u.uca_id: u for u in ucas}

    lowest: dict[str, int] = {}
    for cs in cut_sets:
        for eid in cs.events:
            if eid not in lowest or cs.order < lowest[eid]:
                lowest[eid] = cs.order

    sheets = []
    for eid in sorted(lowest, key=lambda e: (lowest[e], e)):
        event = tree.event(eid)
        entry = bank.lookup(event, event_class_prefix(eid))
        linked = ()
        if event.uca_id and event.uca_id in uca_by_id:
            linked = uca_by_id[event.uca_id].hazards
        hardware = event.kind in HARDWARE_KINDS
        if hardware:
            prompts1 = tuple(
                p for p in entry.category1 if "algorithm" not in p and "process model" not in p
            ) or (_DEFAULT_CATEGORY1[0],)
            sheets.append(
                CausalFactorWorksheet(
                    event_id=eid,
                    event_kind=event.kind,
                    description=event.description,
                    lowest_order=lowest[eid],
                    category1_prompts=prompts1,
                    category2_prompts=None,
                    scenario=entry.scenario,
                    guidance=entry.guidance,
                    historical_note=HARDWARE_HISTORICAL_NOTE,
                    hazards=linked,
                )
            )
        else:
            sheets.append(
                CausalFactorWorksheet(
                    event_id=eid,
                    event_kind=event.kind,
                    description=event.description,
                    lowest_order=lowest[eid],
                    category1_prompts=entry.category1,
                    category2_prompts=entry.category2,
                    scenario=entry.scenario,
                    guidance=entry.guidance,
                    historical_note=None,
                    hazards=linked,
                )
            )
    return tuple(sheets)


def event_class_prefix(event_id: str) -> str | None:
    """Equipment-class prefix encoded in a canonical event name.

    ``LC-BP-SF-CCF-TC`` and ``LC-BP-DIVA-HD-CCF`` both resolve to ``LC-BP``.
    """
    for marker in ("-HD-", "-SF-", "-HF-"):
        if marker in event_id:
            prefix = event_id.split(marker, 1)[0]
            return _RE_DIV_SUFFIX.sub("", prefix)
    return None


# ---------------------------------------------------------------------------
# Markdown report
# ---------------------------------------------------------------------------


def render_analysis_report(
    model: SystemModel,
    cs: ControlStructure,
    ucas: Sequence[UcaRecord],
    tree: FaultTree,
    collections: Mapping[str, CutSetCollection],
    worksheets: Sequence[CausalFactorWorksheet],
    catalog: Sequence[CcfEvent] = (),
    notes: Sequence[str] = (),
    event_descriptions: Mapping[str, str] | None = None,
) -> str:
    """Single deterministic Markdown document covering every analysis stage."""
    if event_descriptions is None:
        event_descriptions = {e.id: e.description for e in tree.events.values()}
    lines: list[str] = []
    out = lines.append

    out("# Redundancy-guided hazard analysis report")
    out("")
    out(f"Model fingerprint: `{model.fingerprint()}`")
    out("")
    for note in notes:
        out(f"> {note}")
    if notes:
        out("")

    out("## Stage 1: System representation")
    out("")
    divisions = model.division_tags()
    out(f"- Nodes: {len(model.nodes)} across divisions {', '.join(divisions)}")
    out(f"- Links: {len(model.links)}")
    out(f"- Equipment classes: {len(model.classes)}")
    out("")

    out("## Stage 2: Losses and hazards")
    out("")
    out("| Loss | Description |")
    out("| --- | --- |")
    for loss in model.losses:
        out(f"| {loss.id} | {loss.description} |")
    out("")
    out("| Hazard | Description | Losses |")
    out("| --- | --- | --- |")
    for hazard in model.hazards:
        out(f"| {hazard.id} | {hazard.description} | {', '.join(hazard.losses)} |")
    out("")

    out("## Stage 3: Layered control structure and unsafe control actions")
    out("")
    for layer in cs.layers:
        out(
            f"- Layer {layer.index}: {len(layer.actions)} control actions, "
            f"{len(layer.feedbacks)} feedback edges, "
            f"{len(layer.controllers)} controllers"
        )
    out("")
    out(f"- Potential UCA slots: {potential_uca_count(ucas)}")
    out(f"- Identified (applicable) UCAs: {identified_uca_count(ucas)}")
    out("")

    out("## Stage 4: Integrated fault tree")
    out("")
    kind_counts: dict[str, int] = {}
    for event in tree.events.values():
        kind_counts[event.kind.value] = kind_counts.get(event.kind.value, 0) + 1
    out(f"- Top event: `{tree.top}`")
    out(f"- Gates: {len(tree.gates)}; basic events: {len(tree.events)}")
    for kind in sorted(kind_counts):
        out(f"  - {kind}: {kind_counts[kind]}")
    if not any(k in kind_counts for k in ("SW_UCA", "SW_CCF", "HUMAN_UCA")):
        out("- Note: software failures excluded by filter.")
    out("")

    if catalog:
        out("## Stage 5: Common-cause failure catalog")
        out("")
        out(f"- Catalog entries: {len(catalog)}")
        injected = sum(1 for c in catalog if c.name in tree.events)
        out(f"- Present in this tree: {injected}")
        out("")

    out("## Stage 6: Minimal cut sets")
    out("")
    for label in sorted(collections):
        css = collections[label]
        hist = order_histogram(css)
        out(f"### Scope: {label}")
        out("")
        trunc = css.truncation if css.truncation is not None else "none"
        out(f"- Truncation order: {trunc}")
        out(f"- Cut sets: {len(css)}")
        out("")
        out("| Truncation (order) | Cut sets (cumulative) |")
        out("| --- | --- |")
        for order, _, cumulative in reversed(hist.rows()):
            out(f"| {order} | {cumulative} |")
        out("")
        lines.extend(_spof_section(css, event_descriptions))

    out("## Stage 7: Causal-factor worksheets")
    out("")
    if not worksheets:
        out("No worksheets: the selected cut sets contain no basic events.")
        out("")
    for sheet in worksheets:
        out(f"### {sheet.event_id}")
        out("")
        out(f"- Kind: {sheet.event_kind.value}")
        out(f"- Description: {sheet.description}")
        out(f"- Lowest cut-set order: {sheet.lowest_order}")
        out("- Category 1 (unsafe controller behavior):")
        for prompt in sheet.category1_prompts:
            out(f"  - {prompt}")
        if sheet.category2_prompts is not None:
            out("- Category 2 (inadequate feedback or other inputs):")
            for prompt in sheet.category2_prompts:
                out(f"  - {prompt}")
        if sheet.historical_note:
            out(f"- {sheet.historical_note}")
        if sheet.scenario:
            out(f"- Scenario: {sheet.scenario}")
        if sheet.guidance:
            out(f"- Guidance: {sheet.guidance}")
        out(f"- Disposition: {sheet.disposition or '(analyst to complete)'}")
        out("")

    return "\n".join(lines).rstrip() + "\n"


def _describe_cut(cut, descriptions: Mapping[str, str]) -> str:
    parts = [descriptions.get(e, "") for e in cut.sorted_events()]
    return " ".join(p for p in parts if p)


def _spof_section(css: CutSetCollection, descriptions: Mapping[str, str]) -> list[str]:
    from .cutset import extract_spofs

    lines: list[str] = []
    report = extract_spofs(css)
    if report.has_spofs:
        lines.append(f"Single points of failure: {len(report.spofs)}")
        lines.append("")
        lines.append("| Number | Cut set | Description |")
        lines.append("| --- | --- | --- |")
        for i, cut in enumerate(report.spofs, start=1):
            name = ", ".join(cut.sorted_events())
            lines.append(f"| {i} | {name} | {_describe_cut(cut, descriptions)} |")
        lines.append("")
    elif report.fallback_order is not None:
        lines.append(
            f"No single points of failure; lowest populated order is "
            f"{report.fallback_order} with {len(report.fallback_sets)} sets."
        )
        lines.append("")
    else:
        lines.append("No cut sets within the solved truncation.")
        lines.append("")
    return lines


def spof_table_to_csv(css: CutSetCollection, descriptions: Mapping[str, str]) -> str:
    """CSV of the SPOF table: number, cut set, description."""
    import csv as _csv
    import io as _io

    from .cutset import extract_spofs

    buf = _io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(["number", "cut_set", "description"])
    report = extract_spofs(css)
    for i, cut in enumerate(report.spofs, start=1):
        writer.writerow(
            [i, " ".join(cut.sorted_events()), _describe_cut(cut, descriptions)]
        )
    return buf.getvalue()


def ccf_catalog_csv(catalog: Sequence[CcfEvent]) -> str:
    return catalog_to_csv(catalog)
