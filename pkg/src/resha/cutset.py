"""Minimal cut set solving for coherent fault trees.

The solver performs top-down gate expansion (OR branches rows, AND merges
rows, VOTE(k, n) branches over its k-combinations) evaluated gate-wise with
memoization so shared subtrees expand once. Rows are bitmasks over interned
event indices; absorption minimization runs at every combination step and
order truncation prunes rows as soon as they exceed the budget, which is
sound because expansion of a coherent tree never shrinks a row.

An independent brute-force oracle enumerates the structure function's
minimal true points over all 2^n assignments for small trees.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .faulttree import (
    BasicEvent,
    CCF_KINDS,
    EventKind,
    FaultTree,
    Gate,
    GateKind,
    to_exchange_json,
)
from .sysmodel import NodeId

DEFAULT_SET_BUDGET = 5_000_000
DEFAULT_BRUTE_FORCE_LIMIT = 20


class CutSetError(Exception):
    """Raised for solver misuse (bad arguments, malformed assignments)."""


class ResourceLimitError(CutSetError):
    """Raised when expansion exceeds the configured row budget."""

    def __init__(self, message: str, gates_done: int, gates_total: int, live_sets: int):
        super().__init__(
            f"{message} (progress: {gates_done}/{gates_total} gates, {live_sets} live sets)"
        )
        self.gates_done = gates_done
        self.gates_total = gates_total
        self.live_sets = live_sets


class EvaluationError(CutSetError):
    """Raised when a structure-function assignment is not total."""


@dataclass(frozen=True)
class CutSet:
    """A set of basic events that jointly fail the top event."""

    events: frozenset[str]
    contains_ccf: bool

    def __post_init__(self) -> None:
        if not self.events:
            raise CutSetError("cut sets must be non-empty")

    @property
    def order(self) -> int:
        return len(self.events)

    def sorted_events(self) -> tuple[str, ...]:
        return tuple(sorted(self.events))


@dataclass(frozen=True)
class CutSetCollection:
    """Minimal cut sets with truncation provenance and per-order counts."""

    cut_sets: tuple[CutSet, ...]
    truncation: int | None
    fingerprint: str
    per_order: Mapping[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cut_sets)

    def cumulative_count(self, order: int) -> int:
        return sum(c for o, c in self.per_order.items() if o <= order)

    def max_order(self) -> int:
        return max(self.per_order, default=0)

    def sets_of_order(self, order: int) -> tuple[CutSet, ...]:
        return tuple(c for c in self.cut_sets if c.order == order)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["order", "events", "contains_ccf"])
        for cs in self.cut_sets:
            writer.writerow([cs.order, " ".join(cs.sorted_events()), "yes" if cs.contains_ccf else "no"])
        return buf.getvalue()


def _collect(ft: FaultTree, masks: Iterable[int], index_to_id: Sequence[str],
             truncation: int | None) -> CutSetCollection:
    ccf_names = {e.id for e in ft.events.values() if e.kind in CCF_KINDS}
    cut_sets = []
    for mask in masks:
        names = frozenset(
            index_to_id[i] for i in range(mask.bit_length()) if mask >> i & 1
        )
        cut_sets.append(CutSet(events=names, contains_ccf=bool(names & ccf_names)))
    cut_sets.sort(key=lambda c: (c.order, c.sorted_events()))
    per_order: dict[int, int] = {}
    for cs in cut_sets:
        per_order[cs.order] = per_order.get(cs.order, 0) + 1
    return CutSetCollection(
        cut_sets=tuple(cut_sets),
        truncation=truncation,
        fingerprint=tree_fingerprint(ft),
        per_order=dict(sorted(per_order.items())),
    )


def tree_fingerprint(ft: FaultTree) -> str:
    return hashlib.sha256(to_exchange_json(ft).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Antichain minimization over bitmasks
# ---------------------------------------------------------------------------


def _minimize(masks: Iterable[int]) -> list[int]:
    """Keep only inclusion-minimal masks (absorption law).

    Masks are processed in ascending popcount order. Singleton masks absorb
    anything containing their bit (the common case once shared common-cause
    events appear), handled by one OR-accumulated filter; the rest use
    lowest-bit buckets to narrow subset candidates.
    """
    unique = sorted(set(masks), key=lambda m: (m.bit_count(), m))
    kept: list[int] = []
    single_union = 0
    by_lowbit: dict[int, list[int]] = {}
    for mask in unique:
        if mask & single_union:
            continue
        absorbed = False
        remaining = mask
        while remaining:
            low = remaining & -remaining
            for small in by_lowbit.get(low, ()):
                if small & mask == small:
                    absorbed = True
                    break
            if absorbed:
                break
            remaining ^= low
        if absorbed:
            continue
        kept.append(mask)
        if mask.bit_count() == 1:
            single_union |= mask
        else:
            by_lowbit.setdefault(mask & -mask, []).append(mask)
    return kept


def _bit_subsets(mask: int, k: int) -> Iterable[int]:
    """All k-bit submasks of ``mask``."""
    bits = []
    remaining = mask
    while remaining:
        low = remaining & -remaining
        bits.append(low)
        remaining ^= low
    for combo in itertools.combinations(bits, k):
        acc = 0
        for bit in combo:
            acc |= bit
        yield acc


def _and_combine(a: list[int], b: list[int], max_order: int | None, budget: int) -> list[int]:
    """Minimized pairwise unions, skipping pairs that cannot fit the budget.

    With truncation, a pair (x, y) survives only when |x| + |y| - |shared|
    stays within the order budget; pairs short on popcount are taken whole,
    and the rest are found by joining on shared ``need``-bit submasks, so
    pairs with too little overlap are never enumerated.
    """
    if not a or not b:
        return []
    out: list[int] = []

    def push(mask: int) -> None:
        out.append(mask)
        if len(out) > budget:
            raise _BudgetExceeded()

    if max_order is None:
        for x in a:
            for y in b:
                push(x | y)
        return _minimize(out)

    buckets_a: dict[int, list[int]] = {}
    buckets_b: dict[int, list[int]] = {}
    for x in a:
        buckets_a.setdefault(x.bit_count(), []).append(x)
    for y in b:
        buckets_b.setdefault(y.bit_count(), []).append(y)

    for pa, xs in buckets_a.items():
        for pb, ys in buckets_b.items():
            need = pa + pb - max_order
            if need <= 0:
                for x in xs:
                    for y in ys:
                        push(x | y)
                continue
            if need > min(pa, pb):
                continue
            index: dict[int, list[int]] = {}
            for y in ys:
                for key in _bit_subsets(y, need):
                    index.setdefault(key, []).append(y)
            for x in xs:
                for key in _bit_subsets(x, need):
                    for y in index.get(key, ()):
                        merged = x | y
                        if merged.bit_count() <= max_order:
                            push(merged)
    return _minimize(out)


def _or_combine(parts: list[list[int]], budget: int) -> list[int]:
    total = sum(len(p) for p in parts)
    if total > budget:
        raise _BudgetExceeded()
    merged: list[int] = []
    for p in parts:
        merged.extend(p)
    return _minimize(merged)


def _vote_combine(parts: list[list[int]], k: int, max_order: int | None, budget: int) -> list[int]:
    results: list[int] = []
    for combo in itertools.combinations(range(len(parts)), k):
        acc = [0]
        for idx in combo:
            acc = _and_combine(acc, parts[idx], max_order, budget)
            if not acc:
                break
        results.extend(acc)
        if len(results) > budget:
            raise _BudgetExceeded()
    return _minimize(results)


class _BudgetExceeded(Exception):
    pass


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


def solve_minimal_cut_sets(
    ft: FaultTree,
    max_order: int | None = None,
    *,
    max_sets: int = DEFAULT_SET_BUDGET,
    threads: int = 1,
) -> CutSetCollection:
    """Exact minimal cut sets of a coherent tree, optionally order-truncated.

    With truncation the result equals the subset of the untruncated minimal
    cut sets whose order does not exceed ``max_order``. ``threads`` > 1
    evaluates independent gates concurrently; results are identical to the
    serial mode because every combination step ends in a canonical sort.
    """
    if max_order is not None and max_order < 1:
        raise CutSetError("max_order must be >= 1 when given")
    if threads < 1:
        raise CutSetError("threads must be >= 1")

    event_ids = sorted(ft.events)
    index_of = {eid: i for i, eid in enumerate(event_ids)}

    gate_ids = _topological_gates(ft)
    results: dict[str, list[int]] = {}
    done_count = 0

    # Free child results once every parent has consumed them; only the top's
    # sets must survive to the end.
    consumers: dict[str, int] = {}
    for gate_id in gate_ids:
        for child in ft.gates[gate_id].children:
            if child in ft.gates:
                consumers[child] = consumers.get(child, 0) + 1

    def release_children(gate_id: str) -> None:
        for child in ft.gates[gate_id].children:
            if child in ft.gates:
                consumers[child] -= 1
                if consumers[child] == 0 and child != ft.top:
                    results.pop(child, None)

    def compute(gate_id: str) -> list[int]:
        gate = ft.gates[gate_id]
        parts = []
        for child in gate.children:
            if child in ft.events:
                parts.append([1 << index_of[child]])
            else:
                parts.append(results[child])
        try:
            if gate.kind is GateKind.OR:
                return _or_combine(parts, max_sets)
            if gate.kind is GateKind.AND:
                acc = [0]
                for p in parts:
                    acc = _and_combine(acc, p, max_order, max_sets)
                    if not acc:
                        return []
                return acc
            assert gate.k is not None
            return _vote_combine(parts, gate.k, max_order, max_sets)
        except _BudgetExceeded:
            live = sum(len(r) for r in results.values())
            raise ResourceLimitError(
                f"cut set expansion exceeded budget of {max_sets} rows at gate {gate_id!r}",
                gates_done=done_count,
                gates_total=len(gate_ids),
                live_sets=live,
            ) from None

    if ft.top in ft.events:
        return _collect(ft, [1 << index_of[ft.top]], event_ids, max_order)

    if threads == 1:
        for gate_id in gate_ids:
            results[gate_id] = compute(gate_id)
            done_count += 1
            release_children(gate_id)
    else:
        remaining = list(gate_ids)
        done: set[str] = set()
        with ThreadPoolExecutor(max_workers=threads) as pool:
            while remaining:
                ready = [
                    g
                    for g in remaining
                    if all((c in ft.events) or (c in done) for c in ft.gates[g].children)
                ]
                futures = {g: pool.submit(compute, g) for g in ready}
                for g in ready:
                    results[g] = futures[g].result()
                    done.add(g)
                    done_count += 1
                for g in ready:
                    release_children(g)
                remaining = [g for g in remaining if g not in done]

    top_masks = results[ft.top]
    if max_order is not None:
        top_masks = [m for m in top_masks if m.bit_count() <= max_order]
    return _collect(ft, top_masks, event_ids, max_order)


def _topological_gates(ft: FaultTree) -> list[str]:
    """Gate ids ordered children-first; deterministic for identical trees."""
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(gate_id: str) -> None:
        stack = [(gate_id, 0)]
        state[gate_id] = 1
        while stack:
            current, idx = stack.pop()
            gate = ft.gates[current]
            advanced = False
            for j in range(idx, len(gate.children)):
                child = gate.children[j]
                if child in ft.gates and state.get(child, 0) == 0:
                    stack.append((current, j + 1))
                    state[child] = 1
                    stack.append((child, 0))
                    advanced = True
                    break
            if not advanced:
                state[current] = 2
                order.append(current)

    if ft.top in ft.gates:
        visit(ft.top)
    return order


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def brute_force_cut_sets(
    ft: FaultTree, *, event_limit: int = DEFAULT_BRUTE_FORCE_LIMIT
) -> CutSetCollection:
    """All minimal cut sets by exhaustive truth-table enumeration.

    Evaluates the structure function over every assignment of the tree's
    events and returns the minimal true points (the prime implicants of the
    monotone function). Independent of the expansion solver; serves as its
    oracle on small trees.
    """
    event_ids = sorted(ft.events)
    n = len(event_ids)
    if n > event_limit:
        raise CutSetError(
            f"brute force limited to {event_limit} events, tree has {n}"
        )
    size = 1 << n
    assignments = np.arange(size, dtype=np.uint32)
    columns = {
        event_ids[i]: ((assignments >> i) & 1).astype(bool) for i in range(n)
    }
    memo: dict[str, np.ndarray] = {}

    def truth(ref: str) -> np.ndarray:
        cached = memo.get(ref)
        if cached is not None:
            return cached
        if ref in columns:
            memo[ref] = columns[ref]
            return columns[ref]
        gate = ft.gates[ref]
        if not gate.children:
            # Only empty OR survives validation: a never-fails placeholder.
            value = np.zeros(size, dtype=bool)
        else:
            stacked = np.vstack([truth(c) for c in gate.children])
            if gate.kind is GateKind.OR:
                value = stacked.any(axis=0)
            elif gate.kind is GateKind.AND:
                value = stacked.all(axis=0)
            else:
                value = stacked.sum(axis=0) >= gate.k
        memo[ref] = value
        return value

    top = truth(ft.top)
    minimal = top.copy()
    for i in range(n):
        has_bit = ((assignments >> i) & 1) == 1
        parents = assignments[has_bit] ^ (1 << i)
        minimal[has_bit] &= ~top[parents]
    masks = [int(m) for m in np.nonzero(minimal)[0]]
    return _collect(ft, masks, event_ids, truncation=None)


# ---------------------------------------------------------------------------
# Structure function evaluation
# ---------------------------------------------------------------------------


def evaluate_structure_function(ft: FaultTree, assignment: Mapping[str, bool]) -> bool:
    """Evaluate the top event under a total event assignment."""
    missing = set(ft.events) - set(assignment)
    if missing:
        raise EvaluationError(f"assignment missing events: {sorted(missing)[:3]}")
    memo: dict[str, bool] = {}

    def value(ref: str) -> bool:
        if ref in memo:
            return memo[ref]
        if ref in ft.events:
            result = bool(assignment[ref])
        else:
            gate = ft.gates[ref]
            if gate.kind is GateKind.OR:
                result = any(value(c) for c in gate.children)
            elif gate.kind is GateKind.AND:
                result = all(value(c) for c in gate.children)
            else:
                result = sum(1 for c in gate.children if value(c)) >= (gate.k or 0)
        memo[ref] = result
        return result

    return value(ft.top)


def witness_check(ft: FaultTree, cut_set: CutSet) -> bool:
    """Minimality witness: members-true fails the top; dropping any one member un-fails it."""
    base = {eid: False for eid in ft.events}
    for eid in cut_set.events:
        base[eid] = True
    if not evaluate_structure_function(ft, base):
        return False
    for eid in cut_set.events:
        base[eid] = False
        if evaluate_structure_function(ft, base):
            return False
        base[eid] = True
    return True


# ---------------------------------------------------------------------------
# SPOFs and histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpofReport:
    """First-order cut sets; falls back to the lowest populated order when none exist."""

    spofs: tuple[CutSet, ...]
    fallback_order: int | None
    fallback_sets: tuple[CutSet, ...]

    @property
    def has_spofs(self) -> bool:
        return bool(self.spofs)


def extract_spofs(css: CutSetCollection) -> SpofReport:
    """Single points of failure: all order-1 sets, CCF-only sets included."""
    spofs = css.sets_of_order(1)
    if spofs:
        return SpofReport(spofs=spofs, fallback_order=None, fallback_sets=())
    populated = sorted(css.per_order)
    if not populated:
        return SpofReport(spofs=(), fallback_order=None, fallback_sets=())
    lowest = populated[0]
    return SpofReport(
        spofs=(),
        fallback_order=lowest,
        fallback_sets=css.sets_of_order(lowest),
    )


@dataclass(frozen=True)
class OrderHistogram:
    """Per-order and cumulative (order <= k) counts up to the truncation."""

    per_order: Mapping[int, int]
    truncation: int | None

    def count(self, order: int) -> int:
        return self.per_order.get(order, 0)

    def cumulative(self, order: int) -> int:
        return sum(c for o, c in self.per_order.items() if o <= order)

    def rows(self) -> tuple[tuple[int, int, int], ...]:
        """(order, count at order, cumulative count) rows, ascending."""
        top = self.truncation if self.truncation is not None else max(self.per_order, default=0)
        return tuple((k, self.count(k), self.cumulative(k)) for k in range(1, top + 1))


def order_histogram(css: CutSetCollection) -> OrderHistogram:
    return OrderHistogram(per_order=dict(css.per_order), truncation=css.truncation)


# ---------------------------------------------------------------------------
# Random coherent trees (oracle fodder)
# ---------------------------------------------------------------------------


def random_coherent_tree(
    rng: random.Random,
    *,
    max_events: int = 12,
    max_gates: int = 8,
) -> FaultTree:
    """Random coherent DAG tree with shared events and nested VOTE gates."""
    n_events = rng.randint(2, max(2, max_events))
    n_gates = rng.randint(1, max(1, max_gates))
    events = {}
    for i in range(n_events):
        eid = f"E{i + 1:02d}"
        if i >= 2 and rng.random() < 0.15:
            event = BasicEvent(
                id=eid,
                kind=EventKind.HW_CCF,
                subjects=(NodeId("XA", 0, 0, i + 1), NodeId("XB", 0, 0, i + 1)),
            )
        else:
            event = BasicEvent(
                id=eid, kind=EventKind.HW_INDEP, subjects=(NodeId("XA", 0, 0, i + 1),)
            )
        events[eid] = event

    gates: dict[str, Gate] = {}
    event_ids = sorted(events)
    for idx in range(n_gates, 0, -1):
        gate_id = f"G{idx}"
        pool = list(event_ids)
        if idx < n_gates:
            pool += [f"G{j}" for j in range(idx + 1, n_gates + 1)]
        width = rng.randint(1 if idx > 1 else 2, min(4, len(pool)))
        children = tuple(rng.sample(pool, width))
        kind = rng.choice([GateKind.AND, GateKind.OR, GateKind.VOTE])
        k = rng.randint(1, len(children)) if kind is GateKind.VOTE else None
        gates[gate_id] = Gate(id=gate_id, kind=kind, children=children, k=k)

    # Keep only what the top reaches; the constructor enforces the rest.
    reachable: set[str] = set()
    stack = ["G1"]
    while stack:
        ref = stack.pop()
        if ref in reachable:
            continue
        reachable.add(ref)
        if ref in gates:
            stack.extend(gates[ref].children)
    return FaultTree(
        top="G1",
        gates={g: gates[g] for g in gates if g in reachable},
        events={e: events[e] for e in events if e in reachable},
    )
