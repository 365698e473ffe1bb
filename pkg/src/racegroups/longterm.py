"""Global evolution graph and the four long-term pattern labels.

The global graph is the union of every consecutive-pair evolution
graph: one vertex per group, forward and backward relation edges
between adjacent control points.  Four integer labels per group:

  lpS  longest chain of strong relations ending at the group
  lpF  longest forward-edge path ending at the group
  lpB  longest backward-edge path starting at the group (backward
       edges point against the race direction, so the path itself
       visits ascending control points while its sweep runs descending)
  lpR  longest path using edges of either direction, ending at the group

Labels count edges; the matching control-point count is one more.  The
group holding the largest label of a kind ends (or, for lpB, starts)
the longest behavior of that kind, and the path is recovered by
walking adjacencies whose labels decrease by one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .evolution import PairGraph
from .grouping import GroupId

KIND_SURVIVING = "surviving"
KIND_FORWARD = "traceable-forward"
KIND_BACKWARD = "traceable-backward"
KIND_RELATED = "related"
LONGTERM_KINDS = (KIND_SURVIVING, KIND_FORWARD, KIND_BACKWARD, KIND_RELATED)

_LABEL_OF_KIND = {
    KIND_SURVIVING: "lpS",
    KIND_FORWARD: "lpF",
    KIND_BACKWARD: "lpB",
    KIND_RELATED: "lpR",
}


class GlobalGraph:
    """Union of the pair graphs: group-id vertices, relation edges."""

    __slots__ = ("counts", "fwd", "bwd", "fwd_in", "bwd_in")

    def __init__(self) -> None:
        self.counts: dict[int, int] = {}  # cp -> number of groups
        self.fwd: dict[GroupId, GroupId] = {}
        self.bwd: dict[GroupId, GroupId] = {}
        self.fwd_in: dict[GroupId, list[GroupId]] = {}
        self.bwd_in: dict[GroupId, list[GroupId]] = {}

    def cps(self) -> list[int]:
        return sorted(self.counts)

    def level(self, cp: int) -> list[GroupId]:
        return [(cp, o) for o in range(self.counts.get(cp, 0))]

    def vertices(self) -> Iterable[GroupId]:
        for cp in self.cps():
            yield from self.level(cp)

    def n_vertices(self) -> int:
        return sum(self.counts.values())

    def strong_pred(self, v: GroupId) -> GroupId | None:
        u = self.bwd.get(v)
        if u is not None and self.fwd.get(u) == v:
            return u
        return None

    def related_preds(self, v: GroupId) -> list[GroupId]:
        preds = list(self.fwd_in.get(v, ()))
        u = self.bwd.get(v)
        if u is not None and u not in preds:
            preds.append(u)
        return preds

    def add_pair(self, pair: PairGraph) -> None:
        lcp, rcp = pair.left_cp, pair.right_cp
        for cp, n in ((lcp, len(pair.left_sizes)), (rcp, len(pair.right_sizes))):
            known = self.counts.get(cp)
            if known is not None and known != n:
                raise ValueError(
                    f"control point {cp} has {known} groups in one pair "
                    f"and {n} in another"
                )
            self.counts[cp] = n
        for left, (right, _) in pair.fwd.items():
            u, v = (lcp, left), (rcp, right)
            self.fwd[u] = v
            self.fwd_in.setdefault(v, []).append(u)
        for right, (left, _) in pair.bwd.items():
            u, v = (lcp, left), (rcp, right)
            self.bwd[v] = u
            self.bwd_in.setdefault(u, []).append(v)


def build_global(pairs: Sequence[PairGraph]) -> GlobalGraph:
    """Union of pair graphs over consecutive control points.

    The pairs must cover a contiguous control-point range (a pair with
    no groups on either side is fine, a missing one is not).
    """
    graph = GlobalGraph()
    ordered = sorted(pairs, key=lambda p: p.left_cp)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.left_cp != prev.left_cp + 1:
            raise ValueError(
                f"gap in pair sequence: {prev.left_cp} then {cur.left_cp}"
            )
    for pair in ordered:
        graph.add_pair(pair)
    return graph


def sweep_forward_labels(
    graph: GlobalGraph,
    seed: dict[str, dict[GroupId, int]] | None = None,
    start_cp: int | None = None,
) -> dict[str, dict[GroupId, int]]:
    """One ascending sweep computing lpS, lpF and lpR.

    With seed labels from a prefix of the race and start_cp set to the
    first new control point, only the new levels are scanned; the
    recurrences read one level back, so appending control points
    extends previous labels instead of recomputing them.
    """
    if seed is None:
        lpS: dict[GroupId, int] = {}
        lpF: dict[GroupId, int] = {}
        lpR: dict[GroupId, int] = {}
    else:
        lpS, lpF, lpR = seed["lpS"], seed["lpF"], seed["lpR"]
    for cp in graph.cps():
        if start_cp is not None and cp < start_cp:
            continue
        for v in graph.level(cp):
            strong = graph.strong_pred(v)
            lpS[v] = lpS[strong] + 1 if strong is not None else 0
            lpF[v] = max(
                (lpF[u] + 1 for u in graph.fwd_in.get(v, ())), default=0
            )
            lpR[v] = max(
                (lpR[u] + 1 for u in graph.related_preds(v)), default=0
            )
    return {"lpS": lpS, "lpF": lpF, "lpR": lpR}


def sweep_backward_labels(graph: GlobalGraph) -> dict[GroupId, int]:
    """One descending sweep computing lpB.

    There is no incremental variant: a new last control point can
    raise lpB everywhere upstream, so callers recompute.  The sweep is
    linear in vertices plus edges, which keeps that cheap.
    """
    lpB: dict[GroupId, int] = {}
    for cp in reversed(graph.cps()):
        for v in graph.level(cp):
            lpB[v] = max(
                (lpB[w] + 1 for w in graph.bwd_in.get(v, ())), default=0
            )
    return lpB


@dataclass(frozen=True)
class LongTermLabels:
    lpS: dict[GroupId, int]
    lpF: dict[GroupId, int]
    lpB: dict[GroupId, int]
    lpR: dict[GroupId, int]

    def of(self, kind: str) -> dict[GroupId, int]:
        return getattr(self, _LABEL_OF_KIND[kind])


def compute_labels(graph: GlobalGraph) -> LongTermLabels:
    forward = sweep_forward_labels(graph)
    return LongTermLabels(
        lpS=forward["lpS"],
        lpF=forward["lpF"],
        lpB=sweep_backward_labels(graph),
        lpR=forward["lpR"],
    )


@dataclass(frozen=True)
class LongestResult:
    kind: str
    length_edges: int
    length_cps: int
    witness: tuple[GroupId, ...]  # groups of the path, ascending cp

    def __str__(self) -> str:
        path = " -> ".join(f"{cp}:{o}" for cp, o in self.witness)
        return (
            f"{self.kind}: {self.length_cps} control points "
            f"({self.length_edges} edges) [{path}]"
        )


def _walk_back(graph: GlobalGraph, labels, v: GroupId, kind: str):
    """Predecessor chain for the path-ending vertex of lpS/lpF/lpR."""
    path = [v]
    while labels[v] > 0:
        want = labels[v] - 1
        if kind == KIND_SURVIVING:
            candidates = [graph.strong_pred(v)]
        elif kind == KIND_FORWARD:
            candidates = graph.fwd_in.get(v, ())
        else:
            candidates = graph.related_preds(v)
        v = min(u for u in candidates if u is not None and labels[u] == want)
        path.append(v)
    path.reverse()
    return path


def _walk_ahead(graph: GlobalGraph, labels, v: GroupId):
    """Successor chain for the path-starting vertex of lpB."""
    path = [v]
    while labels[v] > 0:
        want = labels[v] - 1
        v = min(w for w in graph.bwd_in.get(v, ()) if labels[w] == want)
        path.append(v)
    return path


def longest(graph: GlobalGraph, labels: LongTermLabels, kind: str) -> LongestResult:
    """The longest behavior of one kind, with a witness path.

    Ties on the label value go to the earliest (control point, ordinal)
    pair.  An empty graph yields a zero-length result.
    """
    if kind not in _LABEL_OF_KIND:
        raise ValueError(f"unknown long-term kind {kind!r}")
    table = labels.of(kind)
    best: GroupId | None = None
    best_value = -1
    for v in graph.vertices():
        value = table[v]
        if value > best_value:
            best, best_value = v, value
    if best is None:
        return LongestResult(kind, 0, 0, ())
    if kind == KIND_BACKWARD:
        path = _walk_ahead(graph, table, best)
    else:
        path = _walk_back(graph, table, best, kind)
    return LongestResult(kind, best_value, best_value + 1, tuple(path))


def longest_all(graph: GlobalGraph, labels: LongTermLabels) -> dict[str, LongestResult]:
    return {kind: longest(graph, labels, kind) for kind in LONGTERM_KINDS}
