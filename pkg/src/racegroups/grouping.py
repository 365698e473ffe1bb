"""Streaming detection of components and groups at every control point.

The engine consumes events in global time order.  Each control point
keeps at most one *active* component: the chain of crossings whose
consecutive gaps are all <= epsilon.  An arrival more than epsilon
after the component's last crossing finishes the component - it
becomes a group if it holds at least m athletes, otherwise all its
members are outliers at that control point - and starts a new one.
The comparison is non-strict (gap <= epsilon) so that epsilon=0 on
second-resolution data groups athletes crossing during the same clock
second.

Per athlete the engine keeps a compact history: one slot per control
point crossed, holding either the group ordinal at that point or one
of the sentinel codes below.  Slots are appended in control-point
order, so lookups are list indexing.

Everything here is single-writer: one logical ingestion stream.
Finished groups are immutable and may be read concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

from .core import Event, Params

# History slot codes (non-negative values are group ordinals).
OUTLIER = -1  # crossed, but the component stayed below the group threshold
PENDING = -2  # crossed, component still active
ABSENT = -3  # never crossed this control point

GroupId = tuple[int, int]  # (control point index, ordinal within it)

ANOMALY_DUPLICATE = "duplicate-event"
ANOMALY_ORDER = "order-violation"
ANOMALY_SKIPPED = "skipped-cp"
ANOMALY_PACE = "pace-jump"


@dataclass(frozen=True)
class AnomalyRecord:
    athlete: int
    kind: str
    cp: int
    details: str


class StreamOrderError(ValueError):
    """Raised when the input stream itself violates global time order."""


@dataclass(frozen=True)
class Group:
    """A finished component with at least m members."""

    id: GroupId
    members: tuple[int, ...]  # in crossing order
    t_first: int
    t_last: int

    @property
    def cp(self) -> int:
        return self.id[0]

    @property
    def ordinal(self) -> int:
        return self.id[1]

    @property
    def size(self) -> int:
        return len(self.members)

    def member_set(self) -> frozenset[int]:
        return frozenset(self.members)


class Component(NamedTuple):
    """Read-only view of a component (active or finished)."""

    cp: int
    members: tuple[int, ...]
    t_first: int
    t_last: int
    active: bool


class FinishedComponent(NamedTuple):
    """Engine output: a component was decreed finished.

    group is None when the component fell below the group threshold,
    in which case every member became an outlier at this control point.
    """

    cp: int
    members: tuple[int, ...]
    t_first: int
    t_last: int
    group: Group | None


class HistoryEntry(NamedTuple):
    kind: str  # "group" | "outlier" | "pending" | "absent"
    group: GroupId | None = None


_ENTRY_OUTLIER = HistoryEntry("outlier")
_ENTRY_PENDING = HistoryEntry("pending")
_ENTRY_ABSENT = HistoryEntry("absent")


class GroupingEngine:
    """Algorithm state for the whole race: components, groups, histories."""

    def __init__(self, params: Params) -> None:
        self.params = params
        # cp -> [member list, t_first, t_last]; plain lists keep the
        # per-event work to a few dict/list operations
        self._active: dict[int, list] = {}
        self.groups: dict[int, list[Group]] = {}
        self.outliers: dict[int, list[int]] = {}
        self.component_counts: dict[int, int] = {}
        # athlete -> [codes per cp, times per cp, last crossing time]
        self._athletes: dict[int, list] = {}
        self.anomalies: list[AnomalyRecord] = []
        self.events_accepted = 0
        self.events_rejected = 0
        self._last_stream_time: int | None = None
        self._finalized = False

    # -- ingestion ----------------------------------------------------

    def ingest_event(self, event: Event) -> list[FinishedComponent]:
        """Feed one event; returns the components it finished (0 or 1)."""
        return self.ingest_many((event,))

    def ingest_many(self, events: Iterable[Event], on_finish=None) -> list[FinishedComponent]:
        """Feed a time-ordered batch of events.

        Returns every component finished along the way, in the order
        they were decreed finished.  on_finish, when given, is invoked
        synchronously with each FinishedComponent at the moment it is
        decreed finished - downstream graph bookkeeping relies on
        observing athlete histories exactly as they were at that
        moment, before later events resolve more pending entries.

        Raises StreamOrderError if global timestamps ever decrease;
        per-athlete irregularities (duplicate crossings, control points
        out of order) are rejected with an anomaly record instead,
        since they indicate corrupt data for one athlete rather than a
        broken stream.
        """
        if self._finalized:
            raise StreamOrderError("stream already finalized by the broom wagon")
        outputs: list[FinishedComponent] = []
        eps = self.params.epsilon
        active = self._active
        athletes = self._athletes
        anomalies = self.anomalies
        last_stream = self._last_stream_time
        accepted = 0
        rejected = 0
        for athlete, cp, t in events:
            if last_stream is not None and t < last_stream:
                self._last_stream_time = last_stream
                self.events_accepted += accepted
                self.events_rejected += rejected
                raise StreamOrderError(
                    f"event time {t} for athlete {athlete} at cp {cp} is before "
                    f"stream time {last_stream}"
                )
            last_stream = t
            rec = athletes.get(athlete)
            if rec is None:
                rec = athletes[athlete] = [[], [], -1]
            codes = rec[0]
            ncrossed = len(codes)
            if cp < ncrossed:
                kind = ANOMALY_ORDER if codes[cp] == ABSENT else ANOMALY_DUPLICATE
                anomalies.append(
                    AnomalyRecord(
                        athlete,
                        kind,
                        cp,
                        f"event at t={t} after cp {ncrossed - 1} was recorded",
                    )
                )
                rejected += 1
                continue
            if rec[2] >= t and ncrossed:
                anomalies.append(
                    AnomalyRecord(
                        athlete,
                        ANOMALY_ORDER,
                        cp,
                        f"time {t} does not increase over previous crossing {rec[2]}",
                    )
                )
                rejected += 1
                continue
            if cp > ncrossed:
                times = rec[1]
                for skipped in range(ncrossed, cp):
                    codes.append(ABSENT)
                    times.append(-1)
                    anomalies.append(
                        AnomalyRecord(
                            athlete, ANOMALY_SKIPPED, skipped, "no crossing recorded"
                        )
                    )
            codes.append(PENDING)
            rec[1].append(t)
            rec[2] = t
            accepted += 1
            comp = active.get(cp)
            if comp is None:
                active[cp] = [[athlete], t, t]
            elif t - comp[2] <= eps:
                comp[0].append(athlete)
                comp[2] = t
            else:
                finished = self._finish(cp, comp)
                outputs.append(finished)
                if on_finish is not None:
                    on_finish(finished)
                active[cp] = [[athlete], t, t]
        self._last_stream_time = last_stream
        self.events_accepted += accepted
        self.events_rejected += rejected
        return outputs

    def finalize_all(self, on_finish=None) -> list[FinishedComponent]:
        """Broom wagon: finish every remaining active component.

        Components are finished in control-point order so that, by the
        time a group is decreed at cp c, every history entry at c-1 is
        already resolved.
        """
        outputs = []
        for cp in sorted(self._active):
            finished = self._finish(cp, self._active[cp])
            outputs.append(finished)
            if on_finish is not None:
                on_finish(finished)
        self._active.clear()
        self._finalized = True
        return outputs

    def _finish(self, cp: int, comp: list) -> FinishedComponent:
        members, t_first, t_last = comp
        athletes = self._athletes
        self.component_counts[cp] = self.component_counts.get(cp, 0) + 1
        if len(members) >= self.params.m:
            bucket = self.groups.get(cp)
            if bucket is None:
                bucket = self.groups[cp] = []
            ordinal = len(bucket)
            group = Group((cp, ordinal), tuple(members), t_first, t_last)
            bucket.append(group)
            for athlete in members:
                athletes[athlete][0][cp] = ordinal
        else:
            group = None
            bucket = self.outliers.get(cp)
            if bucket is None:
                bucket = self.outliers[cp] = []
            bucket.extend(members)
            for athlete in members:
                athletes[athlete][0][cp] = OUTLIER
        return FinishedComponent(cp, tuple(members), t_first, t_last, group)

    # -- read access ---------------------------------------------------

    def raw_histories(self) -> dict[int, list]:
        """The live athlete -> [codes, times, last time] table.

        Shared, not copied: graph construction reads codes through this
        while ingestion is still running.  Callers must not mutate it.
        """
        return self._athletes

    def history_code(self, athlete: int, cp: int) -> int:
        """Raw slot code for (athlete, cp): ordinal or sentinel."""
        rec = self._athletes[athlete]
        codes = rec[0]
        return codes[cp] if cp < len(codes) else ABSENT

    def crossing_time(self, athlete: int, cp: int) -> int | None:
        rec = self._athletes.get(athlete)
        if rec is None or cp >= len(rec[0]) or rec[0][cp] == ABSENT:
            return None
        return rec[1][cp]

    def group_history(self, athlete: int) -> list[HistoryEntry]:
        """History entries indexed by control point, up to the last crossed."""
        rec = self._athletes.get(athlete)
        if rec is None:
            raise KeyError(f"unknown athlete {athlete}")
        entries = []
        for cp, code in enumerate(rec[0]):
            if code >= 0:
                entries.append(HistoryEntry("group", (cp, code)))
            elif code == OUTLIER:
                entries.append(_ENTRY_OUTLIER)
            elif code == PENDING:
                entries.append(_ENTRY_PENDING)
            else:
                entries.append(_ENTRY_ABSENT)
        return entries

    def groups_at(self, cp: int) -> list[Group]:
        if cp < 0:
            raise IndexError(f"control point {cp} out of range")
        return list(self.groups.get(cp, ()))

    def outliers_at(self, cp: int) -> list[int]:
        if cp < 0:
            raise IndexError(f"control point {cp} out of range")
        return list(self.outliers.get(cp, ()))

    def components_at(self, cp: int) -> list[Component]:
        """Finished components (groups and outlier batches are not kept
        apart here) followed by the active one, if any."""
        if cp < 0:
            raise IndexError(f"control point {cp} out of range")
        finished: list[tuple[int, Component]] = []
        for g in self.groups.get(cp, ()):
            finished.append(
                (g.t_first, Component(cp, g.members, g.t_first, g.t_last, False))
            )
        comps = [c for _, c in sorted(finished, key=lambda item: item[0])]
        # outlier members are stored flat; their component boundaries are
        # not retained, so each outlier batch is not reconstructed here
        comp = self._active.get(cp)
        if comp is not None:
            comps.append(Component(cp, tuple(comp[0]), comp[1], comp[2], True))
        return comps

    def n_components_at(self, cp: int) -> int:
        """How many epsilon-connected components finished at cp.

        Counts every component, group or not; the active one, if any,
        is included since it will finish eventually.
        """
        return self.component_counts.get(cp, 0) + (1 if cp in self._active else 0)

    def known_cps(self) -> list[int]:
        cps = set(self.groups) | set(self.outliers) | set(self._active)
        return sorted(cps)

    def athletes_seen(self) -> Iterator[int]:
        return iter(self._athletes)

    def crossed_athletes_at(self, cp: int) -> list[int]:
        """Everyone with a non-absent slot at cp (group, outlier or pending)."""
        out = []
        for athlete, rec in self._athletes.items():
            codes = rec[0]
            if cp < len(codes) and codes[cp] != ABSENT:
                out.append(athlete)
        return out
