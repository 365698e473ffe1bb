"""One race, end to end: stream events through the grouping engine,
keep the evolution graphs current, classify every control-point pair,
sweep the long-term labels, and answer questions about the result.

The analysis object wires the layers the only way that is sound: the
engine invokes a callback at the exact moment a component is decreed
finished, and that callback feeds the graph stack (and, online, the
pattern tracker) while athlete histories still show the state of that
moment.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass

from .core import Params
from .evolution import GraphStack, PairGraph
from .grouping import (
    ABSENT,
    ANOMALY_PACE,
    AnomalyRecord,
    GroupingEngine,
)
from .longterm import (
    LONGTERM_KINDS,
    GlobalGraph,
    LongestResult,
    LongTermLabels,
    build_global,
    compute_labels,
    longest_all,
)
from .patterns import KINDS, PatternSet, PatternTracker, detect_patterns

MODE_FINALIZED = "finalized"
MODE_ONLINE = "online"
MODES = (MODE_FINALIZED, MODE_ONLINE)

DEFAULT_PACE_FACTOR = 1.5


@dataclass(frozen=True)
class RunConfig:
    params: Params
    mode: str = MODE_FINALIZED
    course: dict[int, int] | None = None  # cp -> meters from the start
    pace_factor: float = DEFAULT_PACE_FACTOR

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.pace_factor <= 1.0:
            raise ValueError("pace factor must exceed 1")


@dataclass
class StageTimings:
    """Wall-clock seconds per stage.  Parsing and sorting are accounted
    to ingest and excluded from the streaming throughput."""

    ingest_s: float = 0.0
    grouping_s: float = 0.0
    patterns_s: float = 0.0
    longterm_s: float = 0.0
    events: int = 0

    def throughput(self) -> float:
        """Events per second through the streaming stage."""
        return self.events / self.grouping_s if self.grouping_s > 0 else 0.0


@dataclass(frozen=True)
class AthleteStatus:
    """Where one athlete stands, accurate up to their last crossing."""

    athlete: int
    last_cp: int
    last_time: int
    position: int  # 1-based; by progress, then last crossing time
    segment_pace: float | None  # min/km over the latest segment
    average_pace: float | None  # min/km over the whole crossed span
    history: tuple[str, ...]  # one token per cp: g<cp>.<ordinal>, solo, absent


@dataclass(frozen=True)
class GroupStats:
    cp: int
    n_components: int
    n_groups: int
    n_outliers: int
    largest_group: int
    crossed: int


class RaceAnalysis:
    """Streaming state plus finished-race reports."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.engine = GroupingEngine(config.params)
        self.stack = GraphStack(config.params.mu, self.engine.raw_histories())
        self.tracker = PatternTracker() if config.mode == MODE_ONLINE else None
        self._sealed_sets: dict[int, PatternSet] | None = None
        self._finalized = False

    # -- streaming ----------------------------------------------------

    def _dispatch(self, finished) -> None:
        if finished.group is not None:
            updates = self.stack.on_group(finished.group)
            if self.tracker is not None:
                self.tracker.on_group(finished.group, updates)
        else:
            self.stack.on_failed_component(finished.cp)

    def ingest(self, events) -> None:
        self.engine.ingest_many(events, on_finish=self._dispatch)

    def finalize(self) -> None:
        self.engine.finalize_all(on_finish=self._dispatch)
        self._finalized = True

    # -- graphs and patterns -------------------------------------------

    def pairs(self) -> list[PairGraph]:
        """One pair per consecutive control-point step, contiguous, the
        step after the last control point excluded."""
        cps = self.engine.known_cps()
        if len(cps) < 2:
            return []
        return [self.stack.pair(cp) for cp in range(min(cps), max(cps))]

    def pattern_sets(self) -> dict[int, PatternSet]:
        """Final classification per pair, keyed by left control point.

        Online mode reads the tracker's sealed state; finalized mode
        classifies from the finished graphs.  Both agree.
        """
        pairs = self.pairs()
        if self.tracker is not None:
            if self._sealed_sets is None:
                self._sealed_sets = self.tracker.seal(pairs)
            return self._sealed_sets
        return {pair.left_cp: detect_patterns(pair) for pair in pairs}

    def global_graph(self) -> GlobalGraph:
        return build_global(self.pairs())

    def group_stats(self) -> list[GroupStats]:
        engine = self.engine
        stats = []
        for cp in engine.known_cps():
            groups = engine.groups_at(cp)
            stats.append(
                GroupStats(
                    cp=cp,
                    n_components=engine.n_components_at(cp),
                    n_groups=len(groups),
                    n_outliers=len(engine.outliers_at(cp)),
                    largest_group=max((g.size for g in groups), default=0),
                    crossed=len(engine.crossed_athletes_at(cp)),
                )
            )
        return stats

    # -- athlete-facing reports ----------------------------------------

    def _progress(self, athlete: int) -> tuple[int, int]:
        rec = self.engine.raw_histories().get(athlete)
        if rec is None:
            raise KeyError(f"unknown athlete {athlete}")
        codes, times, _ = rec
        # the trailing slot is always a real crossing: absences are only
        # backfilled when a later crossing arrives
        return len(codes) - 1, times[-1]

    def athlete_status(self, athlete: int) -> AthleteStatus:
        last_cp, last_time = self._progress(athlete)
        position = 1
        for other, rec in self.engine.raw_histories().items():
            if other == athlete:
                continue
            cp = len(rec[0]) - 1
            if cp > last_cp or (cp == last_cp and rec[1][-1] < last_time):
                position += 1
        segment_pace = average_pace = None
        crossed = self._crossed_series(athlete)
        course = self.config.course
        if course is not None and len(crossed) >= 2:
            span = [(cp, t) for cp, t in crossed if cp in course]
            if len(span) >= 2:
                (c0, t0), (c_prev, t_prev), (c_last, t_last) = (
                    span[0],
                    span[-2],
                    span[-1],
                )
                average_pace = _pace(t_last - t0, course[c_last] - course[c0])
                segment_pace = _pace(
                    t_last - t_prev, course[c_last] - course[c_prev]
                )
        history = tuple(
            _history_token(entry) for entry in self.engine.group_history(athlete)
        )
        return AthleteStatus(
            athlete=athlete,
            last_cp=last_cp,
            last_time=last_time,
            position=position,
            segment_pace=segment_pace,
            average_pace=average_pace,
            history=history,
        )

    def _crossed_series(self, athlete: int) -> list[tuple[int, int]]:
        rec = self.engine.raw_histories()[athlete]
        codes, times, _ = rec
        return [(cp, times[cp]) for cp in range(len(codes)) if codes[cp] != ABSENT]

    def anomalies(self) -> list[AnomalyRecord]:
        """Stream irregularities plus pace jumps, one record per
        (athlete, cp, kind)."""
        seen: set[tuple[int, str, int]] = set()
        out: list[AnomalyRecord] = []
        for record in self.engine.anomalies:
            key = (record.athlete, record.kind, record.cp)
            if key not in seen:
                seen.add(key)
                out.append(record)
        course = self.config.course
        if course is not None:
            factor = self.config.pace_factor
            for athlete in sorted(self.engine.raw_histories()):
                series = [
                    (cp, t)
                    for cp, t in self._crossed_series(athlete)
                    if cp in course
                ]
                for i in range(2, len(series) + 1):
                    # running average over everything before this segment
                    (c0, t0), (c_prev, t_prev), (c_cur, t_cur) = (
                        series[0],
                        series[i - 2],
                        series[i - 1],
                    )
                    if c_prev == c0:
                        continue  # no history to average yet
                    avg = _pace(t_prev - t0, course[c_prev] - course[c0])
                    seg = _pace(t_cur - t_prev, course[c_cur] - course[c_prev])
                    if seg > factor * avg or seg * factor < avg:
                        key = (athlete, ANOMALY_PACE, c_cur)
                        if key in seen:
                            continue
                        seen.add(key)
                        out.append(
                            AnomalyRecord(
                                athlete,
                                ANOMALY_PACE,
                                c_cur,
                                f"segment pace {seg:.2f} min/km vs running "
                                f"average {avg:.2f} (factor {factor:g})",
                            )
                        )
        return out


def _pace(delta_ms: int, delta_m: int) -> float:
    """Minutes per kilometer."""
    return (delta_ms / 60000.0) / (delta_m / 1000.0)


def _history_token(entry) -> str:
    if entry.kind == "group":
        cp, ordinal = entry.group
        return f"g{cp}.{ordinal}"
    if entry.kind == "outlier":
        return "solo"
    if entry.kind == "pending":
        return "pending"
    return "absent"


@dataclass
class RunResult:
    analysis: RaceAnalysis
    pattern_sets: dict[int, PatternSet]
    labels: LongTermLabels
    longest: dict[str, LongestResult]
    stats: list[GroupStats]
    timings: StageTimings

    def pattern_totals(self) -> dict[str, int]:
        totals = dict.fromkeys(KINDS, 0)
        for pattern_set in self.pattern_sets.values():
            for kind, n in pattern_set.counts().items():
                totals[kind] += n
        return totals

    def longterm_maxima(self) -> dict[str, int]:
        """Longest length per long-term kind, in control points."""
        return {kind: self.longest[kind].length_cps for kind in LONGTERM_KINDS}


def run(events, config: RunConfig, ingest_s: float = 0.0) -> RunResult:
    """The whole pipeline over an already sorted event stream."""
    timings = StageTimings(ingest_s=ingest_s)
    analysis = RaceAnalysis(config)

    t0 = _time.perf_counter()
    analysis.ingest(events)
    analysis.finalize()
    t1 = _time.perf_counter()
    pattern_sets = analysis.pattern_sets()
    t2 = _time.perf_counter()
    graph = analysis.global_graph()
    labels = compute_labels(graph)
    longest = longest_all(graph, labels)
    t3 = _time.perf_counter()

    timings.grouping_s = t1 - t0
    timings.patterns_s = t2 - t1
    timings.longterm_s = t3 - t2
    timings.events = analysis.engine.events_accepted
    return RunResult(
        analysis=analysis,
        pattern_sets=pattern_sets,
        labels=labels,
        longest=longest,
        stats=analysis.group_stats(),
        timings=timings,
    )


@dataclass(frozen=True)
class SweepRow:
    epsilon: int
    component_counts: tuple[tuple[int, int], ...]  # (cp, components)
    pattern_totals: tuple[tuple[str, int], ...]  # kind -> records, KINDS order
    longterm_maxima: tuple[tuple[str, int], ...]  # kind -> cps


def epsilon_sweep(events, config: RunConfig, epsilons) -> list[SweepRow]:
    """Re-run the pipeline per epsilon over the shared sorted stream."""
    rows = []
    for epsilon in epsilons:
        params = Params(
            epsilon=epsilon, m=config.params.m, mu=config.params.mu
        )
        result = run(events, RunConfig(params=params, mode=config.mode))
        components = tuple(
            (stat.cp, stat.n_components) for stat in result.stats
        )
        totals = result.pattern_totals()
        rows.append(
            SweepRow(
                epsilon=epsilon,
                component_counts=components,
                pattern_totals=tuple((kind, totals[kind]) for kind in KINDS),
                longterm_maxima=tuple(
                    sorted(result.longterm_maxima().items())
                ),
            )
        )
    return rows
