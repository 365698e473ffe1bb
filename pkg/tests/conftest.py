"""Shared test helpers: race-shaped random streams and full wiring.

The hypothesis strategy here is deliberately structured, not uniform
noise.  A stable crossing order with bounded jitter, occasional gaps
above epsilon and per-cp absences yields streams whose groups actually
overlap across control points, so relation edges and patterns fire.
"""

from __future__ import annotations

from hypothesis import strategies as st

from racegroups.core import Event, Mu, Params
from racegroups.evolution import GraphStack
from racegroups.grouping import GroupingEngine
from racegroups.patterns import PatternTracker


@st.composite
def cohort_streams(draw):
    n_ath = draw(st.integers(8, 24))
    n_cp = draw(st.integers(2, 5))
    m = draw(st.integers(3, 5))
    events: list[Event] = []
    for cp in range(n_cp):
        jitter = draw(st.lists(st.integers(-3, 3), min_size=n_ath, max_size=n_ath))
        gaps = draw(st.lists(st.integers(0, 3500), min_size=n_ath, max_size=n_ath))
        present = draw(st.lists(st.booleans(), min_size=n_ath, max_size=n_ath))
        order = sorted(range(n_ath), key=lambda a: (2 * a + jitter[a], a))
        # control points 1_000_000 ms apart dominate any jitter, so each
        # athlete's own times stay strictly increasing
        t = cp * 1_000_000
        for slot, athlete in enumerate(order):
            t += gaps[slot]
            if present[athlete]:
                events.append(Event(athlete, cp, t))
    events.sort(key=lambda e: e.time)
    return events, Params(epsilon=2000, m=m, mu=Mu(7, 10))


def run_stream(events, params):
    """Engine + graph stack + online tracker, wired the way the
    pipeline wires them.  Returns the three after finalization."""
    engine = GroupingEngine(params)
    stack = GraphStack(params.mu, engine.raw_histories())
    tracker = PatternTracker()

    def dispatch(finished):
        if finished.group is not None:
            tracker.on_group(finished.group, stack.on_group(finished.group))
        else:
            stack.on_failed_component(finished.cp)

    engine.ingest_many(events, on_finish=dispatch)
    engine.finalize_all(on_finish=dispatch)
    return engine, stack, tracker


def complete_pairs(engine, stack):
    """The contiguous pair sequence of the observed race: one pair per
    consecutive control-point step, including steps with no groups on
    one or both sides.  The pair hanging off the last control point has
    no meaningful right side and is excluded."""
    cps = engine.known_cps()
    if not cps:
        return []
    return [stack.pair(cp) for cp in range(min(cps), max(cps))]


def pytest_terminal_summary(terminalreporter):
    """After an acceptance run, restate each criterion on its own
    PASS/FAIL line; the details are recorded by the tests themselves."""
    reports = []
    for key in ("passed", "failed", "error"):
        reports.extend(terminalreporter.stats.get(key, []))
    lines = []
    for rep in reports:
        if getattr(rep, "when", None) != "call":
            continue
        if "test_acceptance.py" not in rep.nodeid:
            continue
        name = rep.nodeid.split("::")[-1]
        if not name.startswith("test_criterion_"):
            continue
        parts = name.split("_")
        number = int(parts[2])
        label = " ".join(parts[3:])
        detail = dict(getattr(rep, "user_properties", ())).get("detail")
        verdict = "PASS" if rep.passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        lines.append((number, f"criterion {number} {label}: {verdict}{suffix}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
