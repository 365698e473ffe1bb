"""File formats, the end-to-end pipeline, and the command line."""

from __future__ import annotations

import io as _io
from contextlib import redirect_stderr, redirect_stdout

import pytest

from racegroups.core import Event, Mu, Params
from racegroups.cli import main
from racegroups.grouping import ANOMALY_PACE, ANOMALY_SKIPPED
from racegroups.io import (
    MalformedInputError,
    format_clock,
    parse_clock,
    read_course,
    read_events,
    read_ground_truth,
    write_events,
    write_ground_truth,
)
from racegroups.longterm import KIND_SURVIVING, LONGTERM_KINDS
from racegroups.patterns import MERGES, SPLITS, SURVIVES
from racegroups.pipeline import (
    MODE_FINALIZED,
    MODE_ONLINE,
    RunConfig,
    epsilon_sweep,
    run,
)
from racegroups.synth import Behavior, GeneratorConfig, generate

PARAMS = Params(epsilon=2000, m=7, mu=Mu(7, 10))


def scripted_events(tmp_path=None):
    cfg = GeneratorConfig(
        n_athletes=100,
        n_cps=5,
        params=PARAMS,
        n_bands=2,
        seed=3,
        scripts=(
            (
                Behavior.constant(),
                Behavior.divide(2),
                Behavior.constant(),
                Behavior.divide((18, 7)),
                Behavior.constant(),
            ),
        ),
    )
    return generate(cfg)


class TestClock:
    def test_round_trip(self):
        for text in ("00:00:00", "01:02:03", "11:59:59"):
            assert format_clock(parse_clock(text)) == text
        assert parse_clock("01:00:00.250") == 3_600_250
        assert format_clock(3_600_250) == "01:00:00.250"

    def test_rejects_junk(self):
        for text in ("1:2", "xx:00:00", "00:61:00", "00:00:-3"):
            with pytest.raises(ValueError):
                parse_clock(text)


class TestLongFormat:
    def test_round_trip_sorted(self, tmp_path):
        events, _ = scripted_events()
        path = tmp_path / "race.csv"
        write_events(path, events)
        loaded, issues = read_events(str(path))
        assert issues == []
        assert loaded == events  # generator output is already canonical

    def test_malformed_rows_reported_with_lines(self, tmp_path):
        path = tmp_path / "race.csv"
        path.write_text(
            "athlete_id,control_point,time_ms\n"
            "1,0,1000\n"
            "2,zero,1000\n"
            "\n"
            "3,0\n"
            "4,-1,5\n"
            "5,0,2000\n"
        )
        events, issues = read_events(str(path))
        assert [e.athlete for e in events] == [1, 5]
        assert [i.line for i in issues] == [3, 5, 6]

    def test_fully_rejected_file_is_an_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("athlete_id,control_point,time_ms\na,b,c\n")
        with pytest.raises(MalformedInputError):
            read_events(str(path))
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(MalformedInputError):
            read_events(str(empty))


class TestWideFormat:
    def test_cells_become_events(self, tmp_path):
        path = tmp_path / "wide.csv"
        path.write_text(
            "athlete_id,split1,split2,split3\n"
            "7,01:00:00,02:00:00,03:00:00\n"
            "8,01:00:05,,03:00:05\n"
        )
        events, issues = read_events(str(path))
        assert issues == []
        assert len(events) == 5  # empty cell: absent, no event
        assert Event(8, 1, 0) not in events
        assert events == sorted(events, key=lambda e: (e.time, e.cp, e.athlete))

    def test_same_timestamp_sorts_by_athlete(self, tmp_path):
        path = tmp_path / "wide.csv"
        path.write_text(
            "athlete_id,a,b\n9,01:00:00,02:00:00\n4,01:00:00,02:00:00\n"
        )
        events, _ = read_events(str(path))
        assert [e.athlete for e in events] == [4, 9, 4, 9]

    def test_forced_format_overrides_sniffing(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("athlete_id,control_point,time_ms\n1,0,1000\n")
        events, _ = read_events(str(path), fmt="long")
        assert events == [Event(1, 0, 1000)]


class TestCourse:
    def test_read(self, tmp_path):
        path = tmp_path / "course.csv"
        path.write_text("index,meters\n0,5000\n1,10000\n2,21097\n")
        assert read_course(str(path)) == {0: 5000, 1: 10000, 2: 21097}

    def test_distances_must_increase(self, tmp_path):
        path = tmp_path / "course.csv"
        path.write_text("0,5000\n1,4000\n")
        with pytest.raises(ValueError):
            read_course(str(path))


class TestGroundTruthFile:
    def test_round_trip(self, tmp_path):
        _, truth = scripted_events()
        buf = _io.StringIO()
        write_ground_truth(buf, truth)
        buf.seek(0)
        loaded = read_ground_truth(buf)
        assert loaded.group_counts == truth.group_counts
        assert loaded.longterm_edges == truth.longterm_edges
        for key, counts in truth.pair_counts.items():
            assert loaded.pair_counts[key] == counts


class TestPipeline:
    def test_modes_agree(self):
        events, _ = scripted_events()
        fin = run(events, RunConfig(params=PARAMS, mode=MODE_FINALIZED))
        onl = run(events, RunConfig(params=PARAMS, mode=MODE_ONLINE))
        assert set(fin.pattern_sets) == set(onl.pattern_sets)
        for left_cp, fset in fin.pattern_sets.items():
            oset = onl.pattern_sets[left_cp]
            assert fset.records == oset.records
            assert fset.flags == oset.flags
            assert oset.finalized
        assert fin.labels == onl.labels
        assert fin.longest == onl.longest

    def test_counts_and_longest(self):
        events, truth = scripted_events()
        result = run(events, RunConfig(params=PARAMS))
        totals = result.pattern_totals()
        assert totals[SPLITS] == truth.total(SPLITS)
        assert totals[MERGES] == truth.total(MERGES)
        assert totals[SURVIVES] == truth.total(SURVIVES)
        maxima = result.longterm_maxima()
        want = truth.longterm_cps()
        for kind in LONGTERM_KINDS:
            assert maxima[kind] == want[kind]
        assert result.timings.events == len(events)

    def test_empty_events_empty_reports(self):
        result = run([], RunConfig(params=PARAMS))
        assert result.pattern_sets == {}
        assert result.stats == []
        assert result.longterm_maxima() == dict.fromkeys(LONGTERM_KINDS, 0)
        assert result.timings.throughput() >= 0.0

    def test_status_ranking_and_pace(self):
        # two athletes finish all three cps, one stops early
        events = []
        for athlete, times in (
            (1, (1000, 2000, 3000)),
            (2, (1100, 2100, 3100)),
            (3, (900, 1900)),
        ):
            events.extend(Event(athlete, cp, t) for cp, t in enumerate(times))
        events.sort(key=lambda e: (e.time, e.cp, e.athlete))
        course = {0: 1000, 1: 2000, 2: 3000}
        config = RunConfig(params=Params(2000, 2, Mu(7, 10)), course=course)
        result = run(events, config)
        s1 = result.analysis.athlete_status(1)
        s2 = result.analysis.athlete_status(2)
        s3 = result.analysis.athlete_status(3)
        assert (s1.position, s2.position, s3.position) == (1, 2, 3)
        assert s3.last_cp == 1
        # athlete 1: 1s per km throughout
        assert s1.average_pace == pytest.approx(1000 / 60000, rel=1e-9)
        assert s1.segment_pace == pytest.approx(1000 / 60000, rel=1e-9)
        with pytest.raises(KeyError):
            result.analysis.athlete_status(99)

    def test_status_pace_none_without_course(self):
        events, _ = scripted_events()
        result = run(events, RunConfig(params=PARAMS))
        status = result.analysis.athlete_status(0)
        assert status.segment_pace is None and status.average_pace is None
        assert len(status.history) == 5

    def test_pace_jump_anomaly(self):
        # steady 1000 ms/km for two segments, then a 3x slowdown
        events = [
            Event(1, 0, 1000),
            Event(1, 1, 2000),
            Event(1, 2, 3000),
            Event(1, 3, 6000),
        ]
        course = {0: 1000, 1: 2000, 2: 3000, 3: 4000}
        config = RunConfig(params=Params(2000, 2, Mu(7, 10)), course=course)
        result = run(events, config)
        pace = [r for r in result.analysis.anomalies() if r.kind == ANOMALY_PACE]
        assert [(r.athlete, r.cp) for r in pace] == [(1, 3)]
        # emitted once even when asked twice
        again = [r for r in result.analysis.anomalies() if r.kind == ANOMALY_PACE]
        assert [(r.athlete, r.cp) for r in again] == [(1, 3)]

    def test_skipped_cp_anomaly(self):
        events = [Event(1, 0, 1000), Event(2, 0, 1500), Event(1, 2, 9000)]
        result = run(events, RunConfig(params=Params(2000, 2, Mu(7, 10))))
        skipped = [
            r for r in result.analysis.anomalies() if r.kind == ANOMALY_SKIPPED
        ]
        assert [(r.athlete, r.cp) for r in skipped] == [(1, 1)]

    def test_epsilon_sweep_monotone_components(self):
        events, _ = scripted_events()
        rows = epsilon_sweep(
            events, RunConfig(params=PARAMS), [0, 1000, 2000, 60000]
        )
        assert [row.epsilon for row in rows] == [0, 1000, 2000, 60000]
        for narrow, wide in zip(rows, rows[1:]):
            narrow_counts = dict(narrow.component_counts)
            for cp, n in wide.component_counts:
                assert n <= narrow_counts.get(cp, n)
        # the scripted epsilon reproduces the scripted groups
        at_eps = dict(rows[2].pattern_totals)
        assert at_eps[SURVIVES] > 0


def run_cli(args):
    out, err = _io.StringIO(), _io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        rc = main(args)
    return rc, out.getvalue(), err.getvalue()


class TestCli:
    @pytest.fixture()
    def race_file(self, tmp_path):
        events, truth = scripted_events()
        path = tmp_path / "race.csv"
        write_events(path, events)
        return str(path), truth

    def test_records_are_deterministic(self, race_file):
        path, _ = race_file
        args = [
            "--input", path,
            "--report", "summary,patterns,longterm,status,anomalies",
            "--out", "records",
        ]
        rc_a, out_a, _ = run_cli(args)
        rc_b, out_b, _ = run_cli(args)
        assert rc_a == rc_b == 0
        assert out_a == out_b
        assert "timing" not in out_a  # wall clock stays out of records

    def test_modes_by_cli_agree(self, race_file):
        path, _ = race_file
        base = ["--input", path, "--report", "patterns,longterm", "--out", "records"]
        _, fin, _ = run_cli(base + ["--mode", "finalized"])
        _, onl, _ = run_cli(base + ["--mode", "online"])
        fin_lines = [l for l in fin.splitlines() if not l.startswith("meta")]
        onl_lines = [l for l in onl.splitlines() if not l.startswith("meta")]
        assert fin_lines == onl_lines

    def test_pattern_records_match_truth(self, race_file):
        path, truth = race_file
        rc, out, _ = run_cli(
            ["--input", path, "--report", "patterns", "--out", "records"]
        )
        assert rc == 0
        for (left, _right), counts in truth.pair_counts.items():
            for kind, n in counts.items():
                lines = [
                    l
                    for l in out.splitlines()
                    if l.startswith(f"pattern left={left} ") and f"kind={kind} " in l
                ]
                assert len(lines) == n

    def test_longterm_lines(self, race_file):
        path, truth = race_file
        rc, out, _ = run_cli(
            ["--input", path, "--report", "longterm", "--out", "records"]
        )
        want = truth.longterm_cps()[KIND_SURVIVING]
        line = next(
            l for l in out.splitlines() if l.startswith("longterm kind=surviving ")
        )
        assert f"cps={want} " in line

    def test_epsilon_sweep_flag(self, race_file):
        path, _ = race_file
        rc, out, _ = run_cli(
            [
                "--input", path,
                "--out", "records",
                "--report", "summary",
                "--epsilon-sweep", "0,2000",
            ]
        )
        assert rc == 0
        sweeps = [l for l in out.splitlines() if l.startswith("sweep epsilon=")]
        assert len(sweeps) == 2

    def test_generate_subcommand_round_trip(self, tmp_path):
        events_path = str(tmp_path / "gen.csv")
        truth_path = str(tmp_path / "truth.txt")
        course_path = str(tmp_path / "course.csv")
        rc, out, _ = run_cli(
            [
                "generate",
                "--athletes", "50",
                "--cps", "4",
                "--seed", "9",
                "--script", "constant,divide:2,constant,constant",
                "--events", events_path,
                "--truth", truth_path,
                "--course", course_path,
            ]
        )
        assert rc == 0 and "generated events=200" in out
        with open(truth_path) as fh:
            truth = read_ground_truth(fh)
        assert truth.total(SPLITS) == 2  # two packs
        assert read_course(course_path)[3] == 42195
        rc, out, _ = run_cli(
            ["--input", events_path, "--report", "patterns", "--out", "records"]
        )
        assert rc == 0
        splits = [l for l in out.splitlines() if "kind=splits" in l]
        assert len(splits) == 2

    def test_generate_marathon_has_no_truth(self, tmp_path):
        events_path = str(tmp_path / "field.csv")
        rc, _, err = run_cli(
            [
                "generate", "--marathon",
                "--athletes", "30", "--cps", "3",
                "--events", events_path,
                "--truth", str(tmp_path / "t.txt"),
            ]
        )
        assert rc == 1 and "ground truth" in err
        rc, out, _ = run_cli(
            [
                "generate", "--marathon",
                "--athletes", "30", "--cps", "3",
                "--events", events_path,
            ]
        )
        assert rc == 0
        events, _ = read_events(events_path)
        assert len(events) == 90

    def test_bad_input_exits_nonzero(self, tmp_path):
        missing = str(tmp_path / "nope.csv")
        rc, _, err = run_cli(["--input", missing])
        assert rc == 1 and "error:" in err

    def test_unknown_report_exits_nonzero(self, race_file):
        path, _ = race_file
        rc, _, err = run_cli(["--input", path, "--report", "gossip"])
        assert rc == 1 and "gossip" in err

    def test_infeasible_script_exits_nonzero(self, tmp_path):
        rc, _, err = run_cli(
            [
                "generate",
                "--athletes", "25",
                "--cps", "3",
                "--script", "constant,divide:4,constant",
                "--events", str(tmp_path / "x.csv"),
            ]
        )
        assert rc == 1 and "below the group threshold" in err

    def test_status_with_course(self, race_file, tmp_path):
        path, _ = race_file
        course_path = tmp_path / "course.csv"
        course_path.write_text(
            "index,meters\n" + "".join(f"{c},{(c + 1) * 8439}\n" for c in range(5))
        )
        rc, out, _ = run_cli(
            [
                "--input", path,
                "--report", "status",
                "--athlete", "0",
                "--course", str(course_path),
                "--out", "records",
            ]
        )
        assert rc == 0
        line = next(l for l in out.splitlines() if l.startswith("status "))
        assert "athlete=0 " in line and "segment_pace=-" not in line

    def test_closed_stdout_pipe_is_quiet(self, race_file):
        # racegroups ... | head must not spray BrokenPipeError noise;
        # pipefail makes head's early exit visible if the CLI fails
        import subprocess
        import sys

        path, _ = race_file
        proc = subprocess.run(
            [
                "bash", "-o", "pipefail", "-c",
                f"{sys.executable} -m racegroups.cli --input {path} "
                "--out records --report patterns | head -2",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr == ""
        assert len(proc.stdout.splitlines()) == 2
