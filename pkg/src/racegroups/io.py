"""Reading and writing race data.

Two input layouts are understood:

  long   canonical CSV, header ``athlete_id,control_point,time_ms``,
         one event per row
  wide   published-splits style: one row per athlete, the first
         column an athlete id, every further column one control
         point with a clock time HH:MM:SS (fractions allowed), an
         empty cell meaning the athlete never crossed there

The format is detected from the header when not forced.  Broken rows
never abort a read: they are collected as issues with their line
number, and only a file that yields no events at all is an error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .core import Event
from .longterm import LONGTERM_KINDS
from .patterns import KINDS
from .synth import GroundTruth

LONG_HEADER = ("athlete_id", "control_point", "time_ms")

FORMAT_LONG = "long"
FORMAT_WIDE = "wide"


class MalformedInputError(ValueError):
    """The file yielded no usable events."""


@dataclass(frozen=True)
class RowIssue:
    line: int
    reason: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.reason}"


def parse_clock(text: str) -> int:
    """HH:MM:SS or HH:MM:SS.fff (hours unbounded) to milliseconds."""
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ValueError(f"not a clock time: {text!r}")
    hours, minutes = int(parts[0]), int(parts[1])
    seconds = float(parts[2])
    if hours < 0 or not 0 <= minutes < 60 or not 0 <= seconds < 60:
        raise ValueError(f"not a clock time: {text!r}")
    return round((hours * 3600 + minutes * 60 + seconds) * 1000)


def format_clock(ms: int) -> str:
    seconds, rem = divmod(ms, 1000)
    hours, seconds = divmod(seconds, 3600)
    minutes, seconds = divmod(seconds, 60)
    out = f"{hours:02d}:{minutes:02d}:{seconds:02d}"
    return out + (f".{rem:03d}" if rem else "")


def _parse_athlete(cell: str) -> int:
    return int(cell.strip())


def sniff_format(header: Sequence[str]) -> str:
    cells = [c.strip().lower() for c in header]
    if tuple(cells) == LONG_HEADER:
        return FORMAT_LONG
    return FORMAT_WIDE


def read_events(
    path: str, fmt: str | None = None
) -> tuple[list[Event], list[RowIssue]]:
    """Events sorted by (time, cp, athlete), plus per-line issues.

    Raises MalformedInputError when nothing could be read.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedInputError(f"{path}: empty file")
        if fmt is None:
            fmt = sniff_format(header)
        if fmt == FORMAT_LONG:
            events, issues = _read_long(reader)
        elif fmt == FORMAT_WIDE:
            events, issues = _read_wide(reader, n_cps=len(header) - 1)
        else:
            raise ValueError(f"unknown input format {fmt!r}")
    if not events:
        detail = f"; first issue: {issues[0]}" if issues else ""
        raise MalformedInputError(f"{path}: no usable rows{detail}")
    events.sort(key=lambda e: (e.time, e.cp, e.athlete))
    return events, issues


def _read_long(reader) -> tuple[list[Event], list[RowIssue]]:
    events: list[Event] = []
    issues: list[RowIssue] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            if len(row) != 3:
                raise ValueError(f"expected 3 columns, got {len(row)}")
            athlete = _parse_athlete(row[0])
            cp = int(row[1].strip())
            time = int(row[2].strip())
            if cp < 0 or time < 0:
                raise ValueError("negative control point or time")
        except ValueError as exc:
            issues.append(RowIssue(lineno, str(exc)))
            continue
        events.append(Event(athlete, cp, time))
    return events, issues


def _read_wide(reader, n_cps: int) -> tuple[list[Event], list[RowIssue]]:
    events: list[Event] = []
    issues: list[RowIssue] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            athlete = _parse_athlete(row[0])
        except ValueError:
            issues.append(RowIssue(lineno, f"bad athlete id {row[0]!r}"))
            continue
        if len(row) - 1 > n_cps:
            issues.append(
                RowIssue(lineno, f"{len(row) - 1} split cells, header has {n_cps}")
            )
            continue
        for cp, cell in enumerate(row[1:]):
            if not cell.strip():
                continue  # absent at this control point
            try:
                time = parse_clock(cell)
            except ValueError as exc:
                issues.append(RowIssue(lineno, f"cp {cp}: {exc}"))
                continue
            events.append(Event(athlete, cp, time))
    return events, issues


def write_events(path: str, events: Iterable[Event]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LONG_HEADER)
        for e in events:
            writer.writerow((e.athlete, e.cp, e.time))


# -- course metadata ----------------------------------------------------


def read_course(path: str) -> dict[int, int]:
    """Control point distances: one `index,meters` line each.

    A header line is tolerated.  Distances must be strictly increasing
    with the index.
    """
    course: dict[int, int] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                cp, meters = int(row[0].strip()), int(row[1].strip())
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise ValueError(f"{path}: line {lineno}: expected `index,meters`")
            if cp in course:
                raise ValueError(f"{path}: duplicate control point {cp}")
            course[cp] = meters
    if not course:
        raise ValueError(f"{path}: no course points")
    ordered = sorted(course.items())
    for (_, a), (_, b) in zip(ordered, ordered[1:]):
        if b <= a:
            raise ValueError(f"{path}: distances must increase with the index")
    return course


def write_course(path: str, points: Iterable[tuple[int, int]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("index", "meters"))
        for cp, meters in points:
            writer.writerow((cp, meters))


# -- ground truth summaries ---------------------------------------------


def write_ground_truth(fh: TextIO, truth: GroundTruth) -> None:
    """Line-oriented summary, stable order, suitable for diffing."""
    for cp in sorted(truth.group_counts):
        fh.write(f"groups cp={cp} count={truth.group_counts[cp]}\n")
    for left, right in sorted(truth.pair_counts):
        counts = truth.pair_counts[(left, right)]
        for kind in KINDS:
            fh.write(
                f"pair left={left} right={right} kind={kind} "
                f"count={counts[kind]}\n"
            )
    cps = truth.longterm_cps()
    for kind in LONGTERM_KINDS:
        fh.write(
            f"longterm kind={kind} edges={truth.longterm_edges[kind]} "
            f"cps={cps[kind]}\n"
        )


def read_ground_truth(fh: TextIO) -> GroundTruth:
    pair_counts: dict[tuple[int, int], dict[str, int]] = {}
    longterm_edges: dict[str, int] = {}
    group_counts: dict[int, int] = {}
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        record, *pairs = line.split()
        fields = dict(p.split("=", 1) for p in pairs)
        if record == "groups":
            group_counts[int(fields["cp"])] = int(fields["count"])
        elif record == "pair":
            key = (int(fields["left"]), int(fields["right"]))
            pair_counts.setdefault(key, {})[fields["kind"]] = int(fields["count"])
        elif record == "longterm":
            longterm_edges[fields["kind"]] = int(fields["edges"])
        else:
            raise ValueError(f"line {lineno}: unknown record {record!r}")
    return GroundTruth(
        pair_counts=pair_counts,
        longterm_edges=longterm_edges,
        group_counts=group_counts,
    )
