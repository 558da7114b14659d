"""Time-tagged event-file pipeline.

Real two-station experiments record each side as a stream of (timestamp,
active setting, fired channel) rows and rebuild coincidences offline by
pairing records whose timestamps fall within a window. This module drives
the station model through that same path: generate per-side CSV streams
with exponential pair spacing, per-event setting choice and per-side
latency jitter, persist them, and re-derive per-setting count tables with a
greedy nearest-neighbor window matcher.

File format: text CSV, header ``t_ns,setting,channel``, one record per
line, LF line endings, rows sorted by t_ns ascending. Timestamps are
integer nanoseconds, setting is the index (0 or 1) of the analyzer angle
active for that event, channel is +1 or -1. Misses and doubles produce no
record (a record carries exactly one fired channel), which keeps
file-derived coincidences aligned with the in-memory both-single rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import CountTable
from .optics import (
    MINUS_CODE,
    PLUS_CODE,
    SourceModel,
    StationConfig,
    detect_many,
    emit_phis,
    malus_intensities,
)

EVENTS_CSV_HEADER = "t_ns,setting,channel"


class UnsortedEventsError(ValueError):
    """Event records were not sorted by timestamp."""


@dataclass(frozen=True)
class EventRecord:
    """One detection: integer-nanosecond timestamp, setting index, channel."""

    t_ns: int
    setting: int
    channel: int

    def __post_init__(self) -> None:
        if self.t_ns < 0:
            raise ValueError(f"t_ns must be nonnegative, got {self.t_ns!r}")
        if self.setting not in (0, 1):
            raise ValueError(f"setting must be 0 or 1, got {self.setting!r}")
        if self.channel not in (1, -1):
            raise ValueError(f"channel must be +1 or -1, got {self.channel!r}")


@dataclass(frozen=True)
class GeneratorConfig:
    """Source, stations, per-side setting menus, pair rate and time jitter.

    Each station's angle field is unused here; the active angle comes from
    that event's uniformly chosen setting index into settings_a/settings_b.
    jitter_sigma is the per-side detection latency scale in seconds; the
    latency itself is |Normal(0, jitter_sigma)| so it is never negative.
    """

    source: SourceModel
    station_a: StationConfig
    station_b: StationConfig
    settings_a: tuple[float, float]
    settings_b: tuple[float, float]
    mean_rate: float
    jitter_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.mean_rate <= 0.0:
            raise ValueError(f"mean_rate must be positive, got {self.mean_rate!r}")
        if self.jitter_sigma < 0.0:
            raise ValueError(f"jitter_sigma must be >= 0, got {self.jitter_sigma!r}")


@dataclass(frozen=True)
class GeneratedStreams:
    """Both record streams plus the ground-truth pairing.

    truth lists (row in events_a, row in events_b) for every emitted pair
    that produced a single on both sides, using row positions in the sorted
    streams.
    """

    events_a: tuple[EventRecord, ...]
    events_b: tuple[EventRecord, ...]
    truth: tuple[tuple[int, int], ...]
    n_pairs: int


def _emission_times(rate: float, duration: float, rng: np.random.Generator) -> np.ndarray:
    block = int(rate * duration * 1.25) + 64
    gaps = rng.exponential(1.0 / rate, block)
    while gaps.sum() <= duration:
        gaps = np.concatenate([gaps, rng.exponential(1.0 / rate, block)])
    times = np.cumsum(gaps)
    return times[times <= duration]


def _side_records(
    times: np.ndarray,
    jitter: np.ndarray,
    settings: np.ndarray,
    codes: np.ndarray,
) -> tuple[tuple[EventRecord, ...], dict[int, int]]:
    # Only singles produce records; sort by timestamp (stable, so equal
    # stamps keep emission order) and remember each pair's row.
    detected = np.flatnonzero((codes == PLUS_CODE) | (codes == MINUS_CODE))
    t_ns = np.rint((times[detected] + jitter[detected]) * 1e9).astype(np.int64)
    order = np.argsort(t_ns, kind="stable")
    records = []
    row_of_pair: dict[int, int] = {}
    for row, k in enumerate(order):
        pair_idx = int(detected[k])
        records.append(
            EventRecord(
                t_ns=int(t_ns[k]),
                setting=int(settings[pair_idx]),
                channel=int(codes[pair_idx]),
            )
        )
        row_of_pair[pair_idx] = row
    return tuple(records), row_of_pair


def generate_events(
    cfg: GeneratorConfig, duration: float, seed: int
) -> GeneratedStreams:
    """Simulate duration seconds of emissions and build both record streams.

    Pair emission times are exponentially spaced at mean_rate. Draw order on
    the single stream: emission gaps, A setting indices, B setting indices,
    pair polarizations, A detection draws, B detection draws, then (if
    jitter_sigma > 0) A and B latency jitter.
    """
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration!r}")
    rng = np.random.default_rng(seed)
    times = _emission_times(cfg.mean_rate, duration, rng)
    n = len(times)
    set_a = rng.integers(0, 2, n)
    set_b = rng.integers(0, 2, n)
    phis = emit_phis(cfg.source, n, rng)

    angles_a = np.asarray(cfg.settings_a, dtype=float)[set_a]
    ia_plus, ia_minus = malus_intensities(phis, angles_a)
    codes_a = detect_many(ia_plus, ia_minus, cfg.station_a, rng)
    angles_b = np.asarray(cfg.settings_b, dtype=float)[set_b]
    ib_plus, ib_minus = malus_intensities(phis + 0.5 * math.pi, angles_b)
    codes_b = detect_many(ib_plus, ib_minus, cfg.station_b, rng)

    if cfg.jitter_sigma > 0.0:
        jit_a = np.abs(rng.normal(0.0, cfg.jitter_sigma, n))
        jit_b = np.abs(rng.normal(0.0, cfg.jitter_sigma, n))
    else:
        jit_a = jit_b = np.zeros(n)

    events_a, rows_a = _side_records(times, jit_a, set_a, codes_a)
    events_b, rows_b = _side_records(times, jit_b, set_b, codes_b)
    truth = tuple(
        (rows_a[p], rows_b[p]) for p in sorted(rows_a.keys() & rows_b.keys())
    )
    return GeneratedStreams(events_a=events_a, events_b=events_b, truth=truth, n_pairs=n)


def write_events(path: Path | str, events: tuple[EventRecord, ...]) -> None:
    lines = [EVENTS_CSV_HEADER]
    lines.extend(f"{e.t_ns},{e.setting},{e.channel}" for e in events)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_events(path: Path | str) -> tuple[EventRecord, ...]:
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines or lines[0] != EVENTS_CSV_HEADER:
        raise ValueError(f"{path}: missing '{EVENTS_CSV_HEADER}' header")
    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            t_ns, setting, channel = (int(f) for f in line.split(","))
        except ValueError as exc:
            raise ValueError(f"{path}:{line_no}: bad record {line!r}") from exc
        records.append(EventRecord(t_ns=t_ns, setting=setting, channel=channel))
    return tuple(records)


def generate_streams(
    cfg: GeneratorConfig,
    duration: float,
    seed: int,
    path_a: Path | str,
    path_b: Path | str,
) -> GeneratedStreams:
    """generate_events plus persisting both streams to CSV files."""
    streams = generate_events(cfg, duration, seed)
    write_events(path_a, streams.events_a)
    write_events(path_b, streams.events_b)
    return streams


@dataclass(frozen=True)
class MatchResult:
    """Matched pairs and the per-setting-pair count tables.

    tables maps (setting_a, setting_b) to a CountTable whose cells count
    matched coincidences; singles_a/singles_b carry each side's total
    record count at that setting, and n_pairs stays 0 because the emission
    count is not observable from the files.
    """

    tables: dict[tuple[int, int], CountTable]
    pairs: tuple[tuple[int, int], ...]

    @property
    def n_matched(self) -> int:
        return len(self.pairs)


def _check_sorted(events: tuple[EventRecord, ...], name: str) -> None:
    for k in range(1, len(events)):
        if events[k].t_ns < events[k - 1].t_ns:
            raise UnsortedEventsError(f"{name} records not sorted at row {k}")


def match_coincidences(
    events_a: tuple[EventRecord, ...],
    events_b: tuple[EventRecord, ...],
    window_ns: int,
) -> MatchResult:
    """Greedy nearest-neighbor matching within +/- window_ns, one linear pass.

    Walking both streams in time order, each A record takes the nearest
    available B record inside the window (earlier record on an exact
    distance tie); matched records are consumed, and records that fall
    behind the moving window are dropped. Inputs must be sorted by t_ns.
    First-come greedy can hand a B record to an earlier A record when two
    emissions land within the window of each other, so recovery against a
    known pairing is exact only while the pair rate keeps emissions sparse
    at the window scale.
    """
    if window_ns < 0:
        raise ValueError(f"window_ns must be >= 0, got {window_ns!r}")
    _check_sorted(events_a, "events_a")
    _check_sorted(events_b, "events_b")
    t_a = np.array([e.t_ns for e in events_a], dtype=np.int64)
    t_b = np.array([e.t_ns for e in events_b], dtype=np.int64)
    matches: list[tuple[int, int]] = []
    i = j = 0
    while i < len(t_a) and j < len(t_b):
        dt = int(t_b[j]) - int(t_a[i])
        if dt < -window_ns:
            j += 1
            continue
        if dt > window_ns:
            i += 1
            continue
        while j + 1 < len(t_b) and abs(int(t_b[j + 1]) - int(t_a[i])) < abs(
            int(t_b[j]) - int(t_a[i])
        ):
            j += 1
        matches.append((i, j))
        i += 1
        j += 1

    singles_a = {s: sum(1 for e in events_a if e.setting == s) for s in (0, 1)}
    singles_b = {s: sum(1 for e in events_b if e.setting == s) for s in (0, 1)}
    cells = {
        (sa, sb): {(1, 1): 0, (1, -1): 0, (-1, 1): 0, (-1, -1): 0}
        for sa in (0, 1)
        for sb in (0, 1)
    }
    for ia, ib in matches:
        ra, rb = events_a[ia], events_b[ib]
        cells[(ra.setting, rb.setting)][(ra.channel, rb.channel)] += 1
    tables = {
        (sa, sb): CountTable(
            n_pp=c[(1, 1)],
            n_pm=c[(1, -1)],
            n_mp=c[(-1, 1)],
            n_mm=c[(-1, -1)],
            singles_a=singles_a[sa],
            singles_b=singles_b[sb],
        )
        for (sa, sb), c in cells.items()
    }
    return MatchResult(tables=tables, pairs=tuple(matches))


def match_files(path_a: Path | str, path_b: Path | str, window_ns: int) -> MatchResult:
    """match_coincidences over two persisted streams."""
    return match_coincidences(read_events(path_a), read_events(path_b), window_ns)
