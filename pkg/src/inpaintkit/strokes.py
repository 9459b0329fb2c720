"""Stroke corpus built from Quick-Draw style NDJSON vector drawings.

Input is the "simplified" export: one JSON object per line with a
``drawing`` field holding ``[[x0..xn], [y0..yn]]`` pairs in a 256x256
integer coordinate box. The parsed strokes form a flat, indexable corpus
that the mask generator samples from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import MalformedRecord

COORD_MIN = 0
COORD_MAX = 255


@dataclass(frozen=True)
class Stroke:
    """One polyline; ``points`` is an (N, 2) int array of (x, y) pixels."""

    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Drawing:
    id: str
    strokes: list[Stroke]


@dataclass
class ParseReport:
    """Tally of what the parser saw; emitted as JSON on request."""

    records_read: int = 0
    records_skipped: int = 0
    coords_clamped: int = 0
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_skipped": self.records_skipped,
            "coords_clamped": self.coords_clamped,
            "errors": self.errors,
        }


class StrokeCorpus:
    """Flat, immutable, indexable pool of strokes in ingestion order."""

    def __init__(self, strokes: Sequence[Stroke], source_count: int):
        self._strokes = list(strokes)
        self.source_count = source_count

    def __len__(self) -> int:
        return len(self._strokes)

    def __getitem__(self, i: int) -> Stroke:
        return self._strokes[i]

    def __iter__(self) -> Iterator[Stroke]:
        return iter(self._strokes)


def _parse_record(obj: dict, line_no: int, report: ParseReport) -> Drawing:
    raw = obj.get("drawing")
    if not isinstance(raw, list) or not raw:
        raise ValueError("missing or empty 'drawing' field")
    strokes = []
    for si, entry in enumerate(raw):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ValueError(f"stroke {si} is not an [x-array, y-array] pair")
        xs, ys = entry
        if len(xs) != len(ys):
            raise ValueError(
                f"stroke {si} has mismatched array lengths {len(xs)} vs {len(ys)}")
        if len(xs) == 0:
            raise ValueError(f"stroke {si} is empty")
        pts = np.empty((len(xs), 2), dtype=np.int32)
        pts[:, 0] = np.asarray(xs, dtype=np.float64)
        pts[:, 1] = np.asarray(ys, dtype=np.float64)
        clipped = np.clip(pts, COORD_MIN, COORD_MAX)
        report.coords_clamped += int(np.count_nonzero(clipped != pts))
        strokes.append(Stroke(points=clipped))
    drawing_id = str(obj.get("key_id", f"line{line_no}"))
    return Drawing(id=drawing_id, strokes=strokes)


def parse_drawings(stream: Iterable, strict: bool = False,
                   report: ParseReport | None = None) -> tuple[list[Drawing], ParseReport]:
    """Parse NDJSON lines into drawings, in stream order.

    ``stream`` is any iterable of text or byte lines (an open file works).
    Malformed lines raise :class:`MalformedRecord` in strict mode, otherwise
    they are skipped and tallied in the returned report.
    """
    if report is None:
        report = ParseReport()
    drawings: list[Drawing] = []
    for line_no, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8", errors="replace")
        if not line.strip():
            continue
        report.records_read += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("record is not a JSON object")
            drawings.append(_parse_record(obj, line_no, report))
        except (ValueError, TypeError) as exc:
            if strict:
                raise MalformedRecord(line_no, str(exc)) from exc
            report.records_skipped += 1
            report.errors.append(f"line {line_no}: {exc}")
    return drawings, report


def build_corpus(drawings: Sequence[Drawing], min_points: int = 1) -> StrokeCorpus:
    """Flatten drawings into a corpus, keeping strokes with >= min_points points.

    Order is deterministic: drawing order, then stroke order within each
    drawing. An empty corpus is legal here; it only errors at sampling time.
    """
    if min_points < 1:
        raise ValueError(f"min_points must be >= 1, got {min_points}")
    kept = [s for d in drawings for s in d.strokes if len(s) >= min_points]
    return StrokeCorpus(kept, source_count=len(drawings))


def load_corpus(paths: Iterable, min_points: int = 1,
                strict: bool = False) -> tuple[StrokeCorpus, ParseReport]:
    """Parse one or more .ndjson files (in sorted file-name order) into a corpus."""
    report = ParseReport()
    drawings: list[Drawing] = []
    for path in sorted(Path(p) for p in paths):
        with open(path, "r", encoding="utf-8") as fh:
            batch, _ = parse_drawings(fh, strict=strict, report=report)
        drawings.extend(batch)
    return build_corpus(drawings, min_points=min_points), report
