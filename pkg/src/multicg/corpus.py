"""Mention corpus and market data ingestion.

A corpus is a line-delimited stream of JSON objects with the fields ``id``,
``created_at`` (ISO-8601, UTC), ``text`` and ``retweeted``. Entities are
tagged by cashtags (``$AAPL``) and only symbols from an
:class:`EntityCatalog` are recognised.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal, Mapping, Sequence, TextIO

import numpy as np

from .exceptions import EmptyCorpusError, InputError

logger = logging.getLogger(__name__)

Kind = Literal["tweet", "retweet"]
KINDS: tuple[Kind, ...] = ("tweet", "retweet")

SYMBOL_RE = re.compile(r"^[A-Z]{1,6}$")
CASHTAG_RE = re.compile(r"(?<![A-Za-z0-9])\$([A-Z]{1,6})(?![A-Za-z0-9])")


@dataclass(frozen=True)
class Entity:
    symbol: str
    name: str = ""
    industry: str = ""


@dataclass(frozen=True)
class EntityCatalog:
    """Ordered set of entities; the order fixes matrix row/column indices."""

    entries: tuple[Entity, ...]

    def __post_init__(self):
        entries = tuple(
            e if isinstance(e, Entity) else Entity(*e) for e in self.entries
        )
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise InputError("entity catalog is empty")
        seen = set()
        for e in entries:
            if not SYMBOL_RE.match(e.symbol):
                raise InputError(f"invalid symbol {e.symbol!r}: expected 1-6 uppercase letters")
            if e.symbol in seen:
                raise InputError(f"duplicate symbol {e.symbol!r} in catalog")
            seen.add(e.symbol)

    @classmethod
    def from_symbols(cls, symbols: Iterable[str]) -> "EntityCatalog":
        return cls(tuple(Entity(s) for s in symbols))

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(e.symbol for e in self.entries)

    def index(self, symbol: str) -> int:
        return self.symbols.index(symbol)

    def __contains__(self, symbol) -> bool:
        return symbol in self.symbols

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Entity]:
        return iter(self.entries)


def load_catalog(source: str | os.PathLike | TextIO) -> EntityCatalog:
    """Read a ``symbol,name,industry`` table with a header row."""
    with _open_text(source) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "symbol" not in reader.fieldnames:
            raise InputError("catalog must have a header with a 'symbol' column")
        entries = [
            Entity(row["symbol"].strip(), (row.get("name") or "").strip(),
                   (row.get("industry") or "").strip())
            for row in reader
        ]
    return EntityCatalog(tuple(entries))


@dataclass(frozen=True)
class TimeWindow:
    """Inclusive range of calendar days."""

    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.length < 2:
            raise InputError(f"window {self.start}..{self.end} must span at least 2 days")

    @classmethod
    def parse(cls, start: str | dt.date, end: str | dt.date) -> "TimeWindow":
        def to_date(d):
            return d if isinstance(d, dt.date) else dt.date.fromisoformat(str(d))
        return cls(to_date(start), to_date(end))

    @property
    def length(self) -> int:
        return (self.end - self.start).days + 1

    def days(self) -> list[dt.date]:
        return [self.start + dt.timedelta(days=i) for i in range(self.length)]

    def __contains__(self, day) -> bool:
        return self.start <= day <= self.end

    def offset(self, day: dt.date) -> int:
        return (day - self.start).days


@dataclass(frozen=True)
class MentionRecord:
    doc_id: str
    timestamp: dt.datetime
    text: str
    is_retweet: bool
    mentions: frozenset[str]

    @property
    def day(self) -> dt.date:
        return self.timestamp.date()

    @property
    def kind(self) -> Kind:
        return "retweet" if self.is_retweet else "tweet"


@dataclass
class ParsedCorpus:
    """Records parsed from a corpus stream plus line accounting.

    ``rejected`` counts malformed lines, ``dropped`` counts well-formed
    lines that mention no catalog entity.
    """

    records: list[MentionRecord]
    rejected: int = 0
    dropped: int = 0
    errors: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]


def extract_mentions(text: str, catalog: EntityCatalog | Iterable[str]) -> frozenset[str]:
    """Return catalog symbols tagged as ``$SYMBOL`` in ``text``.

    The match is case-sensitive and must sit on a token boundary, so
    ``$aapl`` and ``$AAPLX`` do not count as ``AAPL``.
    """
    symbols = catalog.symbols if isinstance(catalog, EntityCatalog) else set(catalog)
    return frozenset(m for m in CASHTAG_RE.findall(text) if m in symbols)


def parse_timestamp(value: str) -> dt.datetime:
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    s = value.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    ts = dt.datetime.fromisoformat(s)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=dt.timezone.utc)
    return ts.astimezone(dt.timezone.utc)


def format_timestamp(ts: dt.datetime) -> str:
    return ts.astimezone(dt.timezone.utc).replace(tzinfo=None).isoformat() + "Z"


def parse_mention_corpus(stream: Iterable[str] | str | os.PathLike,
                         catalog: EntityCatalog) -> ParsedCorpus:
    """Parse a line-delimited JSON corpus into :class:`MentionRecord` objects.

    Malformed lines (bad JSON, missing fields, unparseable timestamps,
    non-boolean ``retweeted``, repeated ids) are skipped and counted.
    Raises :class:`EmptyCorpusError` when nothing usable remains.
    """
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, encoding="utf-8") as fh:
            return parse_mention_corpus(fh, catalog)

    records: list[MentionRecord] = []
    seen: set[str] = set()
    rejected = dropped = 0
    errors: list[str] = []
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("record is not an object")
            for key in ("id", "created_at", "text", "retweeted"):
                if key not in obj:
                    raise ValueError(f"missing field {key!r}")
            doc_id = obj["id"]
            if isinstance(doc_id, bool) or not isinstance(doc_id, (str, int)):
                raise ValueError("id must be a string")
            doc_id = str(doc_id)
            if not isinstance(obj["text"], str):
                raise ValueError("text must be a string")
            if not isinstance(obj["retweeted"], bool):
                raise ValueError("retweeted must be a boolean")
            ts = parse_timestamp(obj["created_at"])
            if doc_id in seen:
                raise ValueError(f"duplicate id {doc_id!r}")
        except ValueError as exc:  # JSONDecodeError is a ValueError
            rejected += 1
            errors.append(f"line {lineno}: {exc}")
            continue
        seen.add(doc_id)
        mentions = extract_mentions(obj["text"], catalog)
        if not mentions:
            dropped += 1
            continue
        records.append(MentionRecord(doc_id, ts, obj["text"], obj["retweeted"], mentions))

    if rejected:
        logger.warning("rejected %d malformed corpus line(s)", rejected)
    if not records:
        raise EmptyCorpusError(
            f"corpus yielded no records mentioning catalog entities "
            f"({rejected} rejected, {dropped} without mentions)")
    return ParsedCorpus(records, rejected=rejected, dropped=dropped, errors=errors)


def write_mention_corpus(records: Iterable[MentionRecord], stream: TextIO) -> None:
    """Write records in the canonical line-delimited format."""
    for r in records:
        obj = {"id": r.doc_id, "created_at": format_timestamp(r.timestamp),
               "text": r.text, "retweeted": r.is_retweet}
        stream.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


@dataclass(frozen=True)
class DailySeries:
    entity: str
    kind: Kind
    window: TimeWindow
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.window.length,):
            raise InputError(f"series for {self.entity} has length {values.size}, "
                             f"window needs {self.window.length}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class MentionSetTable:
    kind: Kind
    window: TimeWindow
    sets: Mapping[str, frozenset[str]]


def _check_kind(kind):
    if kind not in KINDS:
        raise InputError(f"kind must be one of {KINDS}, got {kind!r}")


def _matching(records, window, kind):
    want_retweet = kind == "retweet"
    for r in records:
        if r.is_retweet == want_retweet and r.day in window:
            yield r


def build_daily_series(records: Iterable[MentionRecord], catalog: EntityCatalog,
                       window: TimeWindow, kind: Kind) -> dict[str, DailySeries]:
    """Daily mention counts per entity; one series per catalog entity."""
    _check_kind(kind)
    counts = {s: np.zeros(window.length) for s in catalog.symbols}
    for r in _matching(records, window, kind):
        d = window.offset(r.day)
        for s in r.mentions:
            if s in counts:
                counts[s][d] += 1
    return {s: DailySeries(s, kind, window, v) for s, v in counts.items()}


def build_mention_sets(records: Iterable[MentionRecord], catalog: EntityCatalog,
                       window: TimeWindow, kind: Kind) -> MentionSetTable:
    """Document-id sets per entity for records of ``kind`` inside ``window``."""
    _check_kind(kind)
    sets: dict[str, set[str]] = {s: set() for s in catalog.symbols}
    for r in _matching(records, window, kind):
        for s in r.mentions:
            if s in sets:
                sets[s].add(r.doc_id)
    return MentionSetTable(kind, window, {s: frozenset(v) for s, v in sets.items()})


@dataclass(frozen=True)
class MarketSeries:
    entity: str
    dates: tuple[dt.date, ...]
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        close = np.array(self.close, dtype=float)
        volume = np.array(self.volume, dtype=float)
        if not (len(self.dates) == close.size == volume.size):
            raise InputError(f"{self.entity}: dates, close and volume lengths differ")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise InputError(f"{self.entity}: dates must be strictly increasing")
        close.setflags(write=False)
        volume.setflags(write=False)
        object.__setattr__(self, "close", close)
        object.__setattr__(self, "volume", volume)


def read_market_table(source: str | os.PathLike | TextIO, symbol: str) -> MarketSeries:
    """Read one ``date,close,volume`` table; rows are sorted by date."""
    rows = []
    with _open_text(source) as fh:
        reader = csv.DictReader(fh)
        missing = {"date", "close", "volume"} - set(reader.fieldnames or ())
        if missing:
            raise InputError(f"{symbol}: market table lacks column(s) {sorted(missing)}")
        for row in reader:
            try:
                day = dt.date.fromisoformat(row["date"].strip())
                close = float(row["close"])
                volume = float(row["volume"])
            except (ValueError, AttributeError) as exc:
                raise InputError(f"{symbol}: bad market row {row}: {exc}") from None
            if not np.isfinite(close) or close <= 0:
                raise InputError(f"{symbol}: non-positive close {close} on {day}")
            if not np.isfinite(volume) or volume < 0:
                raise InputError(f"{symbol}: negative volume {volume} on {day}")
            rows.append((day, close, volume))
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise InputError(f"{symbol}: duplicate date {a[0]}")
    if not rows:
        raise InputError(f"{symbol}: market table is empty")
    dates, close, volume = zip(*rows)
    return MarketSeries(symbol, tuple(dates), np.array(close), np.array(volume))


def load_market_series(source: str | os.PathLike | Mapping[str, str | os.PathLike | TextIO],
                       symbols: Sequence[str] | None = None) -> dict[str, MarketSeries]:
    """Load per-symbol market tables.

    ``source`` is either a directory holding ``<SYMBOL>.csv`` files (in which
    case ``symbols`` selects which to read) or a mapping symbol -> path/stream.
    """
    if isinstance(source, Mapping):
        items = dict(source)
        if symbols is not None:
            lacking = [s for s in symbols if s not in items]
            if lacking:
                raise InputError(f"no market data for symbol(s) {', '.join(lacking)}")
            items = {s: items[s] for s in symbols}
    else:
        if symbols is None:
            symbols = sorted(os.path.splitext(f)[0] for f in os.listdir(source)
                             if f.endswith(".csv"))
        items = {}
        for s in symbols:
            path = os.path.join(source, f"{s}.csv")
            if not os.path.exists(path):
                raise InputError(f"no market data for symbol {s} (expected {path})")
            items[s] = path
    return {s: read_market_table(src, s) for s, src in items.items()}


class _open_text:
    """Context manager accepting a path or an already-open text stream."""

    def __init__(self, source):
        self.source = source
        self.fh = None

    def __enter__(self):
        if isinstance(self.source, (str, os.PathLike)):
            self.fh = open(self.source, newline="", encoding="utf-8")
            return self.fh
        if isinstance(self.source, (io.TextIOBase,)) or hasattr(self.source, "read"):
            return self.source
        raise InputError(f"cannot read from {self.source!r}")

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()
        return False
