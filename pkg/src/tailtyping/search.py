"""Cached, rate-limited search-API hit counts with temporal snapshots.

Queries are issued as exact-phrase (quoted) searches capped at a snapshot
date; the API's reported total is stored verbatim (it is an estimate, but
rank-based binning is scale-invariant). Every fetched count is written
through a persistent cache keyed by (entity, snapshot), so re-runs never
repeat a network call. Batch fetches survive quota exhaustion by returning a
resumable checkpoint of the entities still to do.

Credentials are read from the environment (``SEARCH_API_KEY`` and
``SEARCH_ENGINE_ID``), never from flags.
"""

from __future__ import annotations

import datetime as _dt
import os
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .dataset import FrequencyRecord, normalize_surface
from .errors import QuotaError, TransportError
from .rankstats import BinAssignment

API_KEY_ENV = "SEARCH_API_KEY"
ENGINE_ID_ENV = "SEARCH_ENGINE_ID"

# transport signature: (quoted phrase, snapshot cap) -> hit count
Transport = Callable[[str, str], int]


@dataclass
class SearchConfig:
    source: str = "search-api"
    min_interval_s: float = 1.0
    max_attempts: int = 4
    backoff_base_s: float = 0.5


class HitCache:
    """Persistent (entity, snapshot) -> hits map backed by sqlite.

    Readers can run concurrently; writes are serialized by a lock plus
    sqlite's own journal. A stored value is returned exactly as inserted and
    never for a different snapshot.
    """

    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS hits ("
                " entity TEXT NOT NULL,"
                " snapshot TEXT NOT NULL,"
                " hits INTEGER NOT NULL,"
                " source TEXT NOT NULL,"
                " inserted_at TEXT NOT NULL,"
                " PRIMARY KEY (entity, snapshot))"
            )
            self._conn.commit()

    def get(self, entity: str, snapshot: str) -> tuple[int, str] | None:
        row = self._conn.execute(
            "SELECT hits, source FROM hits WHERE entity = ? AND snapshot = ?",
            (entity, snapshot),
        ).fetchone()
        return (row[0], row[1]) if row else None

    def put(self, entity: str, snapshot: str, hits: int, source: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO hits VALUES (?, ?, ?, ?, ?)",
                (entity, snapshot, hits, source,
                 _dt.datetime.now(_dt.timezone.utc).isoformat()),
            )
            self._conn.commit()

    def __len__(self) -> int:
        return self._conn.execute("SELECT COUNT(*) FROM hits").fetchone()[0]

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "HitCache":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass
class BatchFetchResult:
    """Outcome of a batch fetch; ``remaining`` is non-empty when the quota
    ran out and forms the resumable checkpoint."""

    records: list[FrequencyRecord]
    remaining: list[str] = field(default_factory=list)
    transport_calls: int = 0

    @property
    def quota_exhausted(self) -> bool:
        return bool(self.remaining)

    def write_checkpoint(self, path: str | Path) -> None:
        Path(path).write_text(
            "".join(e + "\n" for e in self.remaining), encoding="utf-8"
        )


def read_checkpoint(path: str | Path) -> list[str]:
    return [
        line for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def google_custom_search_transport() -> Transport:
    """Transport against the Google Custom Search JSON API.

    The hit count is the API's estimated total result count for the quoted
    phrase, date-restricted to the snapshot cap.
    """
    import requests

    api_key = os.environ.get(API_KEY_ENV)
    engine_id = os.environ.get(ENGINE_ID_ENV)
    if not api_key or not engine_id:
        raise TransportError(
            f"set {API_KEY_ENV} and {ENGINE_ID_ENV} in the environment"
        )

    def call(query: str, snapshot: str) -> int:
        cap = snapshot.replace("-", "")
        params = {
            "key": api_key,
            "cx": engine_id,
            "q": query,
            "sort": f"date:r:19000101:{cap}",
            "num": 1,
        }
        try:
            resp = requests.get(
                "https://www.googleapis.com/customsearch/v1",
                params=params, timeout=30,
            )
        except requests.RequestException as e:
            raise TransportError(str(e)) from e
        if resp.status_code == 429:
            raise QuotaError("search API quota exhausted")
        if resp.status_code == 403 and b"quota" in resp.content.lower():
            raise QuotaError("search API quota exhausted")
        if resp.status_code != 200:
            raise TransportError(f"search API returned HTTP {resp.status_code}")
        payload = resp.json()
        return int(payload["searchInformation"]["totalResults"])

    return call


class SearchClient:
    """Rate-limited, cache-backed hit fetcher.

    Requests are serialized through a minimum-interval rate limiter;
    transient transport failures retry with exponential backoff up to the
    configured attempt bound.
    """

    def __init__(
        self,
        cache: HitCache,
        transport: Transport | None = None,
        config: SearchConfig | None = None,
        *,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.cache = cache
        self.config = config or SearchConfig()
        self._transport = transport
        self._sleep = sleep
        self._clock = clock
        self._rate_lock = threading.Lock()
        self._last_request: float | None = None
        self.transport_calls = 0

    def _get_transport(self) -> Transport:
        if self._transport is None:
            self._transport = google_custom_search_transport()
        return self._transport

    def _wait_for_slot(self) -> None:
        with self._rate_lock:
            now = self._clock()
            if self._last_request is not None:
                due = self._last_request + self.config.min_interval_s
                if now < due:
                    self._sleep(due - now)
                    now = self._clock()
            self._last_request = now

    def fetch(self, entity: str, snapshot: str) -> FrequencyRecord:
        """Hit count for one entity at one snapshot cap, via cache."""
        surface = normalize_surface(entity)
        if not surface:
            raise ValueError("entity is empty after normalization")
        cached = self.cache.get(surface, snapshot)
        if cached is not None:
            hits, source = cached
            return FrequencyRecord(surface, source, snapshot, hits)

        transport = self._get_transport()
        query = f'"{surface}"'
        attempts = self.config.max_attempts
        for attempt in range(attempts):
            self._wait_for_slot()
            self.transport_calls += 1
            try:
                hits = transport(query, snapshot)
                break
            except QuotaError:
                raise
            except TransportError:
                if attempt == attempts - 1:
                    raise
                self._sleep(self.config.backoff_base_s * (2 ** attempt))
        if hits < 0:
            raise TransportError(f"transport returned negative hits: {hits}")
        self.cache.put(surface, snapshot, hits, self.config.source)
        return FrequencyRecord(surface, self.config.source, snapshot, hits)

    def fetch_many(
        self, entities: Sequence[str], snapshot: str
    ) -> BatchFetchResult:
        """Fetch a batch; on quota exhaustion the result carries the
        remaining entities as a checkpoint instead of raising."""
        result = BatchFetchResult(records=[])
        calls_before = self.transport_calls
        for i, entity in enumerate(entities):
            try:
                result.records.append(self.fetch(entity, snapshot))
            except QuotaError:
                result.remaining = [normalize_surface(e) for e in entities[i:]]
                break
        result.transport_calls = self.transport_calls - calls_before
        return result


def fetch_search_hits(
    entity: str,
    snapshot: str,
    cache: HitCache,
    transport: Transport | None = None,
    config: SearchConfig | None = None,
) -> FrequencyRecord:
    """One-shot convenience wrapper around :class:`SearchClient`."""
    return SearchClient(cache, transport, config).fetch(entity, snapshot)


@dataclass(frozen=True)
class SnapshotDrift:
    """Entities whose bin assignment differs between two snapshots."""

    changed: frozenset[str]
    moves: dict[str, tuple[int, int]]

    @property
    def count(self) -> int:
        return len(self.changed)


def compare_snapshots(
    records_a: Iterable[FrequencyRecord],
    records_b: Iterable[FrequencyRecord],
    bins_fn: Callable[[Sequence[FrequencyRecord]], BinAssignment],
) -> SnapshotDrift:
    """Bin both snapshots independently and report entities changing bins."""
    a = list(records_a)
    b = list(records_b)
    entities_a = {r.entity for r in a}
    entities_b = {r.entity for r in b}
    if entities_a != entities_b:
        diff = sorted(entities_a.symmetric_difference(entities_b))
        raise ValueError(
            f"snapshots cover different entities ({len(diff)} differ), "
            f"e.g. {diff[:5]}"
        )
    bins_a = bins_fn(a)
    bins_b = bins_fn(b)
    moves = {
        e: (bins_a.bins[e], bins_b.bins[e])
        for e in entities_a
        if bins_a.bins[e] != bins_b.bins[e]
    }
    return SnapshotDrift(changed=frozenset(moves), moves=moves)
