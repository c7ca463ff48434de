"""Client for the OpenAlex scholarly-metadata service.

Two modes:

* offline (default for tests): every request is answered from a fixture
  snapshot directory; a cache miss is a hard error naming the request
  fingerprint, never a network call.
* live: HTTPS requests with rate limiting and bounded retries; every
  response is written into the cache so a later offline run replays it.

The cache is content-addressed: the key is a hash of (endpoint, params),
and entries round-trip byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Set

from .citations import content_word_overlap

__all__ = [
    "ExternalWork",
    "FixtureMiss",
    "FixtureCache",
    "OpenAlexClient",
    "match_work",
    "request_fingerprint",
]

API_BASE = "https://api.openalex.org"


@dataclass
class ExternalWork:
    """One bibliographic record as returned by the metadata service."""

    id: str
    title: str
    authors: List[str]
    year: Optional[int] = None
    venue: Optional[str] = None
    doi: Optional[str] = None
    cited_by_count: int = 0

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("work id must be non-empty")
        if self.cited_by_count < 0:
            raise ValueError("cited_by_count must be non-negative")

    @classmethod
    def from_json(cls, obj: dict) -> "ExternalWork":
        return cls(
            id=obj["id"],
            title=obj.get("title") or "",
            authors=list(obj.get("authors", [])),
            year=obj.get("year"),
            venue=obj.get("venue"),
            doi=obj.get("doi"),
            cited_by_count=int(obj.get("cited_by_count", 0)),
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "authors": self.authors,
            "year": self.year,
            "venue": self.venue,
            "doi": self.doi,
            "cited_by_count": self.cited_by_count,
        }


class FixtureMiss(LookupError):
    """Offline request with no recorded fixture; carries the fingerprint."""

    def __init__(self, fingerprint: str, endpoint: str, params: dict):
        super().__init__(
            f"no fixture for {endpoint} {params!r} (fingerprint {fingerprint})"
        )
        self.fingerprint = fingerprint
        self.endpoint = endpoint
        self.params = params


def request_fingerprint(endpoint: str, params: dict) -> str:
    canonical = json.dumps(
        {"endpoint": endpoint, "params": params}, sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class FixtureCache:
    """Content-addressed directory of recorded responses.

    Writes are atomic (temp file + rename) so parallel workers never observe
    a torn entry.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)

    def _path(self, fingerprint: str) -> Path:
        return self.directory / f"{fingerprint}.json"

    def get(self, fingerprint: str) -> Optional[dict]:
        path = self._path(fingerprint)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def put(self, fingerprint: str, endpoint: str, params: dict, body) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        entry = {
            "fingerprint": fingerprint,
            "request": {"endpoint": endpoint, "params": params},
            "body": body,
            "fetched_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        path = self._path(fingerprint)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(entry, sort_keys=True, indent=1))
        os.replace(tmp, path)


class _RateLimiter:
    def __init__(self, per_second: float):
        self.min_interval = 1.0 / per_second if per_second > 0 else 0.0
        self._last = 0.0

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        now = time.monotonic()
        delta = now - self._last
        if delta < self.min_interval:
            time.sleep(self.min_interval - delta)
        self._last = time.monotonic()


class OpenAlexClient:
    """Work search, topic result counts, and citation counts.

    Topic count queries phrase-quote the topic string; unquoted counts differ
    by orders of magnitude, so the quoting choice is part of the request
    fingerprint and is reported in output metadata.
    """

    def __init__(
        self,
        fixtures: Path,
        offline: bool = True,
        rate_limit: float = 5.0,
        max_attempts: int = 3,
        mailto: Optional[str] = None,
        timeout: float = 30.0,
    ):
        self.cache = FixtureCache(Path(fixtures))
        self.offline = offline
        self.mailto = mailto
        self.timeout = timeout
        self.max_attempts = max_attempts
        self._limiter = _RateLimiter(rate_limit)

    # -- request plumbing ---------------------------------------------------

    def _fetch(self, endpoint: str, params: dict):
        fp = request_fingerprint(endpoint, params)
        entry = self.cache.get(fp)
        if entry is not None:
            return entry["body"]
        if self.offline:
            raise FixtureMiss(fp, endpoint, params)
        body = self._fetch_live(endpoint, params)
        self.cache.put(fp, endpoint, params, body)
        return body

    def _fetch_live(self, endpoint: str, params: dict):
        import requests

        query = dict(self._live_query(endpoint, params))
        if self.mailto:
            query["mailto"] = self.mailto
        last_err: Optional[Exception] = None
        for attempt in range(self.max_attempts):
            self._limiter.wait()
            try:
                resp = requests.get(
                    f"{API_BASE}/works", params=query, timeout=self.timeout
                )
                if resp.status_code in (429, 500, 502, 503, 504):
                    raise IOError(f"transient HTTP {resp.status_code}")
                resp.raise_for_status()
                return self._parse_live(endpoint, resp.json())
            except (IOError, OSError) as err:
                last_err = err
                time.sleep(2.0 ** attempt)
        raise IOError(f"request failed after {self.max_attempts} attempts: {last_err}")

    @staticmethod
    def _live_query(endpoint: str, params: dict) -> dict:
        if endpoint == "works_count":
            phrase = params["search"]
            return {
                "filter": f'title_and_abstract.search:"{phrase}"',
                "per-page": 1,
            }
        if endpoint == "works_search":
            return {"search": params["title"], "per-page": 25}
        raise ValueError(f"unknown endpoint: {endpoint}")

    @staticmethod
    def _parse_live(endpoint: str, payload: dict):
        if endpoint == "works_count":
            return {"count": int(payload["meta"]["count"])}
        works = []
        for item in payload.get("results", []):
            year = item.get("publication_year")
            venue = None
            loc = item.get("primary_location") or {}
            src = loc.get("source") or {}
            venue = src.get("display_name")
            authors = [
                (a.get("author") or {}).get("display_name") or ""
                for a in item.get("authorships", [])
            ]
            works.append(
                {
                    "id": item.get("id", ""),
                    "title": item.get("title") or "",
                    "authors": [a for a in authors if a],
                    "year": year,
                    "venue": venue,
                    "doi": item.get("doi"),
                    "cited_by_count": int(item.get("cited_by_count", 0)),
                }
            )
        return {"results": works}

    # -- public operations --------------------------------------------------

    def topic_works_count(self, phrase: str) -> int:
        """Total result count for the phrase-quoted title-and-abstract search."""
        if not phrase or not phrase.strip():
            raise ValueError("topic phrase must be non-empty")
        body = self._fetch("works_count", {"search": phrase, "quoted": True})
        return int(body["count"])

    def search_candidates(self, title: str, max_n: int = 25) -> List[ExternalWork]:
        """Service-ranked candidate works for a claimed title."""
        if not title or not title.strip():
            raise ValueError("title must be non-empty")
        if max_n <= 0:
            return []
        body = self._fetch("works_search", {"title": title})
        return [ExternalWork.from_json(w) for w in body["results"][:max_n]]

    @staticmethod
    def citation_count(work: ExternalWork) -> int:
        """The snapshot's cited_by_count; deterministic within a fixture set."""
        return work.cited_by_count


def match_work(
    claimed_title: str,
    candidates: Sequence[ExternalWork],
    stopwords: Set[str],
    threshold: float = 0.5,
) -> Optional[ExternalWork]:
    """Accept the top-ranked candidate iff its title's content-word overlap
    with the claimed title meets the threshold; lower-ranked candidates are
    never eligible."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    if not candidates:
        return None
    top = candidates[0]
    if content_word_overlap(claimed_title, top.title, stopwords) >= threshold:
        return top
    return None
