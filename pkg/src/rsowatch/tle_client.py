"""Windowed TLE retrieval from a space-track-style REST catalog.

Every successful page response is cached on disk, so a repeated fetch is
fully offline. The clock and sleep hooks exist so tests can drive the rate
limiter without waiting on wall time.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from datetime import datetime

import httpx

from .tle import IngestResult, parse_tle_text
from .windows import PeriodWindow

log = logging.getLogger(__name__)

_MAX_PAGES = 10_000


class CatalogClientError(Exception):
    """Base class for retrieval failures."""


class AuthError(CatalogClientError):
    """Credentials were rejected or are unavailable."""


class HttpError(CatalogClientError):
    """The endpoint kept failing after the configured retries."""


class MalformedPayloadError(CatalogClientError):
    """The endpoint answered with something that is not TLE text."""


@dataclass(frozen=True)
class ClientConfig:
    """Connection settings; the secret is named by environment variable, never inline."""

    base_url: str
    identity: str
    secret_env: str
    rate_limit_per_min: float = 30.0
    cache_dir: str = ".tle_cache"
    page_size: int = 1000
    max_retries: int = 3
    timeout_s: float = 30.0
    backoff_s: float = 1.0

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("base_url is required")
        if not self.secret_env:
            raise ValueError("secret_env must name an environment variable")
        if not self.rate_limit_per_min > 0:
            raise ValueError("rate_limit_per_min must be positive")
        if self.page_size <= 0 or self.max_retries < 1:
            raise ValueError("page_size must be positive and max_retries at least 1")


def load_client_config(path) -> ClientConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "secret" in data:
        raise ValueError(
            "client config must reference the secret via 'secret_env', never inline"
        )
    return ClientConfig(**data)


class CatalogClient:
    """Paged, rate-limited, cached retrieval of TLE windows."""

    def __init__(self, config: ClientConfig, transport=None, clock=time.monotonic, sleep=time.sleep):
        self.config = config
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._last_request: float | None = None
        secret = os.environ.get(config.secret_env)
        if secret is None:
            raise AuthError(f"environment variable {config.secret_env} is not set")
        self._http = httpx.Client(
            base_url=config.base_url,
            transport=transport,
            timeout=config.timeout_s,
            auth=(config.identity, secret),
        )

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "CatalogClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- internals ---------------------------------------------------------

    def _cache_path(self, key: str) -> str:
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()
        return os.path.join(self.config.cache_dir, f"{digest}.tle")

    def _respect_rate_limit(self) -> None:
        interval = 60.0 / self.config.rate_limit_per_min
        now = self._clock()
        if self._last_request is not None:
            wait = self._last_request + interval - now
            if wait > 0:
                self._sleep(wait)
        self._last_request = self._clock()

    def _request_page(self, params: dict) -> str:
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            if attempt > 0:
                self._sleep(self.config.backoff_s * attempt)
            self._respect_rate_limit()
            try:
                response = self._http.get("/tle", params=params)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"authentication rejected ({response.status_code})")
            if 500 <= response.status_code < 600:
                last_error = HttpError(f"server error {response.status_code}")
                continue
            if response.status_code != 200:
                raise HttpError(f"unexpected status {response.status_code}")
            return response.text
        raise HttpError(f"request failed after {self.config.max_retries} attempts: {last_error}")

    def _fetch_page(self, norad_ids, window: PeriodWindow, page: int) -> str:
        ids = ",".join(str(i) for i in norad_ids)
        key = f"{ids}|{window.start.isoformat()}|{window.end.isoformat()}|page={page}"
        path = self._cache_path(key)
        if os.path.exists(path):
            with open(path, "r", encoding="ascii") as fh:
                return fh.read()
        text = self._request_page(
            {
                "norad_ids": ids,
                "start": window.start.isoformat(),
                "end": window.end.isoformat(),
                "page": page,
                "page_size": self.config.page_size,
            }
        )
        os.makedirs(self.config.cache_dir, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.config.cache_dir, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            fh.write(text)
        os.replace(tmp, path)
        return text

    # -- public API --------------------------------------------------------

    def fetch_window(self, norad_ids, window: PeriodWindow) -> IngestResult:
        """Fetch all pages for the ids/window and parse them like a local file.

        Pagination ends at the first blank page. A non-blank page yielding no
        records at all is treated as a malformed payload.
        """
        norad_ids = sorted(set(int(i) for i in norad_ids))
        if not norad_ids:
            raise ValueError("fetch_window needs at least one catalog number")
        chunks: list[str] = []
        with self._lock:
            for page in range(1, _MAX_PAGES + 1):
                text = self._fetch_page(norad_ids, window, page)
                if not text.strip():
                    break
                page_result = parse_tle_text(text)
                if page_result.record_count == 0:
                    raise MalformedPayloadError(
                        f"page {page} contained no parsable TLE records"
                    )
                chunks.append(text)
            else:
                raise HttpError(f"pagination did not terminate within {_MAX_PAGES} pages")
        result = parse_tle_text("\n".join(chunks))
        log.info(
            "fetched %d record(s) across %d object(s) for window %s",
            result.record_count, result.object_count, window.name,
        )
        return result
