import httpx
import pytest

from rsowatch.synthetic import ElementBaseline, ScenarioConfig, corpus_text, generate
from rsowatch.tle import parse_tle_text
from rsowatch.tle_client import (AuthError, CatalogClient, ClientConfig, HttpError,
                                 MalformedPayloadError, load_client_config)
from rsowatch.windows import PeriodWindow, utc

SECRET_ENV = "RSOWATCH_TEST_SECRET"
WINDOW = PeriodWindow("fetch", utc(2021, 1, 1), utc(2021, 2, 1))


def two_object_pages():
    """TLE text for two objects, split into one page per object."""
    sc = ScenarioConfig(
        object_count=2,
        observations_per_object=4,
        start_epoch=utc(2021, 1, 2),
        cadence_per_day=1.0,
        baselines={
            "mean_motion": ElementBaseline(15.1, 0.001),
            "eccentricity": ElementBaseline(0.0007, 2e-5),
            "inclination": ElementBaseline(51.64, 0.005),
            "raan": ElementBaseline(180.0, 0.02),
            "arg_perigee": ElementBaseline(90.0, 0.5),
            "mean_anomaly": ElementBaseline(200.0, 1.0),
        },
        seed=21,
    )
    lines = corpus_text(generate(sc)).splitlines(keepends=True)
    half = len(lines) // 2
    return "".join(lines[:half]), "".join(lines[half:])


class FakeTime:
    """Clock that only advances when something sleeps on it."""

    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def clock(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


def paged_handler(pages, calls):
    def handle(request):
        calls.append(request)
        page = int(request.url.params["page"])
        text = pages[page - 1] if page <= len(pages) else ""
        return httpx.Response(200, text=text)

    return handle


def make_config(tmp_path, **overrides):
    kwargs = dict(
        base_url="https://catalog.example",
        identity="observer",
        secret_env=SECRET_ENV,
        cache_dir=str(tmp_path / "cache"),
        rate_limit_per_min=600.0,
        backoff_s=0.5,
    )
    kwargs.update(overrides)
    return ClientConfig(**kwargs)


def make_client(tmp_path, handler, monkeypatch, fake=None, **overrides):
    monkeypatch.setenv(SECRET_ENV, "hunter2")
    fake = fake or FakeTime()
    return CatalogClient(
        make_config(tmp_path, **overrides),
        transport=httpx.MockTransport(handler),
        clock=fake.clock,
        sleep=fake.sleep,
    ), fake


class TestConfig:
    def test_inline_secret_refused(self, tmp_path):
        path = tmp_path / "client.json"
        path.write_text(
            '{"base_url": "https://x", "identity": "me", "secret": "oops"}',
            encoding="utf-8",
        )
        with pytest.raises(ValueError, match="never inline"):
            load_client_config(path)

    def test_load_happy_path(self, tmp_path):
        path = tmp_path / "client.json"
        path.write_text(
            '{"base_url": "https://x", "identity": "me", "secret_env": "S", '
            '"rate_limit_per_min": 10}',
            encoding="utf-8",
        )
        cfg = load_client_config(path)
        assert cfg.secret_env == "S"
        assert cfg.rate_limit_per_min == 10

    def test_validation(self):
        with pytest.raises(ValueError, match="base_url"):
            ClientConfig(base_url="", identity="me", secret_env="S")
        with pytest.raises(ValueError, match="secret_env"):
            ClientConfig(base_url="https://x", identity="me", secret_env="")
        with pytest.raises(ValueError, match="rate_limit"):
            ClientConfig(base_url="https://x", identity="me", secret_env="S",
                         rate_limit_per_min=0)

    def test_missing_secret_is_auth_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv(SECRET_ENV, raising=False)
        with pytest.raises(AuthError, match=SECRET_ENV):
            CatalogClient(make_config(tmp_path))


class TestFetch:
    def test_matches_file_ingest(self, tmp_path, monkeypatch):
        page1, page2 = two_object_pages()
        calls = []
        client, _ = make_client(tmp_path, paged_handler([page1, page2], calls), monkeypatch)
        with client:
            result = client.fetch_window([90002, 90001], WINDOW)

        expected = parse_tle_text(page1 + page2)
        assert sorted(result.series) == sorted(expected.series) == [90001, 90002]
        assert result.record_count == expected.record_count == 8
        assert result.rejected == [] and result.checksum_warnings == 0
        for nid in result.series:
            assert result.series[nid].epochs() == expected.series[nid].epochs()

        # the query itself is windowed and id-scoped
        params = calls[0].url.params
        assert params["norad_ids"] == "90001,90002"
        assert params["start"] == WINDOW.start.isoformat()
        assert params["end"] == WINDOW.end.isoformat()

    def test_no_ids_rejected(self, tmp_path, monkeypatch):
        client, _ = make_client(tmp_path, paged_handler([], []), monkeypatch)
        with client, pytest.raises(ValueError, match="at least one"):
            client.fetch_window([], WINDOW)

    def test_rate_limit_spaces_requests(self, tmp_path, monkeypatch):
        page1, page2 = two_object_pages()
        calls = []
        client, fake = make_client(
            tmp_path, paged_handler([page1, page2], calls), monkeypatch,
            rate_limit_per_min=2.0,
        )
        with client:
            client.fetch_window([90001, 90002], WINDOW)
        # three requests (two pages plus the terminating blank page) at two
        # per minute force two 30 second waits
        assert len(calls) == 3
        assert sum(fake.sleeps) >= 60.0
        assert fake.now >= 60.0

    def test_server_errors_retry_then_fail(self, tmp_path, monkeypatch):
        calls = []

        def always_500(request):
            calls.append(request)
            return httpx.Response(503)

        client, fake = make_client(tmp_path, always_500, monkeypatch, max_retries=3)
        with client, pytest.raises(HttpError, match="after 3 attempts"):
            client.fetch_window([90001], WINDOW)
        assert len(calls) == 3
        # exponential-ish backoff: 0.5 * attempt between tries
        assert [s for s in fake.sleeps if s in (0.5, 1.0)] == [0.5, 1.0]

    def test_transient_error_recovers(self, tmp_path, monkeypatch):
        page1, page2 = two_object_pages()
        statuses = iter([500])
        calls = []

        def flaky(request):
            calls.append(request)
            try:
                return httpx.Response(next(statuses))
            except StopIteration:
                pass
            return paged_handler([page1 + page2], [])(request)

        client, _ = make_client(tmp_path, flaky, monkeypatch)
        with client:
            result = client.fetch_window([90001, 90002], WINDOW)
        assert result.record_count == 8

    def test_auth_rejection_not_retried(self, tmp_path, monkeypatch):
        for status in (401, 403):
            calls = []

            def deny(request):
                calls.append(request)
                return httpx.Response(status)

            client, _ = make_client(tmp_path, deny, monkeypatch)
            with client, pytest.raises(AuthError, match=str(status)):
                client.fetch_window([90001], WINDOW)
            assert len(calls) == 1

    def test_cache_makes_refetch_offline(self, tmp_path, monkeypatch):
        page1, page2 = two_object_pages()
        calls = []
        handler = paged_handler([page1, page2], calls)

        client, _ = make_client(tmp_path, handler, monkeypatch)
        with client:
            first = client.fetch_window([90001, 90002], WINDOW)
        assert len(calls) == 3

        # a brand new client over the same cache dir never touches the wire
        client2, _ = make_client(tmp_path, handler, monkeypatch)
        with client2:
            second = client2.fetch_window([90001, 90002], WINDOW)
        assert len(calls) == 3
        assert second.record_count == first.record_count
        assert sorted(second.series) == sorted(first.series)

    def test_different_window_misses_cache(self, tmp_path, monkeypatch):
        page1, page2 = two_object_pages()
        calls = []
        handler = paged_handler([page1, page2], calls)
        client, _ = make_client(tmp_path, handler, monkeypatch)
        with client:
            client.fetch_window([90001, 90002], WINDOW)
            client.fetch_window([90001, 90002],
                                PeriodWindow("other", utc(2021, 2, 1), utc(2021, 3, 1)))
        assert len(calls) == 6

    def test_garbage_page_is_malformed(self, tmp_path, monkeypatch):
        def garbage(request):
            return httpx.Response(200, text="this is not orbital data\n")

        client, _ = make_client(tmp_path, garbage, monkeypatch)
        with client, pytest.raises(MalformedPayloadError, match="page 1"):
            client.fetch_window([90001], WINDOW)

    def test_unexpected_status_is_http_error(self, tmp_path, monkeypatch):
        client, _ = make_client(tmp_path, lambda r: httpx.Response(418), monkeypatch)
        with client, pytest.raises(HttpError, match="418"):
            client.fetch_window([90001], WINDOW)
