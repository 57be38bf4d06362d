"""Talking to an OpenAI-compatible LLM service.

Generation goes through ``POST {endpoint}/chat/completions`` with a
``response_format`` JSON-schema constraint and temperature 0. Hidden states
come from a sidecar ``POST {endpoint}/hidden_states`` that answers::

    {"tokens": T, "dim": D, "dtype": "float32", "data": "<base64, row-major LE>"}

with one row per input token, the end-of-sequence position last.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import httpx
import numpy as np

from .activations import (ActivationError, ActivationMatrix, activation_cache_load,
                          activation_cache_store, activation_path)
from .prompts import Prompt, ResponseError, parse_feature_response

log = logging.getLogger(__name__)


class TransportError(RuntimeError):
    def __init__(self, message, attempts=1):
        super().__init__(message)
        self.attempts = attempts


class ProviderRefusal(RuntimeError):
    pass


class _Retryable(Exception):
    pass


@dataclass(frozen=True)
class QueryLimits:
    retries: int = 3
    timeout: float = 60.0
    backoff_base: float = 0.5
    backoff_max: float = 8.0
    concurrency: int = 8


class HTTPProvider:
    def __init__(self, endpoint: str, model: str = "default", api_key: str | None = None,
                 timeout: float = 60.0, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self.calls = 0

    @property
    def identity(self) -> str:
        return f"{self.endpoint}|{self.model}"

    def _post(self, path: str, payload: dict) -> dict:
        self.calls += 1
        try:
            resp = self._client.post(self.endpoint + path, json=payload)
        except httpx.HTTPError as exc:
            raise _Retryable(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise _Retryable(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderRefusal(f"HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def complete(self, prompt: str, schema: str) -> str:
        body = self._post("/chat/completions", {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": "feature_value", "schema": json.loads(schema),
                                "strict": True},
            },
        })
        choice = body["choices"][0]
        msg = choice.get("message", {})
        if msg.get("refusal") or choice.get("finish_reason") == "content_filter":
            raise ProviderRefusal(msg.get("refusal") or "content filtered")
        return msg.get("content") or ""

    def hidden_states(self, rendering) -> np.ndarray:
        body = self._post("/hidden_states", {"model": self.model, "input": rendering.text})
        t, d = int(body["tokens"]), int(body["dim"])
        raw = base64.b64decode(body["data"])
        if len(raw) != t * d * 4:
            raise ActivationError(f"sidecar sent {len(raw)} bytes for {t}x{d} float32")
        return np.frombuffer(raw, dtype="<f4").reshape(t, d)

    def close(self):
        self._client.close()


@dataclass(frozen=True)
class QueryResult:
    raw: str | None
    value: int | float | None
    latency: float  # milliseconds
    status: str  # value | null | parse_failure | transport_failure
    error: str | None = None
    attempts: int = 1


def _with_retries(fn, limits: QueryLimits, sleep=time.sleep):
    attempts = 0
    while True:
        attempts += 1
        try:
            return fn(), attempts
        except _Retryable as exc:
            if attempts > limits.retries:
                raise TransportError(f"{exc} after {attempts} attempts", attempts) from exc
            sleep(min(limits.backoff_max, limits.backoff_base * 2 ** (attempts - 1)))


def query_feature(provider, prompt: Prompt, schema: str, limits: QueryLimits = QueryLimits(),
                  sleep=time.sleep) -> QueryResult:
    """Send one prompt; every outcome is folded into a :class:`QueryResult`."""
    start = time.perf_counter()
    attempts = 0
    try:
        raw, attempts = _with_retries(lambda: provider.complete(prompt.text, schema),
                                      limits, sleep)
    except (TransportError, ProviderRefusal) as exc:
        ms = (time.perf_counter() - start) * 1000
        return QueryResult(None, None, ms, "transport_failure", str(exc),
                           getattr(exc, "attempts", 1))
    except Exception as exc:  # provider bugs must not abort a batch
        ms = (time.perf_counter() - start) * 1000
        return QueryResult(None, None, ms, "transport_failure", repr(exc), max(attempts, 1))
    ms = (time.perf_counter() - start) * 1000
    try:
        value = parse_feature_response(raw, prompt.feature)
    except ResponseError as exc:
        return QueryResult(raw, None, ms, "parse_failure", f"{exc.kind}: {exc}", attempts)
    return QueryResult(raw, value, ms, "null" if value is None else "value", None, attempts)


def query_key(provider_id: str, prompt_text: str, schema: str) -> str:
    h = hashlib.sha256()
    for part in (provider_id, prompt_text, schema):
        h.update(part.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


class QueryJournal:
    """Append-only JSON-lines log of completed queries, keyed by :func:`query_key`.

    Transport failures are not journaled, so a resumed run retries them.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, QueryResult] = {}
        self._torn = False
        if self.path.exists():
            text = self.path.read_text(encoding="utf-8")
            self._torn = bool(text) and not text.endswith("\n")
            for line in text.splitlines():
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    # torn final line from an interrupted run
                    continue
                key = rec.pop("key")
                self._entries[key] = QueryResult(**rec)

    def get(self, key: str) -> QueryResult | None:
        return self._entries.get(key)

    def append(self, key: str, result: QueryResult) -> None:
        if result.status == "transport_failure":
            return
        with self._lock:
            self._entries[key] = result
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                if self._torn:
                    fh.write("\n")
                    self._torn = False
                fh.write(json.dumps({"key": key, **asdict(result)}, sort_keys=True) + "\n")

    def __len__(self):
        return len(self._entries)


def query_batch(provider, prompts, schemas, limits: QueryLimits = QueryLimits(),
                journal: QueryJournal | None = None, sleep=time.sleep) -> list[QueryResult]:
    """Run many queries with at most ``limits.concurrency`` in flight.

    Results come back in input order. Journaled prompts are not re-sent.
    """
    pid = getattr(provider, "identity", type(provider).__name__)
    keys = [query_key(pid, p.text, s) for p, s in zip(prompts, schemas)]
    results: list[QueryResult | None] = [None] * len(prompts)
    todo = []
    for i, k in enumerate(keys):
        hit = journal.get(k) if journal is not None else None
        if hit is not None:
            results[i] = hit
        else:
            todo.append(i)

    def work(i):
        res = query_feature(provider, prompts[i], schemas[i], limits, sleep)
        if journal is not None:
            journal.append(keys[i], res)
        return i, res

    if todo:
        with ThreadPoolExecutor(max_workers=max(1, limits.concurrency)) as pool:
            for i, res in pool.map(work, todo):
                results[i] = res
    return results


def fetch_activations(provider, rendering, *, cache_dir=None, expected_dim: int | None = None,
                      limits: QueryLimits = QueryLimits(), sleep=time.sleep) -> ActivationMatrix:
    """Final-layer activations for ``rendering``, read through the on-disk cache.

    With ``provider=None`` only the offline cache is consulted.
    """
    path = None
    if cache_dir is not None:
        path = activation_path(cache_dir, rendering.problem, rendering.representation,
                               rendering.instance_name)
    if path is not None and path.exists():
        m = activation_cache_load(path)
    elif provider is None:
        raise ActivationError(f"missing offline activation file {path}")
    else:
        data, _ = _with_retries(lambda: provider.hidden_states(rendering), limits, sleep)
        m = ActivationMatrix(rendering.instance_name, rendering.representation, data)
        if path is not None:
            activation_cache_store(path, m)
    if expected_dim is not None and m.dim != expected_dim:
        raise ActivationError(
            f"{rendering.instance_name}: activation dim {m.dim} != configured {expected_dim}")
    return m


def provider_from_env(endpoint: str | None, model: str = "default",
                      api_key_env: str = "COPROBE_API_KEY", timeout: float = 60.0):
    endpoint = endpoint or os.environ.get("COPROBE_ENDPOINT")
    if not endpoint:
        raise ValueError("no endpoint configured (set provider.endpoint or COPROBE_ENDPOINT)")
    return HTTPProvider(endpoint, model, os.environ.get(api_key_env), timeout)
