"""Generation backend client: live chat-completion HTTP or deterministic mock.

The mock backend behaves like the remote model: it receives only the rendered
prompt text, reads the examples JSON and the requested sample count back out
of it, and answers with a dict-of-lists JSON string. Every response (mock or
live) passes through the same validation before rows are accepted.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .data import BINARY, CATEGORICAL, NUMERIC, Columns, Schema, n_rows, take
from .errors import (
    AuthError,
    BackendExhausted,
    ConfigError,
    MalformedResponse,
    RangeViolation,
    TooFewExamples,
    TransportError,
)
from .fixture import FixtureSpec, fold_into_bounds, sample_group_rows
from .prompt import PromptSpec, parse_examples_json, render, serialize_examples
from .seeds import derive_seed

DEFAULT_TEMPERATURE = 0.9
DEFAULT_BATCH_SIZE = 10
REQUEST_TIMEOUT = 30.0
BACKOFF_BASE = 1.0
BACKOFF_FACTOR = 2.0
BACKOFF_JITTER = 0.5

# Numeric values are accepted up to this fraction of the schema bound span
# beyond either bound; anything further is rejected as a range violation.
RANGE_MARGIN = 0.2


@dataclass(frozen=True)
class BackendConfig:
    """Where generated rows come from and how failures are bounded."""

    kind: str = "mock"
    base_url: str = ""
    model_name: str = "mock-generator"
    temperature: float = DEFAULT_TEMPERATURE
    max_retries_per_batch: int = 5
    max_inflight: int = 1
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = REQUEST_TIMEOUT
    # mock wiring: determinism seed, schema for value synthesis, optional
    # group-conditional fixture model enabling oracle mode
    seed: int = 0
    schema: Schema | None = None
    oracle: FixtureSpec | None = None

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if not (0.0 <= self.temperature <= 2.0):
            raise ConfigError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_retries_per_batch < 1:
            raise ConfigError("max_retries_per_batch must be >= 1")
        if self.max_inflight < 1:
            raise ConfigError("max_inflight must be >= 1")
        if self.kind == "http" and not self.base_url:
            raise ConfigError("http backend needs a base_url")


@dataclass(frozen=True)
class GenerationBatch:
    """Validated synthetic rows plus provenance for reproducibility."""

    rows: Columns
    backend_id: str
    temperature: float
    prompt_hash: str
    retries: tuple[int, ...]
    seed: int | None = None

    @property
    def n(self) -> int:
        return n_rows(self.rows)


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def request_batch(
    prompt: str, cfg: BackendConfig, batch_index: int = 0, attempt: int = 0
) -> str:
    """One backend call for one batch; returns the raw message content."""
    if cfg.kind == "mock":
        return _mock_complete(prompt, cfg, batch_index, attempt)
    return _http_complete(prompt, cfg)


def _http_complete(prompt: str, cfg: BackendConfig) -> str:
    key = os.environ.get(cfg.api_key_env, "")
    if not key:
        raise AuthError(f"environment variable {cfg.api_key_env!r} is unset or empty")
    import requests

    body = {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": prompt}],
        "response_format": {"type": "json_object"},
    }
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    try:
        resp = requests.post(
            url,
            json=body,
            headers={"Authorization": f"Bearer {key}"},
            timeout=cfg.timeout,
        )
    except requests.RequestException as exc:
        raise TransportError(f"request failed: {exc}") from exc
    if resp.status_code != 200:
        raise TransportError(
            f"backend returned HTTP {resp.status_code}", status=resp.status_code
        )
    try:
        return resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"unexpected response shape: {exc}") from exc


# -- mock backend --------------------------------------------------------------

_PROMPT_CACHE: dict[str, tuple[Columns, int, str | None]] = {}
_PROMPT_CACHE_LOCK = threading.Lock()


def _parse_prompt(text: str) -> tuple[Columns, int, str | None]:
    """Extract (examples, requested n, group label) from the rendered prompt."""
    digest = prompt_hash(text)
    with _PROMPT_CACHE_LOCK:
        if digest in _PROMPT_CACHE:
            return _PROMPT_CACHE[digest]
    sections = text.split("\n\n")
    if len(sections) != 4:
        raise ConfigError("mock backend expects a four-section prompt")
    _, context, examples_json, _ = sections
    match = re.search(r"generate\s+(\d+)\s+realistic", context)
    if not match:
        raise ConfigError("mock backend could not read the sample count from the prompt")
    n = int(match.group(1))
    label_match = re.search(r"specifically for (.+?) patients", context)
    label = label_match.group(1) if label_match else None
    examples = parse_examples_json(examples_json)
    with _PROMPT_CACHE_LOCK:
        _PROMPT_CACHE[digest] = (examples, n, label)
    return examples, n, label


def _mock_complete(prompt: str, cfg: BackendConfig, batch_index: int, attempt: int) -> str:
    if cfg.schema is None:
        raise ConfigError("mock backend needs cfg.schema")
    examples, n, label = _parse_prompt(prompt)
    seed = derive_seed(cfg.seed, prompt_hash(prompt), batch_index, attempt)
    noise_scale = 0.1 * cfg.temperature / DEFAULT_TEMPERATURE
    rows = mock_generate(
        examples,
        cfg.schema,
        group_label=label,
        n=n,
        rng_seed=seed,
        noise_scale=noise_scale,
        oracle=cfg.oracle,
    )
    return serialize_examples(rows, cfg.schema)


def mock_generate(
    examples: Columns,
    schema: Schema,
    group_label: str | None,
    n: int,
    rng_seed: int,
    noise_scale: float = 0.1,
    oracle: FixtureSpec | None = None,
) -> Columns:
    """Synthesize n rows offline.

    Default mode bootstrap-resamples the example rows: numeric features get
    seeded Gaussian jitter scaled to ``noise_scale`` of the per-feature example
    standard deviation (truncated at three scales, reflected back inside schema
    bounds), binary and categorical features are resampled from the examples'
    empirical distribution, and outcome values stay joined to their bootstrap
    source row. When a group label is given and a group-conditional fixture
    model is configured, rows are drawn from that group's true distribution
    instead.
    """
    if oracle is not None and group_label is not None and group_label in oracle.groups:
        return sample_group_rows(oracle, group_label, n, rng_seed)
    count = n_rows(examples)
    if count < 2:
        raise TooFewExamples(f"mock generation needs >= 2 examples, got {count}")
    rng = np.random.default_rng(rng_seed)
    src = rng.integers(0, count, size=n)
    columns: Columns = {}
    for f in schema.features:
        ex = examples[f.name]
        if f.kind == NUMERIC:
            base = np.asarray(ex, dtype=float)[src]
            sd = float(np.std(np.asarray(ex, dtype=float)))
            noise = np.clip(rng.standard_normal(n), -3.0, 3.0)
            values = base + noise * (noise_scale * sd)
            if f.bounds is not None:
                values = fold_into_bounds(values, *f.bounds)
            columns[f.name] = values
        else:
            resample = rng.integers(0, count, size=n)
            columns[f.name] = np.asarray(ex)[resample]
            if f.kind == BINARY:
                columns[f.name] = np.asarray(columns[f.name], dtype=float).astype(np.int64)
    for name in schema.outcomes:
        columns[name] = np.asarray(examples[name], dtype=float).astype(np.int64)[src]
    return columns


# -- response validation --------------------------------------------------------

def parse_batch(text: str, schema: Schema, n_expected: int) -> Columns:
    """Validate a dict-of-lists response; reject on the first offending cell."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"response is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedResponse("response is not a JSON object")
    expected = (*schema.feature_names, *schema.outcomes)
    for key in expected:
        if key not in obj:
            raise MalformedResponse(f"missing key {key!r}", key=key)
    for key in obj:
        if key not in expected:
            raise MalformedResponse(f"unexpected key {key!r}", key=key)
    for key in expected:
        values = obj[key]
        if not isinstance(values, list):
            raise MalformedResponse(f"key {key!r} does not map to an array", key=key)
        if len(values) != n_expected:
            raise MalformedResponse(
                f"key {key!r} has length {len(values)}, expected {n_expected}", key=key
            )

    columns: Columns = {}
    for f in schema.features:
        values = obj[f.name]
        if f.kind == NUMERIC:
            columns[f.name] = _check_numeric(values, f.name, f.bounds)
        elif f.kind == BINARY:
            columns[f.name] = _check_binary(values, f.name)
        else:
            for i, v in enumerate(values):
                if not isinstance(v, str) or v not in f.categories:
                    raise MalformedResponse(
                        f"key {f.name!r} index {i}: unknown category {v!r}",
                        key=f.name,
                        index=i,
                    )
            columns[f.name] = np.array(values, dtype=object)
    for name in schema.outcomes:
        columns[name] = _check_binary(obj[name], name)
    return columns


def _check_numeric(values: list, key: str, bounds: tuple[float, float] | None) -> np.ndarray:
    out = np.empty(len(values), dtype=float)
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise MalformedResponse(f"key {key!r} index {i}: not a number: {v!r}", key=key, index=i)
        out[i] = float(v)
    if bounds is not None:
        lo, hi = bounds
        span = hi - lo
        accept_lo, accept_hi = lo - RANGE_MARGIN * span, hi + RANGE_MARGIN * span
        bad = np.flatnonzero((out < accept_lo) | (out > accept_hi))
        if bad.size:
            i = int(bad[0])
            raise RangeViolation(
                f"key {key!r} index {i}: value {out[i]} outside "
                f"[{accept_lo}, {accept_hi}]",
                key=key,
                index=i,
            )
    return out


def _check_binary(values: list, key: str) -> np.ndarray:
    out = np.empty(len(values), dtype=np.int64)
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v not in (0, 1):
            raise MalformedResponse(
                f"key {key!r} index {i}: expected 0 or 1, got {v!r}", key=key, index=i
            )
        out[i] = int(v)
    return out


# -- batch accumulation ----------------------------------------------------------

class GenerationCache:
    """Thread-safe prompt-keyed cache; collisions are last-write-wins."""

    def __init__(self):
        self._entries: dict[tuple, GenerationBatch] = {}
        self._lock = threading.Lock()

    def get(self, key: tuple) -> GenerationBatch | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: tuple, batch: GenerationBatch) -> None:
        with self._lock:
            self._entries[key] = batch

    def __len__(self) -> int:
        return len(self._entries)


def _retryable(exc: Exception) -> bool:
    if isinstance(exc, TransportError):
        return exc.status is None or exc.status == 429 or exc.status >= 500
    return False


def _collect_batch(
    rendered: str,
    cfg: BackendConfig,
    schema: Schema,
    n_expected: int,
    batch_index: int,
    transport,
    sleeper,
) -> tuple[Columns, int]:
    """Fetch one batch, retrying malformed or transient-transport failures."""
    last: Exception | None = None
    for attempt in range(cfg.max_retries_per_batch):
        try:
            text = transport(rendered, cfg, batch_index, attempt)
            return parse_batch(text, schema, n_expected), attempt
        except (MalformedResponse, RangeViolation, TransportError) as exc:
            last = exc
            if attempt + 1 < cfg.max_retries_per_batch and _retryable(exc):
                delay = BACKOFF_BASE * BACKOFF_FACTOR**attempt
                sleeper(delay + random.uniform(0.0, BACKOFF_JITTER))
    raise BackendExhausted(batch_index, cfg.max_retries_per_batch, last)


def generate_to_target(
    prompt: PromptSpec,
    target_n: int,
    batch_size: int | None = None,
    cfg: BackendConfig = BackendConfig(),
    schema: Schema | None = None,
    cache: GenerationCache | None = None,
    transport=request_batch,
    sleeper=time.sleep,
) -> GenerationBatch:
    """Accumulate exactly ``target_n`` validated rows in fixed-size batches.

    Issues ceil(target_n / batch_size) requests; each batch is retried up to
    ``cfg.max_retries_per_batch`` consecutive attempts before the whole
    operation aborts. Overshoot from the final batch is truncated.
    """
    if target_n < 1:
        raise ConfigError("target_n must be >= 1")
    schema = schema if schema is not None else cfg.schema
    if schema is None:
        raise ConfigError("generate_to_target needs a schema (argument or cfg.schema)")
    if batch_size is None:
        batch_size = prompt.n_generate
    elif batch_size != prompt.n_generate:
        raise ConfigError(
            f"batch_size {batch_size} disagrees with the prompt's n_generate {prompt.n_generate}"
        )
    rendered = render(prompt)
    digest = prompt_hash(rendered)
    seed_key = cfg.seed if cfg.kind == "mock" else None
    key = (digest, cfg.kind, cfg.model_name, cfg.temperature, seed_key, target_n, batch_size)
    if cache is not None and (hit := cache.get(key)) is not None:
        return hit

    n_batches = -(-target_n // batch_size)
    if cfg.max_inflight > 1 and n_batches > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_inflight) as pool:
            futures = [
                pool.submit(
                    _collect_batch, rendered, cfg, schema, batch_size, b, transport, sleeper
                )
                for b in range(n_batches)
            ]
            results = [f.result() for f in futures]
    else:
        results = [
            _collect_batch(rendered, cfg, schema, batch_size, b, transport, sleeper)
            for b in range(n_batches)
        ]

    merged = {
        name: np.concatenate([rows[name] for rows, _ in results])
        for name in (*schema.feature_names, *schema.outcomes)
    }
    batch = GenerationBatch(
        rows=take(merged, np.arange(target_n)),
        backend_id=cfg.model_name if cfg.kind == "http" else "mock",
        temperature=cfg.temperature,
        prompt_hash=digest,
        retries=tuple(attempt for _, attempt in results),
        seed=cfg.seed if cfg.kind == "mock" else None,
    )
    if cache is not None:
        cache.put(key, batch)
    return batch
