"""Completion backends: one interface, an HTTP implementation, and
deterministic mocks with call accounting.

The HTTP contract is a minimal completion endpoint (POST {base}/v1/completions
with {"prompt", "max_tokens", "temperature"}; continuation at
choices[0].text) so any local or hosted inference server can be wired in.
"""

from __future__ import annotations

import hashlib
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from typing import Protocol

import requests

from .corpus import Dataset, Utterance
from .errors import BackendRefused, TransportError, UnrecognizedPrompt
from .schema import SchemaIndex
from . import prompting
from .prompting import NULL, serialize_slots

TOKEN_ENV_VAR = "NLU_BACKEND_TOKEN"


@dataclass
class CompletionRequest:
    prompt_text: str
    max_new_tokens: int
    temperature: float = 0.0  # greedy by default
    request_id: str = ""
    task: str = ""  # ledger key, set by the runner
    strategy: str = ""


@dataclass(frozen=True)
class Generation:
    text: str
    latency_ms: float
    backend_id: str


@dataclass
class LedgerCounts:
    requests: int = 0
    retries: int = 0
    failures: int = 0

    @property
    def successes(self) -> int:
        return self.requests - self.failures


class CallLedger:
    """Thread-safe request/retry/failure counters keyed by (task, strategy)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counts: dict[tuple[str, str], LedgerCounts] = {}

    def _get(self, task: str, strategy: str) -> LedgerCounts:
        return self._counts.setdefault((task, strategy), LedgerCounts())

    def record_request(self, task: str, strategy: str) -> None:
        with self._lock:
            self._get(task, strategy).requests += 1

    def record_retry(self, task: str, strategy: str) -> None:
        with self._lock:
            self._get(task, strategy).retries += 1

    def record_failure(self, task: str, strategy: str) -> None:
        with self._lock:
            self._get(task, strategy).failures += 1

    def counts(self, task: str, strategy: str) -> LedgerCounts:
        with self._lock:
            found = self._counts.get((task, strategy))
            return LedgerCounts(found.requests, found.retries, found.failures) if found else LedgerCounts()

    def snapshot(self) -> dict:
        with self._lock:
            return {
                f"{task}/{strategy}": {
                    "requests": c.requests,
                    "retries": c.retries,
                    "failures": c.failures,
                    "successes": c.successes,
                }
                for (task, strategy), c in sorted(self._counts.items())
            }


class RawBackend(Protocol):
    backend_id: str

    def generate(self, request: CompletionRequest) -> Generation: ...


def request_hash(prompt_text: str, backend_id: str, max_new_tokens: int, temperature: float) -> str:
    """Cache key: completions are reusable iff all four of these agree."""
    payload = f"{backend_id}\x00{max_new_tokens}\x00{temperature}\x00{prompt_text}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CompletionClient:
    """Retry/backoff wrapper around a raw backend, feeding the call ledger.

    Transport failures back off exponentially (250 ms, x2, +/-20% jitter) up
    to `retry_limit` before surfacing; refusals are never retried.
    """

    def __init__(
        self,
        raw: RawBackend,
        ledger: CallLedger | None = None,
        retry_limit: int = 3,
        base_delay: float = 0.25,
        backoff_factor: float = 2.0,
        jitter: float = 0.2,
        sleeper=time.sleep,
    ):
        self.raw = raw
        self.ledger = ledger if ledger is not None else CallLedger()
        self.retry_limit = retry_limit
        self.base_delay = base_delay
        self.backoff_factor = backoff_factor
        self.jitter = jitter
        self._sleep = sleeper

    @property
    def backend_id(self) -> str:
        return self.raw.backend_id

    def complete(self, request: CompletionRequest) -> Generation:
        if not request.prompt_text:
            raise ValueError("empty prompt")
        self.ledger.record_request(request.task, request.strategy)
        delay = self.base_delay
        attempt = 0
        while True:
            try:
                return self.raw.generate(request)
            except TransportError:
                if attempt >= self.retry_limit:
                    self.ledger.record_failure(request.task, request.strategy)
                    raise
                self.ledger.record_retry(request.task, request.strategy)
                self._sleep(delay * (1.0 + random.uniform(-self.jitter, self.jitter)))
                delay *= self.backoff_factor
                attempt += 1
            except (BackendRefused, UnrecognizedPrompt):
                self.ledger.record_failure(request.task, request.strategy)
                raise


class HttpBackend:
    """Client for the completion HTTP contract. Auth token, if any, comes from
    the NLU_BACKEND_TOKEN environment variable."""

    def __init__(self, base_url: str, backend_id: str | None = None, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.backend_id = backend_id or self.base_url
        self.timeout = timeout

    def generate(self, request: CompletionRequest) -> Generation:
        headers = {}
        token = os.environ.get(TOKEN_ENV_VAR)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        started = time.perf_counter()
        try:
            response = requests.post(
                f"{self.base_url}/v1/completions",
                json={
                    "prompt": request.prompt_text,
                    "max_tokens": request.max_new_tokens,
                    "temperature": request.temperature,
                },
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as e:
            raise TransportError(f"request failed: {e}") from e
        latency_ms = (time.perf_counter() - started) * 1000.0
        if 400 <= response.status_code < 500:
            raise BackendRefused(f"HTTP {response.status_code}: {response.text[:200]}")
        if response.status_code >= 500:
            raise TransportError(f"HTTP {response.status_code}")
        try:
            doc = response.json()
            text = doc["choices"][0]["text"]
        except (ValueError, LookupError, TypeError) as e:
            raise BackendRefused(f"malformed completion response: {e}") from e
        return Generation(text=text, latency_ms=latency_ms, backend_id=doc.get("model", self.backend_id))


class StaticBackend:
    """Answers every prompt with one fixed continuation."""

    def __init__(self, text: str = "", backend_id: str = "static"):
        self.text = text
        self.backend_id = backend_id

    def generate(self, request: CompletionRequest) -> Generation:
        return Generation(text=self.text, latency_ms=0.0, backend_id=self.backend_id)


class FlakyBackend:
    """Fails the first `fail_times` calls with TransportError, then delegates."""

    def __init__(self, inner: RawBackend, fail_times: int):
        self.inner = inner
        self.remaining = fail_times
        self.backend_id = inner.backend_id

    def generate(self, request: CompletionRequest) -> Generation:
        if self.remaining > 0:
            self.remaining -= 1
            raise TransportError("injected failure")
        return self.inner.generate(request)


def _pattern_regex(pattern: str, lazy: tuple[str, ...] = ()) -> re.Pattern:
    escaped = re.escape(pattern)
    for key in ("t", "d", "x"):
        token = re.escape("{" + key + "}")
        if token in escaped:
            escaped = escaped.replace(token, f"(?P<{key}>.+{'?' if key in lazy else ''})")
    return re.compile("(?s)^" + escaped + "$")


_IC_INPUT_REGEXES = {
    tid: _pattern_regex(tpl.input_pattern) for tid, tpl in prompting.IC_TEMPLATES.items()
}
_SF_INPUT_REGEX = _pattern_regex(prompting.SF_TEMPLATE.input_pattern)
_SF_MULTI_REGEX = _pattern_regex(prompting.SF_MULTI_TEMPLATE.input_pattern, lazy=("t",))

IC_CORRUPTIONS = ("wrong-label", "out-of-inventory")
SF_CORRUPTIONS = ("wrong-slot-type", "value-not-in-utterance")


class OracleBackend:
    """Scripted mock that recognizes harness-rendered prompts and answers with
    the gold annotation, optionally corrupted.

    Each request is corrupted independently with probability `corruption_rate`
    drawn from an RNG seeded by (seed, prompt text), so outcomes do not depend
    on request order or concurrency. With span_restricted=True inferred gold
    pairs are withheld, emulating an extractor limited to contiguous spans.
    """

    def __init__(
        self,
        gold: Dataset,
        schema: SchemaIndex,
        corruption_rate: float = 0.0,
        seed: int = 0,
        ic_corruption: str = "wrong-label",
        sf_corruption: str = "value-not-in-utterance",
        corrupt_tasks: tuple[str, ...] = ("IC", "SF"),
        span_restricted: bool = False,
        backend_id: str | None = None,
    ):
        if not 0.0 <= corruption_rate <= 1.0:
            raise ValueError("corruption_rate must be in [0, 1]")
        if ic_corruption not in IC_CORRUPTIONS:
            raise ValueError(f"unknown IC corruption class {ic_corruption!r}")
        if sf_corruption not in SF_CORRUPTIONS:
            raise ValueError(f"unknown SF corruption class {sf_corruption!r}")
        self.gold = gold
        self.schema = schema
        self.corruption_rate = corruption_rate
        self.seed = seed
        self.ic_corruption = ic_corruption
        self.sf_corruption = sf_corruption
        self.corrupt_tasks = tuple(corrupt_tasks)
        self.span_restricted = span_restricted
        self.backend_id = backend_id or f"oracle:{seed}:{corruption_rate}"
        self._by_text = {}
        for ex in gold.examples:
            self._by_text.setdefault(ex.text, ex)
        self._descriptions = tuple(d.description for d in schema.intents)

    # -- deterministic corruption ------------------------------------------

    def _rng(self, prompt_text: str) -> random.Random:
        digest = hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()
        return random.Random(f"{self.seed}:{digest}")

    def would_corrupt(self, prompt_text: str) -> bool:
        """Replayable corruption decision for a given prompt text."""
        return self._rng(prompt_text).random() < self.corruption_rate

    def _nonsense(self, rng: random.Random, *, avoid_containing: tuple[str, ...], avoid_in: str = "") -> str:
        hay = " ".join(avoid_in.lower().split())
        n = rng.randrange(10_000)
        while True:
            candidate = f"zyxquv blorp {n}"
            ok = all(d.lower() not in candidate for d in avoid_containing)
            if ok and (not hay or candidate not in hay):
                return candidate
            n += 1

    # -- prompt recognition ------------------------------------------------

    def generate(self, request: CompletionRequest) -> Generation:
        text = self._answer(request.prompt_text)
        # mocks always honor the generation budget (whitespace tokens)
        tokens = text.split(" ")
        if len(tokens) > request.max_new_tokens > 0:
            text = " ".join(tokens[: request.max_new_tokens])
        return Generation(text=text, latency_ms=0.0, backend_id=self.backend_id)

    def _lookup(self, utterance_text: str, prompt_text: str) -> Utterance:
        found = self._by_text.get(utterance_text)
        if found is None:
            raise UnrecognizedPrompt(f"no gold utterance for query in prompt: {prompt_text[:120]!r}")
        return found

    def _answer(self, prompt_text: str) -> str:
        query = prompt_text.rsplit("\n\n", 1)[-1]
        multi = _SF_MULTI_REGEX.match(query)
        if multi:
            return self._answer_sf_multi(prompt_text, multi)
        sf = _SF_INPUT_REGEX.match(query)
        if sf:
            return self._answer_sf(prompt_text, sf.group("x"))
        for regex in _IC_INPUT_REGEXES.values():
            ic = regex.match(query)
            if ic:
                return self._answer_ic(prompt_text, ic.group("x"))
        raise UnrecognizedPrompt(f"unrecognized prompt shape: {query[:120]!r}")

    def _answer_ic(self, prompt_text: str, utterance_text: str) -> str:
        utterance = self._lookup(utterance_text, prompt_text)
        answer = self.schema.description_of(utterance.gold_intent)
        rng = self._rng(prompt_text)
        if "IC" in self.corrupt_tasks and rng.random() < self.corruption_rate:
            if self.ic_corruption == "wrong-label":
                others = sorted(d for d in self._descriptions if d != answer)
                if others:
                    answer = rng.choice(others)
            else:  # out-of-inventory
                answer = self._nonsense(rng, avoid_containing=self._descriptions)
        return answer

    def _gold_pairs(self, utterance: Utterance) -> dict[str, str]:
        return {
            s.slot_type: s.value
            for s in utterance.gold_slots
            if not (self.span_restricted and s.inferred)
        }

    def _prompt_candidates(self, prompt_text: str, utterance: Utterance) -> list[str]:
        """Candidate slot types exposed in the prompt's instruction block."""
        instruction = prompt_text.split("\n\n", 1)[0]
        lines = instruction.split("\n")
        if prompting.SF_SLOTS_LEAD not in lines:
            # Labels hidden: answer over the full gold set.
            return sorted(self._gold_pairs(utterance))
        start = lines.index(prompting.SF_SLOTS_LEAD) + 1
        candidates = []
        for line in lines[start:]:
            if line == prompting.SF_INSTRUCTION_TAIL:
                break
            if line == prompting.SF_NO_SLOTS_LINE:
                continue
            candidates.append(line.split(":", 1)[0].strip())
        return candidates

    def _answer_sf(self, prompt_text: str, utterance_text: str) -> str:
        utterance = self._lookup(utterance_text, prompt_text)
        candidates = self._prompt_candidates(prompt_text, utterance)
        gold = self._gold_pairs(utterance)
        pairs: list[tuple[str, str | None]] = [(t, gold.get(t)) for t in candidates]
        rng = self._rng(prompt_text)
        if "SF" in self.corrupt_tasks and candidates and rng.random() < self.corruption_rate:
            if self.sf_corruption == "value-not-in-utterance":
                filled = [i for i, (_, v) in enumerate(pairs) if v is not None]
                index = rng.choice(filled) if filled else 0
                slot_type = pairs[index][0]
                closed = self.schema.slot(slot_type).closed_values if slot_type in {s.slot_type for s in self.schema.slots} else ()
                bad = self._nonsense(rng, avoid_containing=tuple(closed), avoid_in=utterance.text)
                pairs[index] = (slot_type, bad)
            else:  # wrong-slot-type
                known = {s.slot_type for s in self.schema.slots}
                n = rng.randrange(10_000)
                while f"bogus-slot-{n}" in known:
                    n += 1
                value = utterance.text.split()[0]
                pairs.append((f"bogus-slot-{n}", value))
        return serialize_slots(pairs)

    def _answer_sf_multi(self, prompt_text: str, match: re.Match) -> str:
        utterance = self._lookup(match.group("x"), prompt_text)
        slot_type = match.group("t")
        gold = self._gold_pairs(utterance)
        value = gold.get(slot_type)
        rng = self._rng(prompt_text)
        if "SF" in self.corrupt_tasks and rng.random() < self.corruption_rate:
            if self.sf_corruption == "value-not-in-utterance":
                closed = self.schema.slot(slot_type).closed_values if slot_type in {s.slot_type for s in self.schema.slots} else ()
                return self._nonsense(rng, avoid_containing=tuple(closed), avoid_in=utterance.text)
            return NULL  # wrong-slot-type has no per-slot analog; suppress instead
        return value if value is not None else NULL


def make_oracle_backend(
    gold: Dataset,
    schema: SchemaIndex,
    corruption_rate: float = 0.0,
    seed: int = 0,
    **kwargs,
) -> OracleBackend:
    """Gold-scripted mock backend; see OracleBackend for corruption knobs."""
    return OracleBackend(gold, schema, corruption_rate=corruption_rate, seed=seed, **kwargs)
