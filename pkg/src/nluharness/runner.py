"""Run orchestration: IC, SF, and joint IC->SF evaluation with a resumable
completion cache, bounded parallelism, and ordered run logs.

A completion is cached under hash(prompt text, backend id, max tokens,
temperature); a completed prompt is never re-sent, so an interrupted run
resumed with the same seed reproduces report.json byte for byte.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .backend import (
    CallLedger,
    CompletionClient,
    CompletionRequest,
    Generation,
    HttpBackend,
    OracleBackend,
    request_hash,
)
from .corpus import Dataset, load_dataset
from .decode import SfPair, SfPrediction, parse_ic, parse_sf, parse_slot_value
from .errors import ConfigError, MissingIcArtifact
from .fewshot import FewShotSet, sample_ic_fewshot, sample_sf_fewshot, subsample_per_label
from .metrics import (
    EvalReport,
    aggregate_templates,
    eval_ic,
    eval_sf,
    score_sf_example,
)
from .prompting import (
    IC_TEMPLATES,
    Prompt,
    render_ic_prompt,
    render_sf_multiprompts,
    render_sf_prompt,
)
from .schema import UNMATCHED, derive_schema

TEMPERATURE = 0.0  # greedy decoding throughout


@dataclass
class RunConfig:
    task: str  # "IC" | "SF" | "JOINT"
    eval_path: str
    descriptions_path: str
    output_dir: str
    eval_format: str = "canonical-json"
    eval_split: str = "test"
    train_path: str | None = None
    train_format: str = "canonical-json"
    train_split: str = "train"
    templates: list[str] = field(default_factory=lambda: ["P1", "P2", "P3", "P4"])
    sf_strategy: str = "single"
    shot_mode: str = "zero"
    seed: int = 0
    cap: int = 10
    k_per_label: int = 10
    expose_labels: bool = True
    general_threshold: int = 3
    intent_source: str = "gold"
    ic_run_dir: str | None = None
    backend: dict = field(default_factory=dict)
    parallelism: int = 4
    retry_limit: int = 3
    resume: bool = True

    def __post_init__(self):
        if self.task not in ("IC", "SF", "JOINT"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.sf_strategy not in ("single", "multi"):
            raise ConfigError(f"unknown sf_strategy {self.sf_strategy!r}")
        if self.shot_mode not in ("zero", "few"):
            raise ConfigError(f"unknown shot_mode {self.shot_mode!r}")
        if self.intent_source not in ("gold", "predicted"):
            raise ConfigError(f"unknown intent_source {self.intent_source!r}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.task in ("IC", "JOINT"):
            bad = [t for t in self.templates if t not in IC_TEMPLATES]
            if bad:
                raise ConfigError(f"not IC templates: {bad}")
        if self.task == "JOINT" and len(self.templates) != 1:
            raise ConfigError("JOINT runs take exactly one IC template")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        doc.update(overrides)
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)


class PromptCache:
    """Append-only JSONL completion cache keyed by request hash."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, tuple[str, str]] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        self._entries[rec["key"]] = (rec["text"], rec.get("backend_id", ""))

    def get(self, key: str) -> tuple[str, str] | None:
        return self._entries.get(key)

    def put(self, key: str, text: str, backend_id: str) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = (text, backend_id)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "text": text, "backend_id": backend_id}))
                fh.write("\n")
                fh.flush()

    def __len__(self) -> int:
        return len(self._entries)


def _dump_json(doc: dict, path: Path) -> None:
    path.write_text(
        json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


class Run:
    """Shared machinery for one configured run (datasets, schema, backend, cache)."""

    def __init__(self, config: RunConfig, backend=None, gold: Dataset | None = None,
                 train: Dataset | None = None):
        self.config = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.gold = gold if gold is not None else load_dataset(
            config.eval_path, config.eval_format, split=config.eval_split
        )
        if train is not None:
            self.train = train
        elif config.train_path:
            self.train = load_dataset(config.train_path, config.train_format, split=config.train_split)
        else:
            self.train = self.gold
        self.schema = derive_schema(self.train, config.descriptions_path, config.general_threshold)
        raw = backend if backend is not None else self._build_backend()
        self.client = CompletionClient(raw, CallLedger(), retry_limit=config.retry_limit)
        cache_path = self.out / "cache.jsonl"
        if not config.resume and cache_path.exists():
            cache_path.unlink()
        self.cache = PromptCache(cache_path)

    def _build_backend(self):
        spec = dict(self.config.backend)
        kind = spec.pop("kind", "oracle")
        if kind == "http":
            return HttpBackend(
                spec["base_url"],
                backend_id=spec.get("id"),
                timeout=spec.get("timeout", 60.0),
            )
        if kind == "oracle":
            spec.setdefault("seed", self.config.seed)
            if "corrupt_tasks" in spec:
                spec["corrupt_tasks"] = tuple(spec["corrupt_tasks"])
            return OracleBackend(self.gold, self.schema, **spec)
        raise ConfigError(f"unknown backend kind {kind!r}")

    # -- completion with cache + bounded parallelism ------------------------

    def complete_all(self, prompts: list[Prompt], strategy: str) -> list[Generation]:
        backend_id = self.client.backend_id
        results: dict[int, Generation] = {}
        pending: list[tuple[int, Prompt, str]] = []
        for i, prompt in enumerate(prompts):
            key = request_hash(prompt.text, backend_id, prompt.max_new_tokens, TEMPERATURE)
            hit = self.cache.get(key)
            if hit is not None:
                text, observed = hit
                results[i] = Generation(text, 0.0, observed or backend_id)
            else:
                pending.append((i, prompt, key))

        def send(prompt: Prompt) -> Generation:
            request = CompletionRequest(
                prompt_text=prompt.text,
                max_new_tokens=prompt.max_new_tokens,
                temperature=TEMPERATURE,
                request_id=prompt.utterance_id,
                task=prompt.task,
                strategy=strategy,
            )
            return self.client.complete(request)

        if pending:
            with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
                futures = {pool.submit(send, p): (i, key) for i, p, key in pending}
                for future in as_completed(futures):
                    i, key = futures[future]
                    generation = future.result()
                    self.cache.put(key, generation.text, generation.backend_id)
                    results[i] = generation
        return [results[i] for i in range(len(prompts))]

    # -- persistence ---------------------------------------------------------

    def save_artifacts(self, records: list[dict], report_doc: dict) -> None:
        with open(self.out / "run.jsonl", "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
        _dump_json(report_doc, self.out / "report.json")
        _dump_json(self.client.ledger.snapshot(), self.out / "ledger.json")
        _dump_json(self.config.to_dict(), self.out / "config.json")

    def observed_backend_id(self, generations: list[Generation]) -> str:
        return generations[0].backend_id if generations else self.client.backend_id

    # -- IC ------------------------------------------------------------------

    def _ic_fewshot(self) -> FewShotSet | None:
        if self.config.shot_mode != "few":
            return None
        pool = subsample_per_label(self.train, self.config.k_per_label, self.config.seed)
        fs = sample_ic_fewshot(
            pool, self.schema, self.config.seed, self.config.cap, self.config.k_per_label
        )
        fs.save(self.out / "fewshot_ic.json")
        return fs

    def _sf_fewshot(self) -> FewShotSet | None:
        if self.config.shot_mode != "few":
            return None
        pool = subsample_per_label(self.train, self.config.k_per_label, self.config.seed)
        fs = sample_sf_fewshot(
            pool, self.schema, self.config.seed, self.config.cap, self.config.k_per_label
        )
        fs.save(self.out / "fewshot_sf.json")
        return fs

    def run_ic(self) -> EvalReport:
        fewshot = self._ic_fewshot()
        reports: dict[str, EvalReport] = {}
        records: list[dict] = []
        predicted: dict[str, str] = {}
        observed = self.client.backend_id
        for tid in self.config.templates:
            template = IC_TEMPLATES[tid]
            if not self.config.expose_labels:
                template = template.without_labels()
            prompts = [render_ic_prompt(template, self.schema, fewshot, u) for u in self.gold.examples]
            generations = self.complete_all(prompts, "single")
            observed = self.observed_backend_id(generations)
            predictions = [parse_ic(g, self.schema) for g in generations]
            reports[tid] = eval_ic(predictions, self.gold, self.schema, template_id=tid)
            for prompt, gen, pred, ex in zip(prompts, generations, predictions, self.gold.examples):
                records.append(
                    {
                        "utterance_id": ex.id,
                        "template_id": tid,
                        "prompt_sha256": request_hash(
                            prompt.text, self.client.backend_id, prompt.max_new_tokens, TEMPERATURE
                        ),
                        "generation": gen.text,
                        "predicted_label": pred.matched_label,
                        "matched_via": pred.matched_via,
                        "gold_intent": ex.gold_intent,
                        "correct": pred.matched_label == ex.gold_intent,
                        "latency_ms": gen.latency_ms,
                    }
                )
            if tid == self.config.templates[0]:
                predicted = {ex.id: p.matched_label for ex, p in zip(self.gold.examples, predictions)}
        report = aggregate_templates(reports)
        _dump_json(predicted, self.out / "ic_predictions.json")
        self.save_artifacts(records, {"task": "IC", "backend_id": observed, "report": report.to_dict()})
        return report

    # -- SF ------------------------------------------------------------------

    def _intents_for_sf(self) -> list[str]:
        if self.config.intent_source == "gold":
            return [u.gold_intent for u in self.gold.examples]
        if not self.config.ic_run_dir:
            raise MissingIcArtifact("intent_source=predicted needs ic_run_dir")
        path = Path(self.config.ic_run_dir) / "ic_predictions.json"
        if not path.exists():
            raise MissingIcArtifact(f"no IC predictions at {path}")
        mapping = json.loads(path.read_text(encoding="utf-8"))
        missing = [u.id for u in self.gold.examples if u.id not in mapping]
        if missing:
            raise MissingIcArtifact(f"IC artifact lacks predictions for: {missing[:5]}")
        return [mapping[u.id] for u in self.gold.examples]

    def run_sf(self, intents: list[str] | None = None) -> EvalReport:
        intents = intents if intents is not None else self._intents_for_sf()
        fewshot = self._sf_fewshot() if self.config.sf_strategy == "single" else None
        strategy = self.config.sf_strategy
        predictions: list[SfPrediction] = []
        candidate_sets: list[tuple[str, ...]] = []
        records: list[dict] = []
        latencies: list[float] = []
        generations_flat: list[Generation] = []

        if strategy == "single":
            prompts = [
                render_sf_prompt(self.schema, intent, fewshot, u, self.config.expose_labels)
                for intent, u in zip(intents, self.gold.examples)
            ]
            generations = self.complete_all(prompts, "single")
            generations_flat = generations
            for prompt, gen in zip(prompts, generations):
                predictions.append(parse_sf(gen, prompt.candidate_slots))
                candidate_sets.append(prompt.candidate_slots)
                latencies.append(gen.latency_ms)
        else:
            per_example = [
                render_sf_multiprompts(self.schema, intent, u)
                for intent, u in zip(intents, self.gold.examples)
            ]
            flat = [p for group in per_example for p in group]
            generations = self.complete_all(flat, "multi")
            generations_flat = generations
            cursor = 0
            for group in per_example:
                chunk = generations[cursor : cursor + len(group)]
                cursor += len(group)
                pairs = []
                for prompt, gen in zip(group, chunk):
                    value = parse_slot_value(gen)
                    if value is not None:
                        pairs.append(SfPair(prompt.candidate_slots[0], value, True))
                raw = "\n".join(g.text for g in chunk)
                predictions.append(SfPrediction(raw_text=raw, pairs=tuple(pairs)))
                candidate_sets.append(tuple(p.candidate_slots[0] for p in group))
                latencies.append(sum(g.latency_ms for g in chunk))

        report = eval_sf(predictions, self.gold, self.schema, candidate_sets, template_id="SF1")
        closed = {d.slot_type: d.closed_values for d in self.schema.slots}
        for ex, intent, pred, candidates, latency in zip(
            self.gold.examples, intents, predictions, candidate_sets, latencies
        ):
            counts = score_sf_example(
                pred, [(s.slot_type, s.value) for s in ex.gold_slots], ex.text, candidates, closed
            )
            records.append(
                {
                    "utterance_id": ex.id,
                    "template_id": "SF1" if strategy == "single" else "SFMULTI",
                    "intent_used": intent,
                    "fallback_general": intent == UNMATCHED or intent not in self.schema.relevant,
                    "generation": pred.raw_text,
                    "pairs": [[p.slot_type, p.value, p.in_candidates] for p in pred.pairs],
                    "dropped": list(pred.dropped),
                    "gold_slots": [[s.slot_type, s.value] for s in ex.gold_slots],
                    "tp": counts.tp,
                    "fp": counts.fp,
                    "fn": counts.fn,
                    "fp_hallucinated": counts.fp_hallucinated,
                    "latency_ms": latency,
                }
            )
        aggregated = aggregate_templates({"SF1": report})
        aggregated.counts = report.counts
        doc = {
            "task": "SF",
            "strategy": strategy,
            "intent_source": self.config.intent_source,
            "backend_id": self.observed_backend_id(generations_flat),
            "report": aggregated.to_dict(),
        }
        self.save_artifacts(records, doc)
        return aggregated


def run_ic(config: RunConfig, backend=None) -> EvalReport:
    return Run(config, backend=backend).run_ic()


def run_sf(config: RunConfig, intent_source: str | None = None, backend=None) -> EvalReport:
    if intent_source is not None:
        config = replace(config, intent_source=intent_source)
    return Run(config, backend=backend).run_sf()


def run_joint(config: RunConfig, backend=None) -> tuple[EvalReport, EvalReport]:
    """IC with the configured template, then single-prompt SF from predicted
    intents (Unmatched falls back to general slots)."""
    if len(config.templates) != 1:
        raise ConfigError("JOINT runs take exactly one IC template")
    out = Path(config.output_dir)
    ic_config = replace(config, task="IC", output_dir=str(out / "ic"))
    ic_run = Run(ic_config, backend=backend)
    ic_report = ic_run.run_ic()

    sf_config = replace(
        config,
        task="SF",
        sf_strategy="single",
        intent_source="predicted",
        ic_run_dir=str(out / "ic"),
        output_dir=str(out / "sf"),
    )
    sf_run = Run(sf_config, backend=backend, gold=ic_run.gold, train=ic_run.train)
    sf_report = sf_run.run_sf()
    _dump_json(
        {"task": "JOINT", "ic": ic_report.to_dict(), "sf": sf_report.to_dict()},
        out / "report.json",
    )
    return ic_report, sf_report


def run(config: RunConfig, backend=None):
    """Dispatch on config.task; returns the report (or report pair for JOINT)."""
    if config.task == "IC":
        return run_ic(config, backend=backend)
    if config.task == "SF":
        return run_sf(config, backend=backend)
    return run_joint(config, backend=backend)
