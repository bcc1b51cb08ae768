"""`nlu` command line: ingest, schema, sample, render, run, eval, export-ft, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backend import Generation
from .corpus import load_dataset, write_canonical
from .decode import parse_ic, parse_sf
from .errors import HarnessError
from .fewshot import sample_ic_fewshot, sample_sf_fewshot, subsample_per_label
from .metrics import EvalReport, aggregate_templates, eval_ic, eval_sf, format_report
from .prompting import export_instruction_dataset, render_ic_prompt, render_sf_multiprompts, render_sf_prompt
from .runner import Run, RunConfig, run
from .schema import candidate_slots, derive_schema


def _add_dataset_args(parser: argparse.ArgumentParser, prefix: str = "") -> None:
    dest = prefix.replace("-", "_") if prefix else "input"
    parser.add_argument(f"--{prefix or 'input'}", dest=dest, required=True)
    parser.add_argument("--format", default="canonical-json")
    parser.add_argument("--split", default="train")


def _cmd_ingest(args) -> int:
    dataset = load_dataset(args.input, args.format, split=args.split, name=args.name)
    write_canonical(dataset, args.out)
    print(f"wrote {len(dataset)} examples to {args.out}")
    return 0


def _cmd_schema(args) -> int:
    train = load_dataset(args.train, args.format, split=args.split)
    schema = derive_schema(train, args.descriptions, args.threshold)
    doc = {
        "intents": {d.raw_label: d.description for d in schema.intents},
        "slots": {d.slot_type: d.description for d in schema.slots},
        "relevant": {k: list(v) for k, v in sorted(schema.relevant.items())},
        "general": list(schema.general),
        "general_threshold": schema.general_threshold,
    }
    text = json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_sample(args) -> int:
    train = load_dataset(args.train, args.format, split=args.split)
    schema = derive_schema(train, args.descriptions, args.threshold)
    pool = subsample_per_label(train, args.k_per_label, args.seed)
    sampler = sample_ic_fewshot if args.task == "IC" else sample_sf_fewshot
    fewshot = sampler(pool, schema, args.seed, args.cap, args.k_per_label)
    Path(args.out).write_text(fewshot.to_json() + "\n", encoding="utf-8")
    print(f"sampled {len(fewshot.exemplars)} {args.task} exemplars to {args.out}")
    return 0


def _cmd_render(args) -> int:
    config = RunConfig.from_file(args.config)
    runner = Run(config, backend=_null_backend())
    fewshot = None
    if config.shot_mode == "few":
        fewshot = runner._ic_fewshot() if config.task == "IC" else runner._sf_fewshot()
    prompts = []
    if config.task in ("IC", "JOINT"):
        for tid in config.templates:
            for u in runner.gold.examples:
                prompts.append(render_ic_prompt(tid, runner.schema, fewshot, u))
    if config.task in ("SF", "JOINT"):
        for u in runner.gold.examples:
            if config.sf_strategy == "multi":
                prompts.extend(render_sf_multiprompts(runner.schema, u.gold_intent, u))
            else:
                prompts.append(
                    render_sf_prompt(runner.schema, u.gold_intent, fewshot, u, config.expose_labels)
                )
    with open(args.out, "w", encoding="utf-8") as fh:
        for p in prompts:
            fh.write(
                json.dumps(
                    {
                        "text": p.text,
                        "task": p.task,
                        "template_id": p.template_id,
                        "utterance_id": p.utterance_id,
                        "max_new_tokens": p.max_new_tokens,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")
    print(f"rendered {len(prompts)} prompts to {args.out}")
    return 0


class _NullBackend:
    backend_id = "null"

    def generate(self, request):
        raise RuntimeError("render-only runs never call the backend")


def _null_backend():
    return _NullBackend()


def _cmd_run(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.parallelism is not None:
        overrides["parallelism"] = args.parallelism
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if args.no_resume:
        overrides["resume"] = False
    config = RunConfig.from_file(args.config, **overrides)
    result = run(config)
    if isinstance(result, tuple):
        for report in result:
            print(format_report(report))
    else:
        print(format_report(result))
    print(f"artifacts in {config.output_dir}")
    return 0


def _cmd_eval(args) -> int:
    """Re-score a finished run offline from its run.jsonl."""
    run_dir = Path(args.run_dir)
    config = RunConfig.from_file(run_dir / "config.json")
    runner = Run(config, backend=_null_backend())
    records = [
        json.loads(line)
        for line in (run_dir / "run.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    by_template: dict[str, list[dict]] = {}
    for rec in records:
        by_template.setdefault(rec["template_id"], []).append(rec)
    reports: dict[str, EvalReport] = {}
    for tid, recs in sorted(by_template.items()):
        by_id = {r["utterance_id"]: r for r in recs}
        ordered = [by_id[u.id] for u in runner.gold.examples]
        if tid in ("SF1", "SFMULTI"):
            preds, cands = [], []
            for rec, u in zip(ordered, runner.gold.examples):
                candidates = tuple(
                    c.slot_type for c in candidate_slots(runner.schema, rec["intent_used"])
                )
                preds.append(parse_sf(Generation(rec["generation"], 0.0, ""), candidates))
                cands.append(candidates)
            reports[tid] = eval_sf(preds, runner.gold, runner.schema, cands, template_id=tid)
        else:
            preds = [parse_ic(Generation(r["generation"], 0.0, ""), runner.schema) for r in ordered]
            reports[tid] = eval_ic(preds, runner.gold, runner.schema, template_id=tid)
    print(format_report(aggregate_templates(reports)))
    return 0


def _cmd_export_ft(args) -> int:
    train = load_dataset(args.train, args.format, split=args.split)
    schema = derive_schema(train, args.descriptions, args.threshold)
    if args.k_per_label:
        train = subsample_per_label(train, args.k_per_label, args.seed)
    count = export_instruction_dataset(train, schema, args.templates.split(","), args.out)
    print(f"exported {count} instruction pairs to {args.out}")
    return 0


def _cmd_report(args) -> int:
    doc = json.loads((Path(args.run_dir) / "report.json").read_text(encoding="utf-8"))
    docs = [doc["ic"], doc["sf"]] if doc.get("task") == "JOINT" else [doc.get("report", doc)]
    for entry in docs:
        report = EvalReport(
            task=entry["task"],
            n_examples=entry["n_examples"],
            accuracy=entry.get("accuracy"),
            precision=entry.get("precision"),
            recall=entry.get("recall"),
            f1=entry.get("f1"),
            hallucination_ratio=entry["hallucination_ratio"],
            per_template=entry.get("per_template", {}),
            mean=entry["mean"],
            stddev=entry["stddev"],
        )
        print(format_report(report))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nlu", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a native dataset file to canonical JSON")
    _add_dataset_args(p)
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("schema", help="derive the intent/slot schema from a train split")
    _add_dataset_args(p, "train")
    p.add_argument("--descriptions", required=True)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_schema)

    p = sub.add_parser("sample", help="draw a few-shot exemplar set")
    _add_dataset_args(p, "train")
    p.add_argument("--descriptions", required=True)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--task", choices=("IC", "SF"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=10)
    p.add_argument("--k-per-label", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("render", help="render prompts without calling a backend")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("run", help="execute an evaluation run from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--no-resume", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="re-score a finished run from its artifacts")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-ft", help="export the instruction-tuning JSONL")
    _add_dataset_args(p, "train")
    p.add_argument("--descriptions", required=True)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--templates", default="P1,P2,P3,P4,SF1")
    p.add_argument("--k-per-label", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_ft)

    p = sub.add_parser("report", help="print the table row for a finished run")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HarnessError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
