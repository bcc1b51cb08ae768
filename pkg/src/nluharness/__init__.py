"""Schema-driven evaluation harness casting intent classification and slot
filling as language generation."""

from .backend import (
    CallLedger,
    CompletionClient,
    CompletionRequest,
    Generation,
    HttpBackend,
    OracleBackend,
    make_oracle_backend,
)
from .corpus import Dataset, GoldSlot, Utterance, extract_first_turns, load_dataset, validate, write_canonical
from .decode import IcPrediction, SfPrediction, normalize, parse_ic, parse_sf
from .fewshot import FewShotSet, fill_nulls, sample_ic_fewshot, sample_sf_fewshot, subsample_per_label
from .metrics import EvalReport, aggregate_templates, eval_ic, eval_sf, recall_ceiling
from .prompting import (
    IC_TEMPLATES,
    Prompt,
    PromptTemplate,
    export_instruction_dataset,
    render_ic_prompt,
    render_sf_multiprompts,
    render_sf_prompt,
    serialize_slots,
)
from .runner import RunConfig, run, run_ic, run_joint, run_sf
from .schema import (
    UNMATCHED,
    SchemaIndex,
    candidate_slots,
    derive_schema,
    map_description_to_label,
)

__version__ = "0.1.0"

__all__ = [
    "CallLedger",
    "CompletionClient",
    "CompletionRequest",
    "Dataset",
    "EvalReport",
    "FewShotSet",
    "Generation",
    "GoldSlot",
    "HttpBackend",
    "IC_TEMPLATES",
    "IcPrediction",
    "OracleBackend",
    "Prompt",
    "PromptTemplate",
    "RunConfig",
    "SchemaIndex",
    "SfPrediction",
    "UNMATCHED",
    "Utterance",
    "aggregate_templates",
    "candidate_slots",
    "derive_schema",
    "eval_ic",
    "eval_sf",
    "export_instruction_dataset",
    "extract_first_turns",
    "fill_nulls",
    "load_dataset",
    "make_oracle_backend",
    "map_description_to_label",
    "normalize",
    "parse_ic",
    "parse_sf",
    "recall_ceiling",
    "render_ic_prompt",
    "render_sf_multiprompts",
    "render_sf_prompt",
    "run",
    "run_ic",
    "run_joint",
    "run_sf",
    "sample_ic_fewshot",
    "sample_sf_fewshot",
    "serialize_slots",
    "subsample_per_label",
    "validate",
    "write_canonical",
]
