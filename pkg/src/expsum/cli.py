"""Command-line orchestration of the full pipeline.

Subcommands: kb-build, extract, check, retrieve, summarize, evaluate.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import config as config_module
from .code_model import (
    DmtConfig,
    FunctionRecord,
    Language,
    deserialize_metadata,
    metadata_from_dict,
    metadata_to_dict,
    model_function,
)
from .errors import ClientFailure, ConfigError, EmptyCorpus, ExpSumError
from .knowledge_base import (
    PackageDoc,
    build_knowledge_base,
    load_knowledge_base,
    save_knowledge_base,
)
from .metadata_check import check_metadata, load_dictionary
from .metrics import ScorePair, evaluate_corpus
from .retrieval import RetrievalConfig, query_from_metadata, retrieve
from .summarizer import (
    SummarizerConfig,
    load_category_schemas,
    load_refiner_constraints,
    summarize,
)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _record_from_dict(d: dict) -> FunctionRecord:
    fn = d["function"]
    pre = fn.get("pre_extracted")
    return FunctionRecord(
        file_path=fn.get("file_path", ""),
        source_text=fn.get("source_text"),
        language=Language.from_string(fn.get("language", "unknown")),
        pre_extracted=metadata_from_dict(pre) if pre is not None else None,
    )


def _load_corpus_records(path: Path) -> list[dict]:
    records = []
    seen_ids = set()
    for line_no, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        record = json.loads(line)
        record_id = record.get("id")
        if not record_id:
            raise ValueError(f"line {line_no}: record without id")
        if record_id in seen_ids:
            raise ValueError(f"line {line_no}: duplicate id {record_id!r}")
        seen_ids.add(record_id)
        records.append(record)
    return records


def _load_package_docs(corpus: Path) -> list[PackageDoc]:
    docs: list[PackageDoc] = []
    if corpus.is_dir():
        for file in sorted(corpus.iterdir()):
            if file.is_file() and file.suffix in (".txt", ".md"):
                text = file.read_text(encoding="utf-8").strip()
                if text:
                    docs.append(PackageDoc(path_context=file.stem, text=text))
    elif corpus.is_file():
        manifest = json.loads(corpus.read_text(encoding="utf-8"))
        for item in manifest:
            docs.append(
                PackageDoc(path_context=item["path_context"], text=item["text"])
            )
    return docs


def cmd_kb_build(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.exists():
        _log(f"error: corpus {corpus} does not exist")
        return 2
    try:
        docs = _load_package_docs(corpus)
        client = config_module.build_client(
            config_module.LlmSettings(
                backend=args.backend,
                mock_script_path=args.mock_script,
                api_base=args.api_base,
                api_key=args.api_key,
                model=args.model,
            )
        )
        if not docs:
            raise EmptyCorpus(f"empty corpus: {corpus}")
        model, entries = build_knowledge_base(docs, client)
    except (EmptyCorpus, ClientFailure, ConfigError, ValueError, OSError) as e:
        _log(f"error: {e}")
        return 1
    save_knowledge_base(args.out, model, entries)
    terms = {e.term for e in entries}
    _log(
        f"knowledge base written to {args.out}: {len(docs)} documents, "
        f"{len(entries)} entries, {len(terms)} distinct terms"
    )
    return 0


def cmd_extract(args) -> int:
    dmt_config = (
        DmtConfig.of([k.strip() for k in args.dmt_keys.split(",") if k.strip()])
        if args.dmt_keys
        else DmtConfig()
    )
    try:
        if args.record:
            record = _record_from_dict(
                json.loads(Path(args.record).read_text(encoding="utf-8"))
            )
        else:
            record = FunctionRecord(
                file_path=args.source,
                source_text=Path(args.source).read_text(encoding="utf-8"),
                language=Language.from_string(args.lang or "unknown"),
            )
        metadata = model_function(record, dmt_config)
    except (ExpSumError, ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        _log(f"error: {type(e).__name__}: {e}")
        return 1
    print(json.dumps(metadata_to_dict(metadata), indent=2, ensure_ascii=False))
    return 0


def cmd_check(args) -> int:
    try:
        dictionary = load_dictionary(
            args.dictionary
            or config_module.packaged_data_path("uninformative_dictionary.txt")
        )
        metadata = deserialize_metadata(
            Path(args.metadata).read_text(encoding="utf-8")
        )
        report = check_metadata(metadata, dictionary)
    except (ExpSumError, ValueError, OSError, json.JSONDecodeError) as e:
        _log(f"error: {type(e).__name__}: {e}")
        return 1
    print(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
    return 0


def cmd_retrieve(args) -> int:
    try:
        metadata = deserialize_metadata(
            Path(args.metadata).read_text(encoding="utf-8")
        )
        kb = load_knowledge_base(args.kb)
        cfg = RetrievalConfig(
            path_overlap_threshold=args.path_threshold,
            top_n=args.top_n,
            token_overlap_threshold=args.token_threshold,
        )
        result = retrieve(query_from_metadata(metadata), kb, cfg)
    except (ExpSumError, ValueError, OSError, json.JSONDecodeError) as e:
        _log(f"error: {type(e).__name__}: {e}")
        return 1
    print(json.dumps(result.to_dict(), indent=2, ensure_ascii=False))
    return 0


def _summarize_one(record: dict, shared) -> dict:
    cfg, dictionary, kb, client, summarizer_cfg = shared
    record_id = record["id"]
    try:
        function_record = _record_from_dict(record)
        metadata = model_function(function_record, cfg.dmt_config())
        checked = check_metadata(metadata, dictionary).retained
        retrieval_result = retrieve(
            query_from_metadata(checked), kb, cfg.retrieval
        )
        result = summarize(checked, retrieval_result, client, summarizer_cfg)
    except (ExpSumError, ValueError, KeyError) as e:
        _log(f"warning: record {record_id!r} failed: {type(e).__name__}: {e}")
        return {"id": record_id, "error": type(e).__name__}
    return {
        "id": record_id,
        "final_summary": result.final_summary,
        "category": result.category.value,
        "retrieved_terms": result.retrieved_terms,
        "iterations": result.iterations,
        "degraded": result.degraded,
    }


def cmd_summarize(args) -> int:
    cli_overrides = {
        "workers": args.workers,
        "backend": args.backend,
        "mock_script": args.mock_script,
        "api_base": args.api_base,
        "api_key": args.api_key,
        "model": args.model,
    }
    try:
        cfg = config_module.load_pipeline_config(args.config, cli=cli_overrides)
        dictionary = load_dictionary(cfg.dictionary_path)
        kb = load_knowledge_base(cfg.kb_path)
        client = config_module.build_client(cfg.llm)
        summarizer_cfg = SummarizerConfig(
            schemas=load_category_schemas(cfg.schema_dir),
            refiner_constraints=load_refiner_constraints(
                cfg.refiner_constraints_path
            ),
            max_iterations=cfg.max_iterations,
            max_parse_retries=cfg.max_parse_retries,
        )
        records = _load_corpus_records(Path(args.corpus))
    except (ExpSumError, ValueError, OSError, json.JSONDecodeError) as e:
        _log(f"error: {type(e).__name__}: {e}")
        return 1

    shared = (cfg, dictionary, kb, client, summarizer_cfg)
    if cfg.workers == 1:
        results = [_summarize_one(r, shared) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda r: _summarize_one(r, shared), records))

    lines = [_dump(r) for r in results]
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    failures = sum(1 for r in results if "error" in r)
    _log(
        f"summarized {len(results) - failures}/{len(results)} records "
        f"({failures} warnings) -> {args.out}"
    )
    return 0


def _load_jsonl_field(path: Path, *keys: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        record_id = record.get("id")
        if record_id is None:
            continue
        for key in keys:
            if key in record and record[key] is not None:
                values[str(record_id)] = str(record[key])
                break
    return values


def cmd_evaluate(args) -> int:
    try:
        generated = _load_jsonl_field(
            Path(args.generated), "candidate", "final_summary", "summary"
        )
        references = _load_jsonl_field(
            Path(args.references), "reference", "reference_summary"
        )
        joinable = sorted(set(generated) & set(references))
        if not joinable:
            _log("error: zero joinable ids between generated and references")
            return 1
        pairs = [
            (item_id, ScorePair(candidate=generated[item_id], reference=references[item_id]))
            for item_id in joinable
        ]
        report = evaluate_corpus(pairs)
    except (ExpSumError, ValueError, OSError, json.JSONDecodeError) as e:
        _log(f"error: {type(e).__name__}: {e}")
        return 1

    Path(args.report).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "bleu4", "rougeL"])
            for item in report.per_item:
                writer.writerow([item.id, f"{item.bleu4:.6f}", f"{item.rougeL:.6f}"])
    print(
        f"n={report.n} "
        f"bleu4={report.corpus_means['bleu4']:.3f} "
        f"rougeL={report.corpus_means['rougeL']:.3f}"
    )
    return 0


def _add_llm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["mock", "http"], default=None)
    parser.add_argument("--mock-script", dest="mock_script", default=None)
    parser.add_argument("--api-base", dest="api_base", default=None)
    parser.add_argument("--api-key", dest="api_key", default=None)
    parser.add_argument("--model", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expsum",
        description="Expectation-aware function summarization pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kb-build", help="build a knowledge base from package docs")
    p.add_argument("corpus", help="directory of .txt docs or a JSON manifest")
    p.add_argument("--out", required=True, help="output knowledge base JSON")
    _add_llm_flags(p)
    p.set_defaults(func=cmd_kb_build)

    p = sub.add_parser("extract", help="model a function into metadata JSON")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--source", help="source file containing the function")
    group.add_argument("--record", help="function record JSON file")
    p.add_argument("--lang", help="language name (else inferred from extension)")
    p.add_argument("--dmt-keys", dest="dmt_keys", help="comma-separated annotation keys")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("check", help="drop empty/uninformative metadata fields")
    p.add_argument("--metadata", required=True, help="metadata JSON file")
    p.add_argument("--dictionary", help="dictionary file (default: packaged)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("retrieve", help="run cascaded retrieval for one function")
    p.add_argument("--metadata", required=True, help="metadata JSON file")
    p.add_argument("--kb", required=True, help="knowledge base JSON file")
    p.add_argument("--top-n", dest="top_n", type=int, default=9)
    p.add_argument("--path-threshold", dest="path_threshold", type=float, default=0.75)
    p.add_argument("--token-threshold", dest="token_threshold", type=float, default=0.75)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("summarize", help="summarize a corpus of function records")
    p.add_argument("corpus", help="JSON-lines corpus of function records")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--out", required=True, help="output JSON-lines file")
    p.add_argument("--workers", type=int, default=None)
    _add_llm_flags(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", help="score generated summaries against references")
    p.add_argument("--generated", required=True, help="JSON lines with id + candidate")
    p.add_argument("--references", required=True, help="JSON lines with id + reference")
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--csv", help="optional per-item CSV")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "kb-build" and args.backend is None:
        args.backend = "mock"
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
