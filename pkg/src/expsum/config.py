"""Pipeline configuration: file formats, defaults, and setting precedence.

Settings resolve as CLI flag > environment variable > config file > built-in
default. Paths in the config file are relative to the file's directory;
``dictionary_path``, ``schema_dir``, and ``refiner_constraints_path`` fall
back to the data files packaged with the library.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

from .code_model import DEFAULT_DMT_KEYS, DmtConfig
from .errors import ConfigError
from .retrieval import RetrievalConfig

ENV_API_KEY = "EXPSUM_API_KEY"
ENV_API_BASE = "EXPSUM_API_BASE"
ENV_MODEL = "EXPSUM_MODEL"


def packaged_data_path(*parts: str) -> Path:
    return Path(resources.files("expsum").joinpath("data", *parts))  # type: ignore[arg-type]


def resolve_setting(cli_value, env_value, config_value, default=None):
    """Apply the precedence chain; empty strings count as unset."""
    for value in (cli_value, env_value, config_value):
        if value not in (None, ""):
            return value
    return default


@dataclass
class LlmSettings:
    backend: str = "mock"  # "mock" or "http"
    mock_script_path: Optional[str] = None
    api_base: Optional[str] = None
    api_key: Optional[str] = None
    model: Optional[str] = None
    timeout: float = 120.0
    retries: int = 2


@dataclass
class PipelineConfig:
    kb_path: str
    dictionary_path: str
    schema_dir: str
    refiner_constraints_path: str
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    max_iterations: int = 3
    max_parse_retries: int = 1
    llm: LlmSettings = field(default_factory=LlmSettings)
    workers: int = 1
    dmt_keys: tuple[str, ...] = DEFAULT_DMT_KEYS

    def dmt_config(self) -> DmtConfig:
        return DmtConfig.of(self.dmt_keys)


def _resolve_path(base_dir: Path, value: Optional[str]) -> Optional[str]:
    if value in (None, ""):
        return None
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    return str(path)


def load_pipeline_config(
    path: str | Path,
    cli: Optional[Mapping[str, Any]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> PipelineConfig:
    """Load and validate a JSON config file, applying setting precedence."""
    cli = cli or {}
    env = env if env is not None else os.environ
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid config JSON {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    base_dir = path.parent
    kb_path = _resolve_path(base_dir, raw.get("kb_path"))
    if kb_path is None:
        raise ConfigError("config must set kb_path")
    dictionary_path = _resolve_path(base_dir, raw.get("dictionary_path")) or str(
        packaged_data_path("uninformative_dictionary.txt")
    )
    schema_dir = _resolve_path(base_dir, raw.get("schema_dir")) or str(
        packaged_data_path("schemas")
    )
    constraints_path = _resolve_path(
        base_dir, raw.get("refiner_constraints_path")
    ) or str(packaged_data_path("refiner_constraints.json"))

    retrieval_raw = raw.get("retrieval", {})
    try:
        retrieval = RetrievalConfig(
            path_overlap_threshold=float(
                retrieval_raw.get("path_overlap_threshold", 0.75)
            ),
            top_n=int(retrieval_raw.get("top_n", 9)),
            token_overlap_threshold=float(
                retrieval_raw.get("token_overlap_threshold", 0.75)
            ),
        )
    except ValueError as e:
        raise ConfigError(f"invalid retrieval settings: {e}") from e

    summarizer_raw = raw.get("summarizer", {})
    llm_raw = raw.get("llm", {})
    llm = LlmSettings(
        backend=str(cli.get("backend") or llm_raw.get("backend", "mock")),
        mock_script_path=resolve_setting(
            _resolve_path(Path.cwd(), cli.get("mock_script")),
            None,
            _resolve_path(base_dir, llm_raw.get("mock_script_path")),
        ),
        api_base=resolve_setting(
            cli.get("api_base"), env.get(ENV_API_BASE), llm_raw.get("api_base")
        ),
        api_key=resolve_setting(
            cli.get("api_key"), env.get(ENV_API_KEY), llm_raw.get("api_key")
        ),
        model=resolve_setting(
            cli.get("model"), env.get(ENV_MODEL), llm_raw.get("model")
        ),
        timeout=float(llm_raw.get("timeout", 120.0)),
        retries=int(llm_raw.get("retries", 2)),
    )

    workers = int(resolve_setting(cli.get("workers"), None, raw.get("workers"), 1))
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    cfg = PipelineConfig(
        kb_path=kb_path,
        dictionary_path=dictionary_path,
        schema_dir=schema_dir,
        refiner_constraints_path=constraints_path,
        retrieval=retrieval,
        max_iterations=int(summarizer_raw.get("max_iterations", 3)),
        max_parse_retries=int(summarizer_raw.get("max_parse_retries", 1)),
        llm=llm,
        workers=workers,
        dmt_keys=tuple(raw.get("dmt_keys", DEFAULT_DMT_KEYS)),
    )

    for name in ("kb_path", "dictionary_path", "schema_dir", "refiner_constraints_path"):
        referenced = getattr(cfg, name)
        if not Path(referenced).exists():
            raise ConfigError(f"{name} does not exist: {referenced}")
    if cfg.llm.backend == "mock" and cfg.llm.mock_script_path:
        if not Path(cfg.llm.mock_script_path).exists():
            raise ConfigError(
                f"mock_script_path does not exist: {cfg.llm.mock_script_path}"
            )
    if cfg.max_iterations < 1:
        raise ConfigError("max_iterations must be >= 1")
    if cfg.max_parse_retries < 0:
        raise ConfigError("max_parse_retries must be >= 0")
    return cfg


def build_client(llm: LlmSettings):
    """Instantiate the configured backend client."""
    from . import llm as llm_module

    if llm.backend == "mock":
        if llm.mock_script_path:
            return llm_module.MockLlmClient(
                llm_module.MockScript.load(llm.mock_script_path),
                record_calls=False,
            )
        return llm_module.judgment_stub_client(record_calls=False)
    if llm.backend == "http":
        return llm_module.HttpLlmClient(
            api_base=llm.api_base,
            api_key=llm.api_key,
            model=llm.model,
            timeout=llm.timeout,
            retries=llm.retries,
        )
    raise ConfigError(f"unknown llm backend {llm.backend!r}")
