"""Pipeline configuration: JSON config file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional

from .align import GeneratorConfig
from .core import EwraError
from .curriculum import SplitSpec
from .ingest import DEFAULT_FEED_BASE, DEFAULT_WINDOW_DAYS, IngestOptions
from .metrics import EmbeddingConfig

ENV_LLM_ENDPOINT = "EWRA_LLM_ENDPOINT"
ENV_LLM_KEY = "EWRA_LLM_KEY"
ENV_EMBED_ENDPOINT = "EWRA_EMBED_ENDPOINT"


class ConfigError(EwraError):
    """Bad configuration file, missing path, or missing required setting."""


@dataclass
class Config:
    """Defaults reproduce the reference settings: 31-day window, 70/15/15
    splits, seed 3407."""

    events_path: Optional[str] = None
    gazetteer_path: Optional[str] = None
    keyword_bank_path: Optional[str] = None
    taxonomy_path: Optional[str] = None

    llm_endpoint: Optional[str] = None
    llm_model: str = "default"
    llm_api_key: Optional[str] = None
    embed_endpoint: Optional[str] = None
    embed_model: str = "default"

    temperature: float = 0.7
    max_tokens: int = 1024
    max_retries: int = 3
    backoff_base: float = 2.0
    request_timeout: float = 60.0
    in_flight: int = 4
    rate_limit_per_s: Optional[float] = None

    ingest_workers: int = 8
    politeness_delay_s: float = 1.0
    feed_base: str = DEFAULT_FEED_BASE
    locale: str = "en-US"
    window_days: int = DEFAULT_WINDOW_DAYS
    keep_undated: bool = True

    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 3407

    @classmethod
    def load(
        cls,
        path: Optional[str | Path] = None,
        env: Mapping[str, str] = os.environ,
    ) -> "Config":
        values: dict = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"{path}: cannot load config ({exc})") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: config must be a JSON object")
            known = {f.name for f in fields(cls)}
            unknown = sorted(set(data) - known)
            if unknown:
                raise ConfigError(f"{path}: unknown config keys {unknown}")
            values.update(data)
        config = cls(**values)
        if env.get(ENV_LLM_ENDPOINT):
            config.llm_endpoint = env[ENV_LLM_ENDPOINT]
        if env.get(ENV_LLM_KEY):
            config.llm_api_key = env[ENV_LLM_KEY]
        if env.get(ENV_EMBED_ENDPOINT):
            config.embed_endpoint = env[ENV_EMBED_ENDPOINT]
        config.validate_paths()
        return config

    def validate_paths(self) -> None:
        for name in ("events_path", "gazetteer_path", "keyword_bank_path", "taxonomy_path"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_file():
                raise ConfigError(f"{name} does not exist: {value}")

    def generator_config(self) -> GeneratorConfig:
        if not self.llm_endpoint:
            raise ConfigError(
                f"LLM endpoint not configured (set {ENV_LLM_ENDPOINT} or "
                "llm_endpoint in the config file)"
            )
        return GeneratorConfig(
            endpoint=self.llm_endpoint,
            model=self.llm_model,
            api_key=self.llm_api_key,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            max_retries=self.max_retries,
            backoff_base=self.backoff_base,
            timeout=self.request_timeout,
            in_flight=self.in_flight,
            rate_limit_per_s=self.rate_limit_per_s,
        )

    def embedding_config(self) -> Optional[EmbeddingConfig]:
        if not self.embed_endpoint:
            return None
        return EmbeddingConfig(
            endpoint=self.embed_endpoint,
            model=self.embed_model,
            timeout=self.request_timeout,
        )

    def split_spec(self) -> SplitSpec:
        return SplitSpec(
            train_frac=self.train_frac,
            val_frac=self.val_frac,
            test_frac=self.test_frac,
            seed=self.seed,
        )

    def ingest_options(self) -> IngestOptions:
        return IngestOptions(
            feed_base=self.feed_base,
            locale=self.locale,
            window_days=self.window_days,
            keep_undated=self.keep_undated,
            workers=self.ingest_workers,
            politeness_delay_s=self.politeness_delay_s,
            timeout=self.request_timeout,
        )
