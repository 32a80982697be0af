"""Runtime configuration: knobs file plus environment-driven backend setup.

The config file is a JSON object; unknown keys are rejected so typos fail
loudly. Backend credentials never live in the file: the HTTP backend
reads LLM_API_URL, LLM_API_KEY, and LLM_MODEL from the environment.
LLM_PARALLELISM applies when the file does not set parallelism itself.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from medrag.gateway import DEFAULT_PARALLELISM, Gateway, HttpBackend, StubBackend

BACKENDS = ("stub", "http")


@dataclass(frozen=True)
class Config:
    top_k: int = 50
    snippet_cap: int = 10
    parallelism: int = DEFAULT_PARALLELISM
    backend: str = "stub"
    stub_fixtures: str | None = None
    templates_dir: str | None = None
    wire_style: str = "openai"
    timeout_seconds: float = 60.0

    def __post_init__(self):
        if not 1 <= self.top_k <= 200:
            raise ValueError(f"top_k out of range: {self.top_k}")
        if self.snippet_cap < 1:
            raise ValueError(f"snippet_cap out of range: {self.snippet_cap}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism out of range: {self.parallelism}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")


def load_config(path: Path | str | None = None) -> Config:
    data: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        data = raw
    known = {f.name for f in fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "parallelism" not in data:
        env_parallelism = os.environ.get("LLM_PARALLELISM")
        if env_parallelism is not None:
            data["parallelism"] = int(env_parallelism)
    return Config(**data)


def build_gateway(config: Config) -> Gateway:
    """Assemble the LLM gateway the config describes.

    The stub backend gets a frozen clock and a no-op sleep so repeated
    runs produce byte-identical traces.
    """
    if config.backend == "stub":
        if config.stub_fixtures is not None:
            backend = StubBackend.from_file(config.stub_fixtures)
        else:
            backend = StubBackend({})
        return Gateway(
            backend=backend,
            parallelism=config.parallelism,
            sleep=lambda _: None,
            clock=lambda: 0.0,
        )
    url = os.environ.get("LLM_API_URL")
    if not url:
        raise ValueError("http backend needs LLM_API_URL")
    model = os.environ.get("LLM_MODEL")
    if not model:
        raise ValueError("http backend needs LLM_MODEL")
    backend = HttpBackend(
        url=url,
        api_key=os.environ.get("LLM_API_KEY", ""),
        model=model,
        style=config.wire_style,
        timeout=config.timeout_seconds,
    )
    return Gateway(backend=backend, parallelism=config.parallelism)
