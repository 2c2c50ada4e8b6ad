"""Run configuration shared by the CLI subcommands.

The file form is flat ``key = value`` lines mirroring the long flags
(``burn_in`` for ``--burn-in``); ``#`` starts a comment.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DomainError

SUBCOMMANDS = (
    "sieve", "correlate", "battery", "density", "measure", "facts", "prg", "transfer", "selftest",
)


@dataclass
class RunConfig:
    subcommand: str = "selftest"
    seq: str | None = None
    kind: str = "liouville"
    range: str | None = None
    out: str | None = None
    csv: str | None = None
    json: str | None = None
    n: int | None = None
    checkpoints: str = "pow2"
    test: str | None = None
    tests: str = "default"
    eps: float = 0.05
    p: float | None = None
    threshold: float = 0.05
    burn_in: int = 10_000
    depth: int = 3
    set: str | None = None
    event: str | None = None
    x: str | None = None
    y: str | None = None
    z: str | None = None
    tolerance: float = 0.02
    bits: int = 32
    key: str | None = None
    key_out: str | None = None
    schedule: str | None = None
    g: str | None = None
    n0: int = 10
    seed: int = 0
    window: int = 1 << 20
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise DomainError(f"unknown subcommand {self.subcommand!r}")
        checks = [
            (self.eps > 0, "eps must be positive"),
            (self.p is None or 0 < self.p < 1, "p must lie in (0, 1)"),
            (self.threshold >= 0, "threshold must be >= 0"),
            (self.burn_in >= 0, "burn-in must be >= 0"),
            (self.depth >= 1, "depth must be >= 1"),
            (self.tolerance >= 0, "tolerance must be >= 0"),
            (self.n is None or self.n >= 1, "n must be >= 1"),
            (self.window >= 1, "window must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.n0 >= 1, "n0 must be >= 1"),
            (0 <= self.seed < 1 << 64, "seed must be a 64-bit unsigned integer"),
        ]
        for ok, message in checks:
            if not ok:
                raise DomainError(message)
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls(**parse_config_text(text)).validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())

    def public_dict(self) -> dict:
        """Parameters that shape the result (no output paths)."""
        skip = {"out", "csv", "json", "key_out", "workers"}
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in skip}


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise DomainError(f"unknown config key {name!r}")
    kind = types[name]
    if raw == "None":
        return None
    try:
        if kind.startswith("int"):
            return int(raw, 0)
        if kind.startswith("float"):
            return float(raw)
    except ValueError:
        raise DomainError(f"bad value for {name}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        out[key] = _coerce(key, value.strip())
    return out
