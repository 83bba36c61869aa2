"""Flat key = value run configuration ('#' comments, one pair per line)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError


@dataclass
class RunConfig:
    beta: float = 2.0
    j: float = -0.02
    x0: float = 0.0
    ell: float = 1.0
    eps_list: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    spacing: float = 0.05
    inner_tol: float = 1e-12
    outer_tol: float = 1e-10
    spectral_tol: float = 1e-12
    kernel: str = "cos2"
    n0: int = 10
    mode: str = "antisym"           # antisym | metastable | asym
    outdir: str = "runs"
    workers: int = 1
    instanton_halfwidth: float = 20.0

    def validate_fields(self):
        if self.beta <= 1.0:
            raise DomainError("beta must exceed 1")
        for name in ("inner_tol", "outer_tol", "spectral_tol"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if any(e2 >= e1 for e1, e2 in zip(self.eps_list, self.eps_list[1:])):
            raise DomainError("eps_list must be strictly decreasing")
        if self.mode not in ("antisym", "metastable", "asym"):
            raise DomainError(f"unknown mode {self.mode!r}")
        return self


_FLOAT_KEYS = {"beta", "j", "x0", "ell", "spacing", "inner_tol", "outer_tol",
               "spectral_tol", "instanton_halfwidth"}
_INT_KEYS = {"n0", "workers"}
_LIST_KEYS = {"eps_list"}


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not hasattr(cfg, key):
            raise DomainError(f"line {lineno}: unknown key {key!r}")
        if key in _FLOAT_KEYS:
            setattr(cfg, key, float(value))
        elif key in _INT_KEYS:
            setattr(cfg, key, int(value))
        elif key in _LIST_KEYS:
            setattr(cfg, key, [float(tok) for tok in value.split(",") if tok.strip()])
        else:
            setattr(cfg, key, value)
    return cfg.validate_fields()


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
