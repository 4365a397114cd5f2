"""Plain-text ``key = value`` configuration files for :class:`SimConfig`.

Lines are ``key = value``; ``#`` starts a comment. List fields take
comma-separated values. ``B`` and ``B_grid`` accept ``inf`` for the
unquantized codebook. Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses

from .codebook import INFINITE
from .errors import ConfigInvalid
from .sim import SimConfig

__all__ = ["parse_config", "load_config"]

_INT_LISTS = {"K_grid", "G_grid"}
_FLOAT_LISTS = {"snr_grid"}
_BITS = {"B"}
_BIT_LISTS = {"B_grid"}
_STR_LISTS = {"schemes"}
_FLOATS = {"pdp_decay", "case2_snr_db", "case3_snr_db"}


def _bits(tok: str):
    tok = tok.strip()
    if tok.lower() in ("inf", "infinite", "infinity"):
        return INFINITE
    return int(tok)


def _split(value: str):
    return [t.strip() for t in value.split(",") if t.strip()]


def _convert(key: str, value: str):
    if key in _INT_LISTS:
        return [int(t) for t in _split(value)]
    if key in _FLOAT_LISTS:
        return [float(t) for t in _split(value)]
    if key in _BIT_LISTS:
        return [_bits(t) for t in _split(value)]
    if key in _STR_LISTS:
        return [t.upper() for t in _split(value)]
    if key in _BITS:
        return _bits(value)
    if key in _FLOATS:
        return float(value)
    return int(value)


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    names = {f.name for f in dataclasses.fields(SimConfig)}
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in names:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        if key in changes:
            raise ConfigInvalid(f"line {lineno}: duplicate key {key!r}")
        try:
            changes[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigInvalid(f"line {lineno}: bad value for {key!r}: {exc}") from None
    cfg = dataclasses.replace(base or SimConfig(), **changes)
    return cfg.validate()


def load_config(path) -> SimConfig:
    """Read a config file; ``OSError`` propagates for unreadable paths."""
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
