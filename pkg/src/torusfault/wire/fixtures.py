"""Known-answer fixture checks for the register, CRC and magic-word codecs."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import List, Optional

from .completion import CompletionSource, magic_word
from .frame import crc32
from .registers import (
    Direction,
    DnpWatchdogRegister,
    HostWatchdogRegister,
    LifamaDiagnosticMessage,
    parse_word,
)

_CODECS = {"DWR": DnpWatchdogRegister, "HWR": HostWatchdogRegister, "LDM": LifamaDiagnosticMessage}


def register_fields(kind: str, word: int) -> dict:
    """Decode ``word`` and flatten it to integer fields (``link_X+``, ``nb_Y-`` ...)."""
    reg = _CODECS[kind].from_word(word)
    out = {}
    for name in ("valid", "service_net", "memory", "peripheral", "dnp_core",
                 "current", "voltage", "temperature", "lifama_busy", "send_ldm"):
        if hasattr(reg, name):
            out[name] = int(getattr(reg, name))
    if hasattr(reg, "links"):
        for d in Direction:
            out[f"link_{d.label}"] = int(reg.link(d))
    if kind == "DWR":
        for d in Direction:
            out[f"nb_{d.label}"] = int(d in reg.failed_neighbours)
    return out


def default_fixture_path() -> Path:
    return Path(str(resources.files("torusfault") / "data" / "codec_fixtures.json"))


def check_fixtures(doc: dict) -> List[str]:
    """Return one message per mismatching fixture; empty means all pass."""
    failures = []
    for i, fx in enumerate(doc.get("registers", [])):
        kind, word = fx["register"], parse_word(fx["word"])
        try:
            got = register_fields(kind, word)
            again = _CODECS[kind].from_word(word).to_word()
        except (KeyError, ValueError) as e:
            failures.append(f"registers[{i}] {kind} {fx['word']}: {e}")
            continue
        if got != fx["fields"]:
            diff = sorted(k for k in fx["fields"] if got.get(k) != fx["fields"][k])
            failures.append(f"registers[{i}] {kind} {fx['word']}: fields differ: {', '.join(diff)}")
        elif again != word:
            failures.append(f"registers[{i}] {kind} {fx['word']}: re-encodes as {again:08X}")
    for i, fx in enumerate(doc.get("crc32", [])):
        got = crc32(bytes.fromhex(fx["data"]))
        if got != int(fx["crc32"], 16):
            failures.append(f"crc32[{i}]: {got:08X} != {fx['crc32']}")
    for i, fx in enumerate(doc.get("magic", [])):
        got = magic_word(CompletionSource(fx["source"]))
        if got != int(fx["word"], 16):
            failures.append(f"magic[{i}] {fx['source']}: {got:032X} != {fx['word']}")
    return failures


def fixture_count(doc: dict) -> int:
    return sum(len(doc.get(k, [])) for k in ("registers", "crc32", "magic"))


def load_fixtures(path: Optional[str | Path] = None) -> dict:
    p = Path(path) if path is not None else default_fixture_path()
    return json.loads(p.read_text())
