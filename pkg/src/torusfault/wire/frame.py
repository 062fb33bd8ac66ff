"""Torus link packet framing with CRC-32, plus the 128-bit word parity checker.

Frame layout (16-byte words)::

    MAGIC | START | HEADER | PAYLOAD (0..256 words) | FOOTER

The footer's first 12 bytes are caller metadata; its last 4 bytes hold the
CRC-32 (little-endian) computed over ``header || payload || footer[0:12]``.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

WORD_BYTES = 16
MAX_PAYLOAD = 4096
PROTOCOL_OVERHEAD = 4 * WORD_BYTES  # magic + start + header + footer
FOOTER_META_BYTES = 12

# Reflected IEEE 802.3 polynomial, init 0xFFFFFFFF, final xor 0xFFFFFFFF.
CRC_VARIANT = "crc32-ieee-802.3-reflected"
CRC_POLY_REFLECTED = 0xEDB88320

LINK_MAGIC = bytes.fromhex("DAD0DAD0" * 4)
LINK_START = bytes.fromhex("5354415254000000" * 2)  # "START\0\0\0" twice

PARITY_BIT = 127
_LOW127 = (1 << 127) - 1


class FrameError(ValueError):
    pass


class BadLength(FrameError):
    pass


class CrcMismatch(FrameError):
    """Received CRC differs from the recomputed one: evidence of a sick link."""

    def __init__(self, expected: int, received: int):
        super().__init__(f"CRC mismatch: computed 0x{expected:08X}, footer carries 0x{received:08X}")
        self.expected = expected
        self.received = received


class BadFraming(FrameError):
    pass


class ParityError(ValueError):
    def __init__(self, word_index: int, word: int):
        super().__init__(f"parity error in payload word {word_index}")
        self.word_index = word_index
        self.word = word


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def _as_word_bytes(value: bytes | int, name: str, size: int = WORD_BYTES) -> bytes:
    if isinstance(value, int):
        if value < 0 or value >> (8 * size):
            raise ValueError(f"{name} does not fit in {size} bytes")
        return value.to_bytes(size, "little")
    if len(value) != size:
        raise BadLength(f"{name} must be {size} bytes, got {len(value)}")
    return bytes(value)


def _check_payload(payload: bytes) -> None:
    if len(payload) > MAX_PAYLOAD or len(payload) % WORD_BYTES:
        raise BadLength(f"payload of {len(payload)} bytes is not a multiple of 16 up to 4096")


@dataclass(frozen=True)
class PacketFrame:
    header: bytes
    payload: bytes
    footer_meta: bytes
    crc: int

    @property
    def footer(self) -> bytes:
        return self.footer_meta + self.crc.to_bytes(4, "little")

    def to_bytes(self) -> bytes:
        return LINK_MAGIC + LINK_START + self.header + self.payload + self.footer

    def __len__(self) -> int:
        return PROTOCOL_OVERHEAD + len(self.payload)


def build_frame(header: bytes | int, payload: bytes = b"", footer_meta: bytes | int = 0) -> PacketFrame:
    header = _as_word_bytes(header, "header")
    meta = _as_word_bytes(footer_meta, "footer metadata", FOOTER_META_BYTES)
    payload = bytes(payload)
    _check_payload(payload)
    return PacketFrame(header, payload, meta, crc32(header + payload + meta))


def encode_frame(header: bytes | int, payload: bytes = b"", footer_meta: bytes | int = 0) -> bytes:
    return build_frame(header, payload, footer_meta).to_bytes()


def parse_frame(data: bytes) -> PacketFrame:
    """Split and verify a received frame; raises on framing, length or CRC errors."""
    data = bytes(data)
    if len(data) < PROTOCOL_OVERHEAD or len(data) % WORD_BYTES:
        raise BadLength(f"frame of {len(data)} bytes")
    if data[:16] != LINK_MAGIC or data[16:32] != LINK_START:
        raise BadFraming("missing MAGIC/START words")
    header, payload, footer = data[32:48], data[48:-16], data[-16:]
    _check_payload(payload)
    meta, received = footer[:FOOTER_META_BYTES], int.from_bytes(footer[FOOTER_META_BYTES:], "little")
    expected = crc32(header + payload + meta)
    if expected != received:
        raise CrcMismatch(expected, received)
    return PacketFrame(header, payload, meta, received)


def parity_of(word: int) -> int:
    """XOR of bits 0..126."""
    return bin(word & _LOW127).count("1") & 1


def parity_set(word: int) -> int:
    if word < 0 or word >> 128:
        raise ValueError("not a 128-bit word")
    return (word & _LOW127) | parity_of(word) << PARITY_BIT


def parity_ok(word: int) -> bool:
    return (word >> PARITY_BIT & 1) == parity_of(word)


def first_parity_error(words: Iterable[int]) -> Optional[int]:
    for i, w in enumerate(words):
        if not parity_ok(w):
            return i
    return None


def parity_check(words: Iterable[int]) -> None:
    """Raise :class:`ParityError` at the first word whose bit 127 is wrong."""
    for i, w in enumerate(words):
        if not parity_ok(w):
            raise ParityError(i, w)


def payload_words(payload: bytes) -> list[int]:
    _check_payload(payload)
    return [int.from_bytes(payload[i:i + WORD_BYTES], "little") for i in range(0, len(payload), WORD_BYTES)]


def words_to_payload(words: Sequence[int]) -> bytes:
    return b"".join(w.to_bytes(WORD_BYTES, "little") for w in words)


def parity_set_payload(payload: bytes) -> bytes:
    return words_to_payload([parity_set(w) for w in payload_words(payload)])


def parity_check_payload(payload: bytes) -> None:
    parity_check(payload_words(payload))
