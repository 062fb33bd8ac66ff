"""Watchdog registers, LiFaMa diagnostic messages and the DNP register map.

Every register is a frozen dataclass with ``to_word()`` / ``from_word()``.
Reserved (spare) bits are written as zero and ignored when decoding.
Multi-byte images are serialized little-endian (see :func:`word_to_bytes`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Iterable, Mapping, Optional

WORD32_MASK = 0xFFFF_FFFF
WORD128_MASK = (1 << 128) - 1


class InvalidStatusPattern(ValueError):
    """A 2-bit status field carried the reserved pattern ``11``."""

    def __init__(self, field_name: str, word: int):
        super().__init__(f"field {field_name!r} holds reserved pattern 0b11 in word 0x{word:08X}")
        self.field_name = field_name
        self.word = word


class Status(IntEnum):
    """Two-bit health code shared by components (normal/sick/broken) and sensors."""

    NORMAL = 0
    SICK = 1
    BROKEN = 2
    # sensor vocabulary for the same encodings
    WARNING = 1
    ALARM = 2

    @property
    def label(self) -> str:
        return self.name.lower()


class Direction(Enum):
    """Torus port, with the axis index and the sign of the step."""

    XP = ("X+", 0, +1)
    XM = ("X-", 0, -1)
    YP = ("Y+", 1, +1)
    YM = ("Y-", 1, -1)
    ZP = ("Z+", 2, +1)
    ZM = ("Z-", 2, -1)

    def __init__(self, label: str, axis: int, sign: int):
        self.label = label
        self.axis = axis
        self.sign = sign

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]

    @classmethod
    def parse(cls, text: str) -> "Direction":
        for d in cls:
            if d.label == text or d.name == text:
                return d
        raise ValueError(f"unknown direction {text!r}")

    def __str__(self) -> str:
        return self.label


_OPPOSITE = {
    Direction.XP: Direction.XM, Direction.XM: Direction.XP,
    Direction.YP: Direction.YM, Direction.YM: Direction.YP,
    Direction.ZP: Direction.ZM, Direction.ZM: Direction.ZP,
}

# Ordering used by the DWR/LDM bit layouts (lowest bits first).
FIELD_ORDER = (Direction.ZM, Direction.ZP, Direction.YM, Direction.YP, Direction.XM, Direction.XP)
# Ordering of the six Remote Fault Descriptor words.
RFD_ORDER = (Direction.XP, Direction.XM, Direction.YP, Direction.YM, Direction.ZP, Direction.ZM)

ALL_NORMAL_LINKS = tuple(Status.NORMAL for _ in Direction)


def _get2(word: int, lsb: int, name: str) -> Status:
    bits = (word >> lsb) & 0b11
    if bits == 0b11:
        raise InvalidStatusPattern(name, word)
    return Status(bits)


def _check_word(word: int, bits: int = 32) -> None:
    if not isinstance(word, int) or word < 0 or word >> bits:
        raise ValueError(f"not a {bits}-bit word: {word!r}")


def _links_tuple(links: Mapping[Direction, Status] | Iterable[Status]) -> tuple[Status, ...]:
    if isinstance(links, Mapping):
        return tuple(Status(links.get(d, Status.NORMAL)) for d in _DIRS)
    if type(links) is tuple and len(links) == 6 and all(type(s) is Status for s in links):
        return links
    out = tuple(Status(s) for s in links)
    if len(out) != len(_DIRS):
        raise ValueError("exactly six link statuses are required")
    return out


def _encode_links(links: tuple[Status, ...], lsb: int) -> int:
    word = 0
    for i, k in enumerate(_FIELD_POS):
        word |= int(links[k]) << (lsb + 2 * i)
    return word


def _decode_links(word: int, lsb: int) -> tuple[Status, ...]:
    out = [Status.NORMAL] * 6
    for i, (d, k) in enumerate(zip(FIELD_ORDER, _FIELD_POS)):
        out[k] = _get2(word, lsb + 2 * i, f"link {d.label}")
    return tuple(out)


_DIRS = tuple(Direction)
_DIR_INDEX = {d: i for i, d in enumerate(_DIRS)}
_FIELD_POS = tuple(_DIR_INDEX[d] for d in FIELD_ORDER)


def d_index(d: Direction) -> int:
    """Position of ``d`` in the canonical per-direction tuples (X+, X-, Y+, Y-, Z+, Z-)."""
    return _DIR_INDEX[d]


@dataclass(frozen=True)
class DnpWatchdogRegister:
    """DWR: local DNP health, neighbour-host failure flags and the valid bit."""

    valid: bool = False
    failed_neighbours: frozenset = field(default_factory=frozenset)
    dnp_core: Status = Status.NORMAL
    current: Status = Status.NORMAL
    voltage: Status = Status.NORMAL
    temperature: Status = Status.NORMAL
    links: tuple = ALL_NORMAL_LINKS
    lifama_busy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "failed_neighbours", frozenset(self.failed_neighbours))
        object.__setattr__(self, "links", _links_tuple(self.links))
        for name in ("dnp_core", "current", "voltage", "temperature"):
            object.__setattr__(self, name, Status(getattr(self, name)))

    def link(self, d: Direction) -> Status:
        return self.links[d_index(d)]

    def with_link(self, d: Direction, status: Status) -> "DnpWatchdogRegister":
        links = list(self.links)
        links[d_index(d)] = Status(status)
        return replace(self, links=tuple(links))

    def to_word(self) -> int:
        word = int(self.valid)
        for i, d in enumerate(FIELD_ORDER):
            if d in self.failed_neighbours:
                word |= 1 << (1 + i)
        word |= int(self.dnp_core) << 7
        word |= int(self.current) << 9
        word |= int(self.voltage) << 11
        word |= int(self.temperature) << 13
        word |= _encode_links(self.links, 15)
        word |= int(self.lifama_busy) << 31
        return word

    @classmethod
    def from_word(cls, word: int) -> "DnpWatchdogRegister":
        _check_word(word)
        return cls(
            valid=bool(word & 1),
            failed_neighbours=frozenset(d for i, d in enumerate(FIELD_ORDER) if word >> (1 + i) & 1),
            dnp_core=_get2(word, 7, "dnp_core"),
            current=_get2(word, 9, "current"),
            voltage=_get2(word, 11, "voltage"),
            temperature=_get2(word, 13, "temperature"),
            links=_decode_links(word, 15),
            lifama_busy=bool(word >> 31 & 1),
        )


@dataclass(frozen=True)
class HostWatchdogRegister:
    """HWR: host health as seen by the Host Fault Manager."""

    valid: bool = False
    service_net: Status = Status.NORMAL
    memory: Status = Status.NORMAL
    peripheral: Status = Status.NORMAL
    send_ldm: bool = False

    def __post_init__(self):
        for name in ("service_net", "memory", "peripheral"):
            object.__setattr__(self, name, Status(getattr(self, name)))

    def to_word(self) -> int:
        return (
            int(self.valid)
            | int(self.service_net) << 1
            | int(self.memory) << 3
            | int(self.peripheral) << 5
            | int(self.send_ldm) << 31
        )

    @classmethod
    def from_word(cls, word: int) -> "HostWatchdogRegister":
        _check_word(word)
        return cls(
            valid=bool(word & 1),
            service_net=_get2(word, 1, "service_net"),
            memory=_get2(word, 3, "memory"),
            peripheral=_get2(word, 5, "peripheral"),
            send_ldm=bool(word >> 31 & 1),
        )


# (field name, lsb) for the scalar LDM fields
_LDM_SCALARS = (
    ("service_net", 0),
    ("memory", 2),
    ("peripheral", 4),
    ("dnp_core", 6),
    ("current", 8),
    ("voltage", 10),
    ("temperature", 12),
)


@dataclass(frozen=True)
class LifamaDiagnosticMessage:
    """32-bit node summary carried over the torus inside Credit words."""

    service_net: Status = Status.NORMAL
    memory: Status = Status.NORMAL
    peripheral: Status = Status.NORMAL
    dnp_core: Status = Status.NORMAL
    current: Status = Status.NORMAL
    voltage: Status = Status.NORMAL
    temperature: Status = Status.NORMAL
    links: tuple = ALL_NORMAL_LINKS
    valid: bool = True

    def __post_init__(self):
        object.__setattr__(self, "links", _links_tuple(self.links))
        for name, _ in _LDM_SCALARS:
            object.__setattr__(self, name, Status(getattr(self, name)))

    def link(self, d: Direction) -> Status:
        return self.links[d_index(d)]

    def fields(self) -> dict[str, Status]:
        """All status fields by name; links appear as ``link X+`` etc."""
        out = {name: getattr(self, name) for name, _ in _LDM_SCALARS}
        for d in Direction:
            out[f"link {d.label}"] = self.link(d)
        return out

    def worst(self) -> Status:
        return max(self.fields().values())

    def to_word(self) -> int:
        word = 0
        for name, lsb in _LDM_SCALARS:
            word |= int(getattr(self, name)) << lsb
        word |= _encode_links(self.links, 14)
        word |= int(self.valid) << 31
        return word

    @classmethod
    def from_word(cls, word: int) -> "LifamaDiagnosticMessage":
        _check_word(word)
        kwargs = {name: _get2(word, lsb, name) for name, lsb in _LDM_SCALARS}
        return cls(links=_decode_links(word, 14), valid=bool(word >> 31 & 1), **kwargs)


@dataclass(frozen=True)
class CreditLayout:
    """Where the FIFO occupancy and the embedded LDM live inside a 128-bit Credit.

    The exact offsets are not fixed by the hardware documentation; both
    are configurable but must not overlap.
    """

    occupancy_lsb: int = 0
    occupancy_width: int = 16
    ldm_lsb: int = 32

    def __post_init__(self):
        occ = range(self.occupancy_lsb, self.occupancy_lsb + self.occupancy_width)
        ldm = range(self.ldm_lsb, self.ldm_lsb + 32)
        if self.occupancy_width <= 0 or occ.stop > 128 or ldm.stop > 128 or self.occupancy_lsb < 0:
            raise ValueError("credit fields must fit into 128 bits")
        if set(occ) & set(ldm):
            raise ValueError("occupancy and LDM fields overlap")

    @property
    def occupancy_mask(self) -> int:
        return ((1 << self.occupancy_width) - 1) << self.occupancy_lsb

    @property
    def ldm_mask(self) -> int:
        return WORD32_MASK << self.ldm_lsb


DEFAULT_CREDIT_LAYOUT = CreditLayout()


def make_credit(occupancy: int, layout: CreditLayout = DEFAULT_CREDIT_LAYOUT) -> int:
    if occupancy < 0 or occupancy >> layout.occupancy_width:
        raise ValueError(f"occupancy {occupancy} does not fit in {layout.occupancy_width} bits")
    return occupancy << layout.occupancy_lsb


def credit_occupancy(credit: int, layout: CreditLayout = DEFAULT_CREDIT_LAYOUT) -> int:
    _check_word(credit, 128)
    return (credit & layout.occupancy_mask) >> layout.occupancy_lsb


def embed_ldm(msg: LifamaDiagnosticMessage | int, credit: int,
              layout: CreditLayout = DEFAULT_CREDIT_LAYOUT) -> int:
    """Place an LDM into the spare bits of ``credit``; every other bit is kept."""
    _check_word(credit, 128)
    word = msg if isinstance(msg, int) else msg.to_word()
    _check_word(word)
    return (credit & ~layout.ldm_mask & WORD128_MASK) | (word << layout.ldm_lsb)


def extract_ldm(credit: int, layout: CreditLayout = DEFAULT_CREDIT_LAYOUT) -> LifamaDiagnosticMessage:
    _check_word(credit, 128)
    return LifamaDiagnosticMessage.from_word((credit & layout.ldm_mask) >> layout.ldm_lsb)


@dataclass(frozen=True)
class RemoteFaultDescriptor:
    """Six neighbour-node status words, one LDM image per torus direction."""

    words: tuple = (0, 0, 0, 0, 0, 0)

    def __post_init__(self):
        words = tuple(self.words)
        if len(words) != 6:
            raise ValueError("a remote fault descriptor has six words")
        for w in words:
            _check_word(w)
            if w:
                LifamaDiagnosticMessage.from_word(w)  # validates the 2-bit fields
        object.__setattr__(self, "words", words)

    def word(self, d: Direction) -> int:
        return self.words[RFD_ORDER.index(d)]

    def get(self, d: Direction) -> Optional[LifamaDiagnosticMessage]:
        """Decoded report from direction ``d``; ``None`` when the slot is all-zero."""
        w = self.word(d)
        return LifamaDiagnosticMessage.from_word(w) if w else None

    def with_report(self, d: Direction, msg: Optional[LifamaDiagnosticMessage]) -> "RemoteFaultDescriptor":
        words = list(self.words)
        words[RFD_ORDER.index(d)] = msg.to_word() if msg is not None else 0
        return RemoteFaultDescriptor(tuple(words))

    def to_words(self) -> tuple[int, ...]:
        return self.words

    @classmethod
    def from_words(cls, words: Iterable[int]) -> "RemoteFaultDescriptor":
        return cls(tuple(words))


@dataclass(frozen=True)
class RegisterInfo:
    name: str
    offset: int   # byte offset in BAR5
    index: int    # register number in BAR5
    description: str


REGISTER_MAP: tuple[RegisterInfo, ...] = (
    RegisterInfo("RFD_XP", 0x44C, 19, "Remote fault descriptor +X"),
    RegisterInfo("RFD_XM", 0x450, 20, "Remote fault descriptor -X"),
    RegisterInfo("RFD_YP", 0x454, 21, "Remote fault descriptor +Y"),
    RegisterInfo("RFD_YM", 0x458, 22, "Remote fault descriptor -Y"),
    RegisterInfo("RFD_ZP", 0x45C, 23, "Remote fault descriptor +Z"),
    RegisterInfo("RFD_ZM", 0x460, 24, "Remote fault descriptor -Z"),
    RegisterInfo("TIMER", 0x464, 25, "Watchdog read/write periods"),
    RegisterInfo("MASK", 0x468, 26, "Mask or unmask fault signaling"),
    RegisterInfo("THRESHOLDS", 0x46C, 27, "Sensor normal/warning/alarm boundaries"),
    RegisterInfo("DWR", 0x474, 29, "DNP watchdog register"),
    RegisterInfo("HWR", 0x478, 30, "Host watchdog register"),
)

_BY_NAME = {r.name: r for r in REGISTER_MAP}
_BY_OFFSET = {r.offset: r for r in REGISTER_MAP}
_BY_INDEX = {r.index: r for r in REGISTER_MAP}


def lookup_register(key: str | int, *, by: str = "auto") -> RegisterInfo:
    """Find a register by name, BAR5 byte offset or register number.

    With ``by="auto"`` an int is tried as an offset first, then as an index.
    """
    if isinstance(key, str):
        return _BY_NAME[key.upper()]
    if by in ("auto", "offset") and key in _BY_OFFSET:
        return _BY_OFFSET[key]
    if by in ("auto", "index") and key in _BY_INDEX:
        return _BY_INDEX[key]
    raise KeyError(f"no register at {key!r}")


def rfd_register(d: Direction) -> RegisterInfo:
    return _BY_NAME["RFD_" + d.name]


def format_word(word: int, bits: int = 32) -> str:
    """Upper-case hex image: 8 digits for 32-bit words, 32 for 128-bit words."""
    _check_word(word, bits)
    return f"{word:0{bits // 4}X}"


def parse_word(text: str, bits: int = 32) -> int:
    word = int(text, 16)
    _check_word(word, bits)
    return word


def word_to_bytes(word: int, bits: int = 32) -> bytes:
    _check_word(word, bits)
    return word.to_bytes(bits // 8, "little")


def word_from_bytes(data: bytes) -> int:
    return int.from_bytes(data, "little")


def annotate(key: str | int, word: int) -> str:
    """Trace annotation such as ``DWR@0x474=00000001``."""
    reg = lookup_register(key)
    return f"{reg.name}@0x{reg.offset:03X}={format_word(word)}"
