"""Bit-exact codecs for LO|FA|MO registers, completion events and link frames."""

from .completion import (
    TAG_EQ,
    TAG_NONE,
    Command1,
    CompletionEvent,
    CompletionSource,
    UnknownMagic,
    magic_word,
)
from .fixtures import check_fixtures, default_fixture_path, fixture_count, load_fixtures, register_fields
from .frame import (
    MAX_PAYLOAD,
    PROTOCOL_OVERHEAD,
    BadFraming,
    BadLength,
    CrcMismatch,
    PacketFrame,
    ParityError,
    build_frame,
    crc32,
    first_parity_error,
    encode_frame,
    parity_check,
    parity_check_payload,
    parity_set,
    parity_set_payload,
    parse_frame,
)
from .registers import (
    DEFAULT_CREDIT_LAYOUT,
    FIELD_ORDER,
    REGISTER_MAP,
    RFD_ORDER,
    CreditLayout,
    Direction,
    DnpWatchdogRegister,
    HostWatchdogRegister,
    InvalidStatusPattern,
    LifamaDiagnosticMessage,
    RegisterInfo,
    RemoteFaultDescriptor,
    Status,
    annotate,
    credit_occupancy,
    embed_ldm,
    extract_ldm,
    format_word,
    lookup_register,
    make_credit,
    parse_word,
    rfd_register,
    word_from_bytes,
    word_to_bytes,
)

__all__ = [name for name in dir() if not name.startswith("_")]
