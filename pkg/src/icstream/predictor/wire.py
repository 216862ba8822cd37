"""Line-framed JSON records shared by the remote client and servers.

One JSON object per UTF-8 line. Field order never matters and unknown
fields are ignored by both sides, so either end can extend the protocol
without breaking the other.
"""

from __future__ import annotations

import json
from typing import Optional, Tuple

PROTOCOL_VERSION = 1
OP_HELLO = "hello"
OP_PREDICT = "predict"

# hard per-record ceiling so a corrupt peer cannot balloon memory
MAX_LINE_BYTES = 64 * 1024 * 1024


def dump_record(obj: dict) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode("utf-8") + b"\n"


def parse_record(line: bytes) -> dict:
    record = json.loads(line.decode("utf-8"))
    if not isinstance(record, dict):
        raise ValueError(f"expected a JSON object, got {type(record).__name__}")
    return record


def read_record(reader) -> Optional[dict]:
    """Read one record from a buffered binary reader; None at EOF.

    Raises ValueError for oversized or non-JSON lines.
    """
    line = reader.readline(MAX_LINE_BYTES + 1)
    if not line:
        return None
    if len(line) > MAX_LINE_BYTES:
        raise ValueError("record exceeds the line-length ceiling")
    return parse_record(line)


def split_endpoint(endpoint: str) -> Tuple[str, int]:
    """Parse 'host:port' (optionally with a tcp:// prefix)."""
    value = endpoint
    if value.startswith("tcp://"):
        value = value[len("tcp://"):]
    host, _, port_text = value.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    return host, int(port_text)
