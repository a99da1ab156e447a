"""Wire-level message types, canonical serialization, and the transcript.

The protocol exchanges twelve messages across four phases; the first
message of each phase travels on the secure channel, everything else on
the public one. Transcript lines are canonical JSON objects (sorted
keys, hex-encoded byte strings) so two identically seeded runs produce
byte-identical files. The tuples carried inside ciphertexts use a
separate length-prefixed binary layout, decoded against a fixed schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import ClassVar

from .errors import MalformedMessage, StaleTimestamp
from .primitives import Ciphertext, Scalar

CHANNEL_SECURE = "secure"
CHANNEL_PUBLIC = "public"

ROLE_PATIENT = "P"
ROLE_HOSPITAL = "H"
ROLE_DOCTOR = "D"
ROLE_CLOUD = "C"

REPORT_KINDS = ("inspection", "sensor", "treatment")
_KIND_CODE = {k: i + 1 for i, k in enumerate(REPORT_KINDS)}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def _u32(n: int) -> bytes:
    return n.to_bytes(4, "big")


def encode_timestamp(millis: int) -> bytes:
    return millis.to_bytes(8, "big")


def check_freshness(now: int, sent: int, delta_ms: int) -> None:
    """Accept iff 0 <= now - sent <= delta_ms (inclusive at the bound)."""
    age = now - sent
    if age < 0 or age > delta_ms:
        raise StaleTimestamp(f"message age {age}ms outside [0, {delta_ms}]ms window")


# ── medical reports ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class MedicalReport:
    """A patient report: who it is about and an opaque payload."""

    kind: str       # inspection | sensor | treatment
    patient: bytes  # the subject's identity
    payload: bytes

    def __post_init__(self):
        if self.kind not in REPORT_KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")

    def encode(self) -> bytes:
        return (bytes([_KIND_CODE[self.kind]])
                + _u32(len(self.patient)) + self.patient
                + _u32(len(self.payload)) + self.payload)

    @classmethod
    def decode(cls, data: bytes) -> "MedicalReport":
        try:
            kind = _CODE_KIND[data[0]]
            off = 1
            n = int.from_bytes(data[off:off + 4], "big")
            patient = data[off + 4:off + 4 + n]
            if len(patient) != n:
                raise ValueError
            off += 4 + n
            n = int.from_bytes(data[off:off + 4], "big")
            payload = data[off + 4:off + 4 + n]
            if len(payload) != n or off + 4 + n != len(data):
                raise ValueError
        except (IndexError, KeyError, ValueError):
            raise MalformedMessage("bad report encoding") from None
        return cls(kind, patient, payload)


def encode_report_bundle(reports) -> bytes:
    out = bytearray([len(reports)])
    for report in reports:
        enc = report.encode()
        out += _u32(len(enc)) + enc
    return bytes(out)


def decode_report_bundle(data: bytes, expected: int):
    try:
        count = data[0]
    except IndexError:
        raise MalformedMessage("empty report bundle") from None
    if count != expected:
        raise MalformedMessage(f"expected {expected} reports, found {count}")
    reports = []
    off = 1
    for _ in range(count):
        if off + 4 > len(data):
            raise MalformedMessage("truncated report bundle")
        n = int.from_bytes(data[off:off + 4], "big")
        off += 4
        if off + n > len(data):
            raise MalformedMessage("truncated report bundle")
        reports.append(MedicalReport.decode(data[off:off + n]))
        off += n
    if off != len(data):
        raise MalformedMessage("trailing bytes in report bundle")
    return tuple(reports)


# ── schema-driven field codecs ──────────────────────────────────────────
# kinds: bytes (variable), scalar (32), digest (32), signature (64),
#        timestamp (8, unsigned ms), ciphertext (nonce|tag|body)

def _field_to_bytes(value, kind: str) -> bytes:
    if kind == "bytes":
        return bytes(value)
    if kind == "scalar":
        return value.to_bytes()
    if kind == "digest":
        if len(value) != 32:
            raise ValueError("digest must be 32 bytes")
        return bytes(value)
    if kind == "signature":
        if len(value) != 64:
            raise ValueError("signature must be 64 bytes")
        return bytes(value)
    if kind == "timestamp":
        return encode_timestamp(value)
    if kind == "ciphertext":
        return value.encode()
    raise ValueError(f"unknown field kind {kind!r}")


def _field_from_bytes(data: bytes, kind: str):
    try:
        if kind == "bytes":
            return bytes(data)
        if kind == "scalar":
            return Scalar.from_bytes(data)
        if kind == "digest":
            if len(data) != 32:
                raise ValueError
            return bytes(data)
        if kind == "signature":
            if len(data) != 64:
                raise ValueError
            return bytes(data)
        if kind == "timestamp":
            if len(data) != 8:
                raise ValueError
            return int.from_bytes(data, "big")
        if kind == "ciphertext":
            return Ciphertext.decode(data)
    except ValueError:
        raise MalformedMessage(f"bad {kind} field") from None
    raise MalformedMessage(f"unknown field kind {kind!r}")


class _Struct:
    """Length-prefixed binary layout shared by all schema'd payloads."""

    FIELDS: ClassVar[tuple] = ()

    def encode(self) -> bytes:
        out = bytearray()
        for name, kind in self.FIELDS:
            data = _field_to_bytes(getattr(self, name), kind)
            out += _u32(len(data)) + data
        return bytes(out)

    @classmethod
    def decode(cls, data: bytes):
        values = []
        off = 0
        for _name, kind in cls.FIELDS:
            if off + 4 > len(data):
                raise MalformedMessage(f"truncated {cls.__name__}")
            n = int.from_bytes(data[off:off + 4], "big")
            off += 4
            if off + n > len(data):
                raise MalformedMessage(f"truncated {cls.__name__}")
            values.append(_field_from_bytes(data[off:off + n], kind))
            off += n
        if off != len(data):
            raise MalformedMessage(f"trailing bytes in {cls.__name__}")
        return cls(*values)


# ── encrypted tuple payloads (one per ciphertext E1..E8) ────────────────

@dataclass(frozen=True)
class E1Body(_Struct):
    b: Scalar
    s1: bytes
    t_c2: int
    FIELDS = (("b", "scalar"), ("s1", "digest"), ("t_c2", "timestamp"))


@dataclass(frozen=True)
class E2Body(_Struct):
    id_p: bytes
    s2: bytes
    c_h: Ciphertext
    nid: bytes
    sig_h: bytes
    t_h3: int
    FIELDS = (("id_p", "bytes"), ("s2", "digest"), ("c_h", "ciphertext"),
              ("nid", "bytes"), ("sig_h", "signature"), ("t_h3", "timestamp"))


@dataclass(frozen=True)
class E3Body(_Struct):
    sig_h: bytes
    c_h: Ciphertext
    s3: bytes
    id_h: bytes
    c: Scalar
    t_c5: int
    FIELDS = (("sig_h", "signature"), ("c_h", "ciphertext"), ("s3", "digest"),
              ("id_h", "bytes"), ("c", "scalar"), ("t_c5", "timestamp"))


@dataclass(frozen=True)
class E4Body(_Struct):
    d: Scalar
    s4: bytes
    sig_p: bytes
    c_p: Ciphertext
    t_p3: int
    FIELDS = (("d", "scalar"), ("s4", "digest"), ("sig_p", "signature"),
              ("c_p", "ciphertext"), ("t_p3", "timestamp"))


@dataclass(frozen=True)
class E5Body(_Struct):
    sig_p: bytes
    sig_h: bytes
    id_p: bytes
    nid: bytes
    c_p: Ciphertext
    s: Scalar
    s5: bytes
    t_c8: int
    FIELDS = (("sig_p", "signature"), ("sig_h", "signature"), ("id_p", "bytes"),
              ("nid", "bytes"), ("c_p", "ciphertext"), ("s", "scalar"),
              ("s5", "digest"), ("t_c8", "timestamp"))


@dataclass(frozen=True)
class E6Body(_Struct):
    sig_d: bytes
    c_d: Ciphertext
    s6: bytes
    t_d3: int
    FIELDS = (("sig_d", "signature"), ("c_d", "ciphertext"),
              ("s6", "digest"), ("t_d3", "timestamp"))


@dataclass(frozen=True)
class E7Body(_Struct):
    id_d: bytes
    sig_d: bytes
    c_d: Ciphertext
    s7: bytes
    y: Scalar
    t_c11: int
    FIELDS = (("id_d", "bytes"), ("sig_d", "signature"), ("c_d", "ciphertext"),
              ("s7", "digest"), ("y", "scalar"), ("t_c11", "timestamp"))


@dataclass(frozen=True)
class E8Body(_Struct):
    c_e: Ciphertext
    s8: bytes
    t_p6: int
    FIELDS = (("c_e", "ciphertext"), ("s8", "digest"), ("t_p6", "timestamp"))


# ── the twelve wire messages ────────────────────────────────────────────

@dataclass(frozen=True)
class HupMsg1(_Struct):
    id_h: bytes
    a: Scalar
    t_h1: int
    FIELDS = (("id_h", "bytes"), ("a", "scalar"), ("t_h1", "timestamp"))


@dataclass(frozen=True)
class HupMsg2(_Struct):
    e1: Ciphertext
    t_c2: int
    FIELDS = (("e1", "ciphertext"), ("t_c2", "timestamp"))


@dataclass(frozen=True)
class HupMsg3(_Struct):
    e2: Ciphertext
    t_h3: int
    FIELDS = (("e2", "ciphertext"), ("t_h3", "timestamp"))


@dataclass(frozen=True)
class PupMsg1(_Struct):
    id_p: bytes
    nid: bytes
    t_p1: int
    FIELDS = (("id_p", "bytes"), ("nid", "bytes"), ("t_p1", "timestamp"))


@dataclass(frozen=True)
class PupMsg2(_Struct):
    e3: Ciphertext
    i_mask: Scalar
    t_c5: int
    FIELDS = (("e3", "ciphertext"), ("i_mask", "scalar"), ("t_c5", "timestamp"))


@dataclass(frozen=True)
class PupMsg3(_Struct):
    e4: Ciphertext
    t_p3: int
    FIELDS = (("e4", "ciphertext"), ("t_p3", "timestamp"))


@dataclass(frozen=True)
class TpMsg1(_Struct):
    id_d: bytes
    r: Scalar
    t_d1: int
    FIELDS = (("id_d", "bytes"), ("r", "scalar"), ("t_d1", "timestamp"))


@dataclass(frozen=True)
class TpMsg2(_Struct):
    e5: Ciphertext
    j_mask: Scalar
    t_c8: int
    FIELDS = (("e5", "ciphertext"), ("j_mask", "scalar"), ("t_c8", "timestamp"))


@dataclass(frozen=True)
class TpMsg3(_Struct):
    e6: Ciphertext
    t_d3: int
    FIELDS = (("e6", "ciphertext"), ("t_d3", "timestamp"))


@dataclass(frozen=True)
class CpMsg1(_Struct):
    id_p: bytes
    nid: bytes
    x: Scalar
    sn: Scalar
    t_p4: int
    FIELDS = (("id_p", "bytes"), ("nid", "bytes"), ("x", "scalar"),
              ("sn", "scalar"), ("t_p4", "timestamp"))


@dataclass(frozen=True)
class CpMsg2(_Struct):
    e7: Ciphertext
    t_c11: int
    FIELDS = (("e7", "ciphertext"), ("t_c11", "timestamp"))


@dataclass(frozen=True)
class CpMsg3(_Struct):
    e8: Ciphertext
    t_p6: int
    FIELDS = (("e8", "ciphertext"), ("t_p6", "timestamp"))


WIRE_MESSAGES = (HupMsg1, HupMsg2, HupMsg3, PupMsg1, PupMsg2, PupMsg3,
                 TpMsg1, TpMsg2, TpMsg3, CpMsg1, CpMsg2, CpMsg3)

# sender, receiver, channel for each message type
MESSAGE_ROUTE = {
    "HupMsg1": (ROLE_HOSPITAL, ROLE_CLOUD, CHANNEL_SECURE),
    "HupMsg2": (ROLE_CLOUD, ROLE_HOSPITAL, CHANNEL_PUBLIC),
    "HupMsg3": (ROLE_HOSPITAL, ROLE_CLOUD, CHANNEL_PUBLIC),
    "PupMsg1": (ROLE_PATIENT, ROLE_CLOUD, CHANNEL_SECURE),
    "PupMsg2": (ROLE_CLOUD, ROLE_PATIENT, CHANNEL_PUBLIC),
    "PupMsg3": (ROLE_PATIENT, ROLE_CLOUD, CHANNEL_PUBLIC),
    "TpMsg1": (ROLE_DOCTOR, ROLE_CLOUD, CHANNEL_SECURE),
    "TpMsg2": (ROLE_CLOUD, ROLE_DOCTOR, CHANNEL_PUBLIC),
    "TpMsg3": (ROLE_DOCTOR, ROLE_CLOUD, CHANNEL_PUBLIC),
    "CpMsg1": (ROLE_PATIENT, ROLE_CLOUD, CHANNEL_SECURE),
    "CpMsg2": (ROLE_CLOUD, ROLE_PATIENT, CHANNEL_PUBLIC),
    "CpMsg3": (ROLE_PATIENT, ROLE_CLOUD, CHANNEL_PUBLIC),
}

_BY_NAME = {cls.__name__: cls for cls in WIRE_MESSAGES}


@dataclass(frozen=True)
class ChannelMessage:
    """One transmission: routing metadata plus a typed payload."""

    sender: str
    receiver: str
    channel: str
    sent_at: int
    payload: object


def make_channel_message(payload, sent_at: int) -> ChannelMessage:
    name = type(payload).__name__
    sender, receiver, channel = MESSAGE_ROUTE[name]
    return ChannelMessage(sender, receiver, channel, sent_at, payload)


# ── JSON transcript encoding ────────────────────────────────────────────

def _json_value(value, kind: str):
    if kind == "timestamp":
        return value
    if kind == "ciphertext":
        return {"nonce": value.nonce.hex(), "body": value.body.hex(),
                "tag": value.tag.hex()}
    return _field_to_bytes(value, kind).hex()


def _value_from_json(raw, kind: str):
    try:
        if kind == "timestamp":
            if not isinstance(raw, int) or isinstance(raw, bool) or raw < 0:
                raise ValueError
            return raw
        if kind == "ciphertext":
            return Ciphertext(nonce=bytes.fromhex(raw["nonce"]),
                              body=bytes.fromhex(raw["body"]),
                              tag=bytes.fromhex(raw["tag"]))
        return _field_from_bytes(bytes.fromhex(raw), kind)
    except (ValueError, KeyError, TypeError, AttributeError):
        raise MalformedMessage(f"bad {kind} value in transcript") from None


def serialize(message: ChannelMessage) -> bytes:
    """Canonical JSON line for one channel message (no trailing newline)."""
    payload = message.payload
    record = {
        "from": message.sender,
        "to": message.receiver,
        "channel": message.channel,
        "sent_at": message.sent_at,
        "type": type(payload).__name__,
        "fields": {name: _json_value(getattr(payload, name), kind)
                   for name, kind in payload.FIELDS},
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":")).encode()


def deserialize(data: bytes) -> ChannelMessage:
    try:
        record = json.loads(data)
    except (ValueError, UnicodeDecodeError):
        raise MalformedMessage("transcript line is not valid JSON") from None
    if not isinstance(record, dict):
        raise MalformedMessage("transcript line is not an object")
    try:
        cls = _BY_NAME[record["type"]]
        raw_fields = record["fields"]
        sender = record["from"]
        receiver = record["to"]
        channel = record["channel"]
        sent_at = record["sent_at"]
    except (KeyError, TypeError):
        raise MalformedMessage("transcript line is missing required keys") from None
    if not isinstance(sent_at, int) or isinstance(sent_at, bool) or sent_at < 0:
        raise MalformedMessage("bad sent_at")
    if set(raw_fields) != {name for name, _ in cls.FIELDS}:
        raise MalformedMessage(f"field set mismatch for {cls.__name__}")
    values = [_value_from_json(raw_fields[name], kind) for name, kind in cls.FIELDS]
    return ChannelMessage(sender, receiver, channel, sent_at, cls(*values))


class Transcript:
    """Append-only record of every transmission in a session."""

    def __init__(self, messages=()):
        self._messages = list(messages)

    def append(self, message: ChannelMessage) -> None:
        self._messages.append(message)

    def __len__(self):
        return len(self._messages)

    def __iter__(self):
        return iter(self._messages)

    def __getitem__(self, index):
        return self._messages[index]

    def public_messages(self):
        return [m for m in self._messages if m.channel == CHANNEL_PUBLIC]

    def to_jsonl(self) -> bytes:
        return b"".join(serialize(m) + b"\n" for m in self._messages)

    @classmethod
    def from_jsonl(cls, data: bytes) -> "Transcript":
        messages = []
        for line in data.splitlines():
            if line.strip():
                messages.append(deserialize(line))
        return cls(messages)
