"""Cryptographic building blocks for the protocol simulator.

Group arithmetic runs on NIST P-256 through :mod:`tmisim.backend`
(compiled kernel when available, pure Python otherwise). Hashing is
SHA-256 over length-prefixed fields under a domain tag, so distinct
field lists can never collide by concatenation ambiguity. Symmetric
encryption is encrypt-then-MAC (SHA-256 counter keystream, HMAC-SHA256
tag): tampering any byte is detected, which the actors rely on to
terminate sessions. Signatures are ECDSA with deterministic (RFC 6979)
nonces so that identically seeded runs produce identical transcripts.

Everything here is deterministic given its inputs plus an explicitly
passed :class:`SeededRng`; nothing reads the wall clock or the OS
entropy pool. Not hardened against side channels - this is a protocol
simulator, not a TLS stack.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from . import backend
from .errors import AuthFailure, InvalidPoint

ORDER = backend.N

SCALAR_BYTES = 32
DIGEST_BYTES = 32
KEY_BYTES = 32
POINT_BYTES = 33
SIGNATURE_BYTES = 64
NONCE_BYTES = 16
TAG_BYTES = 32


def _u32(n: int) -> bytes:
    return n.to_bytes(4, "big")


# ── deterministic randomness ────────────────────────────────────────────

class SeededRng:
    """Deterministic byte stream: SHA-256 in counter mode over a derived key.

    Every random draw in the simulator flows through one of these, so a
    scenario seed fixes an entire run byte-for-byte. ``fork`` derives an
    independent substream; equal (seed, label) pairs give equal streams.
    """

    __slots__ = ("_key", "_counter")

    def __init__(self, seed: int | bytes, label: str | bytes = b""):
        if isinstance(label, str):
            label = label.encode()
        if isinstance(seed, int):
            if seed < 0:
                raise ValueError("seed must be non-negative")
            seed = seed.to_bytes((seed.bit_length() + 7) // 8 or 1, "big")
        self._key = hashlib.sha256(
            b"tmisim.rng\x00" + _u32(len(seed)) + seed + label
        ).digest()
        self._counter = 0

    def take(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
        return bytes(out[:n])

    def fork(self, label: str | bytes) -> "SeededRng":
        if isinstance(label, str):
            label = label.encode()
        child = object.__new__(SeededRng)
        child._key = hashlib.sha256(b"tmisim.fork\x00" + self._key + label).digest()
        child._counter = 0
        return child


# ── scalars and curve points ────────────────────────────────────────────

class Scalar:
    """Integer modulo the group order; 32-byte big-endian on the wire."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        value = int(value)
        if not 0 <= value < ORDER:
            raise ValueError("scalar out of range")
        self.value = value

    @classmethod
    def from_bytes(cls, data: bytes) -> "Scalar":
        if len(data) != SCALAR_BYTES:
            raise ValueError(f"need {SCALAR_BYTES} bytes, got {len(data)}")
        return cls(int.from_bytes(data, "big"))

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_BYTES, "big")

    def is_zero(self) -> bool:
        return self.value == 0

    def mul_mod(self, other: "Scalar") -> "Scalar":
        return Scalar(self.value * other.value % ORDER)

    def __eq__(self, other):
        return isinstance(other, Scalar) and self.value == other.value

    def __hash__(self):
        return hash(("Scalar", self.value))

    def __repr__(self):
        return f"Scalar(0x{self.value:x})"


class GroupPoint:
    """Affine point on the curve; 33-byte compressed encoding."""

    __slots__ = ("x", "y")

    def __init__(self, x: int, y: int):
        if not backend.is_on_curve(x, y):
            raise InvalidPoint("point is not on the curve")
        self.x = x
        self.y = y

    def encode(self) -> bytes:
        prefix = 0x03 if self.y & 1 else 0x02
        return bytes([prefix]) + self.x.to_bytes(32, "big")

    @classmethod
    def decode(cls, data: bytes) -> "GroupPoint":
        if len(data) != POINT_BYTES or data[0] not in (0x02, 0x03):
            raise InvalidPoint("bad point encoding")
        x = int.from_bytes(data[1:], "big")
        p = backend.P
        if x >= p:
            raise InvalidPoint("x out of range")
        rhs = (x * x * x - 3 * x + backend.B) % p
        y = pow(rhs, (p + 1) // 4, p)  # p = 3 mod 4
        if y * y % p != rhs:
            raise InvalidPoint("x is not on the curve")
        if (y & 1) != (data[0] & 1):
            y = p - y
        return cls(x, y)

    def __eq__(self, other):
        return isinstance(other, GroupPoint) and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash(("GroupPoint", self.x, self.y))

    def __repr__(self):
        return f"GroupPoint(0x{self.x:x}, 0x{self.y:x})"


def base_point() -> GroupPoint:
    return GroupPoint(backend.GX, backend.GY)


def ec_mul(k: Scalar, point: GroupPoint) -> GroupPoint:
    if k.is_zero():
        raise ValueError("scalar must be nonzero")
    x, y = backend.scalar_mult(k.value, point.x, point.y)
    return GroupPoint(x, y)


def ec_base_mul(k: Scalar) -> GroupPoint:
    if k.is_zero():
        raise ValueError("scalar must be nonzero")
    x, y = backend.base_mult(k.value)
    return GroupPoint(x, y)


def shared_point(my_ephemeral: Scalar, their_public_ephemeral: GroupPoint) -> GroupPoint:
    """Diffie-Hellman: my scalar times their public point.

    shared_point(a, b*G) == shared_point(b, a*G) == (a*b)*G.
    """
    if not backend.is_on_curve(their_public_ephemeral.x, their_public_ephemeral.y):
        raise InvalidPoint("peer point is not on the curve")
    return ec_mul(my_ephemeral, their_public_ephemeral)


def dh_point(mine: Scalar, theirs: Scalar) -> GroupPoint:
    # both sides of this protocol hold both scalars, so the shared point
    # collapses to a single fixed-base multiplication
    return ec_base_mul(mine.mul_mod(theirs))


def random_scalar(rng: SeededRng) -> Scalar:
    """Uniform nonzero scalar by rejection sampling from the stream."""
    while True:
        v = int.from_bytes(rng.take(SCALAR_BYTES), "big")
        if 0 < v < ORDER:
            return Scalar(v)


@dataclass(frozen=True)
class KeyPair:
    private: Scalar
    public: GroupPoint

    @classmethod
    def generate(cls, rng: SeededRng) -> "KeyPair":
        private = random_scalar(rng)
        return cls(private, ec_base_mul(private))


# ── hashing and key derivation ──────────────────────────────────────────

def hash_fields(domain_tag: bytes, parts) -> bytes:
    """SHA-256 over a domain tag plus length-prefixed parts.

    The length prefixes make the framing injective: ["ab","c"] and
    ["a","bc"] hash differently. The tag separates uses (verifier
    digests, key derivations, masks, ...) from one another.
    """
    if not parts:
        raise ValueError("parts must be non-empty")
    if len(domain_tag) > 255:
        raise ValueError("domain tag too long")
    h = hashlib.sha256()
    h.update(bytes([len(domain_tag)]))
    h.update(domain_tag)
    for part in parts:
        h.update(_u32(len(part)))
        h.update(part)
    return h.digest()


def derive_key(source) -> bytes:
    """Map a digest or a scalar to a symmetric key (kind-separated)."""
    if isinstance(source, Scalar):
        kind, data = b"scalar", source.to_bytes()
    elif isinstance(source, (bytes, bytearray)):
        kind, data = b"digest", bytes(source)
    else:
        raise TypeError(f"cannot derive a key from {type(source).__name__}")
    return hash_fields(b"kdf", [kind, data])


# ── authenticated symmetric encryption ──────────────────────────────────

@dataclass(frozen=True)
class Ciphertext:
    nonce: bytes
    body: bytes
    tag: bytes

    def encode(self) -> bytes:
        return self.nonce + self.tag + self.body

    @classmethod
    def decode(cls, data: bytes) -> "Ciphertext":
        if len(data) < NONCE_BYTES + TAG_BYTES:
            raise ValueError("ciphertext too short")
        return cls(
            nonce=data[:NONCE_BYTES],
            tag=data[NONCE_BYTES:NONCE_BYTES + TAG_BYTES],
            body=data[NONCE_BYTES + TAG_BYTES:],
        )


def _keystream(enc_key: bytes, nonce: bytes, length: int) -> bytes:
    out = bytearray()
    block = 0
    while len(out) < length:
        out += hashlib.sha256(enc_key + nonce + block.to_bytes(8, "big")).digest()
        block += 1
    return bytes(out[:length])


def _subkeys(key: bytes):
    return (
        hmac.new(key, b"enc", hashlib.sha256).digest(),
        hmac.new(key, b"mac", hashlib.sha256).digest(),
    )


def sym_encrypt(key: bytes, plaintext: bytes, rng: SeededRng) -> Ciphertext:
    enc_key, mac_key = _subkeys(key)
    nonce = rng.take(NONCE_BYTES)
    body = bytes(a ^ b for a, b in zip(plaintext, _keystream(enc_key, nonce, len(plaintext))))
    tag = hmac.new(mac_key, nonce + body, hashlib.sha256).digest()
    return Ciphertext(nonce=nonce, body=body, tag=tag)


def sym_decrypt(key: bytes, ct: Ciphertext) -> bytes:
    enc_key, mac_key = _subkeys(key)
    expected = hmac.new(mac_key, ct.nonce + ct.body, hashlib.sha256).digest()
    if not hmac.compare_digest(expected, ct.tag):
        raise AuthFailure("ciphertext failed authentication")
    return bytes(a ^ b for a, b in zip(ct.body, _keystream(enc_key, ct.nonce, len(ct.body))))


# ── signatures (ECDSA, deterministic nonces per RFC 6979) ───────────────

def _nonce_candidates(private: int, digest: bytes):
    # HMAC-DRBG instantiation from RFC 6979; qlen == hlen == 256 so the
    # bits2int conversions are identity maps on 32-byte strings.
    h1_int = int.from_bytes(digest, "big") % ORDER
    seed = private.to_bytes(32, "big") + h1_int.to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + seed, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + seed, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        yield int.from_bytes(v, "big")
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def sign(private: Scalar, digest: bytes) -> bytes:
    """ECDSA signature (r || s, 64 bytes) over a 32-byte digest."""
    if len(digest) != DIGEST_BYTES:
        raise ValueError("sign expects a 32-byte digest")
    e = int.from_bytes(digest, "big") % ORDER
    for k in _nonce_candidates(private.value, digest):
        if not 0 < k < ORDER:
            continue
        rx, _ = backend.base_mult(k)
        r = rx % ORDER
        if r == 0:
            continue
        s = pow(k, -1, ORDER) * (e + r * private.value) % ORDER
        if s == 0:
            continue
        return r.to_bytes(32, "big") + s.to_bytes(32, "big")


def verify(public: GroupPoint, digest: bytes, sig: bytes) -> bool:
    """True iff sig is a valid signature on digest under public."""
    if len(sig) != SIGNATURE_BYTES or len(digest) != DIGEST_BYTES:
        return False
    r = int.from_bytes(sig[:32], "big")
    s = int.from_bytes(sig[32:], "big")
    if not (0 < r < ORDER and 0 < s < ORDER):
        return False
    if not backend.is_on_curve(public.x, public.y):
        return False
    e = int.from_bytes(digest, "big") % ORDER
    w = pow(s, -1, ORDER)
    point = backend.double_base_mult(e * w % ORDER, r * w % ORDER, public.x, public.y)
    return point is not None and point[0] % ORDER == r


# ── serial-number masking ───────────────────────────────────────────────

def mask_serial(sn: Scalar, digest: bytes) -> Scalar:
    """Hide a serial by adding the digest (as an integer) mod the order."""
    return Scalar((sn.value + int.from_bytes(digest, "big")) % ORDER)


def unmask_serial(masked: Scalar, digest: bytes) -> Scalar:
    return Scalar((masked.value - int.from_bytes(digest, "big")) % ORDER)
