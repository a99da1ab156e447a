import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmisim import primitives as pr
from tmisim.errors import AuthFailure, InvalidPoint


def _rng(seed=7, label="test"):
    return pr.SeededRng(seed, label)


# ── hash_fields ─────────────────────────────────────────────────────────

class TestHashFields:
    def test_deterministic(self):
        parts = [b"one", b"two"]
        assert pr.hash_fields(b"tag", parts) == pr.hash_fields(b"tag", parts)

    def test_framing_injectivity_pair(self):
        assert pr.hash_fields(b"t", [b"ab", b"c"]) != pr.hash_fields(b"t", [b"a", b"bc"])

    def test_domain_tag_separates(self):
        assert pr.hash_fields(b"t1", [b"x"]) != pr.hash_fields(b"t2", [b"x"])

    def test_fixed_vector(self):
        # expected value recomputed here with the documented framing,
        # straight from hashlib
        tag, parts = b"verifier", [b"alpha", b"beta", b"\x00\x01\x02"]
        h = hashlib.sha256()
        h.update(bytes([len(tag)]) + tag)
        for p in parts:
            h.update(len(p).to_bytes(4, "big") + p)
        expected = h.digest()
        assert expected.hex() == (
            "5fbf3396a6b1a88722727dccb0d7c21db2a2238252b828e1bd4bd0928ee0728c")
        assert pr.hash_fields(tag, parts) == expected

    def test_empty_parts_rejected(self):
        with pytest.raises(ValueError):
            pr.hash_fields(b"t", [])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.binary(max_size=6), min_size=1, max_size=4),
           st.lists(st.binary(max_size=6), min_size=1, max_size=4))
    def test_collision_requires_equal_part_lists(self, left, right):
        if pr.hash_fields(b"t", left) == pr.hash_fields(b"t", right):
            assert left == right


# ── derive_key ──────────────────────────────────────────────────────────

class TestDeriveKey:
    def test_deterministic(self):
        d = hashlib.sha256(b"d").digest()
        assert pr.derive_key(d) == pr.derive_key(d)

    def test_source_kind_separation(self):
        # a digest and a scalar with identical canonical bytes must not
        # collapse to the same key
        raw = bytes(range(32))
        assert pr.derive_key(raw) != pr.derive_key(pr.Scalar.from_bytes(raw))

    def test_fixed_vector(self):
        assert pr.derive_key(bytes(range(32))).hex() == (
            "545e6bd108dd52176aff35e83f78f46d09653f04ca7ee74b1582521c0a02ac56")

    def test_rejects_other_types(self):
        with pytest.raises(TypeError):
            pr.derive_key(1234)


# ── symmetric cipher ────────────────────────────────────────────────────

class TestSymCipher:
    def test_roundtrip(self):
        key = pr.derive_key(hashlib.sha256(b"k").digest())
        ct = pr.sym_encrypt(key, b"attack at dawn", _rng())
        assert pr.sym_decrypt(key, ct) == b"attack at dawn"

    def test_wrong_key_fails(self):
        key = pr.derive_key(hashlib.sha256(b"k1").digest())
        other = pr.derive_key(hashlib.sha256(b"k2").digest())
        ct = pr.sym_encrypt(key, b"secret", _rng())
        with pytest.raises(AuthFailure):
            pr.sym_decrypt(other, ct)

    def test_every_byte_flip_detected(self):
        key = pr.derive_key(hashlib.sha256(b"k").digest())
        ct = pr.sym_encrypt(key, b"twenty-byte message.", _rng())
        raw = ct.encode()
        for offset in range(len(raw)):
            tampered = bytearray(raw)
            tampered[offset] ^= 0x01
            with pytest.raises(AuthFailure):
                pr.sym_decrypt(key, pr.Ciphertext.decode(bytes(tampered)))

    @settings(max_examples=40, deadline=None)
    @given(st.binary(max_size=200))
    def test_roundtrip_property(self, plaintext):
        key = pr.derive_key(hashlib.sha256(b"prop").digest())
        assert pr.sym_decrypt(key, pr.sym_encrypt(key, plaintext, _rng())) == plaintext

    def test_ciphertext_encoding_roundtrip(self):
        key = pr.derive_key(hashlib.sha256(b"k").digest())
        ct = pr.sym_encrypt(key, b"payload", _rng())
        assert pr.Ciphertext.decode(ct.encode()) == ct


# ── group operations ────────────────────────────────────────────────────

class TestGroupOps:
    def test_identity_scalar(self):
        q = pr.ec_base_mul(pr.Scalar(987654321))
        assert pr.shared_point(pr.Scalar(1), q) == q

    def test_commutativity_100_pairs(self):
        rng = _rng(label="dh")
        for _ in range(100):
            a = pr.random_scalar(rng)
            b = pr.random_scalar(rng)
            left = pr.shared_point(a, pr.ec_base_mul(b))
            right = pr.shared_point(b, pr.ec_base_mul(a))
            assert left == right
            assert left == pr.dh_point(a, b)

    def test_fixed_shared_point(self):
        # expected encoding from an independent big-integer oracle run
        a = pr.Scalar(0xA1B2C3D4E5F60718293A4B5C6D7E8F9011223344556677889900AABBCCDDEEFF)
        b = pr.Scalar(0x0F1E2D3C4B5A69788796A5B4C3D2E1F0FFEEDDCCBBAA99887766554433221100)
        shared = pr.shared_point(a, pr.ec_base_mul(b))
        assert shared.encode().hex() == (
            "03cf22169d6a5b69ef530951d9b44b9d331780223d3ccc298f2b686bdd66f16315")

    def test_zero_scalar_rejected(self):
        with pytest.raises(ValueError):
            pr.ec_mul(pr.Scalar(0), pr.base_point())

    def test_off_curve_point_rejected(self):
        with pytest.raises(InvalidPoint):
            pr.GroupPoint(pr.base_point().x, pr.base_point().y + 1)

    def test_point_encoding_roundtrip(self):
        rng = _rng(label="pts")
        for _ in range(20):
            q = pr.ec_base_mul(pr.random_scalar(rng))
            assert pr.GroupPoint.decode(q.encode()) == q

    def test_decode_rejects_garbage(self):
        with pytest.raises(InvalidPoint):
            pr.GroupPoint.decode(b"\x04" + bytes(32))
        with pytest.raises(InvalidPoint):
            pr.GroupPoint.decode(b"\x02" + b"\xff" * 32)


# ── signatures ──────────────────────────────────────────────────────────

class TestSignatures:
    def test_roundtrip(self):
        kp = pr.KeyPair.generate(_rng(label="sig"))
        digest = hashlib.sha256(b"doc").digest()
        assert pr.verify(kp.public, digest, pr.sign(kp.private, digest))

    def test_wrong_public_key(self):
        rng = _rng(label="sig2")
        kp1, kp2 = pr.KeyPair.generate(rng), pr.KeyPair.generate(rng)
        digest = hashlib.sha256(b"doc").digest()
        assert not pr.verify(kp2.public, digest, pr.sign(kp1.private, digest))

    def test_wrong_digest(self):
        kp = pr.KeyPair.generate(_rng(label="sig3"))
        sig = pr.sign(kp.private, hashlib.sha256(b"doc").digest())
        assert not pr.verify(kp.public, hashlib.sha256(b"other").digest(), sig)

    def test_malformed_signature(self):
        kp = pr.KeyPair.generate(_rng(label="sig4"))
        digest = hashlib.sha256(b"doc").digest()
        assert not pr.verify(kp.public, digest, b"\x00" * 64)
        assert not pr.verify(kp.public, digest, b"short")

    def test_deterministic_nonce_vectors(self):
        # published deterministic-ECDSA vectors for this curve and hash
        priv = pr.Scalar(0xC9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721)
        pub = pr.ec_base_mul(priv)
        assert pub.x == 0x60FED4BA255A9D31C961EB74C6356D68C049B8923B61FA6CE669622E60F29FB6
        sig = pr.sign(priv, hashlib.sha256(b"sample").digest())
        assert sig.hex().upper() == (
            "EFD48B2AACB6A8FD1140DD9CD45E81D69D2C877B56AAF991C34D0EA84EAF3716"
            "F7CB1C942D657C41D436C7A1B6E29F65F3E900DBB9AFF4064DC4AB2F843ACDA8")
        sig = pr.sign(priv, hashlib.sha256(b"test").digest())
        assert sig.hex().upper() == (
            "F1ABB023518351CD71D881567B1EA663ED3EFCF6C5132B354F28D3B0B7D38367"
            "019F4113742A2B14BD25926B49C649155F267E60D3814B4C0CC84250E46F0083")


# ── masking ─────────────────────────────────────────────────────────────

class TestMasking:
    def test_zero_serial(self):
        d = hashlib.sha256(b"mask").digest()
        masked = pr.mask_serial(pr.Scalar(0), d)
        assert masked.value == int.from_bytes(d, "big") % pr.ORDER

    def test_roundtrip_1000(self):
        rng = _rng(label="mask")
        for _ in range(1000):
            sn = pr.random_scalar(rng)
            d = rng.take(32)
            assert pr.unmask_serial(pr.mask_serial(sn, d), d) == sn

    def test_mask_moves_value(self):
        d = hashlib.sha256(b"nonzero").digest()
        sn = pr.Scalar(12345)
        assert pr.mask_serial(sn, d) != sn

    def test_fixed_masked_value(self):
        # independent modular-arithmetic recomputation
        sn = pr.Scalar(0xDEADBEEF)
        d = hashlib.sha256(b"fixed").digest()
        expected = (0xDEADBEEF + int.from_bytes(d, "big")) % pr.ORDER
        assert pr.mask_serial(sn, d).value == expected


# ── seeded randomness ───────────────────────────────────────────────────

class TestSeededRng:
    def test_same_seed_same_sequence(self):
        a = [pr.random_scalar(_rng(1, "x")).value for _ in range(1)]
        b = [pr.random_scalar(_rng(1, "x")).value for _ in range(1)]
        assert a == b

    def test_different_labels_diverge(self):
        assert pr.random_scalar(_rng(1, "x")) != pr.random_scalar(_rng(1, "y"))

    def test_fork_is_deterministic(self):
        r1 = _rng(5).fork("child")
        r2 = _rng(5).fork("child")
        assert r1.take(48) == r2.take(48)

    def test_scalars_in_range(self):
        rng = _rng(label="range")
        for _ in range(200):
            value = pr.random_scalar(rng).value
            assert 1 <= value < pr.ORDER

    def test_golden_sequence(self):
        # recorded output of this generator; a change here means seeded
        # runs are no longer reproducible across versions
        rng = pr.SeededRng(1, "golden")
        seq = [pr.random_scalar(rng).to_bytes().hex() for _ in range(3)]
        assert seq == [
            "9104bc5bca5425f4c4c10334e20593b22d0b55e66bb8bc3eb3639838267ac597",
            "2f8ca780b9dde4f414914d00c8ddac66b0726919070adb024df3c5e2ab28e21d",
            "c53b3df7375e388b12779b5fba4cb2ca56c538c3e9a25376ac0f24522de408b6",
        ]

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError):
            pr.SeededRng(-1)
