"""
Tests for the Paillier cryptosystem.

Exhaustive oracles run on the N = 15 toy key; sampled oracles use
seeded 64-bit keys.
"""

import random

import pytest

from spamcraft.crypto.paillier import (
    Ciphertext,
    KeyPair,
    PublicKey,
    decrypt,
    decrypt_signed,
    encrypt,
    encrypt_many,
    encrypt_signed,
    hom_add,
    hom_add_plain,
    hom_scale,
    keygen,
    keypair_from_primes,
    rerandomize,
)
from spamcraft.crypto.serialization import (
    decode_int,
    decode_ints,
    encode_int,
    encode_ints,
    keypair_from_bytes,
    keypair_to_bytes,
    load_keypair,
    public_key_from_bytes,
    public_key_to_bytes,
    save_keypair,
)
from spamcraft.exceptions import CryptoError, SpamcraftError


class TestKeyGeneration:
    """Key generation and the toy key."""

    def test_toy_key_from_primes(self, toy_keys):
        assert toy_keys.public.n == 15
        assert toy_keys.public.g == 16
        assert toy_keys.private.lambda_key == 4
        assert toy_keys.private.mu == 4

    def test_equal_primes_rejected(self):
        with pytest.raises(CryptoError):
            keypair_from_primes(7, 7)

    def test_generated_key_size(self, keys256):
        assert keys256.public.n.bit_length() == 256
        assert keys256.public.bits == 256
        assert keys256.public.g == keys256.public.n + 1

    def test_keygen_is_reproducible_from_seed(self):
        a = keygen(64, random.Random(5))
        b = keygen(64, random.Random(5))
        assert a.public == b.public

    @pytest.mark.parametrize("bits", [8, 15, 33])
    def test_invalid_sizes(self, bits):
        with pytest.raises(ValueError):
            keygen(bits)

    def test_public_key_rejects_foreign_generator(self):
        with pytest.raises(CryptoError):
            PublicKey(n=15, g=17, bits=4)

    def test_private_key_repr_hides_fields(self, toy_keys):
        assert "4" not in repr(toy_keys.private)


class TestEncryption:
    """Encryption, decryption and semantic security surrogates."""

    def test_exhaustive_roundtrip_toy_key(self, toy_keys, rng):
        pk, sk = toy_keys.public, toy_keys.private
        for m in range(15):
            for _ in range(5):
                assert decrypt(sk, pk, encrypt(pk, m, rng=rng)) == m

    def test_zero_roundtrip(self, keys64, rng):
        assert decrypt(keys64.private, keys64.public, encrypt(keys64.public, 0, rng=rng)) == 0

    def test_random_roundtrip(self, keys64):
        pk, sk = keys64.public, keys64.private
        draw = random.Random(99)
        for _ in range(1000):
            m = draw.randrange(pk.n)
            assert decrypt(sk, pk, encrypt(pk, m, rng=draw)) == m

    def test_distinct_blinding_distinct_ciphertexts(self, toy_keys):
        pk, sk = toy_keys.public, toy_keys.private
        c1 = encrypt(pk, 7, r=2)
        c2 = encrypt(pk, 7, r=4)
        assert c1 != c2
        assert decrypt(sk, pk, c1) == decrypt(sk, pk, c2) == 7

    def test_collision_frequency(self, small_keys):
        pk = small_keys.public
        draw = random.Random(3)
        trials = 10_000
        collisions = sum(encrypt(pk, 5, rng=draw) == encrypt(pk, 5, rng=draw) for _ in range(trials))
        # phi(16637) = 126 * 130; expected collisions about 0.6
        assert collisions / trials <= 2 / pk.n * 10

    @pytest.mark.parametrize("m", [-1, 15, 100])
    def test_plaintext_out_of_range(self, toy_keys, m):
        with pytest.raises(CryptoError):
            encrypt(toy_keys.public, m)

    @pytest.mark.parametrize("r", [0, 3, 5, 15])
    def test_blinding_must_be_unit(self, toy_keys, r):
        with pytest.raises(CryptoError):
            encrypt(toy_keys.public, 1, r=r)

    def test_non_unit_ciphertext_rejected(self, toy_keys):
        with pytest.raises(CryptoError):
            decrypt(toy_keys.private, toy_keys.public, Ciphertext(15))

    def test_errors_share_package_base(self, toy_keys):
        with pytest.raises(SpamcraftError):
            encrypt(toy_keys.public, 99)

    def test_signed_roundtrip(self, keys64, rng):
        for value in (-12345, -1, 0, 1, 987654321):
            assert decrypt_signed(keys64, encrypt_signed(keys64.public, value, rng)) == value

    def test_encrypt_many_independent_of_workers(self, keys64):
        values = list(range(20))
        serial = encrypt_many(keys64.public, values, random.Random(11), workers=1)
        threaded = encrypt_many(keys64.public, values, random.Random(11), workers=4)
        assert serial == threaded
        assert [decrypt(keys64.private, keys64.public, c) for c in serial] == values


class TestHomomorphism:
    """Additive and scalar homomorphisms."""

    def test_add_three_and_four(self, keys64, rng):
        pk, sk = keys64.public, keys64.private
        assert decrypt(sk, pk, hom_add(pk, encrypt(pk, 3, rng=rng), encrypt(pk, 4, rng=rng))) == 7

    def test_add_zero_identity(self, keys64, rng):
        pk, sk = keys64.public, keys64.private
        assert decrypt(sk, pk, hom_add(pk, encrypt(pk, 41, rng=rng), encrypt(pk, 0, rng=rng))) == 41

    def test_exhaustive_addition_toy_key(self, toy_keys, rng):
        pk, sk = toy_keys.public, toy_keys.private
        for x in range(15):
            for y in range(15):
                c = hom_add(pk, encrypt(pk, x, rng=rng), encrypt(pk, y, rng=rng))
                assert decrypt(sk, pk, c) == (x + y) % 15

    def test_scale_identity(self, keys64, rng):
        pk, sk = keys64.public, keys64.private
        assert decrypt(sk, pk, hom_scale(pk, encrypt(pk, 12, rng=rng), 1)) == 12

    def test_negative_scale_hand_example(self, toy_keys, rng):
        pk, sk = toy_keys.public, toy_keys.private
        assert decrypt(sk, pk, hom_scale(pk, encrypt(pk, 3, rng=rng), -2)) == 9

    def test_exhaustive_scaling_toy_key(self, toy_keys, rng):
        pk, sk = toy_keys.public, toy_keys.private
        for x in range(15):
            c = encrypt(pk, x, rng=rng)
            for k in range(-7, 8):
                assert decrypt(sk, pk, hom_scale(pk, c, k)) == (k * x) % 15

    def test_add_plain(self, keys64, rng):
        pk, sk = keys64.public, keys64.private
        c = encrypt(pk, 10, rng=rng)
        assert decrypt(sk, pk, hom_add_plain(pk, c, 5)) == 15
        assert decrypt(sk, pk, hom_add_plain(pk, c, -3)) == 7


class TestRerandomize:
    """Refreshing ciphertext randomness."""

    def test_plaintext_preserved(self, keys64, rng):
        pk, sk = keys64.public, keys64.private
        assert decrypt(sk, pk, rerandomize(pk, encrypt(pk, 5, rng=rng), rng)) == 5
        assert decrypt(sk, pk, rerandomize(pk, encrypt(pk, 0, rng=rng), rng)) == 0

    def test_ciphertext_changes(self, keys64, rng):
        pk = keys64.public
        c = encrypt(pk, 5, rng=rng)
        for _ in range(100):
            assert rerandomize(pk, c, rng) != c


class TestSerialization:
    """Big-integer and key byte encodings."""

    def test_integer_layout(self):
        assert encode_int(5) == b"\x00\x00\x00\x00\x01\x05"
        assert encode_int(-5) == b"\x01\x00\x00\x00\x01\x05"
        assert encode_int(0) == b"\x00\x00\x00\x00\x00"
        assert encode_int(256) == b"\x00\x00\x00\x00\x02\x01\x00"

    def test_decode_reports_offset(self):
        data = encode_ints([7, -300, 2 ** 100])
        value, offset = decode_int(data)
        assert value == 7
        assert decode_int(data, offset)[0] == -300
        assert decode_ints(data, 3) == [7, -300, 2 ** 100]

    def test_trailing_bytes_rejected(self):
        with pytest.raises(CryptoError):
            decode_ints(encode_int(1) + b"\x00", 1)

    def test_bad_sign_byte(self):
        with pytest.raises(CryptoError):
            decode_int(b"\x02\x00\x00\x00\x01\x05")

    def test_truncated_magnitude(self):
        with pytest.raises(CryptoError):
            decode_int(b"\x00\x00\x00\x00\x04\x05")

    def test_key_bytes(self, keys64):
        restored = keypair_from_bytes(keypair_to_bytes(keys64))
        assert isinstance(restored, KeyPair)
        assert restored.public == keys64.public
        assert restored.private.mu == keys64.private.mu
        assert public_key_from_bytes(public_key_to_bytes(keys64.public)) == keys64.public

    def test_key_file(self, keys64, tmp_path):
        path = save_keypair(keys64, tmp_path / "keys" / "bob.key")
        restored = load_keypair(path)
        c = encrypt(keys64.public, 42, rng=random.Random(1))
        assert decrypt(restored.private, restored.public, c) == 42
