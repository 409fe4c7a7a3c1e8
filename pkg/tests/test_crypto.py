import pytest
from hypothesis import given
from hypothesis import strategies as st

from flashden.crypto import KEY_BYTES, SectorCipher, derive_key, prf
from flashden.errors import EmptyPassphrase

keys = st.binary(min_size=32, max_size=32).filter(lambda k: k[:16] != k[16:])


def test_derive_key_deterministic():
    assert derive_key("decoy") == derive_key("decoy")


def test_derive_key_distinct():
    assert derive_key("decoy") != derive_key("true")


@given(st.text(min_size=1, max_size=20))
def test_derive_key_length(passphrase):
    assert len(derive_key(passphrase)) == KEY_BYTES


def test_empty_passphrase():
    with pytest.raises(EmptyPassphrase):
        derive_key("")


def test_prf_is_keyed_and_unambiguous():
    k = derive_key("k")
    assert prf(k, "a", 1) == prf(k, "a", 1)
    assert prf(k, "a", 1) != prf(derive_key("j"), "a", 1)
    # length prefixes keep ("ab",) and ("a", "b") apart
    assert prf(k, "ab") != prf(k, "a", "b")


@given(keys, st.integers(0, 2**40), st.binary(min_size=16, max_size=256))
def test_cipher_roundtrip(key, tweak, data):
    c = SectorCipher(key)
    enc = c.encrypt(tweak, data)
    assert len(enc) == len(data)
    assert c.decrypt(tweak, enc) == data


def test_cipher_tweak_changes_ciphertext():
    c = SectorCipher(derive_key("x"))
    plain = b"\x00" * 2048
    assert c.encrypt(1, plain) != c.encrypt(2, plain)
    assert c.encrypt(1, plain) == c.encrypt(1, plain)


@pytest.mark.parametrize("key", [b"short", b"\x01" * 32])
def test_cipher_rejects_bad_keys(key):
    with pytest.raises(ValueError):
        SectorCipher(key)
