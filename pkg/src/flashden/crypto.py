"""Key derivation, keyed PRF and the tweakable per-sector cipher."""
from __future__ import annotations

import hashlib
import hmac

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import EmptyPassphrase

KEY_BYTES = 32
KDF_SALT = b"flashden/kdf/v1"
KDF_ITERATIONS = 20_000


def derive_key(passphrase: str) -> bytes:
    """PBKDF2-HMAC-SHA256 with a fixed salt; 32-byte output."""
    if not passphrase:
        raise EmptyPassphrase("passphrase must be non-empty")
    return hashlib.pbkdf2_hmac("sha256", passphrase.encode("utf-8"), KDF_SALT, KDF_ITERATIONS, KEY_BYTES)


def prf(key: bytes, *parts: int | bytes | str) -> int:
    """HMAC-SHA256 over a length-prefixed encoding of ``parts``, as an integer."""
    mac = hmac.new(key, digestmod=hashlib.sha256)
    for part in parts:
        if isinstance(part, int):
            chunk = part.to_bytes(16, "big", signed=True)
        elif isinstance(part, str):
            chunk = part.encode("utf-8")
        else:
            chunk = bytes(part)
        mac.update(len(chunk).to_bytes(4, "big"))
        mac.update(chunk)
    return int.from_bytes(mac.digest(), "big")


class SectorCipher:
    """AES-128-XTS keyed by a 32-byte key, tweaked by the logical sector index.

    Length-preserving for any sector of at least 16 bytes.
    """

    def __init__(self, key: bytes):
        if len(key) != KEY_BYTES:
            raise ValueError(f"key must be {KEY_BYTES} bytes")
        if key[:16] == key[16:]:
            raise ValueError("XTS key halves must differ")
        self._algo = algorithms.AES(key)
        self.key = key

    def _cipher(self, sector: int) -> Cipher:
        return Cipher(self._algo, modes.XTS(sector.to_bytes(16, "little")))

    def encrypt(self, sector: int, plaintext: bytes) -> bytes:
        enc = self._cipher(sector).encryptor()
        return enc.update(plaintext) + enc.finalize()

    def decrypt(self, sector: int, ciphertext: bytes) -> bytes:
        dec = self._cipher(sector).decryptor()
        return dec.update(ciphertext) + dec.finalize()
