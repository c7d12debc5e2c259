"""
Hashing, P-384 key pairs, digest signatures and ledger challenge nonces.

Signatures are deterministic (RFC 6979) and serialized as raw fixed-width r||s.
Hex encodings are lowercase without prefixes.
"""

import hashlib
import random
import secrets
from dataclasses import dataclass

import ecdsa
from ecdsa.util import sigdecode_string, sigencode_string
from eth_hash.auto import keccak as _keccak

DIGEST_SIZE = 32
NONCE_SIZE = 32


@dataclass(frozen=True)
class Digest:
    raw: bytes

    def __post_init__(self):
        if len(self.raw) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(self.raw)}")

    @property
    def hex(self) -> str:
        return self.raw.hex()

    @classmethod
    def from_hex(cls, value: str) -> "Digest":
        if len(value) != DIGEST_SIZE * 2 or value != value.lower():
            raise ValueError(f"not a lowercase 64-char hex digest: {value!r}")
        return cls(bytes.fromhex(value))


def keccak256(data: bytes) -> Digest:
    # original Keccak padding, not FIPS-202 SHA3-256
    return Digest(_keccak(data))


class EcdsaScheme:
    """One curve plus the hash used for RFC 6979 nonce derivation."""

    def __init__(self, curve: ecdsa.curves.Curve, nonce_hash=hashlib.sha384):
        self.curve = curve
        self.nonce_hash = nonce_hash

    def generate(self, seed: bytes | None = None) -> ecdsa.SigningKey:
        if seed is None:
            return ecdsa.SigningKey.generate(curve=self.curve)
        order = self.curve.order
        material = hashlib.sha512(b"fishnet-keygen:" + seed).digest()
        exponent = int.from_bytes(material, "big") % (order - 1) + 1
        return ecdsa.SigningKey.from_secret_exponent(exponent, curve=self.curve)

    def sign(self, key: ecdsa.SigningKey, digest: Digest) -> bytes:
        return key.sign_digest_deterministic(
            digest.raw, hashfunc=self.nonce_hash, sigencode=sigencode_string
        )

    def verify(self, key: ecdsa.VerifyingKey, digest: Digest, signature: bytes) -> bool:
        try:
            return key.verify_digest(signature, digest.raw, sigdecode=sigdecode_string)
        except Exception:  # noqa: BLE001 - bad length, bad point, bad signature
            return False

    def load_public(self, value: str) -> ecdsa.VerifyingKey:
        return ecdsa.VerifyingKey.from_string(bytes.fromhex(value), curve=self.curve)

    def load_private(self, value: str) -> ecdsa.SigningKey:
        return ecdsa.SigningKey.from_string(bytes.fromhex(value), curve=self.curve)


default_scheme = EcdsaScheme(ecdsa.NIST384p)


@dataclass(frozen=True)
class KeyPair:
    private_key: ecdsa.SigningKey
    public_key: ecdsa.VerifyingKey

    @property
    def public_hex(self) -> str:
        return self.public_key.to_string("uncompressed").hex()

    @property
    def private_hex(self) -> str:
        return self.private_key.to_string().hex()

    @classmethod
    def from_private_hex(cls, value: str) -> "KeyPair":
        key = default_scheme.load_private(value.strip())
        return cls(key, key.get_verifying_key())


def _seed_bytes(seed: bytes | str | int) -> bytes:
    if isinstance(seed, bytes):
        return seed
    return str(seed).encode("utf-8")


def generate_keypair(seed: bytes | str | int | None = None) -> KeyPair:
    key = default_scheme.generate(None if seed is None else _seed_bytes(seed))
    return KeyPair(key, key.get_verifying_key())


def sign_digest(key: ecdsa.SigningKey, digest: Digest) -> bytes:
    return default_scheme.sign(key, digest)


def load_public_key(value: str) -> ecdsa.VerifyingKey:
    return default_scheme.load_public(value)


def verify_digest(
    key: ecdsa.VerifyingKey | str, digest: Digest, signature: bytes | str
) -> bool:
    """Never raises: malformed keys or signatures simply do not verify."""
    try:
        if isinstance(key, str):
            key = load_public_key(key)
        if isinstance(signature, str):
            signature = bytes.fromhex(signature)
    except Exception:  # noqa: BLE001
        return False
    return default_scheme.verify(key, digest, signature)


class NonceSource:
    """Seedable source of 32-byte nonces. Single owner; not thread-safe by itself."""

    def __init__(self, seed: int | None = None):
        self.seed = seed
        self._rng = random.Random(seed) if seed is not None else None

    def draw(self) -> bytes:
        if self._rng is None:
            return secrets.token_bytes(NONCE_SIZE)
        return self._rng.randbytes(NONCE_SIZE)


def random_nonce(rng: NonceSource) -> bytes:
    return rng.draw()


@dataclass
class Challenge:
    id: str
    nonce: bytes
    expiry: int
    consumed: bool = False
