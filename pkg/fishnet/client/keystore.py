"""
On-disk keystore of a user agent.

Layout::

    <root>/keys/<key-id>.key   hex private key, one per line
    <root>/active              id of the key used for tagging
    <root>/consent.conf        active X-Consent-Config value
    <root>/records.jsonl       local consent records
"""

import logging
import os
from pathlib import Path

from fishnet.core.consent import ConsentConfig, parse_consent_config, serialize_consent_config
from fishnet.core.crypto import KeyPair, generate_keypair, keccak256
from fishnet.core.exceptions import TaggingError

logger = logging.getLogger(__name__)


def key_id_for(keypair: KeyPair) -> str:
    return keccak256(bytes.fromhex(keypair.public_hex)).hex[:16]


class Keystore:
    def __init__(self, root: Path | str):
        self.root = Path(root).expanduser()

    @property
    def keys_dir(self) -> Path:
        return self.root / "keys"

    @property
    def records_path(self) -> Path:
        return self.root / "records.jsonl"

    def _key_path(self, key_id: str) -> Path:
        return self.keys_dir / f"{key_id}.key"

    def generate(self, seed: bytes | str | int | None = None, activate: bool = True) -> str:
        keypair = generate_keypair(seed)
        key_id = key_id_for(keypair)
        self.keys_dir.mkdir(parents=True, exist_ok=True)
        path = self._key_path(key_id)
        path.write_text(keypair.private_hex + "\n", encoding="utf-8")
        os.chmod(path, 0o600)
        if activate or self.active_id() is None:
            self.set_active(key_id)
        logger.info(f"Generated key {key_id} in {self.root}")
        return key_id

    def key_ids(self) -> list[str]:
        if not self.keys_dir.is_dir():
            return []
        return sorted(path.stem for path in self.keys_dir.glob("*.key"))

    def load(self, key_id: str) -> KeyPair:
        try:
            return KeyPair.from_private_hex(self._key_path(key_id).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise TaggingError(f"key {key_id} not found in {self.root}") from exc
        except ValueError as exc:
            raise TaggingError(f"key {key_id} is unreadable: {exc}") from exc

    def active_id(self) -> str | None:
        path = self.root / "active"
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8").strip() or None

    def set_active(self, key_id: str) -> None:
        if not self._key_path(key_id).exists():
            raise TaggingError(f"key {key_id} not found in {self.root}")
        (self.root / "active").write_text(key_id + "\n", encoding="utf-8")

    def active(self) -> tuple[str, KeyPair]:
        key_id = self.active_id()
        if key_id is None:
            raise TaggingError(f"no active key in {self.root}; run `fishnet keygen` first")
        return key_id, self.load(key_id)

    def find_by_public(self, public_hex: str) -> KeyPair | None:
        for key_id in self.key_ids():
            keypair = self.load(key_id)
            if keypair.public_hex == public_hex:
                return keypair
        return None

    def consent_config(self) -> ConsentConfig:
        path = self.root / "consent.conf"
        if not path.exists():
            return ConsentConfig()
        return parse_consent_config(path.read_text(encoding="utf-8").strip())

    def set_consent_config(self, config: ConsentConfig) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "consent.conf").write_text(serialize_consent_config(config) + "\n", encoding="utf-8")
