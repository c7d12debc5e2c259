from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Settings shared by every fishnet party, read from `.env` and `FISHNET_*` variables.
    """

    model_config = SettingsConfigDict(
        env_prefix="FISHNET_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    PROJECT_TITLE: str = "fishnet"
    PROJECT_DESCRIPTION: str = "Consent-tagging web server, crawler and ledger"
    PROJECT_VERSION: str = "0.1.0"

    DATABASE_URI: str = "sqlite+aiosqlite:///./fishnet.db"
    AUTO_CREATE_TABLES: bool = True

    KEYSTORE: Path = Path.home() / ".fishnet" / "keystore"

    HOST: str = "127.0.0.1"
    SERVER_PORT: int = 8000
    LEDGER_PORT: int = 8545
    PROXY_PORT: int = 8899

    LEDGER_URL: str = "http://127.0.0.1:8545"
    LEDGER_TIMEOUT: float = 10.0
    LEDGER_SEED: int | None = None
    LEDGER_LATENCY: float = 0.0

    PARTY_ID: str = "web-server"
    ROBOTS_POLICY: Path | None = None
    SYNC_INTERVAL: float = 2.0
    QUERY_CACHE: bool = False
    CRAWLER_FRESHNESS: int = 120

    ML_STORE_DIR: Path = Path("./ml-stores")
    RETRAIN_COMMAND: str = ""

    LOG_LEVEL: str = "INFO"


settings = Settings()
