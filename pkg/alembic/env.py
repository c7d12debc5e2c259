"""
Migrations for the web server store. The database URL always comes from
fishnet settings (FISHNET_DATABASE_URI), never from alembic.ini.
"""

import asyncio
from logging.config import fileConfig

from sqlalchemy import pool
from sqlalchemy.ext.asyncio import create_async_engine

from alembic import context

from fishnet.core.config import settings
from fishnet.core.db import Base
from fishnet.models import *  # noqa: F403

if context.config.config_file_name is not None:
    fileConfig(context.config.config_file_name)

# sqlite cannot ALTER most constraints in place, so every migration is batched
OPTIONS = {"target_metadata": Base.metadata, "compare_type": True, "render_as_batch": True}


def _migrate(connection) -> None:
    context.configure(connection=connection, **OPTIONS)
    with context.begin_transaction():
        context.run_migrations()


async def _migrate_online() -> None:
    engine = create_async_engine(settings.DATABASE_URI, poolclass=pool.NullPool)
    try:
        async with engine.connect() as connection:
            await connection.run_sync(_migrate)
    finally:
        await engine.dispose()


if context.is_offline_mode():
    context.configure(url=settings.DATABASE_URI, literal_binds=True, **OPTIONS)
    with context.begin_transaction():
        context.run_migrations()
else:
    asyncio.run(_migrate_online())
