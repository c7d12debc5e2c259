from fastapi import Request

from fishnet.ledger.state import ConsentLedger
from fishnet.server.state import ServerState


async def get_session(request: Request):
    async with request.app.state.sessionmaker() as session:
        yield session
        await session.commit()


def get_server_state(request: Request) -> ServerState:
    return request.app.state.server


def get_client_ip(request: Request) -> str:
    """Source address of the visitor. Tests override this dependency."""
    return request.client.host if request.client else ""


def get_ledger(request: Request) -> ConsentLedger:
    return request.app.state.ledger
