from fastapi import APIRouter

from fishnet.api.ledger.endpoints import agents, events, tags, withdrawals

ledger_router = APIRouter()


ledger_router.include_router(agents.router, prefix="/agents", tags=["Agent Configurations"])
ledger_router.include_router(tags.router, prefix="/tags", tags=["Consent Logger"])
ledger_router.include_router(events.router, prefix="/events", tags=["Consent Logger"])
ledger_router.include_router(withdrawals.router, tags=["Consent Request Handler"])
