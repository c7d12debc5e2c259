from fastapi import APIRouter, Depends

from fishnet.api import http_except
from fishnet.api.deps import get_ledger
from fishnet.core.consent import CrawlerAgentConfig
from fishnet.core.exceptions import AgentConfigError
from fishnet.ledger.state import ConsentLedger
from fishnet.schemas.ledger import AgentConfigIn, RegistryOut, RegistryVersionOut

router = APIRouter()


@router.post("", response_model=RegistryVersionOut)
def register_agent(agent: AgentConfigIn, ledger: ConsentLedger = Depends(get_ledger)):
    try:
        config = CrawlerAgentConfig(
            name=agent.name,
            user_agent_pattern=agent.user_agent_pattern,
            ip_ranges=tuple(agent.ip_ranges),
            public_key=agent.public_key,
        )
    except AgentConfigError as exc:
        raise http_except.invalid_agent(str(exc))
    return {"version": ledger.register_agent(config)}


@router.get("", response_model=RegistryOut)
def list_agents(ledger: ConsentLedger = Depends(get_ledger)):
    version, agents = ledger.agents()
    return {"version": version, "agents": agents}
