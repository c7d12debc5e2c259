from fastapi import APIRouter, Depends

from fishnet.api import http_except
from fishnet.api.deps import get_ledger
from fishnet.core.exceptions import NoActiveWithdrawalError, NotCustodianError, UnknownTagError
from fishnet.ledger.state import ConsentLedger, WithdrawalRequest
from fishnet.schemas.ledger import ChallengeOut, CompletionIn, SeqOut, WithdrawalIn, WithdrawalOut

router = APIRouter()


@router.post("/challenge", response_model=ChallengeOut)
def issue_challenge(ledger: ConsentLedger = Depends(get_ledger)):
    challenge = ledger.issue_challenge()
    return {"id": challenge.id, "nonce": challenge.nonce.hex(), "expiry": challenge.expiry}


@router.post("/withdraw", response_model=WithdrawalOut)
def submit_withdrawal(request: WithdrawalIn, ledger: ConsentLedger = Depends(get_ledger)):
    outcome = ledger.submit_withdrawal(WithdrawalRequest(**request.model_dump()))
    if not outcome.accepted:
        return {"status": "rejected", "reason": outcome.reason.value}
    return {
        "status": "accepted",
        "seq": outcome.seq,
        "request_id": outcome.request_id,
        "duplicate": outcome.duplicate,
    }


@router.post("/complete", response_model=SeqOut)
def report_completion(report: CompletionIn, ledger: ConsentLedger = Depends(get_ledger)):
    try:
        seq = ledger.report_completion(report.tag_hash, report.custodian, report.action)
    except UnknownTagError:
        raise http_except.unknown_tag
    except NotCustodianError:
        raise http_except.not_custodian
    except NoActiveWithdrawalError:
        raise http_except.no_active_withdrawal
    return {"seq": seq}
