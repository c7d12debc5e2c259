import logging

from fastapi import APIRouter, Depends, Query, Request
from sqlalchemy.ext.asyncio import AsyncSession

from fishnet.api import http_except
from fishnet.api.deps import get_server_state, get_session
from fishnet.core.consent import (
    CONSENT_CONFIG_HEADER,
    NON_CRAWLABLE_HEADER,
    TAG_HASH_HEADER,
    TAG_SIG_HEADER,
    ConsentConfig,
    ConsentTag,
    parse_consent_config,
)
from fishnet.core.crypto import keccak256
from fishnet.core.exceptions import ConsentConfigError
from fishnet.crud.data import create_datum
from fishnet.schemas.datum import SubmissionOut
from fishnet.server.state import ServerState

logger = logging.getLogger(__name__)

router = APIRouter()


@router.api_route("/submit", methods=["POST", "PUT", "PATCH"], response_model=SubmissionOut)
async def submit_data(
    request: Request,
    author: str = Query("anonymous"),
    db: AsyncSession = Depends(get_session),
    state: ServerState = Depends(get_server_state),
):
    body = await request.body()
    if not body:
        raise http_except.empty_body
    try:
        content = body.decode("utf-8")
    except UnicodeDecodeError:
        raise http_except.undecodable_body

    tag_hash = request.headers.get(TAG_HASH_HEADER)
    tag_sig = request.headers.get(TAG_SIG_HEADER)
    config_text = request.headers.get(CONSENT_CONFIG_HEADER)
    non_crawlable = request.headers.get(NON_CRAWLABLE_HEADER) == "1"
    tagged = any(value is not None for value in (tag_hash, tag_sig, config_text))

    if tagged and non_crawlable:
        raise http_except.contradictory_markers

    tag = config = None
    if tagged:
        if not tag_hash or not tag_sig:
            raise http_except.incomplete_tag
        if keccak256(body).hex != tag_hash:
            raise http_except.tag_mismatch
        try:
            tag = ConsentTag(tag_hash, tag_sig)
        except ValueError as exc:
            raise http_except.bad_tag(str(exc))
        try:
            config = parse_consent_config(config_text) if config_text else ConsentConfig()
        except ConsentConfigError as exc:
            raise http_except.bad_consent_config(str(exc))

    datum, entry = await create_datum(
        db, content, author, non_crawlable=non_crawlable, tag=tag, config=config
    )
    state.store_changed()
    logger.debug(f"Stored datum {datum.id} (tagged={tag is not None}, non_crawlable={non_crawlable})")
    return {
        "data_id": datum.id,
        "consent_id": entry.id if entry else None,
        "non_crawlable": non_crawlable,
    }
