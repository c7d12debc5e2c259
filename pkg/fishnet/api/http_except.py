from fastapi import HTTPException, status

empty_body = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST, detail="Data submission requires a body"
)

undecodable_body = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST, detail="Body is not valid UTF-8 text"
)

tag_mismatch = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST,
    detail="Consent tag hash does not match the submitted body",
)

incomplete_tag = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST,
    detail="Consent tag requires both X-Consent-Tag-Hash and X-Consent-Tag-Sig",
)

contradictory_markers = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST,
    detail="Request carries both consent headers and the non-crawlable marker",
)

unknown_tag = HTTPException(
    status_code=status.HTTP_404_NOT_FOUND, detail="Unknown consent tag"
)

empty_batch = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST, detail="Tag batch is empty"
)

ledger_capacity = HTTPException(
    status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
    detail="Tag batch exceeds the per-transaction capacity",
)

not_custodian = HTTPException(
    status_code=status.HTTP_403_FORBIDDEN, detail="Reporter is not a custodian of this tag"
)

no_active_withdrawal = HTTPException(
    status_code=status.HTTP_409_CONFLICT, detail="No active withdrawal for this tag"
)


def bad_consent_config(message: str) -> HTTPException:
    return HTTPException(
        status_code=status.HTTP_400_BAD_REQUEST, detail=f"Malformed consent config: {message}"
    )


def invalid_agent(message: str) -> HTTPException:
    return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=message)


def ledger_rejected(message: str) -> HTTPException:
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=message)


def bad_tag(message: str) -> HTTPException:
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"Malformed consent tag: {message}")
