"""Deterministic keyed pseudonymization of patient identifiers."""

from __future__ import annotations

import hashlib
import hmac

from ..errors import EmptySalt

_TOKEN_HEX_CHARS = 16


def pseudonymize(raw_id: str, salt: str) -> str:
    """Replace an identifier with a keyed-hash token.

    Deterministic for a fixed (raw_id, salt) pair and injective for
    practical purposes (truncated HMAC-SHA256). The raw identifier is
    never retained.
    """
    if not salt:
        raise EmptySalt("pseudonymization salt must be nonempty")
    digest = hmac.new(salt.encode("utf-8"), raw_id.encode("utf-8"), hashlib.sha256)
    return digest.hexdigest()[:_TOKEN_HEX_CHARS]
