"""Small shared helpers."""

from __future__ import annotations

import hashlib


def sha12(text: str) -> str:
    """Short stable content hash used in trace and directive file headers."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
