"""Python access to the hivegen native core."""

import json as _json

from ._hivegen import (
    DATA_DIR,
    HivegenError,
    canonicalize_source,
    count_tokens,
    format_fixed,
    hash_block,
    pass_at_k,
    pass_at_k_exact,
    token_savings,
)
from . import _hivegen

__all__ = [
    "DATA_DIR",
    "HivegenError",
    "canonicalize_source",
    "count_tokens",
    "format_fixed",
    "hash_block",
    "parse_command",
    "parse_verilog",
    "pass_at_k",
    "pass_at_k_exact",
    "run_session",
    "token_savings",
]


def parse_verilog(source):
    """Parse Verilog text into {"ok", "errors", "modules": [ModuleSpec...]}."""
    return _json.loads(_hivegen._parse_verilog(source))


def parse_command(text):
    """Parse an edit sentence; failures come back with ok=False and an error code."""
    return _json.loads(_hivegen._parse_command(text))


def run_session(request, *, fixtures, library=None, sessions_dir=None, deterministic=True,
                simulator=None, worker_count=1):
    """Run one generation session against a replay fixture file and return the session document."""
    options = {
        "fixtures": str(fixtures),
        "deterministic": deterministic,
        "worker_count": worker_count,
    }
    if library is not None:
        options["library"] = str(library)
    if sessions_dir is not None:
        options["sessions_dir"] = str(sessions_dir)
    if simulator is not None:
        options["simulator"] = simulator
    return _json.loads(_hivegen._run_session(_json.dumps(request), _json.dumps(options)))
