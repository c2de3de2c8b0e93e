"""Newline-delimited JSON-RPC 2.0 framing over stdio.

One message per line, one response per request with the matching id,
nothing for notifications.  Tool failures are carried in-band inside
``tools/call`` results; JSON-RPC errors are reserved for transport and
lifecycle faults.
"""

from __future__ import annotations

import json
import sys

from ..errors import InvalidCategory
from .registry import Toolbox

PROTOCOL_VERSION = "2024-11-05"
SERVER_NAME = "ctkit"
SERVER_VERSION = "0.1.0"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
NOT_INITIALIZED = -32002
ALREADY_INITIALIZED = -32003


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _error(id_, code: int, message: str) -> str:
    return _dumps({"jsonrpc": "2.0", "id": id_, "error": {"code": code, "message": message}})


def _result(id_, payload) -> str:
    return _dumps({"jsonrpc": "2.0", "id": id_, "result": payload})


class Server:
    """Single-session server: one workspace, strictly sequential requests."""

    def __init__(self, toolbox: Toolbox):
        self.toolbox = toolbox
        self.initialized = False

    def handle_message(self, line: str) -> list[str]:
        """Process one wire line; returns zero or one response lines."""
        if not line.strip():
            return []
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            return [_error(None, PARSE_ERROR, "parse error")]
        if not isinstance(msg, dict):
            return [_error(None, INVALID_REQUEST, "message must be an object")]

        msg_id = msg.get("id")
        is_request = "id" in msg
        if msg.get("jsonrpc") != "2.0":
            return [_error(msg_id if is_request else None, INVALID_REQUEST, "missing jsonrpc 2.0 field")]
        method = msg.get("method")
        if not isinstance(method, str):
            return [_error(msg_id, INVALID_REQUEST, "method must be a string")] if is_request else []

        response = self._dispatch(method, msg.get("params"), msg_id)
        return [response] if is_request and response is not None else []

    def _dispatch(self, method: str, params, msg_id) -> str | None:
        if method == "initialize":
            if self.initialized:
                return _error(msg_id, ALREADY_INITIALIZED, "AlreadyInitialized")
            self.initialized = True
            return _result(
                msg_id,
                {
                    "protocolVersion": PROTOCOL_VERSION,
                    "serverInfo": {"name": SERVER_NAME, "version": SERVER_VERSION},
                    "capabilities": {"tools": {}},
                },
            )
        if method == "tools/list":
            if not self.initialized:
                return _error(msg_id, NOT_INITIALIZED, "NotInitialized")
            if params is not None and not isinstance(params, dict):
                return _error(msg_id, INVALID_PARAMS, "params must be an object")
            categories = (params or {}).get("categories")
            if categories is not None and not isinstance(categories, list):
                return _error(msg_id, INVALID_PARAMS, "params.categories must be an array")
            try:
                tools = self.toolbox.list_tools(categories)
            except InvalidCategory as err:
                return _error(msg_id, INVALID_PARAMS, f"InvalidCategory: {err}")
            return _result(msg_id, {"tools": [t.as_dict() for t in tools]})
        if method == "tools/call":
            if not self.initialized:
                return _error(msg_id, NOT_INITIALIZED, "NotInitialized")
            if not isinstance(params, dict):
                return _error(msg_id, INVALID_PARAMS, "params must be an object")
            name = params.get("name")
            if not isinstance(name, str):
                return _error(msg_id, INVALID_PARAMS, "params.name must be a string")
            arguments = params.get("arguments", {})
            result = self.toolbox.call_tool(name, arguments)
            return _result(msg_id, result.as_payload())
        return _error(msg_id, METHOD_NOT_FOUND, f"unknown method {method!r}")

    def serve_stdio(self, stdin=None, stdout=None) -> None:
        """Blocking loop: one request line in, one response line out."""
        stdin = stdin if stdin is not None else sys.stdin
        stdout = stdout if stdout is not None else sys.stdout
        for line in stdin:
            for response in self.handle_message(line):
                stdout.write(response + "\n")
            stdout.flush()
