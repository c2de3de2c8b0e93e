"""Tool protocol layer: workspace state, tool registry and dispatch, and
newline-delimited JSON-RPC framing."""

from .registry import CATEGORIES, TOOL_NAMES, ToolResult, Toolbox, build_descriptors
from .rpc import Server
from .workspace import Workspace

__all__ = [
    "CATEGORIES",
    "TOOL_NAMES",
    "ToolResult",
    "Toolbox",
    "build_descriptors",
    "Server",
    "Workspace",
]
