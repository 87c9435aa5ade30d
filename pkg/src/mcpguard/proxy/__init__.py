"""Guard proxy: a verification middlebox between an MCP host and its servers.

Speaks JSON-RPC 2.0 over stdio toward the host, spawns or connects to each
configured downstream server, and interposes on tools/list and tools/call to
enforce liveness checks, collision-safe resolution, metadata pinning, result
screening, and per-tool policy.
"""

from .config import ConfigInvalid, GuardSettings, ProxyConfig, ServerSpec, load_host_config, parse_host_config
from .core import GuardProxy
from .naming import QualifiedToolName, parse_qualified, render_qualified

__all__ = [
    "ConfigInvalid",
    "GuardProxy",
    "GuardSettings",
    "ProxyConfig",
    "QualifiedToolName",
    "ServerSpec",
    "load_host_config",
    "parse_host_config",
    "parse_qualified",
    "render_qualified",
]
