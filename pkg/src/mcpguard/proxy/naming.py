"""Qualified tool names: ``mcp_<server>_<tool>``, made injective.

The host convention this mirrors is ambiguous: with raw underscores in both
components, ``mcp_a_b__c`` can mean (a, b__c) or (a_b, _c). Escaping the
server component so it contains no underscore at all makes the first
underscore after the prefix an unambiguous separator, keeps the tool name
byte-for-byte intact, and leaves typical names (``mcp_github_create_issue``)
identical to the convention they mirror.

Server escape code: ``-`` doubles to ``--`` and ``_`` becomes ``-u``.
"""
from __future__ import annotations

from dataclasses import dataclass

PREFIX = "mcp_"
SEPARATOR = "_"


class QualifiedNameError(ValueError):
    pass


def _escape_server(server: str) -> str:
    return server.replace("-", "--").replace("_", "-u")


def _unescape_server(escaped: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(escaped):
        ch = escaped[i]
        if ch == "_":
            raise QualifiedNameError("escaped server component may not contain '_'")
        if ch == "-":
            if i + 1 >= len(escaped):
                raise QualifiedNameError("dangling escape in server component")
            nxt = escaped[i + 1]
            if nxt == "-":
                out.append("-")
            elif nxt == "u":
                out.append("_")
            else:
                raise QualifiedNameError(f"invalid escape '-{nxt}' in server component")
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def render_qualified(server: str, tool: str) -> str:
    if not server or not tool:
        raise QualifiedNameError("server and tool must be non-empty")
    return f"{PREFIX}{_escape_server(server)}{SEPARATOR}{tool}"


def parse_qualified(rendered: str) -> tuple[str, str] | None:
    """Inverse of render_qualified; None when the string is not a qualified name."""
    if not rendered.startswith(PREFIX):
        return None
    body = rendered[len(PREFIX) :]
    sep = body.find(SEPARATOR)
    if sep <= 0 or sep == len(body) - 1:
        return None
    try:
        server = _unescape_server(body[:sep])
    except QualifiedNameError:
        return None
    return server, body[sep + 1 :]


@dataclass(frozen=True)
class QualifiedToolName:
    server: str
    tool: str

    @property
    def rendered(self) -> str:
        return render_qualified(self.server, self.tool)

    @classmethod
    def from_rendered(cls, rendered: str) -> "QualifiedToolName | None":
        parsed = parse_qualified(rendered)
        if parsed is None:
            return None
        return cls(server=parsed[0], tool=parsed[1])
