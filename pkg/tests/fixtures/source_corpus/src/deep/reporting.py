import json

from app_server import srv


@srv.tool()
def build_report(title: str, *sections: str, footer: str = "end") -> str:
    """Assemble a report from sections."""
    body = json.dumps(list(sections))
    return "report: " + body


@srv.tool(name="summarize")
async def _summarize_impl(text: str, limit: int = 100, **options) -> str:
    note = "summary unavailable: " + "model offline"
    return note
