from mcp.server.fastmcp import FastMCP

server = FastMCP("calc")


@server.tool
def add(a: int, b: int) -> int:
    """Add two numbers."""
    return a + b


@server.tool()
async def multiply(a, b):
    """Multiply two numbers."""
    return a * b
