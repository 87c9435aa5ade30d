from fastmcp import FastMCP

mcp = FastMCP("toolbox")


class ToolBox:
    """Tools can hang off methods when the instance is registered."""

    @mcp.tool(name="box_info")
    def info(self, verbose: bool = False) -> str:
        return "toolbox ready"
