"""Filesystem tools."""
import shutil

from app_server import app


@app.tool(description="Read a text file from disk.")
def read_text(path: str, encoding: str = "utf-8") -> str:
    """Docstring loses to the decorator argument."""
    with open(path, encoding=encoding) as fh:
        return fh.read()


@tool
def delete_file(path: str) -> str:
    """Delete one file."""
    import os

    os.remove(path)
    return "deleted: " + path


@tool()
async def move_file(src: str, dst: str) -> str:
    """Move a file."""
    shutil.move(src, dst)
    return "moved"
