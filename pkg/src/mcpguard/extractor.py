"""Static tool extraction from server source trees.

Walks the syntax tree of every Python file under a root, finds function
definitions carrying a tool-registration decorator, and records name,
description, parameters, and the string literals the function can return.
Parsing is structural; regex extraction misreads decorators and returns.
"""
from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_SOURCE_EXTENSIONS = (".py",)


@dataclass
class MatcherConfig:
    """Which decorator spellings register a tool.

    The default covers ``@<anything>.tool`` and bare ``@tool``, each with or
    without call arguments. Wider than any single SDK, so every record carries
    the decorator text that matched for downstream filtering.
    """

    attribute_names: frozenset[str] = frozenset({"tool"})
    bare_names: frozenset[str] = frozenset({"tool"})


@dataclass(frozen=True)
class ToolParam:
    name: str
    annotation: str | None = None
    default: str | None = None

    def to_json(self) -> dict:
        out: dict = {"name": self.name}
        if self.annotation is not None:
            out["annotation"] = self.annotation
        if self.default is not None:
            out["default"] = self.default
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ToolParam":
        return cls(name=data["name"], annotation=data.get("annotation"), default=data.get("default"))


@dataclass(frozen=True)
class ToolRecord:
    registry_id: str
    server_name: str
    tool_name: str
    description: str
    params: tuple[ToolParam, ...]
    return_literals: tuple[str, ...]
    source_path: str  # posix path relative to the source root
    line: int
    matcher: str  # decorator text that matched

    def __post_init__(self) -> None:
        if not self.tool_name:
            raise ValueError("tool_name must be non-empty")
        if self.line < 1:
            raise ValueError("line must be >= 1")

    @property
    def server_id(self) -> tuple[str, str]:
        return (self.registry_id, self.server_name)

    @property
    def subject(self) -> str:
        return f"{self.registry_id}/{self.server_name}#{self.tool_name}"

    def to_json(self) -> dict:
        return {
            "registry_id": self.registry_id,
            "server_name": self.server_name,
            "tool_name": self.tool_name,
            "description": self.description,
            "params": [p.to_json() for p in self.params],
            "return_literals": list(self.return_literals),
            "source_path": self.source_path,
            "line": self.line,
            "matcher": self.matcher,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ToolRecord":
        return cls(
            registry_id=data["registry_id"],
            server_name=data["server_name"],
            tool_name=data["tool_name"],
            description=data.get("description", ""),
            params=tuple(ToolParam.from_json(p) for p in data.get("params", [])),
            return_literals=tuple(data.get("return_literals", [])),
            source_path=data["source_path"],
            line=data["line"],
            matcher=data.get("matcher", ""),
        )


@dataclass
class SkippedDefinition:
    """Decorated function we refuse to extract (nested inside a function; it
    cannot be registered at import time in the usual SDK pattern)."""

    source_path: str
    line: int
    name: str


@dataclass
class ParseFailure:
    source_path: str
    message: str


@dataclass
class ExtractionResult:
    records: list[ToolRecord] = field(default_factory=list)
    skipped: list[SkippedDefinition] = field(default_factory=list)
    parse_errors: list[ParseFailure] = field(default_factory=list)


def _match_decorator(node: ast.expr, config: MatcherConfig) -> str | None:
    """Return the decorator source text when it matches the configured set."""
    target = node.func if isinstance(node, ast.Call) else node
    if isinstance(target, ast.Attribute) and target.attr in config.attribute_names:
        return ast.unparse(node)
    if isinstance(target, ast.Name) and target.id in config.bare_names:
        return ast.unparse(node)
    return None


def _decorator_kwargs(node: ast.expr) -> dict[str, str]:
    """String-constant keyword arguments of a decorator call."""
    out: dict[str, str] = {}
    if isinstance(node, ast.Call):
        for kw in node.keywords:
            if kw.arg and isinstance(kw.value, ast.Constant) and isinstance(kw.value.value, str):
                out[kw.arg] = kw.value.value
    return out


def _params_of(fn: ast.FunctionDef | ast.AsyncFunctionDef) -> tuple[ToolParam, ...]:
    args = fn.args
    ordered: list[ast.arg] = list(args.posonlyargs) + list(args.args)
    defaults: list[ast.expr | None] = [None] * (len(ordered) - len(args.defaults)) + list(args.defaults)

    params: list[ToolParam] = []
    for arg, default in zip(ordered, defaults):
        params.append(
            ToolParam(
                name=arg.arg,
                annotation=ast.unparse(arg.annotation) if arg.annotation else None,
                default=ast.unparse(default) if default is not None else None,
            )
        )
    if args.vararg:
        params.append(
            ToolParam(
                name=f"*{args.vararg.arg}",
                annotation=ast.unparse(args.vararg.annotation) if args.vararg.annotation else None,
            )
        )
    for arg, default in zip(args.kwonlyargs, args.kw_defaults):
        params.append(
            ToolParam(
                name=arg.arg,
                annotation=ast.unparse(arg.annotation) if arg.annotation else None,
                default=ast.unparse(default) if default is not None else None,
            )
        )
    if args.kwarg:
        params.append(
            ToolParam(
                name=f"**{args.kwarg.arg}",
                annotation=ast.unparse(args.kwarg.annotation) if args.kwarg.annotation else None,
            )
        )
    return tuple(params)


def _literal_parts(node: ast.expr | None) -> list[str]:
    """String constants reachable from a return expression: direct literals,
    f-string fragments, and concatenation parts."""
    if node is None:
        return []
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        return [node.value]
    if isinstance(node, ast.JoinedStr):
        parts: list[str] = []
        for value in node.values:
            if isinstance(value, ast.Constant) and isinstance(value.value, str):
                parts.append(value.value)
        return parts
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Add):
        return _literal_parts(node.left) + _literal_parts(node.right)
    return []


def _own_statements(fn: ast.FunctionDef | ast.AsyncFunctionDef) -> list[ast.stmt]:
    """Statements of a function excluding nested function/class bodies."""
    out: list[ast.stmt] = []

    def walk(stmts: list[ast.stmt]) -> None:
        for stmt in stmts:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                continue
            out.append(stmt)
            for attr in ("body", "orelse", "finalbody"):
                walk(getattr(stmt, attr, []))
            for handler in getattr(stmt, "handlers", []):
                walk(handler.body)
            for case in getattr(stmt, "cases", []):
                walk(case.body)

    walk(fn.body)
    return out


def extract_return_literals(fn: ast.FunctionDef | ast.AsyncFunctionDef) -> list[str]:
    """String constants the function can return.

    Covers direct literals, f-string and concatenation parts, and a local
    assigned exactly once and then returned. Anything computed contributes
    nothing.
    """
    statements = list(_own_statements(fn))

    single_assign: dict[str, ast.expr] = {}
    assign_counts: dict[str, int] = {}
    for stmt in statements:
        if isinstance(stmt, ast.Assign) and len(stmt.targets) == 1 and isinstance(stmt.targets[0], ast.Name):
            name = stmt.targets[0].id
            assign_counts[name] = assign_counts.get(name, 0) + 1
            single_assign[name] = stmt.value
        elif isinstance(stmt, ast.AugAssign) and isinstance(stmt.target, ast.Name):
            assign_counts[stmt.target.id] = assign_counts.get(stmt.target.id, 0) + 2

    literals: list[str] = []
    for stmt in statements:
        if not isinstance(stmt, ast.Return):
            continue
        value = stmt.value
        if isinstance(value, ast.Name):
            if assign_counts.get(value.id) == 1:
                literals.extend(_literal_parts(single_assign.get(value.id)))
        else:
            literals.extend(_literal_parts(value))
    return literals


def _extract_from_source(
    source: str, rel_path: str, server_id: tuple[str, str], config: MatcherConfig, result: ExtractionResult
) -> None:
    tree = ast.parse(source)

    def visit_body(body: list[ast.stmt], inside_function: bool) -> None:
        for node in body:
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                matched: str | None = None
                matched_node: ast.expr | None = None
                for decorator in node.decorator_list:
                    matched = _match_decorator(decorator, config)
                    if matched is not None:
                        matched_node = decorator
                        break
                if matched is not None and matched_node is not None:
                    if inside_function:
                        result.skipped.append(
                            SkippedDefinition(source_path=rel_path, line=node.lineno, name=node.name)
                        )
                    else:
                        kwargs = _decorator_kwargs(matched_node)
                        description = kwargs.get("description") or ast.get_docstring(node) or ""
                        result.records.append(
                            ToolRecord(
                                registry_id=server_id[0],
                                server_name=server_id[1],
                                tool_name=kwargs.get("name") or node.name,
                                description=description,
                                params=_params_of(node),
                                return_literals=tuple(extract_return_literals(node)),
                                source_path=rel_path,
                                line=node.lineno,
                                matcher=matched,
                            )
                        )
                visit_body(node.body, inside_function=True)
            elif isinstance(node, ast.ClassDef):
                # class-level tools register through their instances
                visit_body(node.body, inside_function=inside_function)
            else:
                # defs under module-level if/try/with blocks still register
                # at import time, so the flag carries through unchanged
                for attr in ("body", "orelse", "finalbody"):
                    visit_body(getattr(node, attr, []), inside_function)
                for handler in getattr(node, "handlers", []):
                    visit_body(handler.body, inside_function)
                for case in getattr(node, "cases", []):
                    visit_body(case.body, inside_function)

    visit_body(tree.body, inside_function=False)


def extract_tools(
    source_root: str | Path,
    server_id: tuple[str, str] = ("", "unknown"),
    config: MatcherConfig | None = None,
    extensions: tuple[str, ...] = DEFAULT_SOURCE_EXTENSIONS,
) -> ExtractionResult:
    """Extract every decorator-registered tool under a directory.

    A parse failure in one file is recorded and never aborts the run. Output
    order is deterministic: sorted by (source_path, line).
    """
    root = Path(source_root)
    config = config or MatcherConfig()
    result = ExtractionResult()

    paths = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix in extensions)
    for path in paths:
        rel = path.relative_to(root).as_posix()
        try:
            source = path.read_text(encoding="utf-8", errors="replace")
            _extract_from_source(source, rel, server_id, config, result)
        except SyntaxError as exc:
            result.parse_errors.append(ParseFailure(source_path=rel, message=str(exc)))

    result.records.sort(key=lambda r: (r.source_path, r.line))
    result.skipped.sort(key=lambda s: (s.source_path, s.line))
    result.parse_errors.sort(key=lambda e: e.source_path)
    return result


def write_tools(records: list[ToolRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


def load_tools(path: str | Path) -> list[ToolRecord]:
    records: list[ToolRecord] = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if line.strip():
            records.append(ToolRecord.from_json(json.loads(line)))
    return records
