"""Host configuration parsing: the standard ``mcpServers`` schema plus an
optional ``guard`` extension object that foreign hosts ignore."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

POLICY_MODES = ("allow", "deny", "prompt")
REFRESH_TRIGGERS = ("on_start", "on_config_change", "on_reenable")

DEFAULT_PROMPT_TIMEOUT = 120.0
DEFAULT_CONFIG_DEBOUNCE = 0.5


class ConfigInvalid(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class ServerSpec:
    """One configured downstream server: local launch or remote URL."""

    name: str
    command: str | None = None
    args: tuple[str, ...] = ()
    env: tuple[tuple[str, str], ...] = ()
    url: str | None = None
    extra: tuple[tuple[str, str], ...] = ()  # unknown keys, preserved verbatim

    @property
    def is_local(self) -> bool:
        return self.command is not None

    def env_dict(self) -> dict[str, str]:
        return dict(self.env)


@dataclass
class GuardSettings:
    policy: dict[str, str] = field(default_factory=dict)
    default_mode: str = "prompt"  # unattended sessions must not auto-approve
    refresh: tuple[str, ...] = REFRESH_TRIGGERS
    control_port: int | None = None
    prompt_timeout: float = DEFAULT_PROMPT_TIMEOUT
    config_debounce: float = DEFAULT_CONFIG_DEBOUNCE


@dataclass
class ProxyConfig:
    servers: dict[str, ServerSpec]
    guard: GuardSettings = field(default_factory=GuardSettings)
    path: Path | None = None


def _parse_server(name: str, entry: object) -> ServerSpec:
    if not isinstance(entry, dict):
        raise ConfigInvalid(f"server {name!r}: entry must be an object")
    command = entry.get("command")
    url = entry.get("url")
    if command is not None and url is not None:
        raise ConfigInvalid(f"server {name!r}: cannot have both command and url")
    if command is None and url is None:
        raise ConfigInvalid(f"server {name!r}: needs exactly one of command or url")
    if command is not None and not isinstance(command, str):
        raise ConfigInvalid(f"server {name!r}: command must be a string")
    if url is not None and not isinstance(url, str):
        raise ConfigInvalid(f"server {name!r}: url must be a string")
    args = entry.get("args", [])
    if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
        raise ConfigInvalid(f"server {name!r}: args must be a list of strings")
    env = entry.get("env", {})
    if not isinstance(env, dict):
        raise ConfigInvalid(f"server {name!r}: env must be an object")
    known = {"command", "url", "args", "env"}
    extra = tuple(
        (key, json.dumps(value, sort_keys=True)) for key, value in sorted(entry.items()) if key not in known
    )
    return ServerSpec(
        name=name,
        command=command,
        args=tuple(args),
        env=tuple(sorted((str(k), str(v)) for k, v in env.items())),
        url=url,
        extra=extra,
    )


def parse_policy(data: object, origin: str = "policy") -> dict[str, str]:
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{origin} must be an object of pattern -> mode")
    policy: dict[str, str] = {}
    for pattern, mode in data.items():
        if mode not in POLICY_MODES:
            raise ConfigInvalid(f"{origin}: mode {mode!r} for {pattern!r} not in {POLICY_MODES}")
        policy[str(pattern)] = mode
    return policy


def _parse_guard(data: object) -> GuardSettings:
    if data is None:
        return GuardSettings()
    if not isinstance(data, dict):
        raise ConfigInvalid("guard extension must be an object")
    settings = GuardSettings()
    if "policy" in data:
        settings.policy = parse_policy(data["policy"], origin="guard.policy")
    if "defaultMode" in data:
        if data["defaultMode"] not in POLICY_MODES:
            raise ConfigInvalid(f"guard.defaultMode must be one of {POLICY_MODES}")
        settings.default_mode = data["defaultMode"]
    if "refresh" in data:
        triggers = data["refresh"]
        if not isinstance(triggers, list) or not set(triggers) <= set(REFRESH_TRIGGERS):
            raise ConfigInvalid(f"guard.refresh entries must be among {REFRESH_TRIGGERS}")
        settings.refresh = tuple(triggers)
    if "controlPort" in data:
        settings.control_port = int(data["controlPort"])
    if "promptTimeout" in data:
        settings.prompt_timeout = float(data["promptTimeout"])
    if "configDebounce" in data:
        settings.config_debounce = float(data["configDebounce"])
    return settings


def parse_host_config(data: object, path: Path | None = None) -> ProxyConfig:
    if not isinstance(data, dict):
        raise ConfigInvalid("config root must be a JSON object")
    if "mcpServers" not in data:
        raise ConfigInvalid("config is missing the mcpServers object")
    servers_obj = data["mcpServers"]
    if not isinstance(servers_obj, dict):
        raise ConfigInvalid("mcpServers must be an object")
    servers: dict[str, ServerSpec] = {}
    for name, entry in servers_obj.items():
        if not name:
            raise ConfigInvalid("server names must be non-empty")
        servers[name] = _parse_server(name, entry)
    guard = _parse_guard(data.get("guard"))
    return ProxyConfig(servers=servers, guard=guard, path=path)


def load_host_config(path: str | Path) -> ProxyConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return parse_host_config(data, path=path)
