"""Host-facing stdio transport and proxy process wiring.

Newline-delimited JSON-RPC toward the host, matching the protocol's standard
stdio transport. Requests are serviced concurrently; the response writer is
serialized.
"""
from __future__ import annotations

import json
import logging
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import load_host_config, parse_policy
from .control import ControlServer
from .core import GuardProxy, PARSE_ERROR, _error
from .approvals import TtyApprover

logger = logging.getLogger(__name__)

WATCH_POLL_SECONDS = 0.2


class ConfigWatcher:
    """Polls the config file's mtime; a change reloads and reconfigures after
    the debounce window so editor write bursts coalesce."""

    def __init__(self, proxy: GuardProxy, path: Path, debounce: float):
        self._proxy = proxy
        self._path = path
        self._debounce = debounce
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True, name="guard-config-watch")

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()

    def _mtime(self) -> float:
        try:
            return self._path.stat().st_mtime
        except OSError:
            return 0.0

    def _run(self) -> None:
        last = self._mtime()
        while not self._stop.wait(WATCH_POLL_SECONDS):
            current = self._mtime()
            if current == last:
                continue
            # debounce: wait for the file to go quiet
            deadline = time.monotonic() + self._debounce
            while time.monotonic() < deadline and not self._stop.is_set():
                time.sleep(WATCH_POLL_SECONDS)
                newer = self._mtime()
                if newer != current:
                    current = newer
                    deadline = time.monotonic() + self._debounce
            last = current
            try:
                self._proxy.reconfigure(load_host_config(self._path))
                logger.info("configuration reloaded")
            except Exception as exc:
                logger.warning("config reload failed, keeping previous config: %s", exc)


def serve_stdio(proxy: GuardProxy, stdin=None, stdout=None, max_workers: int = 8) -> None:
    """Pump host requests until EOF. Responses go out in completion order."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    write_lock = threading.Lock()

    def respond(message: dict | None) -> None:
        if message is None:
            return
        data = json.dumps(message, ensure_ascii=False)
        with write_lock:
            stdout.write(data + "\n")
            stdout.flush()

    def handle_line(line: str) -> None:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            respond(_error(None, PARSE_ERROR, f"parse error: {exc}"))
            return
        respond(proxy.handle_request(request))

    with ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="guard-host") as pool:
        for line in stdin:
            line = line.strip()
            if line:
                pool.submit(handle_line, line)


def run_proxy(
    config_path: str | Path,
    control_port: int | None = None,
    policy_path: str | Path | None = None,
    log_path: str | Path | None = None,
    console_dir: str | Path | None = None,
    tty_streams: tuple | None = None,
    ready_file: str | Path | None = None,
) -> int:
    """Entry point used by the CLI `proxy` subcommand."""
    config = load_host_config(config_path)
    if policy_path is not None:
        overrides = parse_policy(json.loads(Path(policy_path).read_text(encoding="utf-8")))
        config.guard.policy.update(overrides)
    if control_port is None:
        control_port = config.guard.control_port

    proxy = GuardProxy(config, event_log=str(log_path) if log_path else None)
    if tty_streams is not None:
        proxy.tty = TtyApprover(proxy.broker, tty_streams[0], tty_streams[1])
        proxy.tty.start()

    control: ControlServer | None = None
    watcher: ConfigWatcher | None = None
    try:
        proxy.start()
        if control_port is not None:
            control = ControlServer(proxy, port=control_port, console_dir=console_dir)
            control.start()
            # announce the bound port for callers that asked for an ephemeral one
            print(json.dumps({"control_port": control.port}), file=sys.stderr, flush=True)
            if ready_file is not None:
                Path(ready_file).write_text(str(control.port), encoding="utf-8")
        if "on_config_change" in config.guard.refresh and config.path is not None:
            watcher = ConfigWatcher(proxy, config.path, config.guard.config_debounce)
            watcher.start()
        serve_stdio(proxy)
        return 0
    finally:
        if watcher:
            watcher.stop()
        if control:
            control.stop()
        proxy.stop()
