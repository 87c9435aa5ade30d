from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"
PLANTED = FIXTURES / "planted"
SOURCE_CORPUS = FIXTURES / "source_corpus"
MOCK_SERVER = TESTS_DIR / "mock_server.py"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def planted_dir() -> Path:
    return PLANTED


@pytest.fixture
def source_corpus_dir() -> Path:
    return SOURCE_CORPUS


@pytest.fixture
def mock_server_path() -> Path:
    return MOCK_SERVER


def make_tools_file(tmp_path: Path, name: str, tools: list[dict]) -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(tools), encoding="utf-8")
    return path


def mock_server_spec_args(tools_file: Path, label: str, log_file: Path, **extra: str) -> list[str]:
    args = [
        str(MOCK_SERVER),
        "--name",
        label,
        "--tools",
        str(tools_file),
        "--log",
        str(log_file),
    ]
    for key, value in extra.items():
        args += [f"--{key.replace('_', '-')}", value]
    return args


@pytest.fixture
def python_exe() -> str:
    return sys.executable
