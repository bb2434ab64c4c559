from __future__ import annotations

import pytest

from aggio.pattern import generate_pattern_file


@pytest.fixture(scope="session")
def pattern_16mib(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "pattern-16mib.bin"
    generate_pattern_file(path, 16 << 20)
    return path


@pytest.fixture(scope="session")
def pattern_1mib(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "pattern-1mib.bin"
    generate_pattern_file(path, 1 << 20)
    return path


@pytest.fixture(scope="session")
def pattern_64kib(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "pattern-64kib.bin"
    generate_pattern_file(path, 64 << 10)
    return path
