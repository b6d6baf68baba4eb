"""Shared fixtures and the acceptance summary printed at the end of a run."""
from __future__ import annotations

import pytest

from nklab.landscape import Landscape, LandscapeSpec

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def small_landscape() -> Landscape:
    return Landscape(LandscapeSpec(n=10, k=3, seed=2024))


def make(n: int, k: int, seed: int = 0, cache_mode: str = "hashed") -> Landscape:
    return Landscape(LandscapeSpec(n=n, k=k, seed=seed, cache_mode=cache_mode))
