"""Shared fixtures: parsed manifolds, Dirichlet domains and spectra (computed once per session)."""

import os
from functools import lru_cache
from pathlib import Path

import pytest

from orthospec.cli import parse_manifold
from orthospec.dirichlet import auto_pairings, build_domain
from orthospec.spectrum import length_spectrum

DATA = Path(__file__).resolve().parents[1] / "src" / "orthospec" / "data"

EXTENDED = os.environ.get("ORTHOSPEC_EXTENDED", "") == "1"


def fixture_path(name: str) -> Path:
    return DATA / f"{name}.mfd"


@lru_cache(maxsize=None)
def manifold(name: str):
    return parse_manifold(fixture_path(name))


@lru_cache(maxsize=None)
def domain(name: str):
    mf = manifold(name)
    return build_domain(auto_pairings(list(mf.centred_generators().values())))


@lru_cache(maxsize=None)
def spectrum(name: str, cutoff: str):
    return length_spectrum(domain(name), cutoff)


@pytest.fixture(scope="session")
def n2():
    return domain("N2_hp")


@pytest.fixture(scope="session")
def n2_spec():
    return spectrum("N2_hp", "3.18385")


@pytest.fixture(scope="session")
def n4():
    return domain("N4_hp")


@pytest.fixture(scope="session")
def n4_spec():
    return spectrum("N4_hp", "2.6")


@pytest.fixture(scope="session")
def n3():
    return domain("N3_hp")


@pytest.fixture(scope="session")
def n3_spec():
    return spectrum("N3_hp", "4.0")


@lru_cache(maxsize=None)
def cover_inputs(name: str, cutoff: str):
    from orthospec.cover import gather_inputs

    return gather_inputs(domain(name), spectrum(name, cutoff), manifold(name).volume)


# --- acceptance summary: one line per criterion, from pytest's own outcomes ----------

_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_ac"):
        return
    key = "AC-" + name[len("test_ac"):].split("_")[0]
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or report.outcome != "passed":
        prev = _ACCEPTANCE.get(key)
        if prev is None or prev[0] == "PASS":
            _ACCEPTANCE[key] = ("PASS" if report.passed else report.outcome.upper(), detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k.split("-")[1])):
        status, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {status:<6} {detail}")
