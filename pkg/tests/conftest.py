from __future__ import annotations

import pytest

from tracequery import load, parse_scenario, parse_trace, sample_text


@pytest.fixture(scope="session")
def npe_events():
    return parse_trace(sample_text("traveling_null_pointer.jel"))


@pytest.fixture(scope="session")
def npe(npe_events):
    return load(npe_events)


@pytest.fixture(scope="session")
def login_ok():
    return load(parse_trace(sample_text("login_ok.jel")))


@pytest.fixture(scope="session")
def login_bad():
    return load(parse_trace(sample_text("login_bad.jel")))


@pytest.fixture(scope="session")
def login_spec():
    return parse_scenario(sample_text("login.scn"))
