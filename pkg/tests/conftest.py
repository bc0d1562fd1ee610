"""Pytest configuration and shared fixtures."""

import os
from pathlib import Path

import pytest

# Settings are read at import time; keep test output free of ANSI codes.
os.environ.setdefault("DEKL_COLOR", "0")
os.environ.setdefault("DEKL_LOG_LEVEL", "WARNING")

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"
CORPUS_DIR = REPO_ROOT / "data" / "corpus"

TINY_SOURCE = """
state S.
event E.
step S -[E]-> S as w.
"""

CHAIN_SOURCE = """
state A.
state B.
state C.
state D.
event E.
event F.
step A -[E]-> B as ab.
step B -[F]-> C as bc.
step C -[E]-> A as ca.
"""


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR


@pytest.fixture
def corpus_dir():
    return CORPUS_DIR


@pytest.fixture
def tiny_module():
    """One state with a single self-loop."""
    from core.parser import parse_module

    return parse_module(TINY_SOURCE, "tiny.dekl")


@pytest.fixture
def tiny_system(tiny_module):
    from core.transition import TransitionSystem

    return TransitionSystem.from_module(tiny_module)


@pytest.fixture
def chain_module():
    """A three-state cycle plus an unreachable state D."""
    from core.parser import parse_module

    return parse_module(CHAIN_SOURCE, "chain.dekl")


@pytest.fixture
def chain_system(chain_module):
    from core.transition import TransitionSystem

    return TransitionSystem.from_module(chain_module)


@pytest.fixture
def credential_module():
    from core.parser import parse_file

    return parse_file(str(CORPUS_DIR / "credential.dekl"))


@pytest.fixture
def credential_checked(credential_module):
    from core.kernel import check_module

    return check_module(credential_module)


@pytest.fixture
def credential_kernel(credential_checked):
    return credential_checked.kernel


@pytest.fixture
def monitoring_checked():
    from core.kernel import check_module
    from core.parser import parse_file

    return check_module(parse_file(str(CORPUS_DIR / "monitoring.dekl")))


@pytest.fixture
def defaults_checked():
    from core.kernel import check_module
    from core.parser import parse_file

    return check_module(parse_file(str(CORPUS_DIR / "defaults.dekl")))
