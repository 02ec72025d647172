from pathlib import Path

import pytest

from formalrank.provers import BuiltinProver, SyntacticProver

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def chain():
    return [SyntacticProver(), BuiltinProver()]
