import pytest

from fieldlint import canonical as C
from fieldlint.dsl import parse, parse_expr
from fieldlint.models import load_builtin

SANDBOX = """
field phi: complex scalar
field chi: real scalar
field A: real vector
field B: real vector
field F: real tensor antisymmetric
field S: real tensor symmetric
field psi: complex spinor
const m dim -1
const e dim 0
const k
L = 0
"""


@pytest.fixture(scope="session")
def sandbox():
    return parse(SANDBOX, "sandbox")


@pytest.fixture
def ex(sandbox):
    """Parse an expression against the sandbox model (or a builtin by name)."""
    def _ex(text, model=None):
        m = sandbox if model is None else (load_builtin(model) if isinstance(model, str) else model)
        return parse_expr(text, m)
    return _ex


def same(a, b) -> bool:
    return C.canonicalize(a) == C.canonicalize(b)


from hypothesis import settings  # noqa: E402

settings.register_profile("repo", derandomize=True, deadline=None)
settings.load_profile("repo")
