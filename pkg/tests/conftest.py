from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

from corefpipe.treebank import TreeNode, parse_tree

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture(scope="session")
def lion_tree():
    return parse_tree((FIXTURES / "lion.mrg").read_text())


POS = ["NN", "NNP", "NNS", "DT", "PRP", "PRP$", "IN", "VB", "JJ", "CC", ",", "."]
PHRASES = ["NP", "VP", "PP", "S", "SBAR", "ADJP"]
FUNC = ["", "-SBJ", "-TMP", "-CLR", "-LOC", "-PRD"]
WORDS = ["the", "lion", "it", "Kong", "Hong", "saw", "a", "and", "of", "this"]


def _leaf():
    real = st.builds(lambda p, w: TreeNode(p, leaf_token=(p, w)), st.sampled_from(POS),
                     st.sampled_from(WORDS))
    trace = st.builds(lambda w: TreeNode("-NONE-", leaf_token=("-NONE-", w)),
                      st.sampled_from(["*", "*-1", "*PRO*", "*T*-2", "0"]))
    return st.one_of(real, real, real, trace)


def _phrase(children):
    return st.builds(
        lambda cat, tag, idx, kids: TreeNode(cat, [tag[1:]] if tag else [], idx, None, list(kids)),
        st.sampled_from(PHRASES), st.sampled_from(FUNC),
        st.one_of(st.none(), st.integers(1, 3)), st.lists(children, min_size=1, max_size=4))


trees = st.recursive(_leaf(), _phrase, max_leaves=25).filter(lambda n: not n.is_leaf)


# one line per acceptance criterion, appended by test_acceptance.py
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
