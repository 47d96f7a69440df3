import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from buildmst.tree_metric import build_metric, generate_random_tree, three_node_example  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def example():
    tree, names = three_node_example()
    return tree, build_metric(tree), names


@pytest.fixture(scope="session")
def random_metrics():
    """(tree, metric) pairs over a spread of sizes, internal nodes included."""
    out = []
    for seed in range(30):
        n = 2 + seed % 14
        tree = generate_random_tree(n, seed % 6, (1, 10**6), seed=seed)
        out.append((tree, build_metric(tree)))
    return out


@pytest.fixture
def acceptance_log():
    def log(criterion, passed, detail=""):
        line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
