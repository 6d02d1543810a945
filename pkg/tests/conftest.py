"""Shared builders for the test suite: small hand trees and seeded random ones."""

import numpy as np
import pytest

from treekern import GeometricTree, Node


def rel_close(a: float, b: float, tol: float) -> bool:
    """Relative comparison with a unit floor, so values near zero are
    compared absolutely."""
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def chain_tree(length: int, n: int = 1, d: int = 0, tree_id: str = "chain", step: float = 1.0):
    """Path graph rooted at one end; node k sits at k*step along the first axis."""
    nodes = []
    for k in range(length):
        x = np.zeros(n)
        x[0] = k * step
        a = np.full(d, float(k)) if d > 0 else None
        nodes.append(Node(parent=None if k == 0 else k - 1, x=x, a=a))
    return GeometricTree(tree_id, nodes, n=n, d=d)


def star_tree(leaves: int, n: int = 1, d: int = 0, tree_id: str = "star"):
    nodes = [Node(parent=None, x=np.zeros(n), a=np.zeros(d) if d > 0 else None)]
    for k in range(leaves):
        x = np.zeros(n)
        x[0] = 1.0
        nodes.append(Node(parent=0, x=x, a=np.ones(d) if d > 0 else None))
    return GeometricTree(tree_id, nodes, n=n, d=d)


def random_tree(rng, max_nodes: int, n: int = 3, d: int = 0, tree_id: str = "r"):
    """Random recursive tree: each node attaches to a uniformly chosen earlier
    node. Positions and attributes are standard normal."""
    size = int(rng.integers(1, max_nodes + 1))
    nodes = []
    for k in range(size):
        parent = None if k == 0 else int(rng.integers(0, k))
        a = rng.standard_normal(d) if d > 0 else None
        nodes.append(Node(parent=parent, x=rng.standard_normal(n), a=a))
    return GeometricTree(tree_id, nodes, n=n, d=d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
