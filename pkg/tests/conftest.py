from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from enrvar.relcore import LE, FinStructure, RelSignature, builtin_theory

FIXTURES = Path(__file__).parent.parent / "fixtures"


def poset(carrier, covers):
    """Build a poset structure from its carrier order and extra <=-pairs
    (reflexive loops added, transitivity NOT closed: pass closed pairs)."""
    sig = builtin_theory("pos").signature
    edges = {(LE, (x, x)) for x in carrier} | {(LE, pair) for pair in covers}
    return FinStructure(sig, tuple(carrier), frozenset(edges))


@pytest.fixture
def chain2():
    return poset(("a", "b"), [("a", "b")])


@pytest.fixture
def chain3():
    return poset(("a", "b", "c"), [("a", "b"), ("b", "c"), ("a", "c")])


@pytest.fixture
def discrete2():
    return poset(("a", "b"), [])


def random_structure(rng: random.Random, sig: RelSignature, max_size=3) -> FinStructure:
    n = rng.randint(0, max_size)
    carrier = tuple(f"x{i}" for i in range(n))
    edges = set()
    for rel, ar in sig.symbols:
        for tup in __import__("itertools").product(carrier, repeat=ar):
            if rng.random() < 0.45:
                edges.add((rel, tup))
    return FinStructure(sig, carrier, frozenset(edges))
