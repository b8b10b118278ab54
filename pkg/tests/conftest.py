import pytest

from sip_forge.fst import Fst, Transition
from sip_forge.symbols import DEFAULT_TABLE, EPSILON


@pytest.fixture(scope="session")
def table():
    return DEFAULT_TABLE


@pytest.fixture(scope="session")
def digits(table):
    return {c: table.id_of(c) for c in "012"}


@pytest.fixture(scope="session")
def zero_deleter(digits):
    """Deterministic leading-zero deleter: q0 eats zeros, q1 copies."""
    s0, s1, s2 = digits["0"], digits["1"], digits["2"]
    transitions = [
        Transition(0, s0, EPSILON, 0),
        Transition(0, s1, s1, 1),
        Transition(0, s2, s2, 1),
        Transition(1, s0, s0, 1),
        Transition(1, s1, s1, 1),
        Transition(1, s2, s2, 1),
    ]
    return Fst.make(2, {s0, s1, s2}, {0}, {1}, transitions)


@pytest.fixture(scope="session")
def last_symbol_decider(digits):
    """Functional non-deterministic FST: rewrites every 0 to 1 when the
    last symbol is 1, and to 2 when the last symbol is 2."""
    s0, s1, s2 = digits["0"], digits["1"], digits["2"]
    transitions = [
        # branch guessing the input ends in 1 (q1 loop, q2 final)
        Transition(0, s0, s1, 1),
        Transition(0, s1, s1, 1),
        Transition(0, s2, s2, 1),
        Transition(0, s1, s1, 2),
        Transition(1, s0, s1, 1),
        Transition(1, s1, s1, 1),
        Transition(1, s2, s2, 1),
        Transition(1, s1, s1, 2),
        # branch guessing the input ends in 2 (q3 loop, q4 final)
        Transition(0, s0, s2, 3),
        Transition(0, s1, s1, 3),
        Transition(0, s2, s2, 3),
        Transition(0, s2, s2, 4),
        Transition(3, s0, s2, 3),
        Transition(3, s1, s1, 3),
        Transition(3, s2, s2, 3),
        Transition(3, s2, s2, 4),
    ]
    return Fst.make(5, {s0, s1, s2}, {0}, {2, 4}, transitions)
