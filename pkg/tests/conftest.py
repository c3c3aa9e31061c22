import math
import random
import sys

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from vvoldforms.fqm import from_jordan

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BLOCKS = [
    ("2^1:A", 4),
    ("2^1:B", 4),
    ("2^1:a=1,v=0", 2),
    ("2^1:a=3,v=0", 2),
    ("2^1:a=1,v=1", 2),
    ("2^1:a=7,v=1", 2),
    ("2^2:a=1,v=0", 4),
    ("2^2:a=3,v=1", 4),
    ("2^2:A", 16),
    ("2^3:a=5,v=0", 8),
    ("3^1:a=1", 3),
    ("3^1:a=2", 3),
    ("3^2:a=1", 9),
    ("3^2:a=2", 9),
    ("5^1:a=1", 5),
    ("5^1:a=2", 5),
    ("7^1:a=3", 7),
    ("11^1:a=1", 11),
    ("13^1:a=2", 13),
]

SIZE = dict(BLOCKS)


def symbol_size(symbol: str) -> int:
    if not symbol:
        return 1
    return math.prod(SIZE[c] for c in symbol.split("+"))


def random_symbol(rng: random.Random, max_size: int, max_blocks: int = 4) -> str:
    parts, size = [], 1
    for _ in range(rng.randint(1, max_blocks)):
        name, s = rng.choice(BLOCKS)
        if size * s <= max_size:
            parts.append(name)
            size *= s
    return "+".join(parts)


@st.composite
def jordan_symbols(draw, max_size=64, max_blocks=3):
    parts, size = [], 1
    for name, s in draw(st.lists(st.sampled_from(BLOCKS), min_size=0, max_size=max_blocks)):
        if size * s <= max_size:
            parts.append(name)
            size *= s
    return "+".join(parts)


def even_signature_symbols(max_size: int) -> list[str]:
    """Every multiset of at most three pool blocks with even signature and |D| <= max_size."""
    out = set()
    names = [b for b, _ in BLOCKS]

    def rec(start, parts, size):
        if parts:
            sym = "+".join(parts)
            if from_jordan(sym).signature % 2 == 0:
                out.add(sym)
        if len(parts) == 3:
            return
        for i in range(start, len(names)):
            s = SIZE[names[i]]
            if size * s <= max_size:
                rec(i, parts + [names[i]], size * s)

    rec(0, [], 1)
    return sorted(out, key=lambda s: (symbol_size(s), s))


@pytest.fixture(scope="session")
def small_even_forms():
    return even_signature_symbols(30)


def random_table(rng: random.Random, module, m: int, sturm: int, weight: int = 2, lo: int = -5, hi: int = 5):
    """Exact table of ``m`` forms with small random rational coefficients."""
    from fractions import Fraction

    from vvoldforms.oldnew import CoeffTable

    forms = [
        [[Fraction(rng.randint(lo, hi), rng.randint(1, 3)) for _ in range(sturm + 1)] for _ in range(module.size)]
        for _ in range(m)
    ]
    return CoeffTable.from_forms(module.to_dict(), weight, sturm, forms, module=module)


def random_lifted_table(rng: random.Random, D, H, m: int, sturm: int):
    """Lift of a random table on ``H^perp / H`` back to ``D``."""
    from vvoldforms.fqm import quotient
    from vvoldforms.oldnew import lift_table

    q = quotient(D, H)
    return lift_table(random_table(rng, q.module, m, sturm), D, H)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
