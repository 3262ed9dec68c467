import random

import pytest

import levelrepair as lr


def random_program(rng, n_orig=None):
    p = lr.ConstraintProgram()
    n = n_orig or rng.randint(2, 7)
    xs = [p.make_var() for _ in range(n)]
    for v in xs:
        if rng.random() < 0.6:
            p.set_weight(v, float(rng.randint(1, 9)))

    def lits(k):
        return [(v, rng.random() < 0.6) for v in rng.sample(xs, k)]

    for _ in range(rng.randint(0, 2)):
        xs.append(p.make_conj(lits(rng.randint(1, min(3, n)))))
    for _ in range(rng.randint(1, 4)):
        w = float(rng.randint(1, 9)) if rng.random() < 0.5 else None
        if rng.random() < 0.5:
            prem = (rng.choice(xs), rng.random() < 0.5)
            p.cnstr_implies_disj(prem, lits(rng.randint(1, min(3, len(xs)))), w)
        else:
            ls = lits(rng.randint(1, min(4, len(xs))))
            lo = rng.randint(1, len(ls)) if rng.random() < 0.7 else 0
            hi = rng.randint(lo, len(ls))
            p.cnstr_count(ls, lo, hi, w)
    return p


@pytest.fixture
def programs():
    rng = random.Random(2024)
    return [random_program(rng) for _ in range(20)]
