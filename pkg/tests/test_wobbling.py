import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amenlab.fullgroup import embed_pi_p
from amenlab.subshift import HorizonError, builtin_system
from amenlab.wobbling import (
    BijectivityError,
    ComposeMap,
    InverseMap,
    SubshiftMap,
    TableMap,
    WobblingMap,
    compose,
    displacement_pattern,
    evaluate,
    from_json,
    identity,
    invert,
    observed_bound,
    shift,
    swap,
    to_json,
    verify_bijectivity_window,
)


class _Broken(WobblingMap):
    """Sends both 2 and 3 to 4; not a bijection."""

    bound = 2
    label = "broken"

    def __call__(self, j):
        return {2: 4, 3: 4, 4: 2}.get(j, j)


def test_evaluate_examples():
    assert evaluate(identity(), 17) == 17
    assert evaluate(shift(), -3) == -2
    assert evaluate(swap(0, 5), 5) == 0


def test_compose_examples():
    s = shift()
    g = compose(s, invert(s))
    assert all(g(j) == j for j in range(-100, 101))
    sw = swap(0, 5)
    assert all(compose(sw, sw)(j) == j for j in range(-10, 11))
    h = compose(s, sw)
    assert h(0) == 6 and h(5) == 1


def test_invert_examples():
    assert invert(shift())(0) == -1
    sw = swap(0, 5)
    assert invert(sw).table == sw.table
    assert invert(compose(shift(), swap(0, 5)))(6) == 0


def test_inverse_map_search():
    g = InverseMap(ComposeMap(shift(), swap(0, 5)))
    assert g(6) == 0 and g(1) == 5
    with pytest.raises(BijectivityError):
        InverseMap(_Broken())(3)


def test_displacement_pattern_examples():
    assert displacement_pattern(shift(), 100, 2).displacements == (1,) * 5
    assert displacement_pattern(swap(0, 5), 0, 1).displacements == (0, 5, 0)
    assert displacement_pattern(identity(), -40, 3).displacements == (0,) * 7


def test_verify_bijectivity_window(fib, fib_elements):
    assert verify_bijectivity_window(shift(), -50, 50)
    assert not verify_bijectivity_window(_Broken(), 0, 10)
    for a in fib_elements.values():
        assert verify_bijectivity_window(embed_pi_p(a), -100, 100)


def test_table_must_be_permutation():
    with pytest.raises(BijectivityError):
        TableMap({2: 4, 3: 4})


def test_horizon_error_names_window():
    sys_ = builtin_system("fibonacci", 64)
    g = SubshiftMap(sys_, 0, {"0": 0, "1": 0})
    assert g(60) == 60
    with pytest.raises(HorizonError, match="64"):
        g(100)


# -- pool-based properties ------------------------------------------------------

def _pool(fib_elements):
    return [
        identity(), shift(), shift(-2), swap(0, 5), swap(-3, -7), compose(shift(), swap(0, 5)),
        *(embed_pi_p(a) for a in fib_elements.values()),
    ]


def test_group_laws(fib_elements):
    pool = _pool(fib_elements)
    rng = random.Random(0)
    window = range(-100, 101)
    for _ in range(30):
        f, g, h = (rng.choice(pool) for _ in range(3))
        left, right = compose(compose(f, g), h), compose(f, compose(g, h))
        assert all(left(j) == right(j) for j in window)
    for g in pool:
        e = compose(g, invert(g))
        assert all(e(j) == j for j in window)
        assert all(invert(g)(g(j)) == j for j in window)


def test_compose_bound_is_subadditive(fib_elements):
    pool = _pool(fib_elements)
    for g in pool:
        for h in pool:
            assert compose(g, h).bound <= g.bound + h.bound


def test_bound_soundness(fib_elements):
    rng = np.random.default_rng(1)
    for g in _pool(fib_elements):
        js = rng.integers(-50_000, 50_000, size=10_000)
        assert all(abs(g(int(j)) - int(j)) <= g.bound for j in js)


def test_displacements_match_evaluation(fib_elements):
    for g in _pool(fib_elements) + [invert(embed_pi_p(fib_elements["comm"]))]:
        d = g.displacements(-300, 300)
        assert d.tolist() == [g(j) - j for j in range(-300, 301)]


def test_observed_bound_tightens(fib_elements):
    g = compose(embed_pi_p(fib_elements["swap01"]), invert(embed_pi_p(fib_elements["swap01"])))
    assert g.bound == 2
    assert observed_bound(g, -500, 500) == 0


@settings(max_examples=60, deadline=None)
@given(
    perm=st.permutations(list(range(-6, 7))),
    t=st.integers(-200, 200),
    n=st.integers(0, 5),
)
def test_pattern_zero_off_support(perm, t, n):
    g = TableMap(dict(zip(range(-6, 7), perm)))
    pat = displacement_pattern(g, t, n)
    if t - n - g.bound > 6 or t + n + g.bound < -6:
        assert set(pat.displacements) <= {0}
    assert all(abs(x) <= g.bound for x in pat.displacements)


@settings(max_examples=40, deadline=None)
@given(perm=st.permutations(list(range(8))), k=st.integers(-4, 4))
def test_json_roundtrip(perm, k):
    g = compose(shift(k), invert(TableMap(dict(zip(range(8), perm)))))
    back = from_json(json.loads(json.dumps(to_json(g))))
    assert all(back(j) == g(j) for j in range(-20, 30))


def test_json_roundtrip_subshift(fib_elements):
    g = embed_pi_p(fib_elements["comm"])
    back = from_json(json.loads(json.dumps(to_json(g))))
    assert back.displacements(-200, 200).tolist() == g.displacements(-200, 200).tolist()
