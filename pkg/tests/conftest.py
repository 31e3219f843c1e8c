import pytest

from amenlab.fullgroup import commutator, cylinder_swap, embed_pi_p
from amenlab.subshift import builtin_system
from amenlab.wobbling import shift

# large enough for pattern scans over |j| <= 10^5
ORBIT_HORIZON = 2 ** 18


@pytest.fixture(scope="session")
def fib():
    return builtin_system("fibonacci", ORBIT_HORIZON)


@pytest.fixture(scope="session")
def tm():
    return builtin_system("thue-morse", 2 ** 14)


@pytest.fixture(scope="session")
def fib_elements(fib):
    s01 = cylinder_swap(fib, "01")
    s001 = cylinder_swap(fib, "001")
    s00100 = cylinder_swap(fib, "00100")
    return {"swap01": s01, "swap001": s001, "swap00100": s00100, "comm": commutator(s01, s00100)}


@pytest.fixture(scope="session")
def pool(fib_elements):
    """shift, two embedded Fibonacci swaps and one embedded commutator."""
    e = fib_elements
    return {
        "shift": shift(),
        "swap01": embed_pi_p(e["swap01"]),
        "swap001": embed_pi_p(e["swap001"]),
        "comm": embed_pi_p(e["comm"]),
    }
