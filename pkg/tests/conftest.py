import numpy as np
import pytest

from hierevo import netmodel as nm


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def shape():
    return nm.LayerShape()


def build_block_network(x_params: tuple[int, int, int]) -> nm.NetworkGenome:
    """A hand-wired network solving AND-<gate>-AND problems exactly.

    Layer 1 computes a three-valued AND signal per input pair
    (tanh(20*(2a + 2b - 2)) is -1, 0, or +1, and +1 exactly when both inputs
    are on).  Each second-level block turns two of those signals into a gate
    indicator via two intermediate nodes; ``x_params`` selects the gate
    (found by exhaustive search over the legal weight/bias sets).  The output
    fires (>= 0) exactly when both block indicators are +1.
    """
    u1, u2, ub = -2, 1, 1
    v1, v2, vb = -1, 2, -2
    xu, xv, xb = x_params
    conns = []
    biases = {}
    for j in range(4):
        conns += [(2 * j, 8 + j, 2), (2 * j + 1, 8 + j, 2)]
        biases[8 + j] = -2
    for blk in range(2):
        r_a, r_b = 8 + 2 * blk, 9 + 2 * blk
        u_node, v_node, x_node = 12 + 2 * blk, 13 + 2 * blk, 16 + blk
        conns += [(r_a, u_node, u1), (r_b, u_node, u2)]
        biases[u_node] = ub
        conns += [(r_a, v_node, v1), (r_b, v_node, v2)]
        biases[v_node] = vb
        conns += [(u_node, x_node, xu), (v_node, x_node, xv)]
        biases[x_node] = xb
    conns += [(16, 18, 1), (17, 18, 1)]
    biases[18] = -2
    bias_list = [biases.get(n, 0) for n in range(8, 19)]
    return nm.make_genome(nm.LayerShape(), conns, bias_list)


@pytest.fixture(scope="session")
def perfect_and_xor_and() -> nm.NetworkGenome:
    return build_block_network((-1, 2, 2))


@pytest.fixture(scope="session")
def perfect_and_equ_and() -> nm.NetworkGenome:
    return build_block_network((1, -2, -1))
