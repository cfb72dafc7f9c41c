import random

import pytest

from faultsim.rtl import elaborate_text


def build(text):
    return elaborate_text(text)


AND2 = """
module and2
input a 1
input b 1
assign y 1 = AND a b
output o 1 = y
end
"""

# One register read by one comb consumer, next value produced by other logic.
REG_LOOP = """
module regloop
input x 4
reg r 4 = 3
assign d 4 = ADD r #1:4
assign e 4 = XOR d x
output o 4 = d
next r = e
end
"""


@pytest.fixture
def and2_graph():
    return build(AND2)


@pytest.fixture
def regloop_graph():
    return build(REG_LOOP)


def rand_rows(rng: random.Random, graph, cycles: int):
    widths = [graph.nodes[i].width for i in graph.inputs]
    return [[rng.randrange(1 << w) for w in widths] for _ in range(cycles)]
