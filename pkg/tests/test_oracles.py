import random

from faultsim.config import SimConfig
from faultsim.faults import FaultDescriptor
from faultsim.genbench import gen_bench
from faultsim.oracles import run_serial_concurrent, run_single_fault
from faultsim.scheduler import run_simulation

from conftest import AND2, build


def test_controlling_value_detection():
    g = build(AND2)
    fault = FaultDescriptor(0, "port", "a", 0, "sa0")
    result = run_single_fault(g, fault, [[1, 1]])
    assert (result.detected, result.detect_cycle, result.observing_output) == (
        True, 0, "o")


def test_masked_stimulus_undetected():
    g = build(AND2)
    fault = FaultDescriptor(0, "port", "a", 0, "sa0")
    result = run_single_fault(g, fault, [[1, 0]])
    assert not result.detected


def test_dead_logic_never_detected():
    text = """
module m
input a 1
assign dead 1 = NOT a
assign live 1 = AND a a
output o 1 = live
end
"""
    g = build(text)
    fault = FaultDescriptor(0, "wire", "dead", 0, "sa1")
    result = run_single_fault(g, fault, [[0], [1], [0], [1]])
    assert not result.detected


def test_reg_stuck_fault_visible_from_reset():
    text = "module m\ninput a 4\nreg r 4 = 0\noutput o 4 = r\nnext r = a\nend"
    fault = FaultDescriptor(0, "reg", "r", 3, "sa1")
    result = run_single_fault(build(text), fault, [[0], [0]])
    assert (result.detected, result.detect_cycle) == (True, 0)


def test_serial_equals_parallel_at_many_worker_counts():
    rng = random.Random(55)
    for trial in range(6):
        profile = ("uniform", "skewed", "pipeline")[trial % 3]
        b = gen_bench(profile, rng.randint(25, 80), rng.randint(0, 9999),
                      cycles=rng.randint(3, 10), fault_count=rng.randint(2, 24))
        g, stim, faults = b.build()
        serial = run_serial_concurrent(g, faults, stim)
        for P in (1, 16):
            g2, _, _ = b.build()
            rep = run_simulation(g2, faults, stim,
                                 SimConfig(workers=P, mode="full", threshold=0.05))
            assert rep.verdicts() == serial.verdicts()


def test_serial_handles_empty_fault_list():
    b = gen_bench("uniform", 30, 1, cycles=4)
    g, stim, _ = b.build()
    report = run_serial_concurrent(g, [], stim)
    assert report.results == [] and report.coverage == 0.0
    assert len(report.cycles) == 4
