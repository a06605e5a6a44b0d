"""Clock system, wave-stream protocol, legitimacy predicates, and lifting."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhosync import (DaemonPolicy, IncomparableError, IncrementingSystem,
                     SizingError, build_ss_ws, d_K, generate, graph_params,
                     intrinsic_delays, is_wu, is_wu0, lift, local_leq, ominus,
                     path_delay, random_configuration, run,
                     uniform_configuration)
from conftest import make_ws, stabilized_suffix


# -- incrementing system ---------------------------------------------------


def test_phi_tail_then_ring():
    s = IncrementingSystem(alpha=3, period=4)
    orbit = [-3]
    for _ in range(8):
        orbit.append(s.phi(orbit[-1]))
    assert orbit == [-3, -2, -1, 0, 1, 2, 3, 0, 1]


def test_domain_partition():
    s = IncrementingSystem(alpha=2, period=3)
    assert [x for x in range(-4, 5) if s.contains(x)] == [-2, -1, 0, 1, 2]
    assert [x for x in range(-4, 5) if s.in_tail(x)] == [-2, -1, 0]
    assert [x for x in range(-4, 5) if s.in_tail_star(x)] == [-2, -1]
    assert [x for x in range(-4, 5) if s.in_ring(x)] == [0, 1, 2]
    assert s.reset_value == -2


def test_sizing_rejected():
    with pytest.raises(SizingError):
        IncrementingSystem(alpha=-1, period=4)
    with pytest.raises(SizingError):
        IncrementingSystem(alpha=0, period=0)


@settings(max_examples=60, deadline=None)
@given(a=st.integers(0, 11), b=st.integers(0, 11))
def test_d_K_brute_force(a, b):
    K = 12
    expect = min(abs(a - b + t * K) for t in (-1, 0, 1))
    assert d_K(a, b, K) == expect
    assert d_K(a, b, K) == d_K(b, a, K)


def test_d_K_domain():
    with pytest.raises(ValueError):
        d_K(12, 0, 12)


@settings(max_examples=60, deadline=None)
@given(a=st.integers(0, 9), b=st.integers(0, 9))
def test_local_order_consistent_with_phi(a, b):
    K = 10
    rel = local_leq(a, b, K)
    if rel == "eq":
        assert a == b
    elif rel == "leq":
        assert (a + 1) % K == b
        assert ominus(b, a, K) == 1
    elif rel == "geq":
        assert (b + 1) % K == a
        assert ominus(b, a, K) == -1
    else:
        assert d_K(a, b, K) > 1
        with pytest.raises(IncomparableError):
            ominus(b, a, K)


# -- delays and legitimacy -------------------------------------------------


def test_path_delay_hand_case(path6):
    c = tuple({"r": v} for v in [0, 1, 1, 2, 3, 3])
    assert path_delay(c, [0, 1, 2, 3, 4, 5], path6, 8) == 3
    assert path_delay(c, [3, 2, 1, 0], path6, 8) == -2
    assert path_delay(c, [2], path6, 8) == 0
    with pytest.raises(ValueError):
        path_delay(c, [0, 2], path6, 8)  # not an edge


def test_is_wu_and_intrinsic_on_small_ring():
    topo = generate("ring", n=4)
    s = IncrementingSystem(alpha=2, period=6)
    balanced = tuple({"r": v} for v in [0, 1, 0, 1])  # cycle delay sums to 0
    assert is_wu(balanced, topo, s)
    assert is_wu0(balanced, topo, s)
    tail = tuple({"r": v} for v in [0, -1, 0, 1])
    assert not is_wu(tail, topo, s)
    gap = tuple({"r": v} for v in [0, 3, 0, 1])
    assert not is_wu(gap, topo, s)


def test_wu_without_intrinsic_delay():
    # C3 with values 0,1,2 mod 3: locally comparable but the cycle delay is 3
    topo = generate("ring", n=3)
    s = IncrementingSystem(alpha=2, period=3)
    c = tuple({"r": v} for v in [0, 1, 2])
    assert is_wu(c, topo, s)
    assert intrinsic_delays(c, topo, s) is None
    assert not is_wu0(c, topo, s)


def test_intrinsic_delays_values(path6):
    s = IncrementingSystem(alpha=2, period=8)
    c = tuple({"r": v} for v in [2, 3, 3, 4, 5, 5])
    assert intrinsic_delays(c, topo=path6, sysm=s) == [0, 1, 1, 2, 3, 3]


# -- wave-stream protocol --------------------------------------------------


def test_build_ss_ws_sizing_enforced(ring8):
    with pytest.raises(SizingError):
        build_ss_ws(ring8, 0, 5, 4)
    with pytest.raises(SizingError):
        build_ss_ws(ring8, 2, 5, 4, t_g_bound=8)  # alpha below T_G
    with pytest.raises(SizingError):
        build_ss_ws(ring8, 1, 4, 8, c_g_bound=8)  # period 8 not > C_G


def test_ss_ws_period_and_meta(ring8):
    proto = make_ws(ring8, 2)
    sysm = proto.clock_registers["r"]
    assert proto.meta["delta"] == 3
    assert sysm.period == 3 * (graph_params(ring8).c_g_bound + 1)


@pytest.mark.parametrize("daemon", ["synchronous", "central",
                                    "distributed_random",
                                    "adversarial_unfair"])
def test_ss_ws_converges_from_arbitrary_init(ring8, daemon):
    proto = make_ws(ring8, 2)
    suffix, idx = stabilized_suffix(proto, ring8, daemon, seed=3,
                                    max_steps=8000)
    assert idx >= 0
    sysm = proto.clock_registers["r"]
    # closure along the run: every later configuration stays in WU
    for cfg in suffix.configs[::50]:
        assert is_wu(cfg, ring8, sysm)


def test_ss_ws_quiesces_never(ring8):
    proto = make_ws(ring8, 1)
    tr = run(proto, ring8, DaemonPolicy(kind="synchronous"),
             uniform_configuration(proto, ring8), max_steps=100)
    assert tr.stop_reason == "budget"


# -- lifting ---------------------------------------------------------------


def test_lift_requires_wu0(ring8):
    proto = make_ws(ring8, 1)
    bad = tuple({"r": -1 if p == 0 else 0} for p in ring8.nodes)
    tr = run(proto, ring8, DaemonPolicy(kind="synchronous"), bad, max_steps=1)
    with pytest.raises(ValueError):
        lift(tr)


@pytest.mark.parametrize("daemon", ["synchronous", "central"])
def test_lift_invariants(ring8, daemon):
    proto = make_ws(ring8, 2)
    suffix, _ = stabilized_suffix(proto, ring8, daemon, seed=5,
                                  max_steps=6000)
    lt = lift(suffix)
    sysm = proto.clock_registers["r"]
    n = ring8.node_count
    for t in range(0, len(lt.values), 25):
        row = lt.values[t]
        cfg = suffix.configs[t]
        for p in ring8.nodes:
            # congruence with the concrete ring value
            assert row[p] % sysm.period == cfg[p]["r"]
            for q in ring8.nodes:
                assert abs(row[p] - row[q]) <= ring8.dist[p][q]
    # per-process monotone, increments by one per NA firing
    for p in ring8.nodes:
        col = [lt.values[t][p] for t in range(len(lt.values))]
        assert all(0 <= b - a <= 1 for a, b in zip(col, col[1:]))


def test_level_time_earliest(ring8):
    proto = make_ws(ring8, 1)
    suffix, _ = stabilized_suffix(proto, ring8, "synchronous", seed=1,
                                  max_steps=3000)
    lt = lift(suffix)
    k = max(lt.values[0]) + 3
    for p in ring8.nodes:
        t = lt.level_time(p, k)
        assert lt.values[t][p] == k
        assert t == 0 or lt.values[t - 1][p] == k - 1
