"""The two-layer clock: a master wave-stream clock gating a slave clock
through a pluggable condition.

The master period is delta*K with delta = rho+1: each master phase spans
delta ticks, leaving rho pipeline (computation) steps between consecutive
phase boundaries, so a phase-boundary election sees the full rho-ball.
The slave register advances only at phase boundaries, when the plugin's
conditions allow, which realizes a barrier synchronization at distance rho.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable

from .kernel import (Action, Configuration, ProtocolDef, RegisterSpec, Trace,
                     View)
from .topology import Topology
from .unison import IncrementingSystem, SizingError, is_wu, lift

__all__ = [
    "CondPlugin",
    "build_ss_dc",
    "delay_2rho",
    "verify_delay_agreement",
    "DelayAgreementVerdict",
    "stabilization_indices",
    "trivial_plugin",
    "lint_cond_independence",
]


@dataclass(frozen=True)
class CondPlugin:
    """Problem-specific behavior attached to the layer clock.

    cond gates the critical section at phase boundaries and must never read
    the master register r1; cond1 further gates the slave increment.
    initialization runs at every phase boundary (it receives the slave value
    after a possible increment); computation runs at every other master
    step.  critical_section runs when cond holds and may emit cs events.
    """

    name: str
    registers: tuple[RegisterSpec, ...] = ()
    cond: Callable[[View], bool] = lambda view: True
    cond1: Callable[[View], bool] = lambda view: True
    initialization: Callable[[View, Callable, int], dict[str, Any]] = \
        lambda view, emit, r2_after: {}
    computation: Callable[[View, Callable], dict[str, Any]] = \
        lambda view, emit: {}
    critical_section: Callable[[View, Callable], None] = lambda view, emit: None
    uses_ids: bool = False
    meta: dict[str, Any] = field(default_factory=dict)


def trivial_plugin() -> CondPlugin:
    """cond = cond1 = true: the slave ticks once per master phase everywhere."""
    return CondPlugin(
        name="trivial",
        critical_section=lambda view, emit: emit("cs", {"v": None}),
    )


def build_ss_dc(topo: Topology, rho: int, *, K: int, K2: int,
                alpha1: int, alpha2: int, plugin: CondPlugin,
                t_g_bound: int | None = None,
                c_g_bound: int | None = None,
                allow_undersized: bool = False) -> ProtocolDef:
    """Build the layer-clock protocol.

    Sizing: alpha_i >= greatest-hole bound, delta*K > cyclomatic bound,
    K2 >= max(4*rho+1, cyclomatic bound - 1).  allow_undersized skips the
    K2 check (negative-control experiments only).
    """
    if rho < 1:
        raise SizingError(f"rho must be >= 1, got {rho}")
    delta = rho + 1
    period1 = delta * K
    if t_g_bound is not None:
        for name, a in (("alpha1", alpha1), ("alpha2", alpha2)):
            if a < t_g_bound:
                raise SizingError(
                    f"{name}={a} violates {name} >= T_G bound ({t_g_bound})")
    if c_g_bound is not None and period1 <= c_g_bound:
        raise SizingError(
            f"master period {period1} violates (rho+1)*K > C_G bound "
            f"({c_g_bound})")
    if not allow_undersized:
        floor = max(4 * rho + 1, (c_g_bound - 1) if c_g_bound else 0)
        if K2 < floor:
            raise SizingError(f"K2={K2} violates K2 >= {floor}")
    sys1 = IncrementingSystem(alpha=alpha1, period=period1)
    sys2 = IncrementingSystem(alpha=alpha2, period=K2)

    def _normal_step(view: View, reg: str, sysm: IncrementingSystem) -> bool:
        rp = view.get(reg)
        if not sysm.in_ring(rp):
            return False
        nxt = sysm.phi(rp)
        return all((rq := view.nget(q, reg)) == rp or rq == nxt
                   for q in view.neighbors)

    def _locally_correct(view: View, reg: str, sysm: IncrementingSystem) -> bool:
        rp = view.get(reg)
        if not sysm.in_ring(rp):
            return False
        for q in view.neighbors:
            rq = view.nget(q, reg)
            if not sysm.in_ring(rq):
                return False
            if not (rp == rq or rp == sysm.phi(rq) or sysm.phi(rp) == rq):
                return False
        return True

    def _convergence_step(view: View, reg: str, sysm: IncrementingSystem) -> bool:
        rp = view.get(reg)
        if not sysm.in_tail_star(rp):
            return False
        return all(sysm.in_tail(rq := view.nget(q, reg)) and rp <= rq
                   for q in view.neighbors)

    def na_guard(view: View) -> bool:
        return (_normal_step(view, "r1", sys1)
                and _locally_correct(view, "r2", sys2))

    def na_body(view: View, emit) -> dict[str, Any]:
        r1 = view.get("r1")
        updates: dict[str, Any] = {}
        if r1 % delta == delta - 1:
            if _normal_step(view, "r2", sys2) and plugin.cond(view):
                plugin.critical_section(view, emit)
                if plugin.cond1(view):
                    updates["r2"] = sys2.phi(view.get("r2"))
            r2_after = updates.get("r2", view.get("r2"))
            updates.update(plugin.initialization(view, emit, r2_after))
        else:
            updates.update(plugin.computation(view, emit))
        updates["r1"] = sys1.phi(r1)
        return updates

    def make_ca(reg: str, sysm: IncrementingSystem) -> Action:
        return Action(
            f"CA{reg[-1]}",
            lambda view: _convergence_step(view, reg, sysm),
            lambda view, emit: {reg: sysm.phi(view.get(reg))})

    def make_ra(reg: str, sysm: IncrementingSystem) -> Action:
        return Action(
            f"RA{reg[-1]}",
            lambda view: (not _locally_correct(view, reg, sysm)
                          and not sysm.in_tail(view.get(reg))),
            lambda view, emit: {reg: sysm.reset_value})

    registers = (
        RegisterSpec("r1", 0, sys1.sample),
        RegisterSpec("r2", 0, sys2.sample),
    ) + plugin.registers
    actions = (
        make_ra("r2", sys2),
        make_ra("r1", sys1),
        make_ca("r2", sys2),
        make_ca("r1", sys1),
        Action("NA", na_guard, na_body),
    )
    return ProtocolDef(
        name="ss_dc",
        actions=actions,
        registers=registers,
        clock_registers={"r1": sys1, "r2": sys2},
        uses_ids=plugin.uses_ids,
        meta={"rho": rho, "delta": delta, "K": K, "K2": K2,
              "plugin": plugin.name, "topo": topo},
    )


def delay_2rho(a: int, b: int, K2: int, rho: int) -> int | None:
    """Signed slave-clock delay from a to b for processes within distance
    2*rho, or None when neither residue fits the 2*rho window."""
    fwd = (b - a) % K2
    if fwd <= 2 * rho:
        return fwd
    bwd = (a - b) % K2
    if bwd <= 2 * rho:
        return -bwd
    return None


def lint_cond_independence(plugin: CondPlugin, proto: ProtocolDef,
                           topo: Topology, cfg: Configuration) -> None:
    """Verify on a sample configuration that cond never reads r1."""
    for p in topo.nodes:
        view = View(cfg, topo, p, track=True)
        plugin.cond(view)
        assert view.reads is not None
        if any(reg == "r1" for _, reg in view.reads):
            raise AssertionError(
                f"plugin {plugin.name}: cond read neighbor register r1 at {p}")


def stabilization_indices(trace: Trace) -> tuple[int | None, int | None]:
    """First configuration indices where WU1 and WU (= WU1 and WU2) hold."""
    proto, topo = trace.protocol, trace.topo
    sys1 = proto.clock_registers["r1"]
    sys2 = proto.clock_registers["r2"]
    first_wu1 = first_wu = None
    for i, cfg in enumerate(trace.configs):
        w1 = is_wu(cfg, topo, sys1, "r1")
        if w1 and first_wu1 is None:
            first_wu1 = i
        if w1 and is_wu(cfg, topo, sys2, "r2"):
            first_wu = i
            break
    return first_wu1, first_wu


@dataclass
class DelayAgreementVerdict:
    ok: bool
    pairs_checked: int
    disagreements: list[tuple[int, int, int, int | None, int]]
    # entries: (config_index, p, q, computed, true_delay)

    def __bool__(self) -> bool:
        return self.ok


def verify_delay_agreement(trace: Trace, topo: Topology, rho: int,
                           *, k2_override: int | None = None,
                           sample_every: int = 1,
                           rng: random.Random | None = None,
                           ) -> DelayAgreementVerdict:
    """Check the 2*rho-local comparison against the lifted slave delay.

    For every sampled configuration of a stabilized trace and every pair
    within distance 2*rho, delay_2rho on the r2 ring values must equal the
    intrinsic slave delay.  k2_override re-encodes the lifted values modulo
    an alternative period (the undersized negative control: the same run
    with a too-small slave ring, where the window argument breaks down).
    """
    k2 = k2_override if k2_override is not None else \
        trace.protocol.clock_registers["r2"].period
    lt = lift(trace, reg="r2")
    pairs = [(p, q) for p in topo.nodes for q in topo.nodes
             if p < q and topo.dist[p][q] <= 2 * rho]
    checked = 0
    bad: list[tuple[int, int, int, int | None, int]] = []
    for t in range(0, len(trace.configs), sample_every):
        row = lt.values[t]
        for p, q in pairs:
            true_delay = row[q] - row[p]
            a, b = row[p] % k2, row[q] % k2
            got = delay_2rho(a, b, k2, rho)
            checked += 1
            if got != true_delay:
                bad.append((t, p, q, got, true_delay))
    return DelayAgreementVerdict(not bad, checked, bad)
