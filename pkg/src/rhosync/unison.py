"""The incrementing clock system, the self-stabilizing wave-stream protocol,
its legitimacy predicates, delay machinery, and the integer lifting of
stabilized traces.

Clock domain: chi = {-alpha, ..., 0, ..., period-1} with successor
phi(x) = (x+1) mod period for x >= 0, x+1 otherwise.  tail = {-alpha..0} is
the convergence ramp, ring = {0..period-1} the cyclic operating range.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable

from .kernel import (Action, Configuration, ProtocolDef, RegisterSpec, Trace,
                     View)
from .topology import Topology

__all__ = [
    "IncrementingSystem",
    "d_K",
    "local_leq",
    "ominus",
    "path_delay",
    "is_wu",
    "is_wu0",
    "build_ss_ws",
    "LiftedTrace",
    "lift",
    "SizingError",
    "IncomparableError",
]


class SizingError(ValueError):
    """A clock parameter constraint does not hold."""


class IncomparableError(ValueError):
    """Two ring values at torus distance > 1 cannot be ordered locally."""


@dataclass(frozen=True)
class IncrementingSystem:
    """Finite incrementing system (chi, phi) with tail depth alpha and the
    given ring period."""

    alpha: int
    period: int

    def __post_init__(self):
        if self.alpha < 0 or self.period < 1:
            raise SizingError(
                f"need alpha >= 0 and period >= 1, got alpha={self.alpha}, "
                f"period={self.period}")

    def phi(self, x: int) -> int:
        if x >= 0:
            return (x + 1) % self.period
        return x + 1

    def contains(self, x: int) -> bool:
        return -self.alpha <= x < self.period

    def in_ring(self, x: int) -> bool:
        return 0 <= x < self.period

    def in_tail(self, x: int) -> bool:
        return -self.alpha <= x <= 0

    def in_tail_star(self, x: int) -> bool:
        return -self.alpha <= x < 0

    def sample(self, rng: random.Random) -> int:
        return rng.randrange(-self.alpha, self.period)

    @property
    def reset_value(self) -> int:
        return -self.alpha


def d_K(a: int, b: int, K: int) -> int:
    """Torus distance min((a-b) mod K, (b-a) mod K) on [0, K-1]."""
    if not (0 <= a < K and 0 <= b < K):
        raise ValueError(f"values must lie in [0,{K - 1}], got {a}, {b}")
    return min((a - b) % K, (b - a) % K)


def local_leq(a: int, b: int, K: int) -> str:
    """Tri-state local order: 'leq' (a before b), 'geq', 'eq', or
    'incomparable' when the torus distance exceeds 1."""
    if d_K(a, b, K) > 1:
        return "incomparable"
    if a == b:
        return "eq"
    return "leq" if (b - a) % K == 1 else "geq"


def ominus(b: int, a: int, K: int) -> int:
    """Signed unit difference b - a for locally comparable ring values."""
    rel = local_leq(a, b, K)
    if rel == "incomparable":
        raise IncomparableError(f"{a} and {b} are not locally comparable mod {K}")
    if rel == "eq":
        return 0
    return 1 if rel == "leq" else -1


def path_delay(c: Configuration, path: list[int], topo: Topology,
               period: int, reg: str = "r") -> int:
    """Local variation of the clock values along a path (0 for a single node).

    Raises IncomparableError if some consecutive pair is not locally
    comparable (the configuration is outside WU along that path).
    """
    for u, v in zip(path, path[1:]):
        if v not in topo.adjacency[u]:
            raise ValueError(f"{u} and {v} are not adjacent")
    total = 0
    for u, v in zip(path, path[1:]):
        total += ominus(c[v][reg], c[u][reg], period)
    return total


def is_wu(c: Configuration, topo: Topology, sysm: IncrementingSystem,
          reg: str = "r") -> bool:
    """All clocks in the ring and neighboring clocks locally comparable."""
    for p in topo.nodes:
        rp = c[p][reg]
        if not sysm.in_ring(rp):
            return False
        for q in topo.adjacency[p]:
            rq = c[q][reg]
            if not sysm.in_ring(rq) or d_K(rp, rq, sysm.period) > 1:
                return False
    return True


def _tree_delays(c: Configuration, topo: Topology, period: int,
                 reg: str, root: int = 0) -> list[int]:
    """Delay from `root` to every node along a BFS tree."""
    delays = [0] * topo.node_count
    seen = {root}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in topo.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    delays[v] = delays[u] + ominus(c[v][reg], c[u][reg], period)
                    nxt.append(v)
        frontier = nxt
    return delays


def intrinsic_delays(c: Configuration, topo: Topology,
                     sysm: IncrementingSystem, reg: str = "r",
                     root: int = 0) -> list[int] | None:
    """Delays from `root` if the delay is path-independent, else None.

    Path independence holds iff the delay around every fundamental cycle
    (each non-tree edge closing the BFS tree) is zero.
    """
    delays = _tree_delays(c, topo, sysm.period, reg, root)
    for u, v in topo.edges:
        if delays[v] - delays[u] != ominus(c[v][reg], c[u][reg], sysm.period):
            return None
    return delays


def is_wu0(c: Configuration, topo: Topology, sysm: IncrementingSystem,
           reg: str = "r") -> bool:
    """WU plus an intrinsic (path-independent) delay."""
    if not is_wu(c, topo, sysm, reg):
        return False
    return intrinsic_delays(c, topo, sysm, reg) is not None


# ---------------------------------------------------------------------------
# The wave-stream protocol

Hook = Callable[[View, Callable[[str, Any], None]], dict[str, Any]]


def _no_hook(view: View, emit: Callable[[str, Any], None]) -> dict[str, Any]:
    return {}


def build_ss_ws(topo: Topology, rho: int, K: int, alpha: int,
                *, decide_hook: Hook | None = None,
                cs1_hook: Hook | None = None,
                payload_registers: tuple[RegisterSpec, ...] = (),
                t_g_bound: int | None = None,
                c_g_bound: int | None = None) -> ProtocolDef:
    """Build the wave-stream protocol with phase modulus delta = rho+1 and
    period delta*K.

    Three actions per process, in reset-first priority order:
      RA: locally incorrect ring value -> reset to -alpha;
      CA: climb the tail behind all neighbors;
      NA: normal step -- the decide hook when r = delta-1 mod delta,
          else the cs1 hook; then increment.

    A phase spans delta clock ticks: one boundary (decide + re-init) step
    followed by rho computation steps, so the next boundary observes the
    completed rho-stage pipeline.

    Sizing: alpha >= greatest-hole bound (convergence), delta*K >
    cyclomatic bound (liveness).  Pass the bounds to have them enforced.
    """
    if rho < 1:
        raise SizingError(f"rho must be >= 1, got {rho}")
    delta = rho + 1
    period = delta * K
    if t_g_bound is not None and alpha < t_g_bound:
        raise SizingError(
            f"alpha={alpha} violates alpha >= T_G bound ({t_g_bound})")
    if c_g_bound is not None and period <= c_g_bound:
        raise SizingError(
            f"(rho+1)*K={period} violates (rho+1)*K > C_G bound ({c_g_bound})")
    sysm = IncrementingSystem(alpha=alpha, period=period)
    cs1 = cs1_hook or _no_hook
    cs2 = decide_hook or _no_hook

    def normal_step(view: View) -> bool:
        rp = view.get("r")
        if not sysm.in_ring(rp):
            return False
        nxt = sysm.phi(rp)
        return all((rq := view.nget(q, "r")) == rp or rq == nxt
                   for q in view.neighbors)

    def convergence_step(view: View) -> bool:
        rp = view.get("r")
        if not sysm.in_tail_star(rp):
            return False
        return all(sysm.in_tail(rq := view.nget(q, "r")) and rp <= rq
                   for q in view.neighbors)

    def locally_correct(view: View) -> bool:
        rp = view.get("r")
        if not sysm.in_ring(rp):
            return False
        for q in view.neighbors:
            rq = view.nget(q, "r")
            if not sysm.in_ring(rq):
                return False
            if not (rp == rq or rp == sysm.phi(rq) or sysm.phi(rp) == rq):
                return False
        return True

    def reset_init(view: View) -> bool:
        return not locally_correct(view) and not sysm.in_tail(view.get("r"))

    def na_body(view: View, emit) -> dict[str, Any]:
        rp = view.get("r")
        if rp % delta == delta - 1:
            updates = cs2(view, emit)
        else:
            updates = cs1(view, emit)
        updates["r"] = sysm.phi(rp)
        return updates

    def ca_body(view: View, emit) -> dict[str, Any]:
        return {"r": sysm.phi(view.get("r"))}

    def ra_body(view: View, emit) -> dict[str, Any]:
        return {"r": sysm.reset_value}

    registers = (RegisterSpec("r", 0, sysm.sample),) + payload_registers
    actions = (
        Action("RA", reset_init, ra_body),
        Action("CA", convergence_step, ca_body),
        Action("NA", normal_step, na_body),
    )
    return ProtocolDef(
        name="ss_ws",
        actions=actions,
        registers=registers,
        clock_registers={"r": sysm},
        meta={"rho": rho, "K": K, "delta": delta, "phase_len": delta,
              "topo": topo},
    )


# ---------------------------------------------------------------------------
# Lifting


@dataclass
class LiftedTrace:
    """Virtual integer clock registers over a trace whose first configuration
    is in WU0.  values[t][p] is the lifted register of p in configuration t;
    base is the minimal initial lifted value (bottom_0)."""

    trace: Trace
    reg: str
    base: int
    values: list[list[int]]

    def level_time(self, p: int, k: int) -> int | None:
        """Earliest configuration index at which p's lifted value is >= k
        and exactly k (None if the level is skipped or never reached)."""
        for t, row in enumerate(self.values):
            if row[p] == k:
                return t
            if row[p] > k:
                return None
        return None


def lift(trace: Trace, reg: str = "r") -> LiftedTrace:
    """Lift ring clock values of a WU0-initial trace to the integers.

    The minimal process (by precedence, ties to the lowest index) anchors
    bottom_0; each concrete ring increment bumps the virtual register by one.
    """
    proto, topo = trace.protocol, trace.topo
    sysm = proto.clock_registers[reg]
    c0 = trace.configs[0]
    if not is_wu0(c0, topo, sysm, reg):
        raise ValueError("first configuration of the trace is not in WU0")
    delays = intrinsic_delays(c0, topo, sysm, reg, root=0)
    assert delays is not None
    # Anchor at a minimal process so the lifted values stay congruent to the
    # concrete ring values modulo the period.
    p_min = min(topo.nodes, key=lambda p: (delays[p], p))
    base = c0[p_min][reg]
    current = [base + delays[p] - delays[p_min] for p in topo.nodes]
    values = [list(current)]
    for rec in trace.records:
        for p, updates in rec.changed.items():
            if reg in updates:
                old = trace.configs[rec.step][p][reg]
                new = updates[reg]
                if sysm.in_ring(old) and new == sysm.phi(old):
                    current[p] += 1
        values.append(list(current))
    return LiftedTrace(trace=trace, reg=reg, base=base, values=values)
