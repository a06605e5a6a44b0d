"""Local resource allocation at distance rho on top of the layer clock:
the clock-then-value election ordering, the mutual-exclusion / group /
readers-writers plugins, and the post-hoc safety, liveness, and cost
monitors.

Candidates are (slave clock value, requested value) pairs.  Each phase every
process folds the candidates over its rho-ball; the process(es) holding the
fold result win the privilege at the next phase boundary.
"""

from __future__ import annotations

import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Any, Callable

from .kernel import RegisterSpec, Trace, View
from .layerclock import CondPlugin, delay_2rho, stabilization_indices
from .topology import Topology
from .unison import lift

__all__ = [
    "MonitorFault",
    "lra_monitor_start",
    "lra_order",
    "lra_oplus",
    "greedy_distance_coloring",
    "make_lra_plugin",
    "CsRecord",
    "extract_cs_records",
    "monitor_safety",
    "monitor_liveness",
    "metrics",
    "Metrics",
    "compat_lme",
    "compat_gme",
    "compat_rw",
]


class MonitorFault(RuntimeError):
    """Clock components of an election were not 2*rho-comparable (mis-sized
    slave period)."""


def lra_order(x: tuple[int, Any], y: tuple[int, Any], K2: int, rho: int,
              sigma_leq: Callable[[Any, Any], bool]) -> bool:
    """x precedes y: strictly smaller clock delay, or equal clocks and
    sigma-smaller value."""
    (r, v), (r2, v2) = x, y
    d = delay_2rho(r, r2, K2, rho)
    if d is None:
        raise MonitorFault(
            f"clock values {r} and {r2} not comparable at 2*rho with K2={K2}")
    if d > 0:
        return True
    if d < 0:
        return False
    return sigma_leq(v, v2)


def lra_oplus(x, y, K2: int, rho: int, sigma_leq, *, strict: bool = True):
    """The election fold: the order-smaller of two candidates.

    With strict=False an incomparable clock pair degrades to picking x
    (pre-stabilization garbage must not crash the run).
    """
    try:
        return x if lra_order(x, y, K2, rho, sigma_leq) else y
    except MonitorFault:
        if strict:
            raise
        return x


def greedy_distance_coloring(topo: Topology, radius: int) -> list[int]:
    """Color nodes so that any two within `radius` hops differ."""
    colors = [-1] * topo.node_count
    for p in topo.nodes:
        used = {colors[q] for q in topo.nodes
                if q != p and topo.dist[p][q] <= radius and colors[q] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[p] = c
    return colors


def _validate_coloring(topo: Topology, radius: int, colors: list[int]) -> None:
    for p in topo.nodes:
        for q in topo.nodes:
            if p < q and topo.dist[p][q] <= radius and colors[p] == colors[q]:
                raise ValueError(
                    f"invalid coloring: nodes {p} and {q} at distance "
                    f"{topo.dist[p][q]} <= {radius} share color {colors[p]}")


# Readers-writers request encoding: the free value ranks above every
# writer claim, writer claims rank by id.
_FREE = ("F",)


def _rw_encode(request: str, node_id: int):
    return ("W", node_id) if request == "W" else _FREE


def _rw_leq(v, v2) -> bool:
    if v[0] == "F":
        return v2[0] == "F"
    if v2[0] == "F":
        return True
    return v[1] <= v2[1]


def make_lra_plugin(kind: str, topo: Topology, rho: int, K2: int, *,
                    colors: list[int] | None = None,
                    groups: list[int] | None = None,
                    group_count: int = 3,
                    request_source: Callable[[int, int], str] | None = None,
                    request_seed: int = 0,
                    break_cond: bool = False) -> CondPlugin:
    """Build the lme / gme / rw plugin.

    lme: values are a 2*rho-distance coloring (computed greedily unless
    supplied; invalid colorings are refused).  gme: values are group ids
    under the natural total order.  rw: request_source(p, phase) draws from
    {N,R,W} (seeded random stream by default); values encode free/writer
    claims.  break_cond replaces cond with constant truth (negative control
    for the safety monitors).
    """
    if kind == "lme":
        cols = colors if colors is not None else \
            greedy_distance_coloring(topo, 2 * rho)
        _validate_coloring(topo, 2 * rho, cols)
        sigma_leq = lambda a, b: a <= b
        value_of: Callable[[int, int], Any] = lambda p, phase: cols[p]
        sampler = lambda rng: rng.randrange(0, max(cols) + 1)
        uses_ids = True
    elif kind == "gme":
        grp = groups if groups is not None else \
            [random.Random(request_seed + p).randrange(group_count)
             for p in topo.nodes]
        sigma_leq = lambda a, b: a <= b
        value_of = lambda p, phase: grp[p]
        sampler = lambda rng: rng.randrange(0, max(max(grp), 1) + 1)
        uses_ids = False
    elif kind == "rw":
        if request_source is None:
            def request_source(p: int, phase: int) -> str:
                # string seed: stable across processes, unlike tuple hashing
                rng = random.Random(f"req:{request_seed}:{p}:{phase}")
                return rng.choices("NRW", weights=(2, 5, 3))[0]
        sigma_leq = _rw_leq
        value_of = lambda p, phase: _rw_encode(request_source(p, phase), p)
        sampler = lambda rng: _rw_encode(rng.choice("NRW"),
                                         rng.randrange(topo.node_count))
        uses_ids = True
    else:
        raise ValueError(f"unknown lra kind {kind!r}")
    request_of = request_source if kind == "rw" else None

    def fold(view: View) -> Any:
        own = (view.get("r2"), view.get("v"))
        acc = own
        r1 = view.get("r1")
        for q in view.neighbors:
            # Neighbors one master tick ahead already folded this stage:
            # take their previous-stage result.
            slot = "res2" if view.nget(q, "r1") == r1 else "res1"
            acc = lra_oplus(acc, view.nget(q, slot), K2, rho, sigma_leq,
                            strict=False)
        return acc

    def computation(view: View, emit) -> dict[str, Any]:
        return {"res1": view.get("res2"), "res2": fold(view)}

    def initialization(view: View, emit, r2_after: int) -> dict[str, Any]:
        phase = view.get("u") + 1
        v = value_of(view.p, phase)
        cand = (r2_after, v)
        updates = {"u": phase, "v": v, "res1": cand, "res2": cand}
        if request_of is not None:
            updates["req"] = request_of(view.p, phase)
        return updates

    def elected(view: View) -> bool:
        return (view.get("r2"), view.get("v")) == view.get("res2")

    if kind == "lme":
        cond = elected
    elif kind == "gme":
        # group match alone is unsafe while slave offsets persist: two
        # overlapping balls may crown different groups.  Requiring the
        # clock component too makes concurrent winners provably share a
        # group; ties on equal (clock, group) still admit the whole group.
        cond = elected
    else:  # rw: match on the elected candidate
        def cond(view: View) -> bool:
            rw, vw = view.get("res2")
            if rw != view.get("r2"):
                return False
            if vw == _FREE:
                return True
            if view.get("req") == "N":
                return True
            return (view.get("r2"), view.get("v")) == (rw, vw)

    if break_cond:
        cond = lambda view: True

    def cond1(view: View) -> bool:
        return view.get("r2") == view.get("res2")[0]

    def critical_section(view: View, emit) -> None:
        if kind == "lme":
            emit("cs", {"v": view.p})
        elif kind == "gme":
            emit("cs", {"v": view.get("v")})
        else:
            req = view.get("req")
            if req == "R":
                emit("cs", {"v": ("R",)})
            elif req == "W":
                emit("cs", {"v": view.get("v")})
            # req == "N": no resource use; the barrier still advances

    regs = [
        RegisterSpec("v", value_of(0, 0), sampler),
        RegisterSpec("res1", (0, value_of(0, 0)),
                     lambda rng: (rng.randrange(K2), sampler(rng))),
        RegisterSpec("res2", (0, value_of(0, 0)),
                     lambda rng: (rng.randrange(K2), sampler(rng))),
        RegisterSpec("u", 0, lambda rng: rng.randrange(0, 4)),
    ]
    if kind == "rw":
        regs.append(RegisterSpec("req", "N", lambda rng: rng.choice("NRW")))
    regs = tuple(regs)
    plugin = CondPlugin(
        name=kind,
        registers=regs,
        cond=cond,
        cond1=cond1,
        initialization=initialization,
        computation=computation,
        critical_section=critical_section,
        uses_ids=uses_ids,
        meta={"kind": kind, "rho": rho, "K2": K2,
              "colors": colors, "sigma_leq": sigma_leq},
    )
    return plugin


# ---------------------------------------------------------------------------
# Monitors


def lra_monitor_start(trace: Trace, wu: int) -> int:
    """First trace index whose election outcomes derive entirely from
    post-stabilization initializations.

    Right after the clocks stabilize, res registers still hold arbitrary
    pre-stabilization values; guarantees apply once every process has begun
    a phase whose whole rho-ball initialized after stabilization, plus one
    full phase for the pipeline to recompute.
    """
    suffix = trace.suffix(wu)
    lt = lift(suffix, reg="r1")
    delta = trace.protocol.meta["delta"]
    first = lt.base + trace.topo.diameter + 1
    first += (-first) % delta
    target = first + delta
    for t, row in enumerate(lt.values):
        if min(row) >= target:
            return wu + t
    return len(trace.records)


@dataclass(frozen=True)
class CsRecord:
    process: int
    resource: Any
    entry: int
    exit: int  # step index of the process's next action (half-open interval)
    phase: int | None = None


def extract_cs_records(trace: Trace, *, start: int = 0) -> list[CsRecord]:
    """Critical-section intervals from the cs events of a trace.

    A privilege lasts from its entry step until the holder's next action
    (or the end of the trace).
    """
    fires: dict[int, list[int]] = {p: [] for p in trace.topo.nodes}
    for rec in trace.records:
        for p in rec.fired:
            fires[p].append(rec.step)
    records: list[CsRecord] = []
    end = len(trace.records)
    for rec in trace.records:
        if rec.step < start:
            continue
        for ev in rec.events:
            if ev.kind != "cs":
                continue
            p = ev.process
            i = bisect_right(fires[p], rec.step)
            records.append(CsRecord(
                process=p, resource=ev.payload.get("v"),
                entry=rec.step, exit=fires[p][i] if i < len(fires[p]) else end))
    return records


def compat_lme(a: Any, b: Any) -> bool:
    return a == b


def compat_gme(a: Any, b: Any) -> bool:
    return a == b


def compat_rw(a: Any, b: Any) -> bool:
    return a == ("R",) and b == ("R",)


def monitor_safety(trace: Trace, rho: int,
                   compat: Callable[[Any, Any], bool],
                   *, start: int = 0,
                   records: list[CsRecord] | None = None,
                   ) -> list[tuple[CsRecord, CsRecord]]:
    """Pairs of overlapping privileges within distance rho holding
    incompatible resources (empty means safe).

    Interval sweep over entry-sorted records; the active set stays small
    (at most one open privilege per process), so the scan is near-linear.
    """
    recs = records if records is not None else \
        extract_cs_records(trace, start=start)
    topo = trace.topo
    violations = []
    active: list[CsRecord] = []
    for b in sorted(recs, key=lambda r: (r.entry, r.process)):
        active = [a for a in active if a.exit > b.entry]
        for a in active:
            if a.process == b.process:
                continue
            if topo.dist[a.process][b.process] > rho:
                continue
            if not compat(a.resource, b.resource):
                violations.append((a, b))
        active.append(b)
    return violations


@dataclass
class LivenessReport:
    cs_counts: dict[int, int]
    max_gap: int
    potentials: list[list[int]]  # sampled Pot_p trajectories
    potential_bound: int

    @property
    def min_count(self) -> int:
        return min(self.cs_counts.values())


def monitor_liveness(trace: Trace, *, start: int = 0,
                     sample_every: int = 10) -> LivenessReport:
    """Per-process privilege counts plus the slave-delay potential
    trajectory witnessing no-starvation (bounded by n*D)."""
    topo = trace.topo
    recs = extract_cs_records(trace, start=start)
    counts = {p: 0 for p in topo.nodes}
    for r in recs:
        counts[r.process] += 1
    entries: dict[int, list[int]] = {p: [] for p in topo.nodes}
    for r in recs:
        entries[r.process].append(r.entry)
    max_gap = 0
    for p, es in entries.items():
        for a, b in zip(es, es[1:]):
            max_gap = max(max_gap, b - a)
    suffix = trace.suffix(start)
    potentials: list[list[int]] = []
    try:
        lt = lift(suffix, reg="r2")
        for t in range(0, len(lt.values), sample_every):
            row = lt.values[t]
            potentials.append([sum(row[q] - row[p] for q in topo.nodes)
                               for p in topo.nodes])
    except ValueError:
        pass  # slave clock not liftable at suffix start: skip the witness
    return LivenessReport(
        cs_counts=counts, max_gap=max_gap, potentials=potentials,
        potential_bound=topo.node_count * topo.diameter)


@dataclass
class Metrics:
    fairness_index: int | None
    service_time: int | None
    comms_per_phase: list[int]
    rounds_to_stabilize: int | None
    stabilization_index: int | None
    cs_total: int
    partial: bool = False


def _per_pair_fairness(recs: list[CsRecord], nodes) -> tuple[int | None, int | None]:
    entries: dict[int, list[int]] = {p: [] for p in nodes}
    for r in sorted(recs, key=lambda r: r.entry):
        entries[r.process].append(r.entry)
    fairness = None
    service = None
    for p in nodes:
        es = entries[p]
        for a, b in zip(es, es[1:]):
            others_total = 0
            for q in nodes:
                if q == p:
                    continue
                cnt = bisect_left(entries[q], b) - bisect_right(entries[q], a)
                fairness = cnt if fairness is None else max(fairness, cnt)
                others_total += cnt
            service = others_total if service is None else max(service, others_total)
    return fairness, service


def metrics(trace: Trace, topo: Topology, rho: int,
            *, start: int | None = None,
            rounds_to_stabilize: int | None = None) -> Metrics:
    """Fairness index, service time, per-phase communication counts, and
    stabilization cost for a layer-clock trace."""
    if start is None:
        _w1, wu = stabilization_indices(trace)
        start = wu if wu is not None else 0
        if wu is None:
            return Metrics(None, None, [], rounds_to_stabilize, None, 0,
                           partial=True)
    recs = extract_cs_records(trace, start=start)
    fairness, service = _per_pair_fairness(recs, topo.nodes)
    comms = _comms_per_phase(trace, start)
    return Metrics(
        fairness_index=fairness, service_time=service,
        comms_per_phase=comms, rounds_to_stabilize=rounds_to_stabilize,
        stabilization_index=start, cs_total=len(recs),
        partial=fairness is None or len(comms) == 0)


def _comms_per_phase(trace: Trace, start: int) -> list[int]:
    """Unique (actor, neighbor) register reads per complete master phase.

    Each actor's reads are attributed to its own master phase; a phase total
    is reported once every process has completed that phase.
    """
    suffix = trace.suffix(start)
    proto, topo = trace.protocol, trace.topo
    delta = proto.meta.get("delta")
    if delta is None:
        return []
    try:
        lt = lift(suffix, reg="r1")
    except ValueError:
        return []
    base = lt.base
    first = base + topo.diameter + 1
    first += (-first) % delta
    counts: dict[int, int] = {}
    complete_top = min(lt.values[-1])
    for rec in suffix.records:
        for p in rec.fired:
            level = lt.values[rec.step][p]  # lifted value before this step
            phase = level // delta
            counts[phase] = counts.get(phase, 0) + len({q for q, _ in rec.reads[p]})
    out = []
    phase = first // delta
    while (phase + 1) * delta <= complete_top:
        out.append(counts.get(phase, 0))
        phase += 1
    return out
