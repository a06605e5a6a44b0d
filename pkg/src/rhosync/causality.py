"""Causal DAG reconstruction from traces, cuts and coherence, cover
computation, and the wavelet checker.

Events are (process, time) pairs: (p, 0) for every process, plus (p, t+1)
for every action p fires in the transition config[t] -> config[t+1].
Edges follow the two causal rules: same-process predecessor, and, for
non-internal events, each neighbor's most recent strictly earlier event.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

from .kernel import Trace
from .topology import Topology, ball
from .unison import LiftedTrace

__all__ = [
    "Event",
    "EventGraph",
    "Cut",
    "build_event_graph",
    "cover",
    "cut_for_level",
    "is_coherent",
    "cut_leq",
    "check_wavelet",
    "WaveletVerdict",
    "to_dot",
]

Event = tuple[int, int]


@dataclass
class EventGraph:
    topo: Topology
    events_by_process: dict[int, list[int]]  # sorted event times per process
    preds: dict[Event, tuple[Event, ...]]
    kinds: dict[Event, str]  # internal | external
    decides: set[Event] = field(default_factory=set)

    def events(self):
        for p, times in self.events_by_process.items():
            for t in times:
                yield (p, t)

    def has_event(self, e: Event) -> bool:
        p, t = e
        times = self.events_by_process.get(p)
        if not times:
            return False
        i = bisect_left(times, t)
        return i < len(times) and times[i] == t

    def latest_at_or_before(self, p: int, t: int) -> Event | None:
        times = self.events_by_process[p]
        i = bisect_left(times, t + 1) - 1
        return (p, times[i]) if i >= 0 else None

    def ancestors(self, e: Event) -> set[Event]:
        """All events strictly or reflexively below e (includes e)."""
        seen = {e}
        stack = [e]
        while stack:
            cur = stack.pop()
            for pr in self.preds.get(cur, ()):
                if pr not in seen:
                    seen.add(pr)
                    stack.append(pr)
        return seen

    def leq(self, a: Event, b: Event) -> bool:
        return a in self.ancestors(b)


def build_event_graph(trace: Trace) -> EventGraph:
    """Apply the two causal rules to a completed trace."""
    topo = trace.topo
    events_by_process: dict[int, list[int]] = {p: [0] for p in topo.nodes}
    kinds: dict[Event, str] = {(p, 0): "internal" for p in topo.nodes}
    decides: set[Event] = set()
    for rec in trace.records:
        t = rec.step + 1
        for p, label in rec.fired.items():
            events_by_process[p].append(t)
            kinds[(p, t)] = "internal" if rec.internal[p] else "external"
        for ev in rec.events:
            if ev.kind == "decide":
                decides.add((ev.process, t))
    preds: dict[Event, tuple[Event, ...]] = {}
    for p, times in events_by_process.items():
        for i, t in enumerate(times):
            if t == 0:
                continue
            e = (p, t)
            ps: list[Event] = [(p, times[i - 1])]
            if kinds[e] == "external":
                for q in topo.adjacency[p]:
                    qtimes = events_by_process[q]
                    j = bisect_left(qtimes, t) - 1
                    ps.append((q, qtimes[j]))
            preds[e] = tuple(ps)
    g = EventGraph(topo=topo, events_by_process=events_by_process,
                   preds=preds, kinds=kinds, decides=decides)
    return g


def cover(g: EventGraph, e: Event) -> frozenset[int]:
    """Processes with an event in e's past cone."""
    if not g.has_event(e):
        raise ValueError(f"{e} is not an event of the graph")
    return frozenset(p for p, _ in g.ancestors(e))


Cut = dict[int, int]


def cut_for_level(lifted: LiftedTrace, k: int) -> Cut:
    """Per process, the earliest event time where the lifted register equals
    level k.  Raises if some process never reaches the level in the trace."""
    cut: Cut = {}
    topo = lifted.trace.topo
    for p in topo.nodes:
        t = lifted.level_time(p, k)
        if t is None:
            raise ValueError(
                f"process {p} never holds lifted level {k} within the trace")
        cut[p] = t
    return cut


def is_coherent(g: EventGraph, cut: Cut) -> bool:
    """A cut is coherent iff the past of every cut event stays inside the
    cut's past: (q,t') <= (p, t_p) implies t' <= t_q."""
    for p, tp in cut.items():
        if not g.has_event((p, tp)):
            raise ValueError(f"({p},{tp}) is not an event")
        for (q, tq) in g.ancestors((p, tp)):
            if tq > cut[q]:
                return False
    return True


def cut_leq(c1: Cut, c2: Cut) -> bool:
    return all(c1[p] <= c2[p] for p in c1)


@dataclass
class WaveletVerdict:
    ok: bool
    decide_count: int
    violation: tuple[Event, frozenset[int]] | None = None

    def __bool__(self) -> bool:
        return self.ok


def segment_events(g: EventGraph, c1: Cut, c2: Cut) -> set[Event]:
    return {(p, t)
            for p, times in g.events_by_process.items()
            for t in times if c1[p] <= t <= c2[p]}


def check_wavelet(g: EventGraph, c1: Cut, c2: Cut, rho: int,
                  decides: set[Event] | None = None) -> WaveletVerdict:
    """Verify that [c1, c2] is a rho-wavelet for the given decide events.

    Requires coherent, ordered cuts.  Checks (a) at least one decide event
    lies in the segment and (b) each decide's past restricted to the segment
    covers its rho-ball.  Returns the first violating decide otherwise.
    """
    if not cut_leq(c1, c2):
        raise ValueError("cuts are not ordered c1 <= c2")
    if not is_coherent(g, c1) or not is_coherent(g, c2):
        raise ValueError("cuts must be coherent")
    seg = segment_events(g, c1, c2)
    dset = decides if decides is not None else g.decides
    inside = sorted(d for d in dset if d in seg)
    if not inside:
        return WaveletVerdict(False, 0, None)
    for d in inside:
        past = {e for e in g.ancestors(d) if e in seg}
        covered = frozenset(p for p, _ in past)
        needed = ball(g.topo, d[0], rho)
        if not needed <= covered:
            return WaveletVerdict(False, len(inside), (d, needed - covered))
    return WaveletVerdict(True, len(inside), None)


def to_dot(g: EventGraph) -> str:
    """DOT export for offline inspection."""
    lines = ["digraph causal {"]
    for e in g.events():
        p, t = e
        shape = "doublecircle" if e in g.decides else (
            "circle" if g.kinds[e] == "external" else "box")
        lines.append(f'  "e{p}_{t}" [label="({p},{t})", shape={shape}];')
    for e, ps in g.preds.items():
        for pr in ps:
            lines.append(f'  "e{pr[0]}_{pr[1]}" -> "e{e[0]}_{e[1]}";')
    lines.append("}")
    return "\n".join(lines)
