"""Infimum operators and the rho-ball infimum computation layered on the
wave stream.

Each phase starts at a decide cut: v0 is (re)initialized there, and one
pipeline step per clock tick folds neighbor values so that k ticks after the
phase start v2 holds the infimum over the k-ball.  The decide hook of the
next phase boundary observes the completed rho-ball infimum before
re-initializing.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Callable

from .kernel import ProtocolDef, RegisterSpec, Trace, View
from .topology import Topology, ball
from .unison import LiftedTrace, build_ss_ws, lift

__all__ = [
    "InfimumOp",
    "InfimumAxiomError",
    "make_infimum",
    "attach_infimum",
    "verify_ball_infimum",
    "InfimumVerdict",
]


class InfimumAxiomError(ValueError):
    """The candidate operator violates an infimum axiom."""


@dataclass(frozen=True)
class InfimumOp:
    """Associative, commutative, idempotent binary operator with a greatest
    identity element."""

    name: str
    op: Callable[[Any, Any], Any]
    identity: Any
    sample: Callable[[random.Random], Any]

    def fold(self, values) -> Any:
        acc = self.identity
        for v in values:
            acc = self.op(acc, v)
        return acc


def _check_axioms(cand: InfimumOp, *, trials: int = 200, seed: int = 7) -> None:
    rng = random.Random(seed)
    op = cand.op
    for _ in range(trials):
        x, y, z = cand.sample(rng), cand.sample(rng), cand.sample(rng)
        if op(x, x) != x:
            raise InfimumAxiomError(f"{cand.name}: not idempotent at {x!r}")
        if op(x, y) != op(y, x):
            raise InfimumAxiomError(f"{cand.name}: not commutative at {x!r},{y!r}")
        if op(op(x, y), z) != op(x, op(y, z)):
            raise InfimumAxiomError(
                f"{cand.name}: not associative at {x!r},{y!r},{z!r}")
        if op(x, cand.identity) != x:
            raise InfimumAxiomError(f"{cand.name}: identity fails at {x!r}")


_SET_UNIVERSE = frozenset(range(8))


def make_infimum(kind: str, *,
                 custom: InfimumOp | None = None) -> InfimumOp:
    """Build a verified infimum operator.

    Kinds: min_int, max_int, set_intersection (over subsets of a small
    universe), lex_pair (componentwise-lexicographic pair minimum), or
    'custom' with a caller-supplied candidate.  Axioms are probed with
    random triples at construction; violators are refused.
    """
    if kind == "min_int":
        cand = InfimumOp("min_int", min, math.inf,
                         lambda rng: rng.randrange(-1000, 1000))
    elif kind == "max_int":
        cand = InfimumOp("max_int", max, -math.inf,
                         lambda rng: rng.randrange(-1000, 1000))
    elif kind == "set_intersection":
        cand = InfimumOp(
            "set_intersection", lambda a, b: a & b, _SET_UNIVERSE,
            lambda rng: frozenset(x for x in _SET_UNIVERSE if rng.random() < 0.5))
    elif kind == "lex_pair":
        cand = InfimumOp(
            "lex_pair", min, (math.inf, math.inf),
            lambda rng: (rng.randrange(-50, 50), rng.randrange(-50, 50)))
    elif kind == "custom":
        if custom is None:
            raise ValueError("kind 'custom' requires a candidate operator")
        cand = custom
    else:
        raise ValueError(f"unknown infimum kind {kind!r}")
    _check_axioms(cand)
    return cand


InputSource = Callable[[int, int], Any]


def attach_infimum(proto: ProtocolDef, op: InfimumOp,
                   input_source: InputSource) -> ProtocolDef:
    """Wire the rho-ball infimum computation into a wave-stream protocol.

    input_source(p, phase_counter) supplies the fresh v0 each phase.  The
    returned protocol replaces `proto`, re-built with the computation hook
    (every normal step) and the initialization/decide hook (phase
    boundaries).
    """
    if proto.name != "ss_ws" or "rho" not in proto.meta:
        raise ValueError("attach_infimum expects a wave-stream protocol")
    rho = proto.meta["rho"]
    K = proto.meta["K"]
    sysm = proto.clock_registers["r"]

    def computation(view: View, emit) -> dict[str, Any]:
        rp = view.get("r")
        nxt = sysm.phi(rp)
        acc = op.op(op.identity, view.get("v0"))
        for q in view.neighbors:
            rq = view.nget(q, "r")
            slot = "v2" if rq == rp else "v1"  # rq == phi(rp): one tick ahead
            acc = op.op(acc, view.nget(q, slot))
        return {"v1": view.get("v2"), "v2": acc}

    def initialization(view: View, emit) -> dict[str, Any]:
        # At the boundary step the pipeline has been idle since the last
        # computation: v2 is the completed rho-ball infimum of the ending
        # phase, v1 the (rho-1)-ball one.
        emit("decide", {"v1": view.get("v1"), "v2": view.get("v2")})
        phase = view.get("u") + 1
        v0 = input_source(view.p, phase)
        return {"u": phase, "v0": v0, "v1": v0, "v2": v0}

    payload = (
        RegisterSpec("v0", op.identity, op.sample),
        RegisterSpec("v1", op.identity, op.sample),
        RegisterSpec("v2", op.identity, op.sample),
        RegisterSpec("u", 0, lambda rng: rng.randrange(0, 4)),
    )
    return build_ss_ws(
        proto.meta["topo"], rho, K, sysm.alpha,
        decide_hook=initialization, cs1_hook=computation,
        payload_registers=payload)


@dataclass
class InfimumVerdict:
    ok: bool
    phases_checked: int
    mismatches: list[tuple[int, int, int, str, Any, Any]]
    # entries: (phase_level, k, process, register, got, expected)

    def __bool__(self) -> bool:
        return self.ok


def verify_ball_infimum(trace: Trace, op: InfimumOp, rho: int,
                        *, max_phases: int | None = None,
                        lifted: LiftedTrace | None = None) -> InfimumVerdict:
    """Compare every phase of a stabilized trace against the brute-force
    oracle: at each intermediate cut, v1/v2 must equal the fold of the
    phase-start v0 snapshot over the (k-1)- and k-balls, and the phase-end
    decide payload must hold the rho-ball infimum.

    The trace must start inside WU0 (pass a stabilized suffix).
    """
    topo = trace.topo
    if rho == 0:
        # Degenerate radius: v2 is v0 itself at every configuration.
        bad = [(0, 0, p, "v2", c[p]["v2"], c[p]["v0"])
               for c in trace.configs for p in topo.nodes
               if c[p]["v2"] != c[p]["v0"]]
        return InfimumVerdict(not bad, 0, bad)
    lt = lifted if lifted is not None else lift(trace)
    base, D = lt.base, topo.diameter
    delta = rho + 1
    # First boundary level at which every process's phase start is a real
    # in-trace initialization event (strictly above any initial value).
    first_level = base + D + 1
    start = first_level + (-first_level) % delta
    top = min(lt.values[-1])
    mismatches: list[tuple[int, int, int, str, Any, Any]] = []
    phases = 0
    k0 = start
    while k0 + delta <= top:
        if max_phases is not None and phases >= max_phases:
            break
        t_start = {p: lt.level_time(p, k0) for p in topo.nodes}
        if any(t is None for t in t_start.values()):
            break
        snapshot = {p: trace.configs[t_start[p]][p]["v0"] for p in topo.nodes}

        def oracle(p: int, radius: int) -> Any:
            return op.fold(snapshot[q] for q in ball(topo, p, radius))

        for k in range(1, rho + 1):
            for p in topo.nodes:
                t = lt.level_time(p, k0 + k)
                st = trace.configs[t][p]
                exp1, exp2 = oracle(p, k - 1), oracle(p, k)
                if st["v1"] != exp1:
                    mismatches.append((k0, k, p, "v1", st["v1"], exp1))
                if st["v2"] != exp2:
                    mismatches.append((k0, k, p, "v2", st["v2"], exp2))
        for p in topo.nodes:
            t = lt.level_time(p, k0 + delta)
            payload = _decide_payload(trace, p, t)
            if payload is None:
                mismatches.append((k0, delta, p, "decide", None, "payload"))
                continue
            exp1, exp2 = oracle(p, rho - 1), oracle(p, rho)
            if payload["v1"] != exp1:
                mismatches.append((k0, delta, p, "v1", payload["v1"], exp1))
            if payload["v2"] != exp2:
                mismatches.append((k0, delta, p, "v2", payload["v2"], exp2))
        phases += 1
        k0 += delta
    return InfimumVerdict(not mismatches, phases, mismatches)


def _decide_payload(trace: Trace, p: int, config_index: int):
    if config_index is None or config_index == 0:
        return None
    rec = trace.records[config_index - 1]
    for ev in rec.events:
        if ev.process == p and ev.kind == "decide":
            return ev.payload
    return None
