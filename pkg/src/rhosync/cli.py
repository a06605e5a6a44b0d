"""Command-line front end: scenario configuration, run orchestration,
trace replay and re-validation, and parameter sweeps.

Scenarios come from a flat key=value config file plus CLI-flag overrides
(flags win).  Traces are JSON lines: header, initial configuration, one
line per transition, footer.  Exit codes: 0 pass, 1 violation found,
2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from .causality import build_event_graph, check_wavelet, cut_for_level
from .infimum import attach_infimum, make_infimum, verify_ball_infimum
from .kernel import (DaemonPolicy, HookEvent, Trace, TransitionRecord,
                     random_configuration, round_count, run, step,
                     uniform_configuration)
from .layerclock import build_ss_dc, stabilization_indices, trivial_plugin, \
    verify_delay_agreement
from .lra import (compat_gme, compat_lme, compat_rw, lra_monitor_start,
                  make_lra_plugin, metrics, monitor_liveness, monitor_safety)
from .topology import (Topology, TopologyError, generate, graph_params,
                       load_topology, parse_edge_list)
from .unison import SizingError, build_ss_ws, is_wu0, lift

CSV_HEADER = ["topo", "n", "rho", "daemon", "seed", "plugin", "stab_round",
              "violations", "fairness_index", "service_time",
              "comms_per_phase"]


class ScenarioError(Exception):
    """Invalid scenario configuration (exit code 2)."""


class CorruptTraceError(Exception):
    """A trace file failed to parse or to replay faithfully."""


@dataclass
class Scenario:
    """One simulation cell.  String fields keep 'auto' as a sentinel."""

    topo: str = "ring:8"
    proto: str = "ss_ws"  # ss_ws | trivial | lme | gme | rw
    rho: int = 1
    alpha: str = "auto"
    k: str = "auto"
    k2: str = "auto"
    daemon: str = "synchronous"
    p_select: float = 0.5
    seed: int = 0
    init: str = "random_arbitrary"
    steps: str = "auto"
    infimum: str = ""  # ss_ws only: min_int | max_int | lex_pair
    group_count: int = 3

    def key(self) -> tuple:
        return (self.topo, self.proto, self.rho, self.daemon, self.seed)


_INT_FIELDS = {"rho", "seed", "group_count"}
_FLOAT_FIELDS = {"p_select"}
_DAEMONS = {"synchronous", "central", "rho_central", "distributed_random",
            "adversarial"}
_PROTOS = {"ss_ws", "trivial", "lme", "gme", "rw"}


def parse_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def scenario_from(config: dict[str, str],
                  overrides: dict[str, object]) -> Scenario:
    """Merge defaults, config-file entries, then explicit flag overrides."""
    values: dict[str, object] = {}
    names = {f.name for f in fields(Scenario)}
    for key, raw in config.items():
        if key not in names:
            raise ScenarioError(f"unknown config key {key!r}")
        values[key] = raw
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    for key in _INT_FIELDS & values.keys():
        try:
            values[key] = int(values[key])
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{key} must be an integer") from exc
    for key in _FLOAT_FIELDS & values.keys():
        try:
            values[key] = float(values[key])
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{key} must be a number") from exc
    scn = Scenario(**{k: v for k, v in values.items()})
    validate_scenario(scn)
    return scn


def validate_scenario(scn: Scenario) -> None:
    if scn.proto not in _PROTOS:
        raise ScenarioError(f"unknown proto {scn.proto!r}")
    if scn.daemon not in _DAEMONS:
        raise ScenarioError(f"unknown daemon {scn.daemon!r}")
    if scn.rho < 1:
        raise ScenarioError("rho must be >= 1")
    if scn.infimum and scn.proto != "ss_ws":
        raise ScenarioError("infimum operators attach to proto ss_ws only")
    if scn.infimum and scn.infimum not in ("min_int", "max_int", "lex_pair"):
        raise ScenarioError(f"unsupported infimum kind {scn.infimum!r}")
    for name in ("alpha", "k", "k2", "steps"):
        val = getattr(scn, name)
        if val != "auto":
            try:
                int(val)
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"{name} must be 'auto' or an integer") from exc


# ---------------------------------------------------------------------------
# Scenario materialization


def make_topology(spec: str) -> Topology:
    kind, _, rest = spec.partition(":")
    try:
        if kind == "file":
            return load_topology(rest)
        if kind in ("ring", "path", "tree"):
            return generate(kind, n=int(rest))
        if kind == "grid":
            rows, _, cols = rest.partition("x")
            return generate("grid", rows=int(rows), cols=int(cols))
        if kind == "random":
            n_str, _, p_str = rest.partition(":")
            return generate("random_connected", n=int(n_str),
                            p=float(p_str) if p_str else 0.25,
                            seed=zlib.crc32(spec.encode()))
    except (ValueError, TopologyError) as exc:
        raise ScenarioError(f"bad topology spec {spec!r}: {exc}") from exc
    raise ScenarioError(f"unknown topology kind {kind!r} in {spec!r}")


def _infimum_input_source(kind: str, seed: int):
    def source(p: int, phase: int):
        # string seed: stable across processes, unlike tuple hashing
        rng = random.Random(f"inf-input:{seed}:{p}:{phase}")
        if kind == "lex_pair":
            return (rng.randrange(-50, 50), rng.randrange(-50, 50))
        return rng.randrange(-1000, 1000)
    return source


def build_protocol(scn: Scenario, topo: Topology):
    """Protocol for a scenario, with 'auto' clock sizing resolved.

    Auto sizing: alpha := greatest-hole length, K := cyclomatic bound + 1,
    K2 := max(4*rho+1, cyclomatic bound + 1).  Explicit values still pass
    through the builders' sizing checks, so refused scenarios never start.
    """
    gp = graph_params(topo)
    rho = scn.rho
    alpha = gp.t_g if scn.alpha == "auto" else int(scn.alpha)
    K = gp.c_g_bound + 1 if scn.k == "auto" else int(scn.k)
    K2 = max(4 * rho + 1, gp.c_g_bound + 1) if scn.k2 == "auto" else int(scn.k2)
    try:
        if scn.proto == "ss_ws":
            proto = build_ss_ws(topo, rho, K, alpha,
                                t_g_bound=gp.t_g, c_g_bound=gp.c_g_bound)
            if scn.infimum:
                op = make_infimum(scn.infimum)
                proto = attach_infimum(
                    proto, op, _infimum_input_source(scn.infimum, scn.seed))
            return proto
        if scn.proto == "trivial":
            plugin = trivial_plugin()
        else:
            plugin = make_lra_plugin(scn.proto, topo, rho, K2,
                                     group_count=scn.group_count,
                                     request_seed=scn.seed)
        return build_ss_dc(topo, rho, K=K, K2=K2, alpha1=alpha, alpha2=alpha,
                           plugin=plugin, t_g_bound=gp.t_g,
                           c_g_bound=gp.c_g_bound)
    except SizingError as exc:
        raise ScenarioError(f"refused scenario: {exc}") from exc


def make_daemon_policy(scn: Scenario) -> DaemonPolicy:
    kind = "adversarial_unfair" if scn.daemon == "adversarial" else scn.daemon
    return DaemonPolicy(kind=kind, seed=scn.seed, rho=scn.rho,
                        p_select=scn.p_select)


def make_init(scn: Scenario, proto, topo: Topology):
    mode, _, rest = scn.init.partition(":")
    if mode == "wu0_uniform":
        return uniform_configuration(proto, topo)
    if mode == "random_arbitrary":
        return random_configuration(proto, topo, random.Random(scn.seed))
    if mode == "adversarial_file":
        try:
            with open(rest, encoding="utf-8") as fh:
                states = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot load init file {rest!r}: {exc}") from exc
        if not isinstance(states, list) or len(states) != topo.node_count:
            raise ScenarioError(
                f"init file must list {topo.node_count} register dicts")
        known = {r.name for r in proto.registers}
        cfg = []
        for p, st in enumerate(states):
            if set(st) != known:
                raise ScenarioError(
                    f"init file process {p}: registers {sorted(st)} != "
                    f"{sorted(known)}")
            cfg.append({k: _freeze(v) for k, v in st.items()})
        return tuple(cfg)
    raise ScenarioError(f"unknown init mode {scn.init!r}")


def auto_steps(scn: Scenario, topo: Topology, proto) -> int:
    if scn.steps != "auto":
        return int(scn.steps)
    if scn.proto == "ss_ws":
        sysm = proto.clock_registers["r"]
    else:
        sysm = proto.clock_registers["r1"]
    delta = proto.meta["delta"]
    ticks = sysm.alpha + 2 * sysm.period + 14 * delta + 2 * topo.diameter + 30
    if scn.daemon == "synchronous":
        return ticks
    return 3 * topo.node_count * ticks


def run_scenario(scn: Scenario) -> Trace:
    topo = make_topology(scn.topo)
    proto = build_protocol(scn, topo)
    init = make_init(scn, proto, topo)
    daemon = make_daemon_policy(scn)
    budget = auto_steps(scn, topo, proto)
    return run(proto, topo, daemon, init, max_steps=budget)


# ---------------------------------------------------------------------------
# Analysis shared by run, check, and sweep


def check_wavelet_levels(suffix: Trace, rho: int,
                         max_levels: int = 6) -> list[tuple[int, bool]]:
    """Wavelet verdicts for consecutive level windows [k, k+rho] of a
    stabilized trace, using the upper-cut events as the decide set."""
    lt = lift(suffix)
    g = build_event_graph(suffix)
    topo = suffix.topo
    k = lt.base + topo.diameter
    top = min(lt.values[-1])
    out: list[tuple[int, bool]] = []
    while k + rho <= top and len(out) < max_levels:
        c1 = cut_for_level(lt, k)
        c2 = cut_for_level(lt, k + rho)
        decides = {(p, c2[p]) for p in topo.nodes}
        verdict = check_wavelet(g, c1, c2, rho, decides)
        out.append((k, bool(verdict)))
        k += 1
    return out


def ss_ws_stabilization_index(trace: Trace) -> int | None:
    sysm = trace.protocol.clock_registers["r"]
    for i, cfg in enumerate(trace.configs):
        if is_wu0(cfg, trace.topo, sysm, "r"):
            return i
    return None


def analyze(scn: Scenario, trace: Trace) -> dict:
    """Post-run monitors appropriate to the protocol; the 'violations' total
    drives the exit code."""
    topo = trace.topo
    rho = scn.rho
    report: dict = {"stop_reason": trace.stop_reason,
                    "steps": len(trace.records), "n": topo.node_count}
    violations = 0
    if trace.protocol.name == "ss_ws":
        stab = ss_ws_stabilization_index(trace)
        report["stab_index"] = stab
        if stab is None:
            report["violations"] = 1
            report["notes"] = ["did not stabilize within the step budget"]
            return report
        report["stab_round"] = round_count(trace, stab)
        suffix = trace.suffix(stab)
        levels = check_wavelet_levels(suffix, rho)
        report["wavelet_levels"] = len(levels)
        bad = [k for k, ok in levels if not ok]
        report["wavelet_failures"] = bad
        violations += len(bad)
        if scn.infimum:
            op = make_infimum(scn.infimum)
            verdict = verify_ball_infimum(suffix, op, rho, max_phases=20)
            report["infimum_phases"] = verdict.phases_checked
            report["infimum_mismatches"] = len(verdict.mismatches)
            violations += len(verdict.mismatches)
    else:
        wu1, wu = stabilization_indices(trace)
        report["wu1_index"], report["stab_index"] = wu1, wu
        if wu is None:
            report["violations"] = 1
            report["notes"] = ["did not stabilize within the step budget"]
            return report
        report["stab_round"] = round_count(trace, wu)
        suffix = trace.suffix(wu)
        agree = verify_delay_agreement(suffix, topo, rho, sample_every=5)
        report["delay_pairs"] = agree.pairs_checked
        report["delay_disagreements"] = len(agree.disagreements)
        violations += len(agree.disagreements)
        compat = {"lme": compat_lme, "gme": compat_gme, "rw": compat_rw,
                  "trivial": lambda a, b: True}[scn.proto]
        # Score from the first phase whose elections only see
        # post-stabilization inputs.
        mon_start = lra_monitor_start(trace, wu)
        report["monitor_start"] = mon_start
        safety = monitor_safety(trace, rho, compat, start=mon_start)
        report["safety_violations"] = len(safety)
        violations += len(safety)
        live = monitor_liveness(trace, start=mon_start)
        report["cs_min_count"] = live.min_count
        report["cs_max_gap"] = live.max_gap
        m = metrics(trace, topo, rho, start=mon_start,
                    rounds_to_stabilize=report["stab_round"])
        report["fairness_index"] = m.fairness_index
        report["service_time"] = m.service_time
        report["fairness_bound"] = math.ceil(topo.diameter / rho)
        report["service_bound"] = math.ceil(
            topo.node_count * (topo.node_count - 1) / rho)
        report["comms_per_phase"] = max(m.comms_per_phase, default=None)
        report["cs_total"] = m.cs_total
    report["violations"] = violations
    return report


def print_summary(scn: Scenario, report: dict, out=None) -> None:
    out = out if out is not None else sys.stdout
    head = (f"proto={scn.proto} topo={scn.topo} n={report['n']} "
            f"rho={scn.rho} daemon={scn.daemon} seed={scn.seed}")
    print(head, file=out)
    for key in ("stop_reason", "steps", "stab_index", "wu1_index",
                "monitor_start", "stab_round", "wavelet_levels",
                "wavelet_failures",
                "infimum_phases", "infimum_mismatches", "delay_pairs",
                "delay_disagreements", "safety_violations", "cs_min_count",
                "cs_max_gap", "cs_total", "fairness_index", "fairness_bound",
                "service_time", "service_bound", "comms_per_phase"):
        if key in report:
            print(f"  {key} = {report[key]}", file=out)
    for note in report.get("notes", ()):
        print(f"  note: {note}", file=out)
    print(f"  violations = {report['violations']}", file=out)


# ---------------------------------------------------------------------------
# Trace files


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, dict):
        return {k: _freeze(v) for k, v in value.items()}
    return value


def write_trace(path: str, scn: Scenario, trace: Trace) -> None:
    topo = trace.topo
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "type": "header", "scenario": asdict(scn),
            "n": topo.node_count, "edges": topo.edges,
            "stop_reason": trace.stop_reason}) + "\n")
        fh.write(json.dumps({
            "type": "config", "states": list(trace.configs[0])}) + "\n")
        for rec in trace.records:
            fh.write(json.dumps({
                "type": "step", "step": rec.step,
                "selected": list(rec.selected),
                "fired": {str(p): lab for p, lab in rec.fired.items()},
                "events": [{"process": ev.process, "kind": ev.kind,
                            "payload": ev.payload} for ev in rec.events],
            }) + "\n")
        fh.write(json.dumps({
            "type": "footer", "steps": len(trace.records),
            "final_states": list(trace.configs[-1])}) + "\n")


def read_trace(path: str) -> tuple[Scenario, Trace]:
    """Load and replay a trace file.

    Replay re-executes every recorded selection through the engine and
    cross-checks the fired labels, emitted events, and final configuration;
    any divergence or truncation raises CorruptTraceError.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise CorruptTraceError(f"cannot read trace {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptTraceError(f"malformed trace line: {exc}") from exc
    if len(lines) < 3 or lines[0].get("type") != "header" \
            or lines[1].get("type") != "config" \
            or lines[-1].get("type") != "footer":
        raise CorruptTraceError("trace is truncated or missing header/footer")
    header, config_line, footer = lines[0], lines[1], lines[-1]
    try:
        scn = Scenario(**header["scenario"])
        validate_scenario(scn)
    except (TypeError, KeyError, ScenarioError) as exc:
        raise CorruptTraceError(f"bad scenario in header: {exc}") from exc
    try:
        topo = parse_edge_list(
            "\n".join(f"{u} {v}" for u, v in header["edges"]))
    except (KeyError, TopologyError) as exc:
        raise CorruptTraceError(f"bad topology in header: {exc}") from exc
    if topo.node_count != header.get("n"):
        raise CorruptTraceError("edge list does not match declared node count")
    proto = build_protocol(scn, topo)
    cfg = tuple(_freeze(st) for st in config_line["states"])
    trace = Trace(proto, topo, [cfg], [],
                  stop_reason=header.get("stop_reason", "incomplete"))
    step_lines = lines[2:-1]
    if footer.get("steps") != len(step_lines):
        raise CorruptTraceError("trace is truncated: step count mismatch")
    for i, line in enumerate(step_lines):
        if line.get("type") != "step" or line.get("step") != i:
            raise CorruptTraceError(f"unexpected record at step {i}")
        try:
            cfg, rec = step(cfg, line["selected"], proto, topo, step_index=i)
        except Exception as exc:
            raise CorruptTraceError(f"replay failed at step {i}: {exc}") from exc
        recorded_fired = {int(p): lab for p, lab in line["fired"].items()}
        if rec.fired != recorded_fired:
            raise CorruptTraceError(
                f"replay fired {rec.fired} at step {i}, trace says "
                f"{recorded_fired}")
        recorded_events = tuple(
            HookEvent(ev["process"], ev["kind"], _freeze(ev["payload"]))
            for ev in line["events"])
        if rec.events != recorded_events:
            raise CorruptTraceError(f"replay events diverge at step {i}")
        trace.configs.append(cfg)
        trace.records.append(rec)
    final = tuple(_freeze(st) for st in footer["final_states"])
    if trace.configs[-1] != final:
        raise CorruptTraceError("replayed final configuration diverges")
    return scn, trace


# ---------------------------------------------------------------------------
# Subcommands


_SCENARIO_FLAGS = ("topo", "proto", "rho", "alpha", "k", "k2", "daemon",
                   "p_select", "seed", "init", "steps", "infimum",
                   "group_count")


def _add_scenario_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value scenario file")
    sub.add_argument("--topo")
    sub.add_argument("--proto", choices=sorted(_PROTOS))
    sub.add_argument("--rho", type=int)
    sub.add_argument("--alpha")
    sub.add_argument("--k")
    sub.add_argument("--k2")
    sub.add_argument("--daemon", choices=sorted(_DAEMONS))
    sub.add_argument("--p-select", dest="p_select", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--init")
    sub.add_argument("--steps")
    sub.add_argument("--infimum")
    sub.add_argument("--group-count", dest="group_count", type=int)


def _scenario_from_args(args) -> Scenario:
    config = parse_config_file(args.config) if args.config else {}
    overrides = {name: getattr(args, name) for name in _SCENARIO_FLAGS}
    return scenario_from(config, overrides)


def cmd_run(args) -> int:
    scn = _scenario_from_args(args)
    trace = run_scenario(scn)
    if args.trace:
        write_trace(args.trace, scn, trace)
    report = analyze(scn, trace)
    print_summary(scn, report)
    return 0 if report["violations"] == 0 else 1


_CHECKS = ("wavelet", "infimum", "delay", "safety")


def cmd_check(args) -> int:
    scn, trace = read_trace(args.trace)
    print(f"replay ok: {len(trace.records)} steps re-validated")
    requested = args.checks or list(_CHECKS)
    report = analyze(scn, trace)
    failed = 0
    for check in requested:
        if check == "wavelet" and "wavelet_levels" in report:
            bad = report["wavelet_failures"]
            print(f"wavelet: {report['wavelet_levels']} levels, "
                  f"{len(bad)} failures")
            failed += len(bad)
        elif check == "infimum" and "infimum_phases" in report:
            print(f"infimum: {report['infimum_phases']} phases, "
                  f"{report['infimum_mismatches']} mismatches")
            failed += report["infimum_mismatches"]
        elif check == "delay" and "delay_pairs" in report:
            print(f"delay: {report['delay_pairs']} pairs, "
                  f"{report['delay_disagreements']} disagreements")
            failed += report["delay_disagreements"]
        elif check == "safety" and "safety_violations" in report:
            print(f"safety: {report['safety_violations']} violations")
            failed += report["safety_violations"]
        else:
            print(f"{check}: not applicable to proto {scn.proto}")
    if report.get("stab_index") is None:
        print("note: trace never stabilizes; checks cover nothing")
        failed += 1
    return 0 if failed == 0 else 1


_GRID_KEYS = ("topo", "n", "rho", "daemon", "seed", "proto")


def expand_grid(config: dict[str, str]) -> list[Scenario]:
    """Cartesian product of the comma-separated grid axes.

    A 'topo' entry without ':' names a generator kind and combines with the
    'n' axis; entries with ':' are used verbatim (then 'n' must be absent).
    """
    axes: dict[str, list[str]] = {}
    base: dict[str, str] = {}
    for key, raw in config.items():
        if key in _GRID_KEYS:
            axes[key] = [v.strip() for v in raw.split(",") if v.strip()]
        else:
            base[key] = raw
    topos = axes.pop("topo", ["ring:8"])
    ns = axes.pop("n", [])
    specs: list[str] = []
    for t in topos:
        if ":" in t:
            if ns:
                raise ScenarioError(
                    f"topo {t!r} fixes its own size; drop the n axis")
            specs.append(t)
        else:
            if not ns:
                raise ScenarioError(f"generator topo {t!r} needs an n axis")
            specs.extend(f"{t}:{n}" for n in ns)
    cells: list[Scenario] = []
    rhos = axes.get("rho", ["1"])
    daemons = axes.get("daemon", ["synchronous"])
    seeds = axes.get("seed", ["0"])
    protos = axes.get("proto", ["lme"])
    for spec in specs:
        for proto in protos:
            for rho in rhos:
                for daemon in daemons:
                    for seed in seeds:
                        overrides = {"topo": spec, "proto": proto,
                                     "rho": rho, "daemon": daemon,
                                     "seed": seed}
                        cells.append(scenario_from(dict(base), overrides))
    cells.sort(key=Scenario.key)
    return cells


def _sweep_cell(scn: Scenario) -> list:
    """One sweep row; cell failures are recorded, not raised."""
    try:
        trace = run_scenario(scn)
        report = analyze(scn, trace)
    except Exception as exc:  # noqa: BLE001 - per-row failure capture
        return [scn.topo, "", scn.rho, scn.daemon, scn.seed, scn.proto,
                "", f"error: {type(exc).__name__}", "", "", ""]
    blank = lambda v: "" if v is None else v
    return [scn.topo, report["n"], scn.rho, scn.daemon, scn.seed, scn.proto,
            blank(report.get("stab_round")), report["violations"],
            blank(report.get("fairness_index")),
            blank(report.get("service_time")),
            blank(report.get("comms_per_phase"))]


def cmd_sweep(args) -> int:
    config = parse_config_file(args.grid) if args.grid else {}
    overrides = {name: getattr(args, name) for name in _SCENARIO_FLAGS}
    for key, val in overrides.items():
        if val is not None:
            config[key] = str(val)
    cells = expand_grid(config) if config else []
    if args.jobs > 1 and cells:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(scn) for scn in cells]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out \
        else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    bad = sum(1 for row in rows if row[7] != 0)
    return 0 if bad == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhosync",
        description="Simulate and verify self-stabilizing clock and "
                    "rho-local coordination protocols.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="execute one scenario")
    _add_scenario_flags(p_run)
    p_run.add_argument("--trace", help="write a JSON-lines trace here")
    p_run.set_defaults(func=cmd_run)

    p_check = subs.add_parser("check", help="replay and re-verify a trace")
    p_check.add_argument("trace", help="trace file from `run --trace`")
    p_check.add_argument("--checks", nargs="*", choices=_CHECKS)
    p_check.set_defaults(func=cmd_check)

    p_sweep = subs.add_parser("sweep", help="run a scenario grid to CSV")
    p_sweep.add_argument("--grid", help="key=value grid file; comma lists "
                                        "on topo,n,rho,daemon,seed,proto")
    _add_scenario_flags(p_sweep)
    p_sweep.add_argument("--out", help="CSV output path (default stdout)")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, CorruptTraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
