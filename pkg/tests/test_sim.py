import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from torusfault.lofamo import FaultClass, mask_without
from torusfault.sim import (
    PATH_DIRECT,
    PATH_INFERRED,
    PATH_RELAY,
    PATH_SNET_WATCHDOG,
    AwarenessRecord,
    BadDims,
    CommandRing,
    FaultEvent,
    FaultKind,
    FaultNeverDetected,
    FaultScenario,
    ParseError,
    RingFull,
    TorusCoord,
    UnknownTarget,
    ValidationError,
    World,
    awareness_latency,
    build_torus,
    check_assertions,
    load_scenario,
    parse_scenario,
    run_scenario,
    summary_line,
    supervisor_collect,
    trace_text,
)
from torusfault.wire import Direction, Status

C = TorusCoord
MS = 1000
MASTERS = (C(0, 0, 0), C(1, 1, 1))


def scenario(*events, duration_ms=300, **kw):
    kw.setdefault("masters", MASTERS)
    return FaultScenario(events=list(events), duration_us=duration_ms * MS, **kw)


def ev(t_ms, node, comp, kind="break"):
    return FaultEvent(int(t_ms * MS), node, comp, FaultKind(kind))


class TestTopology:
    def test_eight_nodes(self):
        t = build_torus((2, 2, 2))
        assert len(t) == 8
        for c in t.nodes():
            nb = t.neighbours(c)
            assert len(nb) == 6
            assert nb[Direction.XP] == nb[Direction.XM]

    def test_single_node_is_own_neighbour(self):
        t = build_torus((1, 1, 1))
        c = C(0, 0, 0)
        assert set(t.neighbours(c).values()) == {c}

    def test_sixteen_nodes(self):
        assert len(build_torus((4, 2, 2))) == 16

    def test_wraparound(self):
        t = build_torus((3, 3, 3))
        assert t.neighbour(C(2, 0, 0), Direction.XP) == C(0, 0, 0)
        assert t.neighbour(C(0, 0, 0), Direction.ZM) == C(0, 0, 2)
        assert len(set(t.neighbours(C(1, 1, 1)).values())) == 6

    @pytest.mark.parametrize("dims", [(0, 2, 2), (2, -1, 2), (2, 2)])
    def test_bad_dims(self, dims):
        with pytest.raises(BadDims):
            build_torus(dims)

    def test_peer_port(self):
        t = build_torus((3, 2, 2))
        assert t.peer_port(C(0, 0, 0), Direction.XP) == (C(1, 0, 0), Direction.XM)
        assert t.cable_key(C(0, 0, 0), Direction.XP) == t.cable_key(C(1, 0, 0), Direction.XM)

    def test_coord_parse(self):
        assert C.parse("1.0.1") == C(1, 0, 1) == C.parse([1, 0, 1])
        assert str(C(1, 2, 3)) == "1.2.3"


class TestRing:
    def test_pending(self):
        assert CommandRing(64, 5, 2).pending == 3

    def test_wraparound(self):
        assert CommandRing(64, 1, 63).pending == 2

    def test_empty(self):
        assert CommandRing(64, 7, 7).pending == 0

    def test_full_raises(self):
        r = CommandRing(4)
        r.push(3)
        with pytest.raises(RingFull):
            r.push()

    def test_pull_batches(self):
        r = CommandRing(8, 6, 2)
        assert r.pull(3) == 3 and r.pending == 1
        assert r.pull(5) == 1 and r.pending == 0

    @given(st.lists(st.tuples(st.booleans(), st.integers(1, 10)), max_size=60))
    def test_pending_bounded(self, ops):
        r = CommandRing(16)
        for push, n in ops:
            if push:
                try:
                    r.push(n)
                except RingFull:
                    pass
            else:
                r.pull(n)
            assert 0 <= r.pending <= r.size - 1


class TestScenarioLoading:
    def test_well_formed(self, tmp_path):
        doc = {"dims": [2, 2, 2], "master": [0, 0, 0], "duration_ms": 200,
               "watchdog": {"t_write_ms": 10, "t_read_ms": 20},
               "events": [{"time_ms": 100, "node": [1, 0, 0], "component": "host", "kind": "break"}]}
        p = tmp_path / "s.json"
        p.write_text(json.dumps(doc))
        sc = load_scenario(p)
        assert sc.name == "s" and sc.master == C(0, 0, 0)
        assert sc.events[0] == FaultEvent(100_000, C(1, 0, 0), "host", FaultKind.BREAK)

    def test_write_not_before_read(self):
        with pytest.raises(ValidationError, match="t_write < t_read"):
            parse_scenario('{"watchdog": {"t_write_ms": 20, "t_read_ms": 10}}')

    def test_target_outside(self):
        text = '{"dims": [2,2,2], "events": [{"time_ms": 1, "node": [5,0,0], "component": "host", "kind": "break"}]}'
        with pytest.raises(ValidationError):
            parse_scenario(text)
        with pytest.raises(UnknownTarget):
            parse_scenario(text)

    def test_unordered_events(self):
        doc = {"events": [{"time_ms": 5, "node": [0, 0, 0], "component": "host", "kind": "sick"},
                          {"time_ms": 1, "node": [0, 0, 0], "component": "host", "kind": "sick"}]}
        with pytest.raises(ValidationError, match="time-ordered"):
            parse_scenario(json.dumps(doc))

    def test_syntax_error_has_line(self):
        with pytest.raises(ParseError) as e:
            parse_scenario('{\n "dims": [2,2,2],\n oops\n}')
        assert e.value.line == 3

    def test_bad_component_names_field(self):
        text = '{\n"events": [\n {"time_ms": 1, "node": [0,0,0], "component": "toaster", "kind": "break"}\n]}'
        with pytest.raises(ParseError) as e:
            parse_scenario(text)
        assert e.value.field.startswith("events[0]") and e.value.line == 3

    def test_unknown_key(self):
        with pytest.raises(ParseError):
            parse_scenario('{"dimz": [2,2,2]}')

    def test_masked_list(self):
        sc = parse_scenario('{"masked": ["host_memory"]}')
        assert sc.mask == mask_without(FaultClass.HOST_MEMORY)


class TestRun:
    def test_empty_scenario_has_no_findings(self):
        w = run_scenario(scenario(duration_ms=10_000))
        assert w.processed >= 10_000
        assert w.findings == []
        assert supervisor_collect(w).faulty() == {}
        assert summary_line(w, awareness_latency(w)).startswith("0 faults detected")

    def test_same_seed_same_trace(self):
        sc = scenario(ev(50, C(1, 0, 0), "link:X+", "sick"), ev(80, C(0, 1, 0), "host"))
        assert trace_text(run_scenario(sc, seed=7)) == trace_text(run_scenario(sc, seed=7))

    def test_seed_changes_phases(self):
        sc = scenario(duration_ms=50)
        assert trace_text(run_scenario(sc, seed=1)) != trace_text(run_scenario(sc, seed=2))

    def test_accounting(self):
        # every processed tick or delivery leaves exactly one trace line
        sc = scenario(duration_ms=7_000)
        fresh = World(sc, seed=3)
        horizon = sc.duration_us
        expected = 0
        for n in fresh.nodes.values():
            for mgr in (n.dfm, n.hfm):
                w0, r0 = mgr.next_write, mgr.next_read
                tw, tr = sc.watchdog.t_write_us, sc.watchdog.t_read_us
                due = set(range(w0, horizon + 1, tw)) | set(range(r0, horizon + 1, tr))
                expected += len(due)
            pings = len(range(n.ping_phase, horizon + 1, sc.ping_timeout_us))
            pongs = len(range(n.ping_phase + 2 * sc.snet_delay_us, horizon + 1, sc.ping_timeout_us))
            rx = len(range(n.ping_phase + sc.snet_delay_us, horizon + 1, sc.ping_timeout_us))
            expected += pings + len(sc.masters) * (rx + pongs)
        w = fresh.run()
        assert w.processed == expected
        assert len(w.trace) == expected

    def test_trace_accounts_for_findings(self):
        w = run_scenario(scenario(ev(50, C(1, 0, 0), "node")))
        assert len(w.trace) == w.processed + w.counts["finding"]
        assert w.counts["finding"] == len(w.findings)

    def test_trace_header(self):
        text = trace_text(run_scenario(scenario(duration_ms=20)))
        assert text.splitlines()[0] == "time_us,node,event_kind,detail"
        line = trace_text(run_scenario(scenario(duration_ms=20)), "jsonl").splitlines()[0]
        assert set(json.loads(line)) == {"time_us", "node", "event_kind", "detail"}


def _first(trace, kind, node=None, after=0, contains=""):
    for r in trace:
        if r.event_kind == kind and r.time_us >= after and (node is None or r.node == node) and contains in r.detail:
            return r
    return None


class TestInjection:
    def test_host_break_emits_ldm_to_all_ports(self):
        sc = scenario(ev(100, C(1, 0, 0), "host"))
        w = run_scenario(sc)
        t_read = sc.watchdog.t_read_us
        emit = _first(w.trace, "dfm_tick", "1.0.0", 100 * MS, "ldm=")
        assert emit is not None and emit.time_us <= 100 * MS + 2 * t_read
        got = [r for r in w.trace if r.event_kind == "ldm_rx" and "from=1.0.0" in r.detail
               and r.time_us <= emit.time_us + sc.ldm_delay_us]
        assert len(got) == 6
        assert {r.detail.split("port=")[1].split()[0] for r in got} == {d.label for d in Direction}

    def test_dnp_break_stops_dwr_and_credits(self):
        w = run_scenario(scenario(ev(100, C(1, 0, 0), "dnp")))
        assert _first(w.trace, "dfm_tick", "1.0.0", 100 * MS) is None
        view = supervisor_collect(w)
        assert view.known(C(1, 0, 0), FaultClass.DNP_MELTDOWN)
        # every neighbour sees the credit timeout toward the dead DNP
        for nb in {C(0, 0, 0), C(1, 1, 0), C(1, 0, 1)}:
            assert view.known(nb, FaultClass.LINK_BROKEN)
        assert C(1, 0, 0) not in view.inferred_dead

    def test_both_dead_reports_on_every_neighbour(self):
        sc = scenario(ev(100, C(1, 1, 1), "node"), dims=(3, 3, 3), masters=(C(0, 0, 0),))
        w = run_scenario(sc)
        view = supervisor_collect(w)
        assert C(1, 1, 1) in view.inferred_dead
        _, reports = view.inferred_dead[C(1, 1, 1)]
        assert len({(o, d) for _, o, d in reports}) == 6
        rec = view.first_aware(C(1, 1, 1), FaultClass.NODE_DEAD)
        assert rec.path == PATH_INFERRED

    def test_dnp_only_is_not_inferred_dead(self):
        sc = scenario(ev(100, C(1, 1, 1), "dnp"), dims=(3, 3, 3), masters=(C(0, 0, 0),))
        view = supervisor_collect(run_scenario(sc))
        assert C(1, 1, 1) not in view.inferred_dead
        assert view.known(C(1, 1, 1), FaultClass.DNP_MELTDOWN)

    def test_snet_break_relayed_through_neighbour(self):
        sc = scenario(ev(100, C(1, 0, 0), "snet_iface"), duration_ms=10_000)
        w = run_scenario(sc)
        rec = supervisor_collect(w).first_aware(C(1, 0, 0), FaultClass.HOST_SNET)
        assert rec is not None and rec.reporter != C(1, 0, 0)
        assert rec.path == PATH_SNET_WATCHDOG
        # the torus keeps working
        assert not any(f.fault_class in (FaultClass.LINK_BROKEN, FaultClass.DNP_MELTDOWN) for f in w.findings)

    def test_sick_keeps_updates_running(self):
        w = run_scenario(scenario(ev(100, C(1, 0, 0), "host", "sick"), ev(100, C(0, 1, 0), "dnp", "sick")))
        assert _first(w.trace, "hfm_tick", "1.0.0", 150 * MS) is not None
        assert _first(w.trace, "dfm_tick", "0.1.0", 150 * MS) is not None
        view = supervisor_collect(w)
        assert view.known(C(1, 0, 0), FaultClass.HOST_MEMORY)
        assert view.known(C(0, 1, 0), FaultClass.DNP_CORE_SICK)

    def test_restore_clears(self):
        sc = scenario(ev(50, C(1, 0, 0), "temperature", "sick"), ev(150, C(1, 0, 0), "temperature", "restore"))
        view = supervisor_collect(run_scenario(sc))
        assert view.known(C(1, 0, 0), FaultClass.TEMPERATURE)
        assert view.status[(C(1, 0, 0), FaultClass.TEMPERATURE, None)] is Status.NORMAL

    def test_host_restore_resumes(self):
        sc = scenario(ev(50, C(1, 0, 0), "host"), ev(150, C(1, 0, 0), "host", "restore"), duration_ms=400)
        w = run_scenario(sc)
        assert _first(w.trace, "hfm_tick", "1.0.0", 150 * MS) is not None
        assert supervisor_collect(w).status[(C(1, 0, 0), FaultClass.HOST_BREAKDOWN, None)] is Status.NORMAL

    def test_no_delivery_from_dead_host(self):
        w = run_scenario(scenario(ev(100, C(1, 0, 0), "host")))
        late = [r for r in w.trace if r.event_kind == "diag_rx" and "from=1.0.0" in r.detail
                and r.time_us > 100 * MS + w.scenario.snet_delay_us]
        assert late == []

    def test_unknown_target(self):
        w = World(scenario())
        with pytest.raises(UnknownTarget):
            w.inject_fault(FaultEvent(0, C(7, 7, 7), "host", FaultKind.BREAK))


class TestAwareness:
    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("t_ms", [100, 107, 113.5])
    def test_host_break_bound(self, seed, t_ms):
        sc = scenario(ev(t_ms, C(1, 0, 0), "host"))
        [rec] = awareness_latency(run_scenario(sc, seed=seed))
        tr = sc.watchdog.t_read_us
        assert rec.latency_us <= 2 * tr + 2 * tr + sc.snet_delay_us
        assert rec.inject_time <= rec.detect_time <= rec.aware_time
        assert rec.path == PATH_RELAY

    @pytest.mark.parametrize("seed", range(8))
    def test_host_probe_survives_read_only_tick(self, seed):
        sc = scenario(ev(30, C(1, 1, 0), "host_peripheral", "sick"), duration_ms=120)
        [rec] = awareness_latency(run_scenario(sc, seed=seed))
        assert isinstance(rec, AwarenessRecord)

    def test_direct_path(self):
        [rec] = awareness_latency(run_scenario(scenario(ev(50, C(0, 1, 1), "host_memory"))))
        assert rec.path == PATH_DIRECT and rec.fault_class is FaultClass.HOST_MEMORY

    def test_masked_never_detected(self):
        sc = scenario(ev(50, C(0, 1, 1), "host_memory"), mask=mask_without(FaultClass.HOST_MEMORY))
        [e] = awareness_latency(run_scenario(sc))
        assert isinstance(e, FaultNeverDetected)
        assert e.fault_class is FaultClass.HOST_MEMORY

    def test_master_host_break_seen_by_backup(self):
        w = run_scenario(scenario(ev(50, C(0, 0, 0), "host")))
        assert w.views[C(0, 0, 0)].records == []
        [rec] = awareness_latency(w)
        assert isinstance(rec, AwarenessRecord)

    def test_assertions(self):
        doc = {"duration_ms": 300, "masters": [[0, 0, 0], [1, 1, 1]],
               "events": [{"time_ms": 100, "node": [1, 0, 0], "component": "host", "kind": "break"}],
               "assertions": [{"type": "aware", "node": [1, 0, 0], "fault_class": "host_breakdown", "within_ms": 81},
                              {"type": "never_aware", "node": [0, 1, 0], "fault_class": "host_breakdown"},
                              {"type": "aware", "node": [0, 1, 0], "fault_class": "dnp_meltdown"}]}
        w = run_scenario(parse_scenario(json.dumps(doc)))
        fails = check_assertions(w)
        assert len(fails) == 1 and "0.1.0" in fails[0]


components = st.sampled_from(["host", "dnp", "node", "host_memory", "host_peripheral", "dnp_core",
                              "temperature", "voltage", "current", "link:X+", "link:Z-"])


@st.composite
def fault_lists(draw):
    n = draw(st.integers(1, 3))
    times = sorted(draw(st.lists(st.integers(10, 150), min_size=n, max_size=n)))
    return [FaultEvent(t * MS, C(*draw(st.tuples(*[st.integers(0, 1)] * 3))), draw(components),
                       draw(st.sampled_from([FaultKind.BREAK, FaultKind.SICK]))) for t in times]


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(fault_lists(), st.integers(0, 2**16))
def test_awareness_monotone_without_restore(events, seed):
    w = run_scenario(scenario(*events, duration_ms=250), seed=seed)
    for view in w.views.values():
        ever = {(r.node, r.fault_class) for r in view.records if r.status is not Status.NORMAL}
        for (node, cls, port), status in view.status.items():
            if status is Status.NORMAL and (node, cls) in ever:
                # the only allowed change is a sick link escalating to broken
                assert cls is FaultClass.LINK_SICK
                assert view.status.get((node, FaultClass.LINK_BROKEN, port)) is Status.BROKEN
