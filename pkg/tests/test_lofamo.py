
import pytest
from hypothesis import given, settings, strategies as st

from torusfault.lofamo import (
    Actor,
    ConfigError,
    DnpFaultManager,
    FaultClass,
    HostFaultManager,
    InvalidLdm,
    LinkCounters,
    LinkHealthState,
    MetricThresholds,
    OwnershipViolation,
    RegisterBank,
    SensorThresholds,
    SnetMonitor,
    SnetState,
    WatchdogConfig,
    liveness_sweep,
    mask_without,
    run_watchdog_pair,
    sensor_classify,
)
from torusfault.wire import Direction, DnpWatchdogRegister, HostWatchdogRegister, LifamaDiagnosticMessage, Status

from oracles import DWR_LAYOUT, assemble, disassemble

CFG = WatchdogConfig(10, 20)
MS = 1000


def pair(cfg=CFG, mask=None):
    bank = RegisterBank(timer=cfg)
    if mask is not None:
        bank.mask = mask
    return bank, DnpFaultManager(bank, "n"), HostFaultManager(bank, "n")


def run(bank, dfm, hfm, until_us, host=True, dnp=True, step=MS):
    """Tick both managers on a fine grid; returns (dfm outputs, hfm outputs)."""
    douts, houts = [], []
    for t in range(0, until_us + 1, step):
        if dnp and t >= dfm.next_due():
            douts.append((t, dfm.tick(t)))
        if host and t >= hfm.next_due():
            houts.append((t, hfm.tick(t)))
    return douts, houts


class TestConfig:
    def test_order(self):
        with pytest.raises(ConfigError, match="t_write < t_read"):
            WatchdogConfig(20, 10)
        with pytest.raises(ConfigError):
            WatchdogConfig(10, 10)

    def test_range(self):
        WatchdogConfig(1, 65_000)
        with pytest.raises(ConfigError):
            WatchdogConfig(0, 5)
        with pytest.raises(ConfigError):
            WatchdogConfig(1, 65_001)

    def test_timer_word(self):
        assert WatchdogConfig.from_word(CFG.to_word()) == CFG

    def test_thresholds_ordering(self):
        with pytest.raises(ConfigError):
            MetricThresholds(0, 10, 5, 20)


class TestSensors:
    t = MetricThresholds(-10, 0, 70, 85)

    @pytest.mark.parametrize("reading,status", [
        (40, Status.NORMAL), (0, Status.NORMAL), (70, Status.NORMAL),
        (75, Status.WARNING), (-5, Status.WARNING), (85, Status.WARNING),
        (90, Status.ALARM), (-11, Status.ALARM),
    ])
    def test_classify(self, reading, status):
        assert sensor_classify(self.t, reading) is status

    @given(st.floats(-100, 200, allow_nan=False))
    def test_bands_oracle(self, r):
        expect = Status.NORMAL if 0 <= r <= 70 else Status.WARNING if -10 <= r <= 85 else Status.ALARM
        assert self.t.classify(r) is expect

    def test_defaults_nominal_are_normal(self):
        th = SensorThresholds()
        assert all(th.classify(m, v) is Status.NORMAL for m, v in th.nominal().items())


class TestLinkHealth:
    def test_clean(self):
        assert LinkHealthState().update(LinkCounters(0, 10 ** 6, 10 ** 9)) is Status.NORMAL

    def test_timeout_breaks(self):
        s = LinkHealthState()
        assert s.update(LinkCounters(0, 10, 0, credit_timeout=True)) is Status.BROKEN
        assert s.update(LinkCounters(0, 10, 0)) is Status.NORMAL

    def test_ratio(self):
        assert LinkHealthState().update(LinkCounters(10, 100)) is Status.SICK
        assert LinkHealthState().update(LinkCounters(4, 100)) is Status.NORMAL

    def test_min_sample(self):
        s = LinkHealthState()
        assert s.update(LinkCounters(5, 50)) is Status.NORMAL
        assert s.update(LinkCounters(5, 50)) is Status.SICK

    def test_non_monotone_rejected(self):
        with pytest.raises(ValueError):
            LinkHealthState().update(LinkCounters(-1, 5))

    @given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 200), st.booleans()), max_size=30))
    def test_invariants(self, deltas):
        s = LinkHealthState()
        for e, p, to in deltas:
            e = min(e, p)
            st_ = s.update(LinkCounters(e, p, 0, to))
            if st_ is Status.BROKEN:
                assert s.credit_timeout
            if st_ is Status.SICK:
                assert any(r >= s.sick_ratio_threshold for r, _ in s.history)


class TestSnet:
    def test_always_pong(self):
        m = SnetMonitor()
        assert all(m.step(t, True) is SnetState.NORMAL for t in range(0, 30_000_000, 3_000_000))

    def test_silent_master(self):
        m = SnetMonitor()
        t = 0
        states = []
        while m.state is not SnetState.BROKEN:
            t += m.timeout_us
            states.append(m.step(t, False))
        assert t == 6_000_000
        assert states == [SnetState.WAITING_RETRY, SnetState.BROKEN]
        assert m.status is Status.BROKEN

    def test_single_drop_recovers(self):
        m = SnetMonitor()
        seq = [True, False, True, True, False, True]
        assert all(m.step(i, p) is not SnetState.BROKEN for i, p in enumerate(seq))


class TestBank:
    def test_peer_only_invalidates(self):
        bank = RegisterBank()
        bank.invalidate_dwr(Actor.HFM)
        assert bank.dwr & 1 == 0
        with pytest.raises(OwnershipViolation):
            bank.write_dwr(DnpWatchdogRegister(valid=True), Actor.HFM)
        with pytest.raises(OwnershipViolation):
            bank.write_hwr(HostWatchdogRegister(valid=True), Actor.DFM)

    def test_owner_writes(self):
        bank = RegisterBank()
        bank.write_hwr(HostWatchdogRegister(valid=True, memory=Status.SICK))
        assert bank.hwr == 0b01001


class TestDfm:
    def test_healthy_host_no_ldm(self):
        bank, dfm, hfm = pair()
        douts, _ = run(bank, dfm, hfm, 1000 * CFG.t_write_us)
        assert len(douts) > 1000
        assert all(o.ldm is None and not o.findings for _, o in douts)

    @pytest.mark.parametrize("stop_ms", [57, 100, 113, 149])
    def test_host_stop_detected_within_two_reads(self, stop_ms):
        bank, dfm, hfm = pair()
        douts = []
        for t in range(0, 400 * MS, MS):
            if t >= dfm.next_due():
                douts.append((t, dfm.tick(t)))
            if t < stop_ms * MS and t >= hfm.next_due():
                hfm.tick(t)
        det = [t for t, o in douts for f in o.findings if f.fault_class is FaultClass.HOST_BREAKDOWN]
        assert det and det[0] <= stop_ms * MS + 2 * CFG.t_read_us
        ldms = [o.ldm for t, o in douts if o.ldm is not None]
        assert ldms and all(m.service_net is m.memory is m.peripheral is Status.BROKEN for m in ldms)

    def test_detection_deadline_all_phases(self):
        for cfg in (WatchdogConfig(2, 5), WatchdogConfig(3, 4)):
            for dp in range(cfg.t_read_ms):
                for hp in range(cfg.t_write_ms):
                    for stop in range(20, 20 + cfg.t_read_ms):
                        s = run_watchdog_pair(cfg, dp, hp, 60, stop_host_at=stop)
                        assert s.first_declaration is not None
                        assert s.first_declaration <= stop * MS + 2 * cfg.t_read_us

    def test_service_net_broken_emits_ldm(self):
        bank, dfm, hfm = pair()
        bank.write_hwr(HostWatchdogRegister(valid=True, service_net=Status.BROKEN))
        out = dfm.read(20 * MS)
        assert out.ldm is not None and out.ldm.service_net is Status.BROKEN
        assert out.ldm.memory is Status.NORMAL

    def test_send_ldm_flag(self):
        bank, dfm, hfm = pair()
        bank.write_hwr(HostWatchdogRegister(valid=True, send_ldm=True))
        assert dfm.read(20 * MS).ldm == LifamaDiagnosticMessage()

    def test_recovery_sends_one_clear_ldm(self):
        bank, dfm, hfm = pair()
        bank.invalidate_hwr()
        assert dfm.read(20 * MS).ldm.memory is Status.BROKEN
        hfm.write(25 * MS)
        out = dfm.read(40 * MS)
        assert out.ldm == LifamaDiagnosticMessage()
        assert [f.status for f in out.findings] == [Status.NORMAL]
        hfm.write(45 * MS)
        assert dfm.read(60 * MS).ldm is None

    def test_build_ldm_all_normal(self):
        _, dfm, _ = pair()
        assert dfm.build_ldm() == LifamaDiagnosticMessage(valid=True)

    def test_apply_remote_ldm_sets_bit(self):
        bank, dfm, _ = pair()
        msg = LifamaDiagnosticMessage(memory=Status.BROKEN)
        dfm.apply_remote_ldm(Direction.YM, msg)
        assert bank.rfd.get(Direction.YM) == msg
        assert bank.dwr == assemble(DWR_LAYOUT, {"valid": 1, "nb_Y-": 1})
        assert disassemble(DWR_LAYOUT, bank.dwr)["nb_Y-"] == 1 == bank.dwr >> 3 & 1

    def test_apply_keeps_valid_bit(self):
        bank, dfm, _ = pair()
        bank.invalidate_dwr()
        dfm.apply_remote_ldm(Direction.XP, LifamaDiagnosticMessage(service_net=Status.BROKEN))
        assert bank.dwr == 0x40

    def test_clear_ldm_clears_bit(self):
        bank, dfm, _ = pair()
        dfm.apply_remote_ldm(Direction.ZP, LifamaDiagnosticMessage(peripheral=Status.BROKEN))
        dfm.apply_remote_ldm(Direction.ZP, LifamaDiagnosticMessage())
        assert bank.dwr == 1

    def test_masked_class_no_bit(self):
        bank, dfm, _ = pair(mask=mask_without(FaultClass.HOST_MEMORY))
        dfm.apply_remote_ldm(Direction.YM, LifamaDiagnosticMessage(memory=Status.BROKEN))
        assert bank.dwr == 1
        assert bank.rfd.get(Direction.YM).memory is Status.BROKEN

    def test_sick_neighbour_configurable(self):
        msg = LifamaDiagnosticMessage(memory=Status.SICK)
        bank, dfm, _ = pair()
        dfm.apply_remote_ldm(Direction.XM, msg)
        assert bank.dwr == 1
        bank2 = RegisterBank()
        d2 = DnpFaultManager(bank2, sick_sets_neighbour=True)
        d2.apply_remote_ldm(Direction.XM, msg)
        assert bank2.dwr == 0b100001

    def test_invalid_ldm(self):
        _, dfm, _ = pair()
        with pytest.raises(InvalidLdm):
            dfm.apply_remote_ldm(Direction.XP, LifamaDiagnosticMessage(valid=False))

    def test_sensor_and_link_findings(self):
        bank, dfm, _ = pair()
        out = dfm.write(10 * MS, sensors={"temperature": 80.0},
                        link_counters={Direction.XP: LinkCounters(credit_timeout=True),
                                       Direction.YP: LinkCounters(20, 100)})
        got = {(f.fault_class, f.direction, f.status) for f in out.findings}
        assert got == {(FaultClass.TEMPERATURE, None, Status.WARNING),
                       (FaultClass.LINK_BROKEN, Direction.XP, Status.BROKEN),
                       (FaultClass.LINK_SICK, Direction.YP, Status.SICK)}
        w = DnpWatchdogRegister.from_word(out.dwr)
        assert w.temperature is Status.WARNING and w.link(Direction.XP) is Status.BROKEN

    def test_emulation_forces_sick(self):
        bank, dfm, _ = pair()
        bank.emulation = 1 << FaultClass.VOLTAGE.bit
        out = dfm.write(10 * MS)
        assert [(f.fault_class, f.status) for f in out.findings] == [(FaultClass.VOLTAGE, Status.SICK)]


class TestHfm:
    def test_all_normal_no_diag(self):
        bank, dfm, hfm = pair()
        _, houts = run(bank, dfm, hfm, 500 * MS)
        assert all(not o.outbox and not o.findings for _, o in houts)

    def test_neighbour_bit_diag(self):
        bank, dfm, hfm = pair()
        dfm.apply_remote_ldm(Direction.XP, LifamaDiagnosticMessage(
            service_net=Status.BROKEN, memory=Status.BROKEN, peripheral=Status.BROKEN))
        out = hfm.read(20 * MS)
        assert [(d.fault_class, d.direction, d.relayed) for d in out.outbox] == [
            (FaultClass.HOST_BREAKDOWN, Direction.XP, True)]

    def test_dnp_meltdown(self):
        bank, dfm, hfm = pair()
        _, houts = run(bank, dfm, hfm, 200 * MS, dnp=False)
        diags = [d for _, o in houts for d in o.outbox]
        assert diags[0].fault_class is FaultClass.DNP_MELTDOWN and diags[0].status is Status.BROKEN
        assert diags[0].time <= 2 * CFG.t_read_us
        find = [f for _, o in houts for f in o.findings]
        assert find[0].detector == "HFM" and find[0].storage == "DWR.valid"

    def test_retransmit_until_ack(self):
        bank, dfm, hfm = pair()
        hfm.memory = Status.SICK
        first = hfm.tick(0).outbox
        assert len(first) == 1 and first[0].fault_class is FaultClass.HOST_MEMORY
        out = hfm.tick(CFG.t_read_us)
        assert [d.seq for d in out.outbox] == [first[0].seq]
        assert hfm.ack(first[0].seq)
        dfm.write(2 * CFG.t_read_us)
        assert not hfm.tick(2 * CFG.t_read_us).outbox

    def test_cleared_condition_reported(self):
        bank, dfm, hfm = pair()
        hfm.write(0, {"peripheral": Status.BROKEN})
        out = hfm.write(10 * MS, {"peripheral": Status.NORMAL})
        assert [(d.fault_class, d.status) for d in out.outbox] == [(FaultClass.HOST_PERIPHERAL, Status.NORMAL)]

    def test_masked_not_enqueued(self):
        bank, dfm, hfm = pair(mask=mask_without(FaultClass.HOST_MEMORY))
        assert not hfm.write(0, {"memory": Status.BROKEN}).outbox

    def test_snet_in_hwr(self):
        bank, dfm, hfm = pair()
        hfm.snet_step(3_000_000, False)
        hfm.snet_step(6_000_000, False)
        out = hfm.write(6_000_000)
        assert HostWatchdogRegister.from_word(out.hwr).service_net is Status.BROKEN
        assert out.findings[0].fault_class is FaultClass.HOST_SNET

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.sampled_from(["dw", "dr", "hw", "hr"]), min_size=1, max_size=60))
    def test_invalidate_only_rule(self, ops):
        bank, dfm, hfm = pair()
        t = 0
        for op in ops:
            t += 1000
            before_d, before_h = bank.dwr, bank.hwr
            if op == "dw":
                dfm.write(t)
                assert bank.hwr == before_h
            elif op == "dr":
                dfm.read(t)
                assert bank.hwr == before_h & ~1 and bank.dwr == before_d
            elif op == "hw":
                hfm.write(t)
                assert bank.dwr == before_d
            else:
                hfm.read(t)
                assert bank.dwr == before_d & ~1 and bank.hwr == before_h


class TestLiveness:
    def test_small_sweep(self):
        s = liveness_sweep(max_write=4, max_read=8, horizon=60)
        assert s.reads > 0 and s.missed_reads == 0 and s.declarations == 0

    def test_jitter_ok(self):
        s = liveness_sweep(max_write=3, max_read=6, horizon=60, jitter=True, seed=5)
        assert s.missed_reads == 0 and s.declarations == 0

    def test_largest_jitter_still_safe(self):
        cfg = WatchdogConfig(4, 5)
        s = run_watchdog_pair(cfg, 0, 0, 200, jitter=999, seed=1)
        assert s.missed_reads == 0

    def test_jitter_bound_enforced(self):
        with pytest.raises(ValueError):
            run_watchdog_pair(WatchdogConfig(4, 5), jitter=1000)
