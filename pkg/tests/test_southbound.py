import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acino.compiler import ResourceLedger, compile_aci
from acino.intents import to_aci, validate_intent
from acino.southbound import (
    AgentRegistry,
    DeviceAgent,
    DirectTransport,
    Installer,
    MessageLog,
    SerializedTransport,
    SouthboundMessage,
    agent_handle,
    trace,
)
from acino.topology import load_topology_path

from conftest import TOPOLOGY_FILE, connect_request


@pytest.fixture
def env(ring, profiles, tmp_path):
    class Env:
        pass

    env = Env()
    env.topology = ring
    env.profiles = profiles
    env.ledger = ResourceLedger(ring)
    env.registry = AgentRegistry(ring)
    env.log = MessageLog(tmp_path / "southbound.log")
    env.transport = SerializedTransport(env.registry, env.log)
    env.installer = Installer(env.transport, timeout_s=1.0)
    yield env
    env.installer.close()


def _solution(env, request, intent_id):
    intent = validate_intent(request, env.topology, intent_id)
    (aci,) = to_aci(intent, env.topology)
    solution = compile_aci(aci, env.topology, env.profiles, env.ledger)
    record = env.ledger.reserve(solution, intent_id, aci)
    return solution, record


def _prepare(device_id, message_id, kind, params):
    return SouthboundMessage(message_id, device_id, "PREPARE", {"kind": kind, "params": params})


# -- agent behaviour ------------------------------------------------------------


def test_encrypting_transponder_stages_encrypted_connection(ring):
    node = ring.node("ET1")
    state = DeviceAgent(node).state
    message = _prepare("ET1", "m1", "OPTICAL_CONNECTION", {
        "peerTransponderId": "ET2",
        "roadmPath": ["FIBER-R1-R2"],
        "wavelengthIndex": 0,
        "encryptionFlag": True,
        "keyLengthBits": 256,
    })
    new_state, ack = agent_handle(state, message, node)
    assert ack.ok
    assert "m1" in new_state.pending_configs
    assert "m1" not in state.pending_configs  # handler is pure


def test_regular_transponder_rejects_encryption(ring):
    node = ring.node("T1")
    message = _prepare("T1", "m1", "OPTICAL_CONNECTION", {
        "peerTransponderId": "T2",
        "roadmPath": ["FIBER-R1-R2"],
        "wavelengthIndex": 0,
        "encryptionFlag": True,
        "keyLengthBits": 256,
    })
    _, ack = agent_handle(DeviceAgent(node).state, message, node)
    assert not ack.ok
    assert "no OTN_AES capability" in ack.reason


def test_commit_unknown_message_rejected(ring):
    node = ring.node("ET1")
    _, ack = agent_handle(
        DeviceAgent(node).state, SouthboundMessage("mX", "ET1", "COMMIT"), node
    )
    assert not ack.ok and "unknown messageId" in ack.reason


def test_macsec_config_needs_a_switch(ring):
    node = ring.node("H1")
    message = _prepare("H1", "m1", "MACSEC_CHANNEL", {
        "peerSwitchId": "S2", "keyLengthBits": 256, "vlanTag": 101,
    })
    _, ack = agent_handle(DeviceAgent(node).state, message, node)
    assert not ack.ok


def test_wavelength_clash_on_shared_fiber(ring):
    node = ring.node("ET1")
    agent = DeviceAgent(node)
    first = _prepare("ET1", "m1", "OPTICAL_CONNECTION", {
        "peerTransponderId": "ET2", "roadmPath": ["FIBER-R1-R2"],
        "wavelengthIndex": 1, "encryptionFlag": False,
    })
    assert agent.handle(first).ok
    clashing = _prepare("ET1", "m2", "OPTICAL_CONNECTION", {
        "peerTransponderId": "T2", "roadmPath": ["FIBER-R1-R2"],
        "wavelengthIndex": 1, "encryptionFlag": False,
    })
    ack = agent.handle(clashing)
    assert not ack.ok and "clash" in ack.reason


def test_identical_connection_is_idempotent(ring):
    # Groomed services re-assert the shared lightpath; that must be accepted.
    node = ring.node("ET1")
    agent = DeviceAgent(node)
    params = {
        "peerTransponderId": "ET2", "roadmPath": ["FIBER-R1-R2"],
        "wavelengthIndex": 1, "encryptionFlag": False,
    }
    assert agent.handle(_prepare("ET1", "m1", "OPTICAL_CONNECTION", params)).ok
    assert agent.handle(_prepare("ET1", "m2", "OPTICAL_CONNECTION", dict(params))).ok


def test_query_returns_snapshot(ring):
    node = ring.node("S1")
    agent = DeviceAgent(node)
    ack = agent.handle(SouthboundMessage("q1", "S1", "QUERY"))
    assert ack.ok and ack.snapshot["deviceId"] == "S1"
    assert ack.snapshot["appliedConfigs"] == {}


def test_replaying_message_log_reproduces_state(env):
    solution, record = _solution(env, connect_request("A2", "B2"), "svc-1")
    report = env.installer.install(solution.operations, "svc-1")
    assert report.committed

    replay_registry = AgentRegistry(load_topology_path(TOPOLOGY_FILE))
    for message in env.log.read_messages():
        replay_registry.agent(message.device_id).handle(message)
    for device_id, agent in env.registry.agents.items():
        assert agent.state.applied_configs == (
            replay_registry.agent(device_id).state.applied_configs
        )


# -- install -----------------------------------------------------------------------


def test_install_commits_on_healthy_agents(env):
    solution, record = _solution(env, connect_request("A1", "B1"), "svc-1")
    report = env.installer.install(solution.operations, "svc-1")
    assert report.committed
    assert len(report.message_ids) == len(solution.operations)
    for transponder in ("ET1", "ET2"):
        applied = env.registry.agent(transponder).state.applied_configs
        optical = [p for p in applied.values() if p["kind"] == "OPTICAL_CONNECTION"]
        assert optical and optical[0]["params"]["encryptionFlag"] is True


def test_prepare_rejection_aborts_everything(env):
    env.registry.apply_fault_config({"REJECT_PREPARE": "S2"})
    solution, record = _solution(env, connect_request("A2", "B2"), "svc-1")
    report = env.installer.install(solution.operations, "svc-1")
    assert not report.committed
    assert report.failed_device == "S2"
    for agent in env.registry.agents.values():
        assert not agent.state.applied_configs
        assert not agent.state.pending_configs


def test_empty_operation_list_sends_nothing(env):
    report = env.installer.install([], "svc-0")
    assert report.committed and report.outcomes == []
    assert env.log.read_messages() == []


def test_commit_drop_leaves_no_partial_config(env):
    env.registry.apply_fault_config({"DROP_COMMIT": "H2"})
    solution, record = _solution(env, connect_request("A3", "B3"), "svc-1")
    report = env.installer.install(solution.operations, "svc-1")
    assert not report.committed
    assert report.failed_device == "H2"
    for agent in env.registry.agents.values():
        assert not agent.state.applied_configs
        assert not agent.state.pending_configs


@settings(max_examples=40, deadline=None)
@given(rejectors=st.sets(st.sampled_from(["ET1", "ET2", "T1", "T2", "S1", "S2", "H1", "H2"]),
                         max_size=3))
def test_install_is_atomic_under_random_rejection(rejectors):
    topology = load_topology_path(TOPOLOGY_FILE)
    from acino.intents import ComplianceProfileTable

    profiles = ComplianceProfileTable.default()
    ledger = ResourceLedger(topology)
    registry = AgentRegistry(topology)
    registry.apply_fault_config({"REJECT_PREPARE": ",".join(sorted(rejectors))})
    installer = Installer(DirectTransport(registry), timeout_s=1.0)
    try:
        intent = validate_intent(connect_request("A2", "B2"), topology, "svc-1")
        (aci,) = to_aci(intent, topology)
        solution = compile_aci(aci, topology, profiles, ledger)
        report = installer.install(solution.operations, "svc-1")
        touched = {op.device_id for op in solution.operations}
        if touched & rejectors:
            assert not report.committed
            applied = [
                m for a in registry.agents.values() for m in a.state.applied_configs
            ]
            assert applied == []
        else:
            assert report.committed
            for message_id, op in zip(report.message_ids, solution.operations):
                assert message_id in registry.agent(op.device_id).state.applied_configs
        for agent in registry.agents.values():
            assert not agent.state.pending_configs
    finally:
        installer.close()


# -- remove ---------------------------------------------------------------------------


def test_remove_clears_devices(env):
    solution, record = _solution(env, connect_request("A3", "B3"), "svc-1")
    report = env.installer.install(solution.operations, "svc-1")
    record.message_ids = report.message_ids
    removal = env.installer.remove(record)
    assert removal.committed
    for agent in env.registry.agents.values():
        assert not agent.state.applied_configs


def test_remove_twice_is_noop(env):
    solution, record = _solution(env, connect_request("A1", "B1"), "svc-1")
    record.message_ids = env.installer.install(solution.operations, "svc-1").message_ids
    assert env.installer.remove(record).committed
    assert env.installer.remove(record).committed  # second pass: nothing to delete


def test_remove_with_dead_device_is_retriable(env):
    solution, record = _solution(env, connect_request("A3", "B3"), "svc-1")
    record.message_ids = env.installer.install(solution.operations, "svc-1").message_ids
    env.registry.agent("H2").state.up = False
    partial = env.installer.remove(record)
    assert not partial.committed
    assert any(not o.ok and o.device_id == "H2" for o in partial.outcomes)
    env.registry.agent("H2").state.up = True
    retry = env.installer.remove(record)
    assert retry.committed
    assert not env.registry.agent("H2").state.applied_configs


def test_remove_undoes_install_exactly(env):
    before = {
        device_id: dict(agent.state.applied_configs)
        for device_id, agent in env.registry.agents.items()
    }
    solution, record = _solution(env, connect_request("A2", "B2"), "svc-1")
    record.message_ids = env.installer.install(solution.operations, "svc-1").message_ids
    env.installer.remove(record)
    after = {
        device_id: dict(agent.state.applied_configs)
        for device_id, agent in env.registry.agents.items()
    }
    assert before == after


# -- trace -------------------------------------------------------------------------------


def test_trace_covers_encrypted_optical_service(env):
    solution, record = _solution(env, connect_request("A1", "B1"), "svc-1")
    env.installer.install(solution.operations, "svc-1")
    result = trace("A1", "B1", env.topology, env.registry)
    assert result.reached_destination
    assert result.uncovered_links == []
    assert [h.link_id for h in result.hops] == ["CA-ET1-R1", "FIBER-R1-R2", "CA-ET2-R2"]
    assert all(h.encrypted_by == ("L0_OPTICAL", "OTN_AES") for h in result.hops)


def test_trace_without_service_dead_ends(env):
    result = trace("A1", "B1", env.topology, env.registry)
    assert not result.reached_destination
    assert result.hops == []


def test_plain_service_leaves_every_link_uncovered(env):
    solution, record = _solution(env, connect_request("A3", "B3", required=False), "svc-1")
    env.installer.install(solution.operations, "svc-1")
    result = trace("A3", "B3", env.topology, env.registry)
    assert result.reached_destination
    traversed = [h.link_id for h in result.hops]
    assert traversed == [
        "TR-H1-T2", "CA-T2-R2", "FIBER-R2-R3", "CA-T3B-R3", "TR-H2-T3B"
    ]
    assert result.uncovered_links == traversed


def test_trace_macsec_covers_switch_to_switch(env):
    solution, record = _solution(env, connect_request("A2", "B2"), "svc-1")
    env.installer.install(solution.operations, "svc-1")
    result = trace("A2", "B2", env.topology, env.registry)
    assert result.reached_destination
    assert result.uncovered_links == []
    assert all(h.encrypted_by == ("L2_ETHERNET", "MACSEC") for h in result.hops)


def test_trace_picks_the_right_lightpath_among_many(env):
    # ET2 ends up terminating lightpaths to two different peers; the trace
    # must steer each destination into its own channel, not the first one.
    s1, _ = _solution(env, connect_request("B1", "B3", required=False), "svc-1")
    env.installer.install(s1.operations, "svc-1")
    s2, _ = _solution(env, connect_request("B1", "A2", required=False), "svc-2")
    env.installer.install(s2.operations, "svc-2")
    for src, dst in (("B1", "B3"), ("B1", "A2"), ("A2", "B1"), ("B3", "B1")):
        result = trace(src, dst, env.topology, env.registry)
        assert result.reached_destination, (src, dst)


def test_trace_ipsec_covers_host_to_host(env):
    solution, record = _solution(env, connect_request("A3", "B3"), "svc-1")
    env.installer.install(solution.operations, "svc-1")
    result = trace("A3", "B3", env.topology, env.registry)
    assert result.reached_destination
    assert result.uncovered_links == []
    assert all(h.encrypted_by == ("L3_IP", "IPSEC_GRE") for h in result.hops)
