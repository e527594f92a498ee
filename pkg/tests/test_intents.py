import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acino.errors import (
    IllegalTransition,
    SchemaError,
    UnresolvableSite,
    ValidationError,
)
from acino.intents import (
    LEGAL_TRANSITIONS,
    Compliance,
    ComplianceProfileTable,
    EncryptionConstraint,
    Intent,
    IntentState,
    allowed_encryption_layers,
    to_aci,
    transition,
    validate_intent,
)
from acino.topology import (
    EncryptionCapability,
    LayerId,
    Mechanism,
    TopologyEvent,
    apply_event,
)

from conftest import connect_request


# -- validation ------------------------------------------------------------------


def test_valid_request_becomes_submitted_intent(ring):
    intent = validate_intent(connect_request("A3", "B3"), ring)
    assert intent.state is IntentState.SUBMITTED
    assert intent.src == "A3" and intent.dst == "B3"
    assert intent.encryption.compliance is Compliance.GENERIC
    assert intent.state_history[0].state is IntentState.SUBMITTED


def test_src_equals_dst_rejected(ring):
    with pytest.raises(ValidationError) as excinfo:
        validate_intent(connect_request("A3", "A3"), ring)
    assert any("src equals dst" in r for r in excinfo.value.reasons)


def test_compliance_without_required_rejected(ring):
    request = connect_request("A3", "B3", required=False)
    request["encryption"]["compliance"] = "HIPAA"
    with pytest.raises(ValidationError) as excinfo:
        validate_intent(request, ring)
    assert any("without required" in r for r in excinfo.value.reasons)


def test_unknown_site_and_bad_bandwidth_collected(ring):
    request = {"src": "A3", "dst": "Z9", "bandwidthMbps": -4, "encryption": {"required": False}}
    with pytest.raises(ValidationError) as excinfo:
        validate_intent(request, ring)
    reasons = " | ".join(excinfo.value.reasons)
    assert "Z9" in reasons and "bandwidthMbps" in reasons


def test_duplicate_preference_layers_rejected(ring):
    request = connect_request("A1", "B1", preference=["L0_OPTICAL", "L0_OPTICAL"])
    with pytest.raises(ValidationError):
        validate_intent(request, ring)


@settings(max_examples=120, deadline=None)
@given(
    st.dictionaries(
        st.sampled_from(
            ["src", "dst", "bandwidthMbps", "maxLatencyMs", "encryption", "action", "junk"]
        ),
        st.one_of(
            st.none(),
            st.booleans(),
            st.integers(-5, 20000),
            st.text(max_size=6),
            st.sampled_from(["A1", "B1", "A3", "B3"]),
            st.dictionaries(
                st.sampled_from(["required", "compliance", "layerPreference"]),
                st.one_of(
                    st.booleans(),
                    st.text(max_size=6),
                    st.sampled_from(["GENERIC", "BSI", "HIPAA"]),
                    st.lists(st.sampled_from(["L0_OPTICAL", "L2_ETHERNET", "L3_IP"]), max_size=4),
                ),
                max_size=3,
            ),
        ),
        max_size=6,
    )
)
def test_validation_is_total(request):
    # Any malformed document maps to ValidationError; nothing else escapes.
    from conftest import TOPOLOGY_FILE
    from acino.topology import load_topology_path

    topology = load_topology_path(TOPOLOGY_FILE)
    try:
        intent = validate_intent(request, topology)
        assert intent.state is IntentState.SUBMITTED
    except ValidationError as exc:
        assert exc.reasons


# -- state machine ----------------------------------------------------------------


def _fresh_intent():
    intent = Intent(
        id="i-test",
        src="A1",
        dst="B1",
        bandwidth_mbps=1000,
        encryption=EncryptionConstraint(required=False),
    )
    return intent


def test_first_legal_edge():
    intent = _fresh_intent()
    transition(intent, IntentState.COMPILING, "start")
    assert intent.state is IntentState.COMPILING


def test_withdraw_must_pass_withdrawing():
    intent = _fresh_intent()
    intent.state = IntentState.INSTALLED
    with pytest.raises(IllegalTransition) as excinfo:
        transition(intent, IntentState.WITHDRAWN, "skip")
    assert excinfo.value.current == "INSTALLED"
    assert excinfo.value.requested == "WITHDRAWN"


def test_operator_retry_edge():
    intent = _fresh_intent()
    intent.state = IntentState.FAILED
    transition(intent, IntentState.COMPILING, "operator retry")
    assert intent.state is IntentState.COMPILING


def test_history_sequence_is_monotone():
    intent = _fresh_intent()
    for state, reason in [
        (IntentState.COMPILING, "c"),
        (IntentState.INSTALLING, "i"),
        (IntentState.INSTALLED, "done"),
    ]:
        transition(intent, state, reason)
    sequences = [change.sequence for change in intent.state_history]
    assert sequences == sorted(sequences)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.sampled_from(list(IntentState)), min_size=1, max_size=12))
def test_no_history_escapes_legal_relation(attempts):
    intent = _fresh_intent()
    for target in attempts:
        try:
            transition(intent, target, "random walk")
        except IllegalTransition:
            pass
    states = [IntentState.SUBMITTED] + [change.state for change in intent.state_history]
    for current, following in zip(states, states[1:]):
        assert (current, following) in LEGAL_TRANSITIONS


# -- compliance table ----------------------------------------------------------------


def test_table_file_matches_defaults(profiles):
    assert profiles.profiles == ComplianceProfileTable.default().profiles


def test_open_profiles_must_stay_open():
    with pytest.raises(SchemaError):
        ComplianceProfileTable.from_document(
            {"GENERIC": {"allowedMechanisms": ["MACSEC"], "minKeyLengthBits": 128}}
        )
    with pytest.raises(SchemaError):
        ComplianceProfileTable.from_document(
            {"BSI": {"allowedMechanisms": [], "minKeyLengthBits": 256}}
        )


# -- encryption layer filter ------------------------------------------------------------


def _caps(*entries: tuple[Mechanism, int]):
    by_layer: dict[LayerId, set[EncryptionCapability]] = {}
    for mechanism, bits in entries:
        from acino.topology import MECHANISM_LAYER

        layer = MECHANISM_LAYER[mechanism]
        by_layer.setdefault(layer, set()).add(
            EncryptionCapability(layer, mechanism, bits)
        )
    return by_layer


def test_otn_pair_passes_generic(profiles):
    result = allowed_encryption_layers(
        EncryptionConstraint(True, Compliance.GENERIC),
        profiles,
        _caps((Mechanism.OTN_AES, 256)),
        _caps((Mechanism.OTN_AES, 256)),
    )
    assert result == [(LayerId.L0_OPTICAL, Mechanism.OTN_AES)]


def test_bsi_filters_short_keys(profiles):
    result = allowed_encryption_layers(
        EncryptionConstraint(True, Compliance.BSI),
        profiles,
        _caps((Mechanism.IPSEC_GRE, 128)),
        _caps((Mechanism.IPSEC_GRE, 128)),
    )
    assert result == []


def test_preference_orders_result(profiles):
    src = _caps((Mechanism.OTN_AES, 256), (Mechanism.IPSEC_GRE, 128))
    dst = _caps((Mechanism.OTN_AES, 256), (Mechanism.IPSEC_GRE, 128))
    constraint = EncryptionConstraint(
        True, Compliance.GENERIC, layer_preference=(LayerId.L3_IP,)
    )
    result = allowed_encryption_layers(constraint, profiles, src, dst)
    assert result[0] == (LayerId.L3_IP, Mechanism.IPSEC_GRE)
    assert (LayerId.L0_OPTICAL, Mechanism.OTN_AES) in result


def test_singleton_preference(profiles):
    constraint = EncryptionConstraint(
        True, Compliance.GENERIC, layer_preference=(LayerId.L3_IP,)
    )
    result = allowed_encryption_layers(
        constraint,
        profiles,
        _caps((Mechanism.IPSEC_GRE, 128)),
        _caps((Mechanism.IPSEC_GRE, 128)),
    )
    assert result == [(LayerId.L3_IP, Mechanism.IPSEC_GRE)]


_cap_sets = st.lists(
    st.tuples(
        st.sampled_from(list(Mechanism)),
        st.sampled_from([128, 256]),
    ),
    max_size=4,
)


@settings(max_examples=120, deadline=None)
@given(src=_cap_sets, dst=_cap_sets, extra=_cap_sets, side=st.booleans())
def test_enlarging_capabilities_is_monotone(src, dst, extra, side, profiles):
    constraint = EncryptionConstraint(True, Compliance.GENERIC)
    before = allowed_encryption_layers(constraint, profiles, _caps(*src), _caps(*dst))
    if side:
        src = src + extra
    else:
        dst = dst + extra
    after = allowed_encryption_layers(constraint, profiles, _caps(*src), _caps(*dst))
    assert set(before) <= set(after)


# -- translation to ACIs --------------------------------------------------------------


def test_host_sites_resolve_to_hosts_and_transponders(ring):
    intent = validate_intent(connect_request("A3", "B3"), ring, "i-1")
    (aci,) = to_aci(intent, ring)
    assert aci.attachments[LayerId.L3_IP]["src"].node_id == "H1"
    assert aci.attachments[LayerId.L3_IP]["dst"].node_id == "H2"
    assert aci.attachments[LayerId.L0_OPTICAL]["src"].node_id == "T2"
    assert aci.attachments[LayerId.L0_OPTICAL]["dst"].node_id == "T3B"


def test_transponder_sites_expose_otn_capability(ring):
    intent = validate_intent(connect_request("A1", "B1"), ring, "i-2")
    (aci,) = to_aci(intent, ring)
    for role in ("src", "dst"):
        capability = aci.attachments[LayerId.L0_OPTICAL][role].capability
        assert capability is not None and capability.mechanism is Mechanism.OTN_AES


def test_disconnected_site_is_unresolvable(ring):
    apply_event(ring, TopologyEvent("LINK_DOWN", "TR-H1-T2"))
    intent = validate_intent(connect_request("A3", "B3"), ring, "i-3")
    with pytest.raises(UnresolvableSite) as excinfo:
        to_aci(intent, ring)
    assert excinfo.value.site_id == "A3"


def test_constraints_copied_through(ring):
    request = connect_request(
        "A1", "B1", compliance="BSI", preference=["L0_OPTICAL"], max_latency=5.0
    )
    intent = validate_intent(request, ring, "i-4")
    (aci,) = to_aci(intent, ring)
    assert aci.encryption == intent.encryption
    assert aci.bandwidth_mbps == intent.bandwidth_mbps
    assert aci.max_latency_ms == intent.max_latency_ms
