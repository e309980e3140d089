"""Memory state tests: neurons, graph, clamped updates, snapshots, exports."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuralstore.codec import Payload
from neuralstore.core import (
    ConfigurationError,
    HiveParams,
    Memory,
    SnapshotFormatError,
    apply_state_update,
    clamp_strength,
    clamp_weight,
    parse_snapshot,
)
from tests.conftest import build_walkthrough


def make_memory(**overrides) -> tuple[Memory, object]:
    params = HiveParams(**overrides)
    memory = Memory()
    hive = memory.add_hive("blob", params)
    return memory, hive


def payload(n: int = 100) -> Payload:
    return Payload.from_bytes(bytes((i * 13) % 256 for i in range(n)))


def feat(memory, data: bytes) -> np.ndarray:
    return list(memory.hives.values())[0].extractor.extract(data)


class TestParamsValidation:
    def test_defaults_valid(self):
        HiveParams().validate()

    @pytest.mark.parametrize("overrides", [
        {"eta": 0.0},
        {"epsilon": -1.0},
        {"phi": 101.0},
        {"retention_period": 0},
        {"memory_decay_rates": [-1.0, 1.0]},
        {"elasticity_schedules": [[80, 90, 1], [80, 1]]},
        {"elasticity_schedules": [[80, 0.5], [80, 1]]},
        {"codec": "nope"},
        {"extractor": "nope"},
        {"elasticity_mode": "nope"},
        {"num_localities": 3},  # list lengths no longer match
    ])
    def test_invalid_params_rejected(self, overrides):
        with pytest.raises(ConfigurationError):
            HiveParams(**overrides).validate()


class TestCueNeurons:
    def test_first_cue_in_empty_hive_gets_id_zero_and_no_edges(self):
        memory, hive = make_memory()
        cid = memory.add_cue_neuron(hive, label="wolf")
        assert cid == 0
        assert memory.edge_count() == 0

    def test_duplicate_label_is_idempotent(self):
        memory, hive = make_memory()
        a = memory.add_cue_neuron(hive, label="wolf")
        b = memory.add_cue_neuron(hive, label="wolf")
        assert a == b

    def test_duplicate_vector_is_idempotent(self):
        memory, hive = make_memory()
        vec = np.zeros(64)
        vec[3] = 1.0
        a = memory.add_cue_neuron(hive, cue_vector=vec)
        b = memory.add_cue_neuron(hive, cue_vector=vec.copy())
        assert a == b

    def test_wrong_dimension_rejected(self):
        memory, hive = make_memory()
        with pytest.raises(ConfigurationError):
            memory.add_cue_neuron(hive, cue_vector=np.ones(3))

    def test_full_graph_cue_connects_to_all_existing(self):
        memory, hive = make_memory(full_graph=True)
        memory.add_cue_neuron(hive, label="a")
        memory.add_cue_neuron(hive, label="b")
        memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        before = memory.edge_count()
        new = memory.add_cue_neuron(hive, label="c")
        assert memory.edge_count() - before == 4  # 3 prior neurons + default cue
        for other in memory.neurons:
            if other != new:
                assert memory.weight(new, other) == hive.params.epsilon


class TestDataNeurons:
    def test_new_neuron_full_strength_one_default_edge(self):
        memory, hive = make_memory()
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        neuron = memory.data_neuron(dn)
        assert neuron.strength == 100.0
        default = hive.localities[0].default_cue_id
        assert memory.weight(default, dn) == hive.params.epsilon
        assert memory.edge_count() == 1

    def test_two_neurons_distinct_ids(self):
        memory, hive = make_memory()
        a = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        b = memory.add_data_neuron(hive, 0, payload(50), feat(memory, payload(50).blob))
        assert a != b
        assert memory.data_neuron(b).strength == 100.0

    def test_unknown_locality_rejected(self):
        memory, hive = make_memory()
        with pytest.raises(ConfigurationError):
            memory.add_data_neuron(hive, 9, payload(), feat(memory, payload().blob))

    def test_full_graph_data_neuron_connects_to_all(self):
        memory, hive = make_memory(full_graph=True)
        memory.add_cue_neuron(hive, label="a")
        memory.add_cue_neuron(hive, label="b")
        memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        before_neurons = len(memory.neurons)
        before = memory.edge_count()
        memory.add_data_neuron(hive, 1, payload(60), feat(memory, payload(60).blob))
        # the new data neuron joins everything, and so does the default cue
        # created alongside it in locality 1
        assert memory.edge_count() - before == before_neurons + (before_neurons + 1)


class TestAdjustments:
    def test_weight_decay_formula(self):
        memory, hive = make_memory()
        a = memory.add_cue_neuron(hive, label="x")
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        memory.associate(a, dn)
        memory.adjust_association(a, dn, -29.0)  # bring to 30
        assert memory.weight(a, dn) == 30.0
        assert memory.adjust_association(a, dn, 10.0) == 20.0

    def test_weight_clamp_floor(self):
        memory, hive = make_memory(epsilon=5.0)
        a = memory.add_cue_neuron(hive, label="x")
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        memory.associate(a, dn)            # at epsilon = 5
        assert memory.adjust_association(a, dn, 60.0) == 5.0

    def test_strengthen_by_negative_delta(self):
        memory, hive = make_memory()
        a = memory.add_cue_neuron(hive, label="x")
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        memory.associate(a, dn)
        memory.adjust_association(a, dn, -19.0)  # 1 -> 20
        assert memory.adjust_association(a, dn, -20.0) == 40.0

    def test_self_edge_rejected(self):
        memory, hive = make_memory()
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        with pytest.raises(ValueError):
            memory.adjust_association(dn, dn, 1.0)

    def test_symmetry_after_updates(self):
        memory, hive = make_memory()
        a = memory.add_cue_neuron(hive, label="x")
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        memory.associate(a, dn)
        memory.adjust_association(a, dn, -7.5)
        assert memory.weight(a, dn) == memory.weight(dn, a)

    def test_strength_decay_and_recompression(self):
        memory, hive = make_memory()
        dn = memory.add_data_neuron(hive, 0, payload(1000),
                                    feat(memory, payload(1000).blob))
        assert memory.adjust_strength(dn, 0.5) == 99.5
        neuron = memory.data_neuron(dn)
        assert neuron.payload.quality == 99.5
        assert neuron.size_bytes == 995

    def test_strength_clamp_floor(self):
        memory, hive = make_memory()
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        memory.adjust_strength(dn, 98.8)   # 100 -> 1.2
        assert memory.data_neuron(dn).strength == pytest.approx(1.2)
        assert memory.adjust_strength(dn, 10.0) == 1.0

    def test_restore_does_not_resurrect_quality(self):
        memory, hive = make_memory()
        dn = memory.add_data_neuron(hive, 0, payload(1000),
                                    feat(memory, payload(1000).blob))
        memory.adjust_strength(dn, 20.0)
        assert memory.adjust_strength(dn, -100.0) == 100.0
        neuron = memory.data_neuron(dn)
        assert neuron.strength == 100.0
        assert neuron.payload.quality == 80.0
        assert neuron.size_bytes == 800


class TestStateUpdate:
    def test_identity_delta(self):
        _, state = self._two_neuron_state()
        updated = apply_state_update(state, np.zeros_like(state.A),
                                     np.zeros_like(state.M))
        assert np.array_equal(updated.A, state.A)
        assert np.array_equal(updated.M, state.M)

    def test_single_edge_decay(self):
        memory, state = self._two_neuron_state(weight=10.0)
        delta = np.zeros_like(state.A)
        delta[0, 1] = delta[1, 0] = 4.0
        updated = apply_state_update(state, delta, np.zeros_like(state.M))
        assert updated.A[0, 1] == 6.0
        assert updated.A[1, 0] == 6.0

    def test_strength_vector_clamps(self):
        memory, state = self._two_dn_state(strengths=(100.0, 2.0))
        updated = apply_state_update(state, np.zeros_like(state.A),
                                     np.array([0.5, 5.0]))
        assert list(updated.M) == [99.5, 1.0]

    def test_dimension_mismatch_rejected(self):
        _, state = self._two_neuron_state()
        with pytest.raises(ValueError):
            apply_state_update(state, np.zeros((1, 1)), np.zeros_like(state.M))
        with pytest.raises(ValueError):
            apply_state_update(state, np.zeros_like(state.A), np.zeros(5))

    def test_delta_on_missing_association_rejected(self):
        memory, hive = make_memory()
        memory.add_cue_neuron(hive, label="x")
        memory.add_cue_neuron(hive, label="y")
        state = memory.snapshot()
        delta = np.zeros_like(state.A)
        delta[0, 1] = delta[1, 0] = 1.0
        with pytest.raises(ValueError):
            apply_state_update(state, delta, np.zeros_like(state.M))

    @given(weight=st.floats(1.0, 100.0), d1=st.floats(0.0, 120.0),
           d2=st.floats(0.0, 120.0))
    @settings(max_examples=80, deadline=None)
    def test_monotone_larger_decay_never_larger_weight(self, weight, d1, d2):
        lo, hi = min(d1, d2), max(d1, d2)
        assert clamp_weight(1.0, weight, hi) <= clamp_weight(1.0, weight, lo)

    @given(strength=st.floats(1.0, 100.0), delta=st.floats(-200.0, 200.0))
    @settings(max_examples=80, deadline=None)
    def test_strength_always_in_bounds(self, strength, delta):
        assert 1.0 <= clamp_strength(1.0, strength, delta) <= 100.0

    def _two_neuron_state(self, weight: float | None = None):
        memory, hive = make_memory()
        a = memory.add_cue_neuron(hive, label="x")
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        memory.associate(a, dn)
        if weight is not None:
            memory.adjust_association(a, dn, -(weight - 1.0))
        state = memory.snapshot()
        # keep only the cue/data pair for a clean 2x2 matrix? snapshot covers
        # all neurons (incl. the default cue); deltas target the (a, dn) cell
        return memory, state

    def _two_dn_state(self, strengths):
        memory, hive = make_memory()
        d1 = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        d2 = memory.add_data_neuron(hive, 0, payload(60), feat(memory, payload(60).blob))
        for dn, s in zip((d1, d2), strengths):
            memory.adjust_strength(dn, 100.0 - s)
        return memory, memory.snapshot()


class TestSnapshots:
    def test_snapshot_isolated_from_later_mutation(self):
        memory, hive = make_memory()
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        snap = memory.snapshot()
        memory.adjust_strength(dn, 40.0)
        assert snap.M[0] == 100.0
        assert memory.snapshot().M[0] == 60.0

    def test_empty_memory_snapshot(self):
        memory, _ = make_memory()
        snap = memory.snapshot()
        assert snap.A.shape == (0, 0)
        assert snap.M.shape == (0,)

    def test_serialization_deterministic(self):
        memory, hive = make_memory()
        memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        assert memory.snapshot().serialize() == memory.snapshot().serialize()


class TestStateUpdateIndexing:
    def test_edge_cell_indices_follow_sorted_neuron_ids(self):
        memory, hive = make_memory()
        a = memory.add_cue_neuron(hive, label="x")
        dn = memory.add_data_neuron(hive, 0, payload(), feat(memory, payload().blob))
        memory.associate(a, dn)
        state = memory.snapshot()
        i, j = state.neuron_ids.index(a), state.neuron_ids.index(dn)
        assert state.A[i, j] == hive.params.epsilon


class TestExports:
    def test_walkthrough_initial_state_layout(self):
        engine, _, _, ids = build_walkthrough()
        doc = parse_snapshot(engine.memory.export_graph("snapshot"))
        data = [n for n in doc.neurons if n["kind"] == "data"]
        cues = [n for n in doc.neurons if n["kind"] == "cue"]
        defaults = [n for n in cues if n["default"] == "1"]
        assert len(data) == 3
        assert sum(n["locality"] == "0" for n in data) == 2
        assert sum(n["locality"] == "1" for n in data) == 1
        assert len(defaults) == 2
        assert [n["label"] for n in cues if n["default"] == "0"] == ["wolf"]
        assert all(e["weight"] == "1" for e in doc.edges)

    def test_empty_memory_export_is_header_only(self):
        memory, _ = make_memory()
        text = memory.export_graph("snapshot")
        lines = text.strip().splitlines()
        assert lines[0].startswith("neuralstore-snapshot 1")
        # hive/locality description only, no neurons/edges/orders
        assert all(ln.split()[0] in ("hive", "locality") for ln in lines[1:])

    def test_export_deterministic(self):
        engine, _, _, _ = build_walkthrough()
        memory = engine.memory
        assert memory.export_graph("snapshot") == memory.export_graph("snapshot")
        assert memory.export_graph("dot") == memory.export_graph("dot")

    def test_unknown_format_rejected(self):
        memory, _ = make_memory()
        with pytest.raises(ValueError):
            memory.export_graph("yaml")

    def test_snapshot_parse_round_trip(self):
        engine, _, _, _ = build_walkthrough()
        text = engine.memory.export_graph("snapshot")
        doc = parse_snapshot(text)
        assert doc.version == 1
        assert len(doc.neurons) == len(engine.memory.neurons)
        assert len(doc.edges) == engine.memory.edge_count()
        assert doc.orders  # search orders present after bootstrap

    def test_version_mismatch_rejected(self):
        with pytest.raises(SnapshotFormatError):
            parse_snapshot("neuralstore-snapshot 99\n")
        with pytest.raises(SnapshotFormatError):
            parse_snapshot("something else\n")
        with pytest.raises(SnapshotFormatError):
            parse_snapshot("")


class TestMultipleHives:
    def test_duplicate_modality_rejected(self):
        memory, _ = make_memory()
        with pytest.raises(ConfigurationError):
            memory.add_hive("blob", HiveParams())

    def test_hives_must_agree_on_graph_mode(self):
        memory, _ = make_memory()
        with pytest.raises(ConfigurationError):
            memory.add_hive("audio", HiveParams(epsilon=3.0))
        with pytest.raises(ConfigurationError):
            memory.add_hive("audio", HiveParams(full_graph=True))
        audio = memory.add_hive("audio", HiveParams())
        assert audio.modality == "audio"


class TestSizeMonotonicity:
    @given(deltas=st.lists(st.floats(-120.0, 120.0), min_size=1, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_stored_size_never_rises_under_strength_cycles(self, deltas):
        # restoration raises strength but never resurrects lost bytes; only a
        # merge refresh may replace the payload with a larger copy
        memory, hive = make_memory()
        dn = memory.add_data_neuron(hive, 0, payload(1000),
                                    feat(memory, payload(1000).blob))
        last_size = memory.data_neuron(dn).size_bytes
        for delta in deltas:
            memory.adjust_strength(dn, delta)
            size = memory.data_neuron(dn).size_bytes
            assert size <= last_size
            assert size <= memory.data_neuron(dn).payload.original_size
            last_size = size
