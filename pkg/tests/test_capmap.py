import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acnn.bnn import BinaryNet, LayerSpec, QuantSpec
from acnn.capmap import (
    MapSpec,
    chip_stats,
    compile_chip,
    load_chip,
    map_neuron,
    quantize_caps,
    quantize_chip,
    save_chip,
)
from acnn.errors import ConfigError, DataError, MappingError, ShapeError

Q = QuantSpec()
SPEC = MapSpec()


def grid_weight(k, sign=1):
    return sign * (Q.deadzone + k * Q.step)


grid_vectors = st.lists(
    st.tuples(st.integers(0, 127), st.sampled_from([-1, 0, 0, 1])),
    min_size=1,
    max_size=20,
).filter(lambda items: any(s != 0 for _, s in items))


def _weights(items):
    return np.array([grid_weight(k, s) if s else 0.0 for k, s in items])


def test_min_cap_is_c_min():
    w = np.array([0.1, -0.55, 1.0])
    cfg = map_neuron(w, 0.1)
    caps = {i: c for i, c in cfg.pos_tree}
    caps.update({i: c for i, c in cfg.neg_tree})
    assert min(caps.values()) == pytest.approx(SPEC.c_min)
    # proportional to weight magnitude
    assert caps[1] / caps[0] == pytest.approx(5.5)
    assert caps[2] / caps[0] == pytest.approx(10.0)


def test_sign_split():
    w = np.array([0.2, -0.3, 0.0, 0.4])
    cfg = map_neuron(w, 0.1)
    assert [i for i, _ in cfg.pos_tree] == [0, 3]
    assert [i for i, _ in cfg.neg_tree] == [1]
    assert cfg.n_inputs == 4


def test_tau_lands_in_minus_bias():
    w = np.array([0.5, -0.5])
    tau = 0.1
    cfg = map_neuron(w, tau)
    k = SPEC.c_min / 0.5
    assert cfg.bias_neg - cfg.bias_pos == pytest.approx(k * tau, rel=1e-12)


def test_zero_tau_gives_symmetric_bias():
    cfg = map_neuron(np.array([0.5, -0.5]), 0.0)
    assert cfg.bias_pos == cfg.bias_neg


def test_denominators_equal_bitwise():
    w = np.array([0.1, 0.37, -0.82, 1.0, -0.1])
    cfg = map_neuron(w, 0.1)
    assert cfg.denominator("pos") == cfg.denominator("neg")


def test_mapping_errors():
    with pytest.raises(MappingError):
        map_neuron(np.zeros(4), 0.1)
    with pytest.raises(MappingError):
        map_neuron(np.array([0.5, np.nan]), 0.1)
    with pytest.raises(MappingError):
        map_neuron(np.array([0.5]), -0.2)
    with pytest.raises(ShapeError):
        map_neuron(np.zeros((2, 2)), 0.1)
    with pytest.raises(ShapeError):
        map_neuron(np.array([]), 0.1)


def test_spec_validation():
    with pytest.raises(ConfigError):
        MapSpec(swing_lo=0.5, swing_hi=0.4).validate()
    with pytest.raises(ConfigError):
        MapSpec(c_min=0).validate()
    with pytest.raises(ConfigError):
        MapSpec(headroom=1.0).validate()
    with pytest.raises(ConfigError):
        MapSpec(parasitic_fraction=1.0).validate()


@settings(max_examples=60, deadline=None)
@given(items=grid_vectors, tau_on=st.booleans())
def test_map_invariants_on_grid_weights(items, tau_on):
    w = _weights(items)
    tau = 0.1 if tau_on else 0.0
    cfg = map_neuron(w, tau)
    dp, dn = cfg.denominator("pos"), cfg.denominator("neg")
    assert dp == dn
    # every drawn capacitance is positive and the smallest synapse is c_min
    syn = [c for _, c in cfg.pos_tree + cfg.neg_tree]
    assert min(syn) == pytest.approx(SPEC.c_min)
    assert cfg.ballast_pos > 0 and cfg.ballast_neg > 0
    assert cfg.bias_pos > 0 and cfg.bias_neg > 0
    # membrane peaks stay inside the swing window at v_max
    lo, hi = cfg.swing_range(SPEC.v_max)
    assert lo >= SPEC.swing_lo - 1e-9
    assert hi <= SPEC.swing_hi + 1e-9
    # parasitic share of the ground allowance
    ground_pos = cfg.ballast_pos + cfg.parasitic_pos
    assert cfg.parasitic_pos == pytest.approx(
        SPEC.parasitic_fraction * ground_pos
    )


@settings(max_examples=60, deadline=None)
@given(items=grid_vectors, scale=st.floats(0.25, 4.0))
def test_map_scale_invariance(items, scale):
    w = _weights(items)
    a = map_neuron(w, 0.1)
    b = map_neuron(w * scale, 0.1 * scale)
    for side in ("pos", "neg"):
        np.testing.assert_allclose(
            a.cap_vector(side), b.cap_vector(side), rtol=1e-9, atol=0
        )
    assert a.bias_neg == pytest.approx(b.bias_neg, rel=1e-9)


def test_quantize_caps_rounds_to_unit():
    cfg = map_neuron(np.array([0.1, -0.55, 1.0]), 0.1)
    qcfg, rep = quantize_caps(cfg)
    for name, idx, c in qcfg.all_caps():
        if c:
            assert c / cfg.unit_cap == pytest.approx(round(c / cfg.unit_cap))
    assert rep.max_abs_error <= cfg.unit_cap / 2 + 1e-12
    assert rep.n_caps == len(cfg.all_caps())
    # idempotent
    q2, rep2 = quantize_caps(qcfg)
    assert rep2.max_abs_error == 0.0
    assert q2 == qcfg


def test_round_ties_away_from_zero():
    cfg = map_neuron(np.array([0.1, -0.55, 1.0]), 0.1)
    # 13 fF on a 2 fF grid sits exactly between 12 and 14; goes up
    from acnn.capmap import _round_to_unit

    assert _round_to_unit(13.0, 2.0) == 14.0
    assert _round_to_unit(12.9, 2.0) == 12.0
    assert _round_to_unit(0.9, 2.0) == 0.0


def test_compile_chip_structure(qnet, exact_chip):
    assert len(exact_chip.layers) == 2
    assert len(exact_chip.layers[0]) == 12
    assert len(exact_chip.layers[1]) == 4
    stats = chip_stats(exact_chip)
    assert stats.n_neurons == 16
    assert stats.n_synapse_sites == 816
    assert stats.n_connected <= 816
    assert stats.parasitic_fraction_effective == pytest.approx(0.08, abs=1e-6)
    # a full chip lands in the tens of picofarads
    assert 20 < stats.total_pf < 120


def test_compile_rejects_unmappable_layer():
    w1 = np.zeros((4, 2))
    w1[:, 1] = 0.5
    net = BinaryNet(
        layers=[LayerSpec(w1, "heaviside")], tau=0.1
    )
    with pytest.raises(MappingError, match="layer 0 neuron 0"):
        compile_chip(net)


def test_quantize_chip_marks_flag(exact_chip):
    qchip, rep = quantize_chip(exact_chip)
    assert qchip.cap_quantized
    assert not exact_chip.cap_quantized
    assert rep.n_caps > 800
    assert 0.0 < rep.mean_abs_error <= 1.0


def test_save_load_roundtrip(tmp_path, chip):
    path = tmp_path / "chip.json"
    save_chip(chip, path)
    back = load_chip(path)
    assert back.mismatch_sigma == chip.mismatch_sigma
    assert back.chip_seed == chip.chip_seed
    assert back.cap_quantized == chip.cap_quantized
    assert len(back.layers) == len(chip.layers)
    for la, lb in zip(chip.layers, back.layers):
        for ca, cb in zip(la, lb):
            assert ca == cb


def test_load_rejects_missing_field(tmp_path, chip):
    path = tmp_path / "chip.json"
    save_chip(chip, path)
    doc = json.loads(path.read_text())
    del doc["layers"][0][3]["bias_neg"]
    path.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="neuron"):
        load_chip(path)


def test_load_rejects_wrong_format(tmp_path):
    path = tmp_path / "chip.json"
    path.write_text('{"format": "nope", "version": 1}')
    with pytest.raises(DataError):
        load_chip(path)
