"""Compile binary-net weights into switched-capacitor neuron configs.

Each neuron becomes two capacitor trees sharing a membrane node pair:
positive weights land on the plus tree, negative weights on the minus
tree, with capacitance proportional to weight magnitude scaled so the
smallest nonzero weight gets c_min.  The activation threshold tau is
folded into the minus-side bias capacitor, so the comparator decision
v+ > v- reproduces sum(w*x) > tau by charge redistribution alone.

Sizing rules:
  * both membrane denominators are equalized (bit-exact, via ballast
    trimming) so the divider ratios of the two sides are comparable;
  * bias capacitors lift the no-input membrane level to the bottom of
    the swing window;
  * ballast plus a parasitic allowance fills the denominator up to a
    level that pins the full-activity membrane peak inside the swing
    window [swing_lo, swing_hi] when driven at v_max.

The parasitic allowance models wiring capacitance the layout absorbs
into the required ground capacitance; it is carried as its own field
because it is immune to intentional-capacitor mismatch.

Capacitance unit throughout: femtofarad.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bnn import BinaryNet
from .errors import ConfigError, DataError, MappingError, ShapeError

CHIP_FORMAT = "acnn-chip"
CHIP_VERSION = 1


@dataclass
class MapSpec:
    """Mapping constants.

    v_max is the power-clock peak the sizing assumes, c_min the
    capacitance given to the smallest nonzero weight, [swing_lo,
    swing_hi] the allowed membrane window, unit_cap the layout unit
    capacitor, parasitic_fraction the share of the required ground
    capacitance attributed to parasitics, and headroom the safety
    factor on the bias sizing.
    """

    v_max: float = 1.5
    c_min: float = 8.0
    swing_lo: float = 0.1
    swing_hi: float = 1.0
    unit_cap: float = 2.0
    parasitic_fraction: float = 0.08
    headroom: float = 1.2

    def validate(self) -> None:
        if self.c_min <= 0:
            raise ConfigError("c_min must be positive")
        if not 0 < self.swing_lo < self.swing_hi < self.v_max:
            raise ConfigError("need 0 < swing_lo < swing_hi < v_max")
        if self.unit_cap <= 0:
            raise ConfigError("unit_cap must be positive")
        if not 0 <= self.parasitic_fraction < 1:
            raise ConfigError("parasitic_fraction must be in [0, 1)")
        if self.headroom <= 1:
            raise ConfigError("headroom must exceed 1")


@dataclass
class ComparatorModel:
    """Threshold-logic comparator nonidealities.

    offset_sigma: per-instance input-referred offset spread (volts),
    drawn once per fabricated comparator.  noise_sigma: per-decision
    noise (volts).  The comparator strobes at the power-clock peak.
    """

    offset_sigma: float = 0.005
    noise_sigma: float = 0.003
    sample_phase: str = "pc_peak"

    def validate(self) -> None:
        if self.offset_sigma < 0 or self.noise_sigma < 0:
            raise ConfigError("comparator sigmas must be nonnegative")


@dataclass
class AcnConfig:
    """One compiled neuron: capacitor trees and node makeup.

    Trees hold (input_index, capacitance) pairs for nonzero weights
    only.  bias/ballast/parasitic are per-side single capacitors.
    """

    n_inputs: int
    pos_tree: list
    neg_tree: list
    bias_pos: float
    bias_neg: float
    ballast_pos: float
    ballast_neg: float
    parasitic_pos: float
    parasitic_neg: float
    unit_cap: float = 2.0

    def cap_vector(self, side: str) -> np.ndarray:
        tree = self.pos_tree if side == "pos" else self.neg_tree
        v = np.zeros(self.n_inputs)
        for idx, c in tree:
            v[idx] = c
        return v

    def tree_sum(self, side: str) -> float:
        tree = self.pos_tree if side == "pos" else self.neg_tree
        return math.fsum(c for _, c in tree)

    def side_parts(self, side: str) -> list:
        if side == "pos":
            return [c for _, c in self.pos_tree] + [
                self.bias_pos, self.ballast_pos, self.parasitic_pos
            ]
        return [c for _, c in self.neg_tree] + [
            self.bias_neg, self.ballast_neg, self.parasitic_neg
        ]

    def denominator(self, side: str) -> float:
        return math.fsum(self.side_parts(side))

    def all_caps(self) -> list:
        """Canonical (name, index, value) order for mismatch draws and
        unit quantization.  Parasitics come last."""
        out = [("syn_pos", i, c) for i, c in self.pos_tree]
        out += [("syn_neg", i, c) for i, c in self.neg_tree]
        out += [
            ("bias_pos", -1, self.bias_pos),
            ("bias_neg", -1, self.bias_neg),
            ("ballast_pos", -1, self.ballast_pos),
            ("ballast_neg", -1, self.ballast_neg),
            ("parasitic_pos", -1, self.parasitic_pos),
            ("parasitic_neg", -1, self.parasitic_neg),
        ]
        return out

    def swing_range(self, v_max: float) -> tuple:
        """(lowest, highest) membrane peak over all input patterns."""
        lo = min(
            v_max * self.bias_pos / self.denominator("pos"),
            v_max * self.bias_neg / self.denominator("neg"),
        )
        hi = max(
            v_max * (self.tree_sum("pos") + self.bias_pos) / self.denominator("pos"),
            v_max * (self.tree_sum("neg") + self.bias_neg) / self.denominator("neg"),
        )
        return lo, hi


def map_neuron(weights, tau: float, spec: MapSpec | None = None) -> AcnConfig:
    """Map one weight vector plus threshold onto capacitor trees.

    The construction is scale invariant: weights and tau may be
    multiplied by any positive factor without changing the config.
    Raises MappingError for an all-zero weight vector, which has no
    smallest magnitude to anchor the capacitance scale.
    """
    spec = spec or MapSpec()
    spec.validate()
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ShapeError("weight vector", "(n_in,)", w.shape)
    if not np.all(np.isfinite(w)) or not np.isfinite(tau):
        raise MappingError("weights and tau must be finite")
    if tau < 0:
        raise MappingError("tau must be nonnegative")
    nz = np.abs(w[w != 0])
    if nz.size == 0:
        raise MappingError("all-zero weight vector is unmappable")

    k = spec.c_min / float(nz.min())
    pos_tree = [(int(i), k * float(w[i])) for i in np.flatnonzero(w > 0)]
    neg_tree = [(int(i), k * float(-w[i])) for i in np.flatnonzero(w < 0)]
    s_pos = math.fsum(c for _, c in pos_tree)
    s_neg = math.fsum(c for _, c in neg_tree)

    k_tau = k * tau
    bias_activity = max(s_pos, s_neg + k_tau)
    b = spec.headroom * bias_activity * spec.swing_lo / (spec.swing_hi - spec.swing_lo)
    bias_pos = b
    bias_neg = b + k_tau

    d_lo = spec.v_max * max(s_pos + bias_pos, s_neg + bias_neg) / spec.swing_hi
    d_hi = spec.v_max * min(bias_pos, bias_neg) / spec.swing_lo
    if not d_lo < d_hi:
        raise MappingError(
            "no feasible membrane denominator; swing window too tight"
        )
    d = 0.5 * (d_lo + d_hi)

    def ground_split(s, bias):
        required = d - s - bias
        parasitic = spec.parasitic_fraction * required
        return required - parasitic, parasitic

    ballast_pos, parasitic_pos = ground_split(s_pos, bias_pos)
    ballast_neg, parasitic_neg = ground_split(s_neg, bias_neg)

    cfg = AcnConfig(
        n_inputs=int(w.size),
        pos_tree=pos_tree,
        neg_tree=neg_tree,
        bias_pos=bias_pos,
        bias_neg=bias_neg,
        ballast_pos=ballast_pos,
        ballast_neg=ballast_neg,
        parasitic_pos=parasitic_pos,
        parasitic_neg=parasitic_neg,
        unit_cap=spec.unit_cap,
    )
    return _trim_denominators(cfg)


def _trim_denominators(cfg: AcnConfig) -> AcnConfig:
    """Nudge the minus-side ballast by ulps until both membrane
    denominators are the same float.  Keeps exact software/hardware
    agreement on decision ties."""
    for _ in range(16):
        delta = cfg.denominator("pos") - cfg.denominator("neg")
        if delta == 0.0:
            break
        cfg = replace(cfg, ballast_neg=cfg.ballast_neg + delta)
    return cfg


def _round_to_unit(value: float, unit: float) -> float:
    # ties away from zero; capacitances are nonnegative
    return math.floor(value / unit + 0.5) * unit


@dataclass
class CapQuantReport:
    """Unit-grid rounding outcome for one neuron."""

    entries: list  # (name, index, before, after) tuples
    mean_abs_error: float
    max_abs_error: float

    @property
    def n_caps(self) -> int:
        return len(self.entries)


def quantize_caps(cfg: AcnConfig, unit_cap: float | None = None) -> tuple:
    """Snap every capacitance in the config onto the unit-cap grid.

    Rounds to the nearest multiple with ties away from zero, e.g. a 13
    fF cap on a 2 fF grid becomes 14 fF (error +1.0).  Idempotent.
    Returns (quantized config, CapQuantReport).
    """
    unit = cfg.unit_cap if unit_cap is None else unit_cap
    if unit <= 0:
        raise ConfigError("unit_cap must be positive")

    entries = []

    def snap(name, idx, v):
        q = _round_to_unit(v, unit)
        entries.append((name, idx, v, q))
        return q

    q_pos = [(i, snap("syn_pos", i, c)) for i, c in cfg.pos_tree]
    q_neg = [(i, snap("syn_neg", i, c)) for i, c in cfg.neg_tree]
    out = AcnConfig(
        n_inputs=cfg.n_inputs,
        pos_tree=q_pos,
        neg_tree=q_neg,
        bias_pos=snap("bias_pos", -1, cfg.bias_pos),
        bias_neg=snap("bias_neg", -1, cfg.bias_neg),
        ballast_pos=snap("ballast_pos", -1, cfg.ballast_pos),
        ballast_neg=snap("ballast_neg", -1, cfg.ballast_neg),
        parasitic_pos=snap("parasitic_pos", -1, cfg.parasitic_pos),
        parasitic_neg=snap("parasitic_neg", -1, cfg.parasitic_neg),
        unit_cap=unit,
    )
    errors = [abs(after - before) for _, _, before, after in entries]
    report = CapQuantReport(
        entries=entries,
        mean_abs_error=float(np.mean(errors)),
        max_abs_error=float(np.max(errors)),
    )
    return out, report


@dataclass
class ChipModel:
    """A full compiled chip: per-layer neuron configs plus the physical
    realization parameters used by the simulator."""

    layers: list
    spec: MapSpec = field(default_factory=MapSpec)
    comparator: ComparatorModel = field(default_factory=ComparatorModel)
    mismatch_sigma: float = 0.01
    chip_seed: int = 0
    cap_quantized: bool = False

    def validate(self) -> None:
        self.spec.validate()
        self.comparator.validate()
        if self.mismatch_sigma < 0:
            raise ConfigError("mismatch_sigma must be nonnegative")
        if not self.layers or any(not l for l in self.layers):
            raise DataError("chip needs at least one nonempty layer")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def neuron(self, layer: int, idx: int) -> AcnConfig:
        return self.layers[layer][idx]

    def iter_neurons(self):
        for li, layer in enumerate(self.layers):
            for ni, cfg in enumerate(layer):
                yield li, ni, cfg


def compile_chip(net: BinaryNet, spec: MapSpec | None = None) -> ChipModel:
    """Compile every neuron of a layered net.

    Works for any layered net; with dead-zone quantized weights the
    synapse capacitances are guaranteed to land in
    [c_min, c_min * w_max/deadzone] (8..80 fF at the defaults).
    """
    spec = spec or MapSpec()
    net.validate()
    layers = []
    for li, layer in enumerate(net.layers):
        row = []
        for ni in range(layer.n_out):
            try:
                row.append(map_neuron(layer.weights[:, ni], net.tau, spec))
            except MappingError as e:
                raise MappingError(f"layer {li} neuron {ni}: {e}") from e
        layers.append(row)
    return ChipModel(layers=layers, spec=spec)


def quantize_chip(chip: ChipModel, unit_cap: float | None = None) -> tuple:
    """Unit-quantize every neuron.  Returns (chip, ChipQuantReport)."""
    layers = []
    reports = []
    for layer in chip.layers:
        row = []
        for cfg in layer:
            q, rep = quantize_caps(cfg, unit_cap)
            row.append(q)
            reports.append(rep)
        layers.append(row)
    all_err = [
        abs(after - before)
        for rep in reports
        for _, _, before, after in rep.entries
    ]
    report = ChipQuantReport(
        per_neuron=reports,
        mean_abs_error=float(np.mean(all_err)),
        max_abs_error=float(np.max(all_err)),
        n_caps=len(all_err),
    )
    return replace(chip, layers=layers, cap_quantized=True), report


@dataclass
class ChipQuantReport:
    per_neuron: list
    mean_abs_error: float
    max_abs_error: float
    n_caps: int


@dataclass
class CapStats:
    """Aggregate capacitance accounting for one chip."""

    n_neurons: int
    n_synapse_sites: int
    n_connected: int
    synapse_ff: float
    bias_ff: float
    ballast_ff: float
    parasitic_ff: float
    total_ff: float
    per_layer_ff: list
    mean_membrane_ff: float
    parasitic_fraction_effective: float

    @property
    def total_pf(self) -> float:
        return self.total_ff * 1e-3


def chip_stats(chip: ChipModel) -> CapStats:
    syn, bias, ball, par = [], [], [], []
    per_layer = []
    membranes = []
    sites = 0
    connected = 0
    n_neurons = 0
    for layer in chip.layers:
        layer_total = []
        for cfg in layer:
            n_neurons += 1
            sites += cfg.n_inputs
            connected += len(cfg.pos_tree) + len(cfg.neg_tree)
            syn += [c for _, c in cfg.pos_tree] + [c for _, c in cfg.neg_tree]
            bias += [cfg.bias_pos, cfg.bias_neg]
            ball += [cfg.ballast_pos, cfg.ballast_neg]
            par += [cfg.parasitic_pos, cfg.parasitic_neg]
            membranes += [cfg.denominator("pos"), cfg.denominator("neg")]
            layer_total.append(math.fsum(v for _, _, v in cfg.all_caps()))
        per_layer.append(math.fsum(layer_total))
    ground = math.fsum(ball) + math.fsum(par)
    return CapStats(
        n_neurons=n_neurons,
        n_synapse_sites=sites,
        n_connected=connected,
        synapse_ff=math.fsum(syn),
        bias_ff=math.fsum(bias),
        ballast_ff=math.fsum(ball),
        parasitic_ff=math.fsum(par),
        total_ff=math.fsum(per_layer),
        per_layer_ff=per_layer,
        mean_membrane_ff=float(np.mean(membranes)),
        parasitic_fraction_effective=math.fsum(par) / ground if ground else 0.0,
    )


def _spec_dict(spec: MapSpec) -> dict:
    return {
        "v_max": spec.v_max,
        "c_min": spec.c_min,
        "swing_lo": spec.swing_lo,
        "swing_hi": spec.swing_hi,
        "unit_cap": spec.unit_cap,
        "parasitic_fraction": spec.parasitic_fraction,
        "headroom": spec.headroom,
    }


def save_chip(chip: ChipModel, path) -> None:
    chip.validate()
    doc = {
        "format": CHIP_FORMAT,
        "version": CHIP_VERSION,
        "map_spec": _spec_dict(chip.spec),
        "comparator": {
            "offset_sigma": chip.comparator.offset_sigma,
            "noise_sigma": chip.comparator.noise_sigma,
            "sample_phase": chip.comparator.sample_phase,
        },
        "mismatch_sigma": chip.mismatch_sigma,
        "chip_seed": chip.chip_seed,
        "cap_quantized": chip.cap_quantized,
        "layers": [
            [
                {
                    "n_inputs": c.n_inputs,
                    "pos_tree": [[i, v] for i, v in c.pos_tree],
                    "neg_tree": [[i, v] for i, v in c.neg_tree],
                    "bias_pos": c.bias_pos,
                    "bias_neg": c.bias_neg,
                    "ballast_pos": c.ballast_pos,
                    "ballast_neg": c.ballast_neg,
                    "parasitic_pos": c.parasitic_pos,
                    "parasitic_neg": c.parasitic_neg,
                    "unit_cap": c.unit_cap,
                }
                for c in layer
            ]
            for layer in chip.layers
        ],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


_NEURON_FIELDS = (
    "n_inputs", "pos_tree", "neg_tree", "bias_pos", "bias_neg",
    "ballast_pos", "ballast_neg", "parasitic_pos", "parasitic_neg",
)


def load_chip(path) -> ChipModel:
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataError(f"chip file is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != CHIP_FORMAT:
        raise DataError("not a chip file")
    if doc.get("version") != CHIP_VERSION:
        raise DataError(f"unsupported chip format version {doc.get('version')!r}")
    layers = []
    for li, layer in enumerate(doc["layers"]):
        row = []
        for ni, nd in enumerate(layer):
            missing = [f for f in _NEURON_FIELDS if f not in nd]
            if missing:
                raise DataError(
                    f"layer {li} neuron {ni}: missing field {missing[0]!r}"
                )
            row.append(
                AcnConfig(
                    n_inputs=int(nd["n_inputs"]),
                    pos_tree=[(int(i), float(v)) for i, v in nd["pos_tree"]],
                    neg_tree=[(int(i), float(v)) for i, v in nd["neg_tree"]],
                    bias_pos=float(nd["bias_pos"]),
                    bias_neg=float(nd["bias_neg"]),
                    ballast_pos=float(nd["ballast_pos"]),
                    ballast_neg=float(nd["ballast_neg"]),
                    parasitic_pos=float(nd["parasitic_pos"]),
                    parasitic_neg=float(nd["parasitic_neg"]),
                    unit_cap=float(nd.get("unit_cap", 2.0)),
                )
            )
        layers.append(row)
    chip = ChipModel(
        layers=layers,
        spec=MapSpec(**doc["map_spec"]),
        comparator=ComparatorModel(**doc["comparator"]),
        mismatch_sigma=float(doc["mismatch_sigma"]),
        chip_seed=int(doc["chip_seed"]),
        cap_quantized=bool(doc["cap_quantized"]),
    )
    chip.validate()
    return chip
