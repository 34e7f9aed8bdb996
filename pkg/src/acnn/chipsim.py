"""Behavioral simulation of a compiled capacitive neural network chip.

The power clock drives every synapse tree whose input bit is high; at
the clock peak each membrane sits at v_peak * (active caps + bias) /
(total node capacitance), a pure capacitive divider.  A comparator per
neuron strobes v+ against v- at the peak, producing the output bit that
the routing latch feeds to the next layer one clock later.

Nonidealities modeled:
  * per-capacitor fabrication mismatch, multiplicative Gaussian with
    sigma shrinking as sqrt(C/unit_cap) (larger caps average out better);
    parasitics are excluded since they are not drawn devices;
  * per-comparator input offset, drawn once per chip seed;
  * per-decision comparator noise, drawn per operation.

All random draws are keyed: mismatch and offsets by (chip_seed, tag,
layer, neuron), operation noise by (op_seed, iteration).  Rerunning
with the same seeds reproduces results bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .arrows import split_arrays
from .bnn import TIE_REL
from .capmap import ChipModel
from .errors import ConfigError, ShapeError

_TAG_MISMATCH = 0
_TAG_OFFSET = 1

LATENCY_CYCLES_PER_LAYER = 1


@dataclass
class RealizedLayer:
    cpos: np.ndarray  # (n_neurons, n_in) synapse caps, zeros where absent
    cneg: np.ndarray
    bias_pos: np.ndarray  # (n_neurons,)
    bias_neg: np.ndarray
    den_pos: np.ndarray
    den_neg: np.ndarray
    offset: np.ndarray  # comparator offsets, volts

    @property
    def n_neurons(self) -> int:
        return self.cpos.shape[0]

    @property
    def n_in(self) -> int:
        return self.cpos.shape[1]


@dataclass
class RealizedChip:
    layers: list
    noise_sigma: float
    source: ChipModel


def _neuron_rng(chip_seed: int, tag: int, layer: int, neuron: int):
    return np.random.default_rng([chip_seed, tag, layer, neuron])


def realize(chip: ChipModel, *, mismatch: bool = True, offsets: bool = True) -> RealizedChip:
    """Instantiate one physical copy of the chip.

    With mismatch and offsets disabled this is the ideal predicted
    chip: exact capacitances and a perfect comparator.
    """
    chip.validate()
    sigma = chip.mismatch_sigma if mismatch else 0.0
    layers = []
    for li, layer in enumerate(chip.layers):
        n = len(layer)
        n_in = layer[0].n_inputs
        cpos = np.zeros((n, n_in))
        cneg = np.zeros((n, n_in))
        bias = np.zeros((2, n))
        den = np.zeros((2, n))
        off = np.zeros(n)
        for ni, cfg in enumerate(layer):
            if cfg.n_inputs != n_in:
                raise ShapeError(
                    f"layer {li} neuron {ni} input count", n_in, cfg.n_inputs
                )
            rng = _neuron_rng(chip.chip_seed, _TAG_MISMATCH, li, ni)
            parts = {"pos": [], "neg": []}
            for name, idx, c in cfg.all_caps():
                if name.startswith("parasitic"):
                    v = c  # wiring capacitance, not a drawn device
                else:
                    rel = sigma / math.sqrt(max(c / cfg.unit_cap, 1.0)) if c > 0 else 0.0
                    factor = 1.0 + rel * rng.standard_normal()
                    v = c * max(factor, 0.1)
                side = 0 if name.endswith("pos") else 1
                parts["pos" if side == 0 else "neg"].append(v)
                if name == "syn_pos":
                    cpos[ni, idx] = v
                elif name == "syn_neg":
                    cneg[ni, idx] = v
                elif name == "bias_pos":
                    bias[0, ni] = v
                elif name == "bias_neg":
                    bias[1, ni] = v
            den[0, ni] = math.fsum(parts["pos"])
            den[1, ni] = math.fsum(parts["neg"])
            if offsets and chip.comparator.offset_sigma > 0:
                orng = _neuron_rng(chip.chip_seed, _TAG_OFFSET, li, ni)
                off[ni] = orng.normal(0.0, chip.comparator.offset_sigma)
        layers.append(
            RealizedLayer(
                cpos=cpos,
                cneg=cneg,
                bias_pos=bias[0],
                bias_neg=bias[1],
                den_pos=den[0],
                den_neg=den[1],
                offset=off,
            )
        )
    return RealizedChip(layers=layers, noise_sigma=chip.comparator.noise_sigma, source=chip)


@dataclass
class BatchTrace:
    """Peak-sampled node voltages and decisions for a batch of images."""

    vm_pos: list
    vm_neg: list
    comp_in: list  # v+ - v- + offset + noise, per layer
    bits: list
    num_pos: list  # active capacitance on the plus tree (fF), per layer
    num_neg: list
    classes: np.ndarray
    ambiguous: np.ndarray
    ties: list
    v_peak: float

    @property
    def n_layers(self) -> int:
        return len(self.bits)

    @property
    def latency_cycles(self) -> int:
        return self.n_layers * LATENCY_CYCLES_PER_LAYER


def classes_from_bits(out_bits: np.ndarray) -> tuple:
    """Hardware class rule: the one-hot index; zero or multiple hot
    bits fall back to the first hot bit (class 0 if none) and set the
    ambiguous flag.  Mirrors the software step-output rule."""
    hot = out_bits.sum(axis=1)
    classes = np.argmax(out_bits, axis=1).astype(np.int64)
    return classes, hot != 1


def simulate_batch(
    rchip: RealizedChip,
    x: np.ndarray,
    v_peak: float,
    noise_by_layer=None,
    eval_order=None,
) -> BatchTrace:
    """Run a batch through the realized chip at a given clock peak.

    noise_by_layer supplies per-decision comparator noise arrays of
    shape (n_samples, n_neurons); None means noiseless.  eval_order
    optionally evaluates each layer's neurons in a permuted order;
    results are independent of it because neurons share nothing but
    their latched inputs.

    Comparator differences within TIE_REL of the bias gap count as
    ties and read as bit 0, matching the software tie rule.  Real
    margins on a compiled chip are at least one weight-grid step
    (~50 uV at full swing), many orders above the guard.
    """
    if v_peak <= 0:
        raise ConfigError("v_peak must be positive")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != rchip.layers[0].n_in:
        raise ShapeError("input batch", (None, rchip.layers[0].n_in), x.shape)
    n = x.shape[0]
    vm_pos, vm_neg, comp_in, bits, ties = [], [], [], [], []
    num_pos_l, num_neg_l = [], []
    h = x
    for li, layer in enumerate(rchip.layers):
        order = None
        if eval_order is not None and eval_order[li] is not None:
            order = np.asarray(eval_order[li])
            if sorted(order.tolist()) != list(range(layer.n_neurons)):
                raise ConfigError(f"eval_order[{li}] is not a permutation")
        noise = None if noise_by_layer is None else noise_by_layer[li]

        def solve(cp, cn, bp, bn, dp, dn, offs, nz):
            npos = h @ cp.T + bp
            nneg = h @ cn.T + bn
            vp = v_peak * npos / dp
            vn = v_peak * nneg / dn
            if np.array_equal(dp, dn):
                # Both trees share the denominator (true for an exact
                # compile, where ballast trimming equalizes them), so
                # the comparator difference factors through a single
                # signed numerator.  Subtracting two ~1000 fF node sums
                # loses ~13 digits right where decisions are close;
                # the factored form keeps tie margins exact.  The sign
                # trees are disjoint, so cp - cn is exact per element.
                diff = (h @ (cp - cn).T + (bp - bn)) * (v_peak / dp)
                guard = TIE_REL * np.abs(bp - bn) * (v_peak / dp)
            else:
                diff = vp - vn
                guard = np.zeros_like(dp)
            ci = diff + offs
            if nz is not None:
                ci = ci + nz
            return npos, nneg, vp, vn, ci, guard

        if order is None:
            npos, nneg, vp, vn, ci, guard = solve(
                layer.cpos, layer.cneg, layer.bias_pos, layer.bias_neg,
                layer.den_pos, layer.den_neg, layer.offset, noise,
            )
        else:
            inv = np.empty_like(order)
            inv[order] = np.arange(order.size)
            npos, nneg, vp, vn, ci, guard = solve(
                np.ascontiguousarray(layer.cpos[order]),
                np.ascontiguousarray(layer.cneg[order]),
                layer.bias_pos[order], layer.bias_neg[order],
                layer.den_pos[order], layer.den_neg[order],
                layer.offset[order],
                None if noise is None else noise[:, order],
            )
            npos, nneg = npos[:, inv], nneg[:, inv]
            vp, vn, ci, guard = vp[:, inv], vn[:, inv], ci[:, inv], guard[inv]

        b = (ci > guard).astype(np.float64)
        vm_pos.append(vp)
        vm_neg.append(vn)
        comp_in.append(ci)
        bits.append(b.astype(np.uint8))
        ties.append(np.abs(ci) <= guard)
        num_pos_l.append(npos)
        num_neg_l.append(nneg)
        h = b
    classes, ambiguous = classes_from_bits(bits[-1])
    return BatchTrace(
        vm_pos=vm_pos,
        vm_neg=vm_neg,
        comp_in=comp_in,
        bits=bits,
        num_pos=num_pos_l,
        num_neg=num_neg_l,
        classes=classes,
        ambiguous=ambiguous,
        ties=ties,
        v_peak=v_peak,
    )


def _draw_noise(rchip: RealizedChip, n: int, rng) -> list:
    if rng is None or rchip.noise_sigma == 0:
        return None
    return [
        rng.normal(0.0, rchip.noise_sigma, size=(n, layer.n_neurons))
        for layer in rchip.layers
    ]


@dataclass
class OpTrace:
    """Single-operation trace with per-layer node voltages."""

    vm_pos: list
    vm_neg: list
    bits: list
    comp_in: list
    ties: list
    class_index: int
    ambiguous: bool
    v_peak: float
    latency_cycles: int

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["layer", "neuron", "vm_pos_v", "vm_neg_v", "bit"])
            for li in range(len(self.bits)):
                for ni in range(len(self.bits[li])):
                    w.writerow([
                        li, ni,
                        repr(float(self.vm_pos[li][ni])),
                        repr(float(self.vm_neg[li][ni])),
                        int(self.bits[li][ni]),
                    ])


def simulate_op(
    chip: ChipModel,
    pixels,
    v_peak: float | None = None,
    *,
    op_seed: int | None = None,
    mismatch: bool = True,
    noise: bool = True,
    eval_order=None,
) -> OpTrace:
    """Simulate one classification operation on one image."""
    v_peak = chip.spec.v_max if v_peak is None else v_peak
    rchip = realize(chip, mismatch=mismatch, offsets=mismatch)
    x = np.asarray(pixels, dtype=np.float64).reshape(1, -1)
    rng = None
    if noise and op_seed is not None and rchip.noise_sigma > 0:
        rng = np.random.default_rng([op_seed, 0])
    tr = simulate_batch(rchip, x, v_peak, _draw_noise(rchip, 1, rng), eval_order)
    return OpTrace(
        vm_pos=[v[0] for v in tr.vm_pos],
        vm_neg=[v[0] for v in tr.vm_neg],
        bits=[b[0] for b in tr.bits],
        comp_in=[c[0] for c in tr.comp_in],
        ties=[t[0] for t in tr.ties],
        class_index=int(tr.classes[0]),
        ambiguous=bool(tr.ambiguous[0]),
        v_peak=v_peak,
        latency_cycles=tr.latency_cycles,
    )


def ideal_bits(chip: ChipModel, x: np.ndarray) -> BatchTrace:
    """Noiseless mismatch-free run: the design-intent behavior."""
    rchip = realize(chip, mismatch=False, offsets=False)
    return simulate_batch(rchip, np.asarray(x, dtype=np.float64), chip.spec.v_max)


@dataclass
class RunStats:
    """Monte Carlo run summary over a split."""

    n_samples: int
    iterations: int
    v_peak: float
    software_accuracy: float
    predicted_accuracy: float
    accuracy_per_iter: list
    matching_per_iter: list
    always_matching_fraction: float
    bit_errors_by_layer: list  # per-neuron counts, summed over iterations
    total_bit_errors: int
    total_bit_decisions: int
    n_ambiguous: int
    n_ties: int
    predicted_absdiff_by_layer: list = field(repr=False, default=None)
    error_absdiff_by_layer: list = field(repr=False, default=None)
    mismatching_mask: np.ndarray = field(repr=False, default=None)
    last_trace: BatchTrace = field(repr=False, default=None)

    @property
    def hardware_accuracy(self) -> float:
        return float(np.mean(self.accuracy_per_iter))

    @property
    def hardware_accuracy_std(self) -> float:
        return float(np.std(self.accuracy_per_iter))

    @property
    def matching_mean(self) -> float:
        return float(np.mean(self.matching_per_iter))

    @property
    def matching_std(self) -> float:
        return float(np.std(self.matching_per_iter))

    def to_json_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "iterations": self.iterations,
            "v_peak": self.v_peak,
            "software_accuracy": self.software_accuracy,
            "predicted_accuracy": self.predicted_accuracy,
            "hardware_accuracy_mean": self.hardware_accuracy,
            "hardware_accuracy_std": self.hardware_accuracy_std,
            "matching_mean": self.matching_mean,
            "matching_std": self.matching_std,
            "accuracy_per_iter": [float(a) for a in self.accuracy_per_iter],
            "matching_per_iter": [float(m) for m in self.matching_per_iter],
            "always_matching_fraction": self.always_matching_fraction,
            "bit_errors_by_layer": [
                [int(c) for c in counts] for counts in self.bit_errors_by_layer
            ],
            "total_bit_errors": self.total_bit_errors,
            "total_bit_decisions": self.total_bit_decisions,
            "n_ambiguous": self.n_ambiguous,
            "n_ties": self.n_ties,
        }


def run_split(
    chip: ChipModel,
    images,
    *,
    v_peak: float | None = None,
    iterations: int = 1,
    op_seed: int = 0,
    reference=None,
    mismatch: bool = True,
    noise: bool = True,
    collect_traces: bool = True,
) -> RunStats:
    """Monte Carlo evaluation of one fabricated chip on an image list.

    images may be a DatasetSplit (its test list is used) or a list of
    Image64.  reference optionally supplies the software net whose
    classes define "matching"; otherwise the ideal chip prediction is
    the reference.  Bit errors are always counted against the ideal
    chip prediction, which is also where the predicted |delta v_m|
    margins come from.
    """
    if hasattr(images, "test"):
        images = images.test
    if iterations < 1:
        raise ConfigError("iterations must be positive")
    v_peak = chip.spec.v_max if v_peak is None else v_peak
    x, labels = split_arrays(images)
    n = len(labels)

    pred = ideal_bits(chip, x)
    predicted_accuracy = float(np.mean(pred.classes == labels))
    if reference is not None:
        from .bnn import classify

        soft_classes, _, _ = classify(reference, x)
    else:
        soft_classes = pred.classes
    software_accuracy = float(np.mean(soft_classes == labels))

    rchip = realize(chip, mismatch=mismatch, offsets=mismatch)
    accuracy_per_iter = []
    matching_per_iter = []
    always = np.ones(n, dtype=bool)
    bit_err_counts = [np.zeros(l.n_neurons, dtype=np.int64) for l in rchip.layers]
    err_absdiff = [[] for _ in rchip.layers]
    mismatching = np.zeros(n, dtype=bool)
    n_ambiguous = 0
    n_ties = 0
    total_err = 0
    tr = None
    for it in range(iterations):
        rng = np.random.default_rng([op_seed, it]) if noise else None
        tr = simulate_batch(rchip, x, v_peak, _draw_noise(rchip, n, rng))
        acc = float(np.mean(tr.classes == labels))
        match = tr.classes == soft_classes
        accuracy_per_iter.append(acc)
        matching_per_iter.append(float(np.mean(match)))
        always &= match
        mismatching |= ~match
        n_ambiguous += int(tr.ambiguous.sum())
        for li in range(len(rchip.layers)):
            err = tr.bits[li] != pred.bits[li]
            bit_err_counts[li] += err.sum(axis=0)
            total_err += int(err.sum())
            n_ties += int(tr.ties[li].sum())
            if collect_traces and err.any():
                err_absdiff[li].append(np.abs(pred.comp_in[li][err]))

    total_decisions = iterations * n * sum(l.n_neurons for l in rchip.layers)
    return RunStats(
        n_samples=n,
        iterations=iterations,
        v_peak=v_peak,
        software_accuracy=software_accuracy,
        predicted_accuracy=predicted_accuracy,
        accuracy_per_iter=accuracy_per_iter,
        matching_per_iter=matching_per_iter,
        always_matching_fraction=float(np.mean(always)),
        bit_errors_by_layer=bit_err_counts,
        total_bit_errors=total_err,
        total_bit_decisions=total_decisions,
        n_ambiguous=n_ambiguous,
        n_ties=n_ties,
        predicted_absdiff_by_layer=(
            [np.abs(c) for c in pred.comp_in] if collect_traces else None
        ),
        error_absdiff_by_layer=(
            [np.concatenate(e) if e else np.empty(0) for e in err_absdiff]
            if collect_traces
            else None
        ),
        mismatching_mask=mismatching,
        last_trace=tr if collect_traces else None,
    )


@dataclass
class DeltaVmReport:
    """Where decision margins sit and where the bit errors happen."""

    median_all_by_layer: list
    median_all: float
    median_errors: float
    frac_errors_below: float
    threshold: float
    n_errors: int
    hist_all: tuple  # (edges, counts)
    hist_errors: tuple
    min_margin_matching: np.ndarray
    min_margin_mismatching: np.ndarray


def delta_vm_analysis(run: RunStats, threshold: float = 0.030) -> DeltaVmReport:
    """Analyze predicted decision margins |v+ - v-| against observed
    hardware bit errors from a traced run_split result."""
    if run.predicted_absdiff_by_layer is None:
        raise ConfigError("run_split must be called with collect_traces=True")
    all_by_layer = [d.ravel() for d in run.predicted_absdiff_by_layer]
    errors = np.concatenate(run.error_absdiff_by_layer)
    everything = np.concatenate(all_by_layer)
    edges = np.linspace(0.0, float(everything.max()), 41)
    min_margin = np.min(
        [d.min(axis=1) for d in run.predicted_absdiff_by_layer], axis=0
    )
    return DeltaVmReport(
        median_all_by_layer=[float(np.median(d)) for d in all_by_layer],
        median_all=float(np.median(everything)),
        median_errors=float(np.median(errors)) if errors.size else math.nan,
        frac_errors_below=(
            float(np.mean(errors < threshold)) if errors.size else math.nan
        ),
        threshold=threshold,
        n_errors=int(errors.size),
        hist_all=(edges, np.histogram(everything, bins=edges)[0]),
        hist_errors=(edges, np.histogram(errors, bins=edges)[0]),
        min_margin_matching=min_margin[~run.mismatching_mask],
        min_margin_mismatching=min_margin[run.mismatching_mask],
    )


def voltage_scale_check(chip: ChipModel, images, v_peaks) -> bool:
    """True iff noiseless outputs are bit-identical across clock peaks.

    Capacitive dividers make every membrane voltage proportional to
    v_peak, so an offset-free comparator sees the same sign pattern at
    any positive peak; this checks that property end to end on the
    realized (mismatched but frozen) chip.
    """
    if hasattr(images, "test"):
        images = images.test
    x = images if isinstance(images, np.ndarray) else split_arrays(images)[0]
    rchip = realize(chip, mismatch=True, offsets=False)
    base = None
    for v in v_peaks:
        tr = simulate_batch(rchip, x, v)
        key = [b.copy() for b in tr.bits]
        if base is None:
            base = key
        elif any((a != b).any() for a, b in zip(base, key)):
            return False
    return True


def voltage_scale_error_rates(
    chip: ChipModel,
    images,
    v_peaks,
    trials: int = 200,
    op_seed: int = 0,
) -> list:
    """Class error rate vs clock peak under fixed comparator noise.

    Offsets are disabled so the only nonideality is per-decision noise;
    the same noise draws are reused at every peak (common random
    numbers), which makes the shrinking-margin effect directly
    comparable across peaks.  The reference outputs are the noiseless
    ones, which are peak-invariant.
    """
    if hasattr(images, "test"):
        images = images.test
    x = images if isinstance(images, np.ndarray) else split_arrays(images)[0]
    n = x.shape[0]
    rchip = realize(chip, mismatch=True, offsets=False)
    ref = simulate_batch(rchip, x, chip.spec.v_max).classes
    noise_per_trial = []
    for t in range(trials):
        rng = np.random.default_rng([op_seed, t])
        noise_per_trial.append(_draw_noise(rchip, n, rng))
    rates = []
    for v in v_peaks:
        wrong = 0
        for nz in noise_per_trial:
            tr = simulate_batch(rchip, x, v, nz)
            wrong += int((tr.classes != ref).sum())
        rates.append(wrong / (trials * n))
    return rates


def run_trace_csv(run: RunStats, path) -> None:
    """Dump the last iteration's node voltages, one row per neuron."""
    tr = run.last_trace
    if tr is None:
        raise ConfigError("run_split must be called with collect_traces=True")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample", "layer", "neuron", "vm_pos_v", "vm_neg_v", "bit"])
        for li, bits in enumerate(tr.bits):
            vp, vn = tr.vm_pos[li], tr.vm_neg[li]
            for si in range(bits.shape[0]):
                for ni in range(bits.shape[1]):
                    w.writerow([
                        si, li, ni,
                        repr(float(vp[si, ni])),
                        repr(float(vn[si, ni])),
                        int(bits[si, ni]),
                    ])
