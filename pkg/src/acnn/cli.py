"""Command line interface for the toolchain.

Subcommands cover the full flow: gen-dataset -> train -> quantize ->
map -> infer/montecarlo/energy, plus transient circuit studies and a
report generator.  Exit codes: 0 success, 1 configuration error, 2
data error, 3 numerical error.

Each command that writes a primary artifact also writes a manifest
(<artifact>.manifest.json) recording the tool version and the fully
resolved configuration.  Apart from the manifest's timestamp, artifact
bytes are deterministic for a given configuration.

A JSON config file (--config) may supply per-command defaults; explicit
flags win over the file, the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .arrows import (
    CLASS_NAMES,
    GeneratorConfig,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .bnn import (
    QuantSpec,
    TrainConfig,
    evaluate,
    load_net,
    quantize,
    save_net,
    train_with_history,
)
from .capmap import (
    ComparatorModel,
    MapSpec,
    chip_stats,
    compile_chip,
    load_chip,
    quantize_chip,
    save_chip,
)
from .chipsim import run_split, run_trace_csv
from .energy import (
    EnergyModelCfg,
    canonical_samples,
    comparison_report,
    load_energy_tables,
    load_reference_tables,
    multi_op_experiment,
)
from .errors import AcnnError, ConfigError, DataError, NumericalError
from .transient import (
    PcgState,
    PcgTiming,
    RcCircuit,
    resonant_frequency,
    solve_pcg,
    solve_rc,
    vmax_schedule,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def _resolve(args, command: str, defaults: dict) -> dict:
    """flags > config file section > defaults."""
    section = _load_config_file(args.config).get(command, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {command!r} must be an object")
    unknown = set(section) - set(defaults)
    if unknown:
        raise ConfigError(
            f"config section {command!r} has unknown keys: {sorted(unknown)}"
        )
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else section.get(key, default)
    return out


def _write_manifest(artifact_path, command: str, resolved: dict) -> None:
    doc = {
        "tool": "acnn",
        "version": __version__,
        "command": command,
        "config": resolved,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    with open(str(artifact_path) + ".manifest.json", "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_json(path, doc: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------- commands

def cmd_gen_dataset(args) -> int:
    defaults = dict(seed=1, n_train=4000, n_test=4078, max_shift=1, max_noise_pixels=3)
    cfg = _resolve(args, "gen-dataset", defaults)
    split = generate_dataset(
        cfg["seed"],
        cfg["n_train"],
        cfg["n_test"],
        GeneratorConfig(cfg["max_shift"], cfg["max_noise_pixels"]),
    )
    save_dataset(split, args.out)
    _write_manifest(args.out, "gen-dataset", cfg)
    print(
        f"wrote {args.out}: {len(split.train)} train / {len(split.test)} test "
        f"images (seed {cfg['seed']})"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    defaults = dict(
        seed=0, epochs=200, lr=0.02, hidden=12, batch_size=64, quant_aware=True
    )
    cfg = _resolve(args, "train", defaults)
    split = load_dataset(args.dataset)
    tc = TrainConfig(
        hidden=cfg["hidden"],
        epochs=cfg["epochs"],
        lr=cfg["lr"],
        batch_size=cfg["batch_size"],
        quant_aware=cfg["quant_aware"],
    )
    result = train_with_history(split, tc, cfg["seed"])
    tanh_stats = evaluate(result.tanh_net, split.test)
    step_stats = evaluate(result.net, split.test)
    save_net(result.net, args.out)
    _write_manifest(args.out, "train", cfg)
    print(f"final training loss: {result.loss_history[-1]:.6f}")
    print(f"test accuracy pre-swap (tanh readout): {tanh_stats.accuracy:.4%}")
    print(f"test accuracy post-swap (step readout): {step_stats.accuracy:.4%}")
    print(f"swap accuracy change: {step_stats.accuracy - tanh_stats.accuracy:+.4%}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_quantize(args) -> int:
    defaults = dict(bits=8, deadzone=0.1, w_max=1.0)
    cfg = _resolve(args, "quantize", defaults)
    net = load_net(args.net)
    q = QuantSpec(bits=cfg["bits"], deadzone=cfg["deadzone"], w_max=cfg["w_max"])
    qnet = quantize(net, q)
    save_net(qnet, args.out)
    _write_manifest(args.out, "quantize", cfg)
    mags = np.concatenate([np.abs(l.weights.ravel()) for l in qnet.layers])
    nz = mags[mags > 0]
    print(f"quantized {mags.size} weights; {mags.size - nz.size} zeroed")
    if nz.size:
        print(f"magnitude spread max/min: {nz.max() / nz.min():.2f}")
    if args.dataset:
        split = load_dataset(args.dataset)
        before = evaluate(net, split.test).accuracy
        after = evaluate(qnet, split.test).accuracy
        print(f"test accuracy before quantization: {before:.4%}")
        print(f"test accuracy after quantization: {after:.4%}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_map(args) -> int:
    defaults = dict(
        v_max=1.5, c_min=8.0, swing_lo=0.1, swing_hi=1.0, unit_cap=2.0,
        parasitic_fraction=0.08, headroom=1.2, chip_seed=0, mismatch_sigma=0.01,
        offset_sigma=0.005, noise_sigma=0.003, exact=False,
    )
    cfg = _resolve(args, "map", defaults)
    net = load_net(args.net)
    spec = MapSpec(
        v_max=cfg["v_max"], c_min=cfg["c_min"], swing_lo=cfg["swing_lo"],
        swing_hi=cfg["swing_hi"], unit_cap=cfg["unit_cap"],
        parasitic_fraction=cfg["parasitic_fraction"], headroom=cfg["headroom"],
    )
    chip = compile_chip(net, spec)
    chip.chip_seed = cfg["chip_seed"]
    chip.mismatch_sigma = cfg["mismatch_sigma"]
    chip.comparator = ComparatorModel(
        offset_sigma=cfg["offset_sigma"], noise_sigma=cfg["noise_sigma"]
    )
    if not cfg["exact"]:
        chip, report = quantize_chip(chip)
        print(
            f"unit-cap rounding over {report.n_caps} caps: "
            f"mean |error| {report.mean_abs_error:.3f} fF, "
            f"max {report.max_abs_error:.3f} fF"
        )
    stats = chip_stats(chip)
    save_chip(chip, args.out)
    _write_manifest(args.out, "map", cfg)
    print(
        f"compiled {stats.n_neurons} neurons, {stats.n_synapse_sites} synapse "
        f"sites ({stats.n_connected} connected)"
    )
    print(f"total capacitance: {stats.total_pf:.2f} pF "
          f"(per layer: {', '.join(f'{v*1e-3:.2f}' for v in stats.per_layer_ff)} pF)")
    print(f"ground allowance attributed to parasitics: "
          f"{stats.parasitic_fraction_effective:.4f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_infer(args) -> int:
    defaults = dict(v_peak=None, iterations=1, op_seed=0, noiseless=False)
    cfg = _resolve(args, "infer", defaults)
    chip = load_chip(args.chip)
    split = load_dataset(args.dataset)
    reference = load_net(args.reference_net) if args.reference_net else None
    noisy = not cfg["noiseless"]
    run = run_split(
        chip,
        split,
        v_peak=cfg["v_peak"],
        iterations=cfg["iterations"],
        op_seed=cfg["op_seed"],
        reference=reference,
        mismatch=noisy,
        noise=noisy,
    )
    print(f"software accuracy: {run.software_accuracy:.4%}")
    print(
        f"hardware accuracy: {run.hardware_accuracy:.4%} "
        f"(std {run.hardware_accuracy_std:.4%} over {run.iterations} iterations)"
    )
    print(f"matching fraction: {run.matching_mean:.4%} "
          f"(always matching: {run.always_matching_fraction:.4%})")
    print(f"bit errors: {run.total_bit_errors} of {run.total_bit_decisions} decisions")
    if args.out:
        _write_json(args.out, run.to_json_dict())
        _write_manifest(args.out, "infer", cfg)
        print(f"wrote {args.out}")
    if args.trace_csv:
        run_trace_csv(run, args.trace_csv)
        print(f"wrote {args.trace_csv}")
    return EXIT_OK


def _mc_worker(params) -> tuple:
    (chip_path, dataset_path, ref_path, seed, iterations, op_seed, v_peak) = params
    chip = load_chip(chip_path)
    chip.chip_seed = seed
    split = load_dataset(dataset_path)
    reference = load_net(ref_path) if ref_path else None
    run = run_split(
        chip,
        split,
        v_peak=v_peak,
        iterations=iterations,
        op_seed=op_seed,
        reference=reference,
        collect_traces=False,
    )
    return seed, run.to_json_dict()


def cmd_montecarlo(args) -> int:
    defaults = dict(
        n_chips=5, first_seed=0, iterations=10, op_seed=0, v_peak=None, workers=1
    )
    cfg = _resolve(args, "montecarlo", defaults)
    seeds = list(range(cfg["first_seed"], cfg["first_seed"] + cfg["n_chips"]))
    params = [
        (args.chip, args.dataset, args.reference_net, s,
         cfg["iterations"], cfg["op_seed"], cfg["v_peak"])
        for s in seeds
    ]
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = dict(pool.map(_mc_worker, params))
    else:
        results = dict(map(_mc_worker, params))
    accs, matches, always = [], [], []
    for s in seeds:
        r = results[s]
        accs.append(r["hardware_accuracy_mean"])
        matches.append(r["matching_mean"])
        always.append(r["always_matching_fraction"])
        print(
            f"chip_seed={s} accuracy={r['hardware_accuracy_mean']:.4%} "
            f"matching={r['matching_mean']:.4%} "
            f"always={r['always_matching_fraction']:.4%}"
        )
    agg = {
        "seeds": seeds,
        "accuracy_mean": float(np.mean(accs)),
        "accuracy_std": float(np.std(accs)),
        "matching_mean": float(np.mean(matches)),
        "always_matching_mean": float(np.mean(always)),
        "software_accuracy": results[seeds[0]]["software_accuracy"],
        "per_seed": {str(s): results[s] for s in seeds},
    }
    print(
        f"aggregate: accuracy={agg['accuracy_mean']:.4%} "
        f"(std {agg['accuracy_std']:.4%}), matching={agg['matching_mean']:.4%}, "
        f"always={agg['always_matching_mean']:.4%}"
    )
    if args.out:
        _write_json(args.out, agg)
        _write_manifest(args.out, "montecarlo", cfg)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_transient(args) -> int:
    defaults = dict(
        r=1000.0, c=1e-12, v=1.5, period=1e-6, t_end=None, dt=None,
        discharge_at=None, cycles=3, series_r=50.0, chrg_ns=0.0, pulseb_ns=50.0,
    )
    cfg = _resolve(args, "transient", defaults)
    if args.circuit in ("rc-step", "rc-sine"):
        rc = cfg["r"] * cfg["c"]
        schedule = [(0.0, 1)]
        if cfg["discharge_at"] is not None:
            schedule.append((cfg["discharge_at"], 0))
        circuit = RcCircuit(
            r=cfg["r"], c=cfg["c"],
            source="dc_step" if args.circuit == "rc-step" else "sine",
            v_amp=cfg["v"], period=cfg["period"], schedule=schedule,
        )
        t_end = cfg["t_end"] if cfg["t_end"] is not None else (
            10 * rc if args.circuit == "rc-step" else cfg["period"] / 2
        )
        dt = cfg["dt"] if cfg["dt"] is not None else min(
            rc, cfg["period"] if args.circuit == "rc-sine" else t_end
        ) / 400
        wf = solve_rc(circuit, dt, t_end)
        print(f"steps: {len(wf.t) - 1}, dt={dt:g} s, t_end={wf.t[-1]:g} s")
        print(f"source energy: {wf.columns['e_src'][-1]:.4e} J")
        print(f"stored energy: {wf.columns['e_stored'][-1]:.4e} J")
        print(f"dissipated energy: {wf.columns['e_diss'][-1]:.4e} J")
        print(f"conservation residual: {wf.energy_residual():.3e} J "
              f"(scale {wf.energy_scale():.3e} J)")
    else:
        state = PcgState()
        dt = cfg["dt"] if cfg["dt"] is not None else 1.0 / resonant_frequency(state) / 2000
        run = solve_pcg(
            state, cfg["cycles"], dt,
            timing=PcgTiming(chrg_ns=cfg["chrg_ns"], pulseb_ns=cfg["pulseb_ns"]),
            series_r=cfg["series_r"],
        )
        wf = run.waveform
        print(f"closed-form resonance: {resonant_frequency(state) / 1e6:.4f} MHz")
        if run.measured_period:
            print(f"measured resonance: {1e-6 / run.measured_period:.4f} MHz")
        print(f"clock peaks per cycle: "
              f"{', '.join(f'{v:.4f}' for v in run.v_pc_peaks)} V")
        print(f"tank voltage after run: {run.state.v_tank:.6f} V")
        print(f"dissipated energy: {wf.columns['e_diss'][-1]:.4e} J")
        print(f"conservation residual: {wf.energy_residual():.3e} J "
              f"(scale {wf.energy_scale():.3e} J)")
    if args.csv:
        wf.to_csv(args.csv)
        _write_manifest(args.csv, f"transient-{args.circuit}", cfg)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_energy(args) -> int:
    defaults = dict(
        sample="UP", ops=30, op_seed=0, recharge=False, mode="behavioral",
        switch_r=None, error_threshold=0.05,
    )
    cfg = _resolve(args, "energy", defaults)
    chip = load_chip(args.chip)
    split = load_dataset(args.dataset)
    if args.index is not None:
        image = split.test[args.index]
        tag = f"test[{args.index}]"
    else:
        sample = cfg["sample"].upper()
        image = canonical_samples(split)[sample]
        tag = sample
    emc_kwargs = {"pcg_mode": cfg["mode"]}
    if cfg["switch_r"] is not None:
        emc_kwargs["switch_r"] = cfg["switch_r"]
    emc = EnergyModelCfg(**emc_kwargs)
    result = multi_op_experiment(
        chip, image.pixels, cfg["ops"],
        cfg=emc,
        label=image.label,
        op_seed=cfg["op_seed"],
        recharge_each_op=cfg["recharge"],
        error_threshold=cfg["error_threshold"],
    )
    led = result.ledger
    print(f"sample {tag} (class {CLASS_NAMES[image.label]}), "
          f"{led.n_ops} of {cfg['ops']} ops run"
          f"{' [tank depleted]' if led.depleted else ''}")
    print(f"clock peak first/last: {result.v_peaks[0]:.4f} / "
          f"{result.v_peaks[-1]:.4f} V")
    print(f"adiabatic core energy: {led.total_adiabatic_j * 1e12:.3f} pJ")
    print(f"generator overhead: {led.total_pcg_j * 1e12:.3f} pJ")
    print(f"conventional baseline: {led.total_cmos_j * 1e12:.3f} pJ")
    print(f"errors: {result.n_errors}, usable ops (<= "
          f"{cfg['error_threshold']:.0%} running error rate): {result.o_max}")
    if result.o_max >= 1:
        print(f"E_SOP at usable ops: {led.esop_j(result.o_max) * 1e15:.3f} fJ")
    if args.out_csv:
        led.to_csv(args.out_csv)
        _write_manifest(args.out_csv, "energy", cfg)
        print(f"wrote {args.out_csv}")
    if args.out_json:
        doc = led.to_json_dict()
        doc.update(
            o_max=result.o_max,
            n_errors=result.n_errors,
            v_peak_first=result.v_peaks[0],
            v_peak_last=result.v_peaks[-1],
            sample=tag,
        )
        _write_json(args.out_json, doc)
        _write_manifest(args.out_json, "energy", cfg)
        print(f"wrote {args.out_json}")
    return EXIT_OK


def _save_svg(fig, path) -> None:
    import matplotlib

    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    matplotlib.rcParams["svg.hashsalt"] = "acnn"
    fig.savefig(path, format="svg", metadata={"Date": None})


def cmd_report(args) -> int:
    tables = load_energy_tables(args.tables) if args.tables else load_reference_tables()
    rep = comparison_report(tables)
    print(f"{'sample':>8} {'ops':>4} {'conv/adiabatic':>14} {'E_SOP (fJ)':>11}")
    for sample, ops, ratio, esop_fj in rep.rows():
        print(f"{sample:>8} {ops:>4} {ratio:>14.2f} {esop_fj:>11.2f}")
    for j, ops in enumerate(rep.op_counts):
        print(f"mean ratio at {ops} ops: {rep.mean_ratio_by_ops[j]:.2f}")
    if args.svg_dir:
        import matplotlib

        matplotlib.use("Agg")
        from matplotlib.figure import Figure

        # cumulative energy vs op count
        fig = Figure(figsize=(6, 4))
        ax = fig.add_subplot(111)
        for s in rep.samples:
            ax.plot(rep.op_counts, tables["adiabatic_with_pcg_pj"][s], "o-",
                    label=f"{s} adiabatic")
            ax.plot(rep.op_counts, tables["conventional_pj"][s], "s--",
                    label=f"{s} conventional")
        ax.set_xlabel("operations")
        ax.set_ylabel("cumulative energy (pJ)")
        ax.legend(fontsize=6)
        path = f"{args.svg_dir}/energy_vs_ops.svg"
        _save_svg(fig, path)
        print(f"wrote {path}")

        # tank decay without recharge
        state = PcgState()
        e1 = tables["adiabatic_with_pcg_pj"][rep.samples[0]][0] * 1e-12
        coeff = e1 / state.v_peak ** 2
        peaks, _ = vmax_schedule(state, 500, lambda v: coeff * v * v)
        fig = Figure(figsize=(6, 4))
        ax = fig.add_subplot(111)
        ax.plot(range(1, len(peaks) + 1), peaks)
        ax.set_xlabel("operation")
        ax.set_ylabel("clock peak (V)")
        path = f"{args.svg_dir}/vmax_decay.svg"
        _save_svg(fig, path)
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _opt(parser, name, type_, help_):
    parser.add_argument(name, type=type_, default=None, help=help_)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="acnn",
        description="Toolchain for adiabatic capacitive neural network chips.",
    )
    p.add_argument("--version", action="version", version=f"acnn {__version__}")
    p.add_argument("--config", default=None, help="JSON file with per-command defaults")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-dataset", help="generate an arrow image dataset")
    g.add_argument("--out", required=True)
    for name in ("--seed", "--n-train", "--n-test", "--max-shift", "--max-noise-pixels"):
        _opt(g, name, int, "")
    g.set_defaults(func=cmd_gen_dataset)

    t = sub.add_parser("train", help="train the binary net")
    t.add_argument("--dataset", required=True)
    t.add_argument("--out", required=True)
    for name, ty in (("--seed", int), ("--epochs", int), ("--hidden", int),
                     ("--batch-size", int), ("--lr", float)):
        _opt(t, name, ty, "")
    t.add_argument("--no-quant-aware", dest="quant_aware", action="store_false",
                   default=None)
    t.set_defaults(func=cmd_train)

    q = sub.add_parser("quantize", help="snap net weights onto the dead-zone grid")
    q.add_argument("--net", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--dataset", default=None)
    _opt(q, "--bits", int, "")
    _opt(q, "--deadzone", float, "")
    _opt(q, "--w-max", float, "")
    q.set_defaults(func=cmd_quantize)

    m = sub.add_parser("map", help="compile a net into a capacitor chip")
    m.add_argument("--net", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--exact", action="store_true", default=None,
                   help="skip unit-cap quantization")
    for name in ("--v-max", "--c-min", "--swing-lo", "--swing-hi", "--unit-cap",
                 "--parasitic-fraction", "--headroom", "--mismatch-sigma",
                 "--offset-sigma", "--noise-sigma"):
        _opt(m, name, float, "")
    _opt(m, "--chip-seed", int, "")
    m.set_defaults(func=cmd_map)

    i = sub.add_parser("infer", help="run a dataset through a chip")
    i.add_argument("--chip", required=True)
    i.add_argument("--dataset", required=True)
    i.add_argument("--reference-net", default=None)
    i.add_argument("--out", default=None)
    i.add_argument("--trace-csv", default=None)
    i.add_argument("--noiseless", action="store_true", default=None)
    _opt(i, "--v-peak", float, "")
    _opt(i, "--iterations", int, "")
    _opt(i, "--op-seed", int, "")
    i.set_defaults(func=cmd_infer)

    mc = sub.add_parser("montecarlo", help="sweep chip seeds")
    mc.add_argument("--chip", required=True)
    mc.add_argument("--dataset", required=True)
    mc.add_argument("--reference-net", default=None)
    mc.add_argument("--out", default=None)
    for name in ("--n-chips", "--first-seed", "--iterations", "--op-seed", "--workers"):
        _opt(mc, name, int, "")
    _opt(mc, "--v-peak", float, "")
    mc.set_defaults(func=cmd_montecarlo)

    tr = sub.add_parser("transient", help="solve a power-clock circuit")
    tr.add_argument("--circuit", choices=("rc-step", "rc-sine", "pcg"), required=True)
    tr.add_argument("--csv", default=None)
    for name in ("--r", "--c", "--v", "--period", "--t-end", "--dt",
                 "--discharge-at", "--series-r", "--chrg-ns", "--pulseb-ns"):
        _opt(tr, name, float, "")
    _opt(tr, "--cycles", int, "")
    tr.set_defaults(func=cmd_transient)

    e = sub.add_parser("energy", help="multi-op energy experiment")
    e.add_argument("--chip", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--sample", default=None, help="UP, LEFT, DOWN or RIGHT")
    e.add_argument("--index", type=int, default=None, help="test split index")
    e.add_argument("--mode", choices=("behavioral", "coupled"), default=None)
    e.add_argument("--recharge", action="store_true", default=None)
    e.add_argument("--out-csv", default=None)
    e.add_argument("--out-json", default=None)
    _opt(e, "--ops", int, "")
    _opt(e, "--op-seed", int, "")
    _opt(e, "--switch-r", float, "")
    _opt(e, "--error-threshold", float, "")
    e.set_defaults(func=cmd_energy)

    r = sub.add_parser("report", help="print the energy comparison tables")
    r.add_argument("--tables", default=None, help="energy tables JSON (default: bundled)")
    r.add_argument("--svg-dir", default=None)
    r.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help/--version, 2 for usage errors
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AcnnError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
