"""Fixed-step transient solver for the power-clock circuits.

Two circuit families are covered:

  * a switched RC branch (one capacitor charged from a DC source or a
    sinusoidal ramp through a resistor, or discharged to ground), which
    is the textbook model for both abrupt and adiabatic charging;
  * the resonant power-clock generator: a large tank capacitor feeding
    an inductor into the clock net, with CHRG / PULSE / PULSEb phases.

Integration is classic RK4 on a uniform grid, with the energy
bookkeeping (source energy in, heat out, field energy stored) carried
as extra state variables so conservation can be checked to solver
accuracy.  Switch events are snapped to grid points, so every RK4 step
sees smooth dynamics.

All quantities are SI: volts, amps, ohms, farads, henries, seconds,
joules.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericalError

RAMP_ALPHA = math.pi * math.pi / 4.0

DC_STEP = "dc_step"
SINE = "sine"

_GRID_FACTOR = 50  # dt must resolve the fastest time constant this finely


def ramp_dissipation(r: float, c: float, v: float, period: float) -> float:
    """Slow-ramp loss for one half-period sinusoidal swing 0 -> v.

    In the adiabatic limit (rc << period) the resistor burns
    (pi^2/4) * (rc/period) * c * v^2 per half swing; a full
    charge/recover cycle costs twice that.
    """
    return RAMP_ALPHA * (r * c / period) * c * v * v


@dataclass
class RcCircuit:
    """One switched RC branch.

    schedule is a list of (time, state) pairs, state 1 meaning the
    capacitor top plate connects to the source and 0 to ground, both
    through the same resistance.  Before the first event the switch is
    at ground.
    """

    r: float
    c: float
    source: str = DC_STEP
    v_amp: float = 1.0
    period: float = 0.0  # sine sources only; full period of the drive
    schedule: list = field(default_factory=lambda: [(0.0, 1)])

    def validate(self) -> None:
        if self.r <= 0 or self.c <= 0:
            raise ConfigError("r and c must be positive")
        if self.source not in (DC_STEP, SINE):
            raise ConfigError(f"unknown source kind {self.source!r}")
        if self.source == SINE and self.period <= 0:
            raise ConfigError("sine source needs a positive period")
        last = -math.inf
        for t, s in self.schedule:
            if t < 0 or t <= last:
                raise ConfigError("schedule times must be increasing and nonnegative")
            if s not in (0, 1):
                raise ConfigError("switch state must be 0 or 1")
            last = t

    def source_voltage(self, t):
        if self.source == DC_STEP:
            return self.v_amp if np.isscalar(t) else np.full_like(t, self.v_amp)
        return 0.5 * self.v_amp * (1.0 - np.cos(2.0 * math.pi * t / self.period))


@dataclass
class Waveform:
    """Uniform-grid solver output: time plus named columns.

    Energy columns are cumulative.  energy_residual() measures how well
    source energy = stored energy change + dissipated energy holds
    across the whole record.
    """

    t: np.ndarray
    columns: dict
    meta: dict = field(default_factory=dict)

    def energy_residual(self) -> float:
        e_src = self.columns["e_src"]
        e_diss = self.columns["e_diss"]
        e_stored = self.columns["e_stored"]
        res = e_src - (e_stored - e_stored[0]) - e_diss
        return float(np.max(np.abs(res)))

    def energy_scale(self) -> float:
        return max(
            float(self.columns["e_diss"][-1]),
            float(np.max(np.abs(self.columns["e_stored"] - self.columns["e_stored"][0]))),
            abs(float(self.columns["e_src"][-1])),
            1e-30,
        )

    def to_csv(self, path) -> None:
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s"] + names)
            for i in range(len(self.t)):
                w.writerow(
                    [repr(float(self.t[i]))]
                    + [repr(float(self.columns[n][i])) for n in names]
                )


def _rk4_step(rhs, t, y, dt):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _require_dt(dt: float, fastest: float, what: str) -> None:
    limit = fastest / _GRID_FACTOR
    if dt > limit * (1.0 + 1e-12):
        raise ConfigError(
            f"dt={dt:g} s too coarse for {what}: need dt <= {limit:g} s"
        )


def solve_rc(circuit: RcCircuit, dt: float, t_end: float) -> Waveform:
    """Integrate the switched RC branch on a uniform grid.

    Switch events from the schedule are snapped to the nearest grid
    point.  Refuses dt that under-resolves the RC time constant (and
    the drive period for sine sources).
    """
    circuit.validate()
    if dt <= 0 or t_end <= 0:
        raise ConfigError("dt and t_end must be positive")
    fastest = circuit.r * circuit.c
    if circuit.source == SINE:
        fastest = min(fastest, circuit.period)
    _require_dt(dt, fastest, "this RC circuit")

    n = int(round(t_end / dt))
    t = np.arange(n + 1) * dt
    switch = np.zeros(n + 1, dtype=np.int8)
    for ev_t, s in circuit.schedule:
        idx = int(round(ev_t / dt))
        if idx <= n:
            switch[idx:] = s

    v = np.zeros(n + 1)
    i_cap = np.zeros(n + 1)
    e_diss = np.zeros(n + 1)
    e_src = np.zeros(n + 1)
    rc = circuit.r * circuit.c

    y = np.zeros(3)  # v_c, e_diss, e_src
    for k in range(n):
        s = int(switch[k])

        def rhs(tt, yy, s=s):
            u = circuit.source_voltage(tt) if s else 0.0
            cur = (u - yy[0]) / circuit.r
            return np.array([
                cur / circuit.c,
                cur * cur * circuit.r,
                u * cur,
            ])

        y = _rk4_step(rhs, t[k], y, dt)
        v[k + 1], e_diss[k + 1], e_src[k + 1] = y
        u_next = circuit.source_voltage(t[k + 1]) if int(switch[k + 1]) else 0.0
        i_cap[k + 1] = (u_next - v[k + 1]) / circuit.r
    u0 = circuit.source_voltage(0.0) if int(switch[0]) else 0.0
    i_cap[0] = (u0 - v[0]) / circuit.r

    return Waveform(
        t=t,
        columns={
            "v_c": v,
            "i": i_cap,
            "e_diss": e_diss,
            "e_src": e_src,
            "e_stored": 0.5 * circuit.c * v * v,
        },
        meta={"dt": dt, "circuit": "rc", "switch": switch},
    )


@dataclass(frozen=True)
class PcgState:
    """Resonant power-clock generator board state.

    The tank capacitor is the local energy reservoir; its voltage is
    tracked as the voltage at the last recharge plus the total energy
    drained since, so successive drains compose exactly.  v_peak is the
    clock peak the board delivers, peak_gain times the tank voltage
    (the ideal lossless LC doubler gives gain 2; the configured default
    reflects the boosted board behavior).
    """

    c_tank: float = 100e-9
    l_pc: float = 0.39e-3
    c_pc: float = 25e-12
    v_sup: float = 0.62
    load_cap: float = 0.0
    peak_gain: float = 2.37
    v_tank_full: float = 0.62
    energy_drained: float = 0.0

    def __post_init__(self):
        if min(self.c_tank, self.l_pc, self.c_pc) <= 0:
            raise ConfigError("c_tank, l_pc and c_pc must be positive")
        if self.load_cap < 0:
            raise ConfigError("load_cap must be nonnegative")
        if self.v_sup <= 0 or self.peak_gain <= 0:
            raise ConfigError("v_sup and peak_gain must be positive")
        if not 0 <= self.v_tank_full <= self.v_sup * (1 + 1e-9):
            raise ConfigError("v_tank_full must lie in [0, v_sup]")
        if self.energy_drained < 0:
            raise ConfigError("energy_drained must be nonnegative")

    @property
    def v_tank(self) -> float:
        vv = self.v_tank_full ** 2 - 2.0 * self.energy_drained / self.c_tank
        return math.sqrt(vv) if vv > 0 else 0.0

    @property
    def depleted(self) -> bool:
        return self.v_tank_full ** 2 - 2.0 * self.energy_drained / self.c_tank <= 0

    @property
    def stored_energy(self) -> float:
        return 0.5 * self.c_tank * self.v_tank ** 2

    @property
    def v_peak(self) -> float:
        return self.peak_gain * self.v_tank

    @property
    def c_load_total(self) -> float:
        return self.c_pc + self.load_cap


def resonant_frequency(state: PcgState) -> float:
    """Closed-form LC resonance of the pulse path, tank treated as stiff."""
    return 1.0 / (2.0 * math.pi * math.sqrt(state.l_pc * state.c_load_total))


def drain_tank(state: PcgState, e_op: float) -> PcgState:
    """Withdraw e_op joules from the tank.

    The tank voltage follows v = sqrt(v0^2 - 2 E / C), floored at zero
    once the drawn energy exceeds the stored energy.
    """
    if e_op < 0:
        raise ConfigError("drained energy must be nonnegative")
    return replace(state, energy_drained=state.energy_drained + e_op)


def recharge(state: PcgState) -> PcgState:
    """Top the tank back up to the supply rail."""
    return replace(state, v_tank_full=state.v_sup, energy_drained=0.0)


def vmax_schedule(state: PcgState, n_ops: int, e_op_model) -> tuple:
    """Clock peaks over a run of operations without recharging.

    e_op_model(v_peak) returns the energy drawn from the tank by one
    operation at that clock peak.  Returns (list of v_peak per op,
    final state); the list is truncated where the tank runs dry.
    """
    if n_ops < 0:
        raise ConfigError("n_ops must be nonnegative")
    peaks = []
    for _ in range(n_ops):
        if state.depleted:
            break
        v = state.v_peak
        peaks.append(v)
        state = drain_tank(state, float(e_op_model(v)))
    return peaks, state


@dataclass
class PcgTiming:
    """Phase durations in nanoseconds.

    chrg_ns 0 skips the recharge phase; pulse_ns None uses one full
    resonant period so the pulse returns unspent charge to the tank.
    """

    chrg_ns: float = 0.0
    pulse_ns: float | None = None
    pulseb_ns: float = 50.0

    def validate(self) -> None:
        if self.chrg_ns < 0 or self.pulseb_ns < 0:
            raise ConfigError("phase durations must be nonnegative")
        if self.pulse_ns is not None and self.pulse_ns <= 0:
            raise ConfigError("pulse_ns must be positive when given")


@dataclass
class PcgRun:
    waveform: Waveform
    state: PcgState
    v_pc_peaks: list
    measured_period: float | None


def _parabolic_peak(t, v, i):
    if i == 0 or i == len(v) - 1:
        return t[i], v[i]
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return t[i], v[i]
    shift = 0.5 * (y0 - y2) / denom
    dt = t[1] - t[0]
    return t[i] + shift * dt, y1 - 0.25 * (y0 - y2) * shift


def solve_pcg(
    state: PcgState,
    n_cycles: int,
    dt: float,
    *,
    timing: PcgTiming | None = None,
    series_r: float = 50.0,
    chrg_r: float = 1000.0,
    reset_r: float = 100.0,
) -> PcgRun:
    """Simulate CHRG/PULSE/PULSEb phases of the clock generator.

    Per cycle: an optional CHRG phase tops the tank up from the supply
    through chrg_r, then PULSE swings the tank through the inductor
    into the clock net (c_pc plus load), then PULSEb holds the clock
    net at ground through reset_r.  Any current still in the inductor
    when PULSE opens is dumped into the dissipation ledger.  Returns
    the concatenated waveform, the updated tank state, the per-cycle
    clock peaks and the measured resonant period of the first pulse.
    """
    if timing is None:
        timing = PcgTiming()
    timing.validate()
    if n_cycles < 1:
        raise ConfigError("n_cycles must be positive")
    if series_r < 0 or chrg_r <= 0 or reset_r <= 0:
        raise ConfigError("resistances must be positive (series_r may be 0)")
    if dt <= 0:
        raise ConfigError("dt must be positive")
    t_res = 1.0 / resonant_frequency(state)
    _require_dt(dt, t_res, "the resonant pulse")

    pulse_s = t_res if timing.pulse_ns is None else timing.pulse_ns * 1e-9
    phases = []
    if timing.chrg_ns > 0:
        phases.append(("chrg", timing.chrg_ns * 1e-9))
    phases.append(("pulse", pulse_s))
    if timing.pulseb_ns > 0:
        phases.append(("pulseb", timing.pulseb_ns * 1e-9))

    c_load = state.c_load_total
    l = state.l_pc
    ct = state.c_tank

    # state vector: v_tank, i_l, v_pc, e_diss, e_src
    y = np.array([state.v_tank, 0.0, 0.0, 0.0, 0.0])
    ts = [np.array([0.0])]
    ys = [y[None, :].copy()]
    t_now = 0.0
    phase_spans = []
    peaks = []
    measured_period = None

    def rhs_chrg(tt, yy):
        cur = (state.v_sup - yy[0]) / chrg_r
        return np.array([cur / ct, 0.0, 0.0, cur * cur * chrg_r, state.v_sup * cur])

    def rhs_pulse(tt, yy):
        dv = yy[0] - yy[2] - yy[1] * series_r
        return np.array([
            -yy[1] / ct,
            dv / l,
            yy[1] / c_load,
            yy[1] * yy[1] * series_r,
            0.0,
        ])

    def rhs_pulseb(tt, yy):
        cur = yy[2] / reset_r
        return np.array([0.0, 0.0, -cur / c_load, cur * yy[2], 0.0])

    rhs_of = {"chrg": rhs_chrg, "pulse": rhs_pulse, "pulseb": rhs_pulseb}

    for cycle in range(n_cycles):
        for name, dur in phases:
            steps = max(1, int(round(dur / dt)))
            seg = np.empty((steps, 5))
            if name != "pulse" and y[1] != 0.0:
                # PULSE switch opens: residual inductor energy is lost
                y = y.copy()
                y[3] += 0.5 * l * y[1] * y[1]
                y[1] = 0.0
            rhs = rhs_of[name]
            for k in range(steps):
                y = _rk4_step(rhs, t_now + k * dt, y, dt)
                seg[k] = y
            if not np.all(np.isfinite(y)):
                raise NumericalError(f"pcg solve diverged in {name} phase")
            seg_t = t_now + (np.arange(steps) + 1) * dt
            phase_spans.append((t_now, t_now + steps * dt, name, cycle))
            if name == "pulse":
                v_seg = seg[:, 2]
                pk = int(np.argmax(v_seg))
                t_pk, v_pk = _parabolic_peak(seg_t, v_seg, pk)
                peaks.append(float(v_pk))
                if measured_period is None:
                    measured_period = 2.0 * (t_pk - t_now)
            ts.append(seg_t)
            ys.append(seg)
            t_now += steps * dt

    t_all = np.concatenate(ts)
    y_all = np.concatenate(ys, axis=0)
    v_tank_arr, i_l, v_pc = y_all[:, 0], y_all[:, 1], y_all[:, 2]
    e_stored = 0.5 * ct * v_tank_arr ** 2 + 0.5 * l * i_l ** 2 + 0.5 * c_load * v_pc ** 2
    wf = Waveform(
        t=t_all,
        columns={
            "v_tank": v_tank_arr,
            "i_l": i_l,
            "v_pc": v_pc,
            "e_diss": y_all[:, 3],
            "e_src": y_all[:, 4],
            "e_stored": e_stored,
        },
        meta={"dt": dt, "circuit": "pcg", "phases": phase_spans},
    )
    final_v = float(v_tank_arr[-1])
    new_state = replace(
        state,
        v_tank_full=min(final_v, state.v_sup),
        energy_drained=0.0,
    )
    return PcgRun(
        waveform=wf,
        state=new_state,
        v_pc_peaks=peaks,
        measured_period=measured_period,
    )
