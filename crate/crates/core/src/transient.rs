//! Fixed-step transient solvers for the switched RC demonstrations and the
//! LC power-clock generator (PCG) fed from a tank capacitor.
//!
//! Both solvers integrate energies alongside node voltages with classical
//! RK4, so source energy, stored energy and resistive dissipation come from
//! the same step and can be checked against each other.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransientError {
    #[error("time step {dt:e} s is too coarse; use dt <= {required:e} s")]
    StepTooCoarse { dt: f64, required: f64 },
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("tank is empty")]
    Depleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// Constant `v` whenever the switch selects the source.
    Step { v: f64 },
    /// Raised cosine `v/2·(1 − cos 2πt/T)`: rises 0→v over `[0, T/2]` and
    /// returns to 0 at `T`.
    Sine { v: f64, period: f64 },
}

impl Source {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Source::Step { v } => v,
            Source::Sine { v, period } => 0.5 * v * (1.0 - (2.0 * PI * t / period).cos()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchState {
    /// Capacitor charged from the source through `r`.
    Source,
    /// Capacitor discharged to ground through `r`.
    Ground,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcCircuit {
    pub r: f64,
    pub c: f64,
    pub source: Source,
    /// `(time, state)` pairs with strictly increasing times. The switch is
    /// open before the first entry.
    pub schedule: Vec<(f64, SwitchState)>,
    pub v0: f64,
}

impl RcCircuit {
    pub fn new(r: f64, c: f64, source: Source) -> Self {
        Self { r, c, source, schedule: vec![(0.0, SwitchState::Source)], v0: 0.0 }
    }

    pub fn with_schedule(mut self, schedule: Vec<(f64, SwitchState)>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<(), TransientError> {
        if !(self.r > 0.0 && self.c > 0.0) {
            return Err(TransientError::Invalid(format!("r = {}, c = {} must be positive", self.r, self.c)));
        }
        if let Source::Sine { period, .. } = self.source {
            if !(period > 0.0) {
                return Err(TransientError::Invalid("sine period must be positive".into()));
            }
        }
        if self.schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(TransientError::Invalid("switch times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Largest admissible step: `min(RC, T) / 50`.
    pub fn max_dt(&self) -> f64 {
        let tau = self.r * self.c;
        let scale = match self.source {
            Source::Step { .. } => tau,
            Source::Sine { period, .. } => tau.min(period),
        };
        scale / 50.0
    }
}

/// Sampled solver output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub nodes: Vec<String>,
    pub t: Vec<f64>,
    /// Node voltages per sample, in `nodes` order.
    pub v: Vec<Vec<f64>>,
    /// Source (or tank) current per sample.
    pub i: Vec<f64>,
    pub e_source: Vec<f64>,
    pub e_stored: Vec<f64>,
    pub e_dissipated: Vec<f64>,
}

impl Waveform {
    fn new(nodes: &[&str]) -> Self {
        Self { nodes: nodes.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    fn push(&mut self, t: f64, v: Vec<f64>, i: f64, es: f64, st: f64, ed: f64) {
        self.t.push(t);
        self.v.push(v);
        self.i.push(i);
        self.e_source.push(es);
        self.e_stored.push(st);
        self.e_dissipated.push(ed);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dissipated(&self) -> f64 {
        self.e_dissipated.last().copied().unwrap_or(0.0)
    }

    pub fn source_energy(&self) -> f64 {
        self.e_source.last().copied().unwrap_or(0.0)
    }

    pub fn node(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.nodes.iter().position(|n| n == name)?;
        Some(self.v.iter().map(|row| row[k]).collect())
    }

    /// `|E_source − ΔE_stored − E_dissipated|` relative to the energy moved.
    pub fn conservation_residual(&self) -> f64 {
        let (Some(&es), Some(&st), Some(&ed)) = (self.e_source.last(), self.e_stored.last(), self.e_dissipated.last())
        else {
            return 0.0;
        };
        let st0 = self.e_stored[0];
        let scale = es.abs().max(ed.abs()).max((st - st0).abs()).max(f64::MIN_POSITIVE);
        (es - (st - st0) - ed).abs() / scale
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.nodes.iter().map(|n| format!("V_{n}")));
        header.extend(["I", "E_source", "E_stored", "E_dissipated"].map(String::from));
        out.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.t[k].to_string()];
            row.extend(self.v[k].iter().map(f64::to_string));
            row.extend([self.i[k], self.e_source[k], self.e_stored[k], self.e_dissipated[k]].map(|x| x.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn rk4<const N: usize>(y: &mut [f64; N], t: f64, dt: f64, f: impl Fn(f64, &[f64; N]) -> [f64; N]) {
    let add = |a: &[f64; N], b: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|k| a[k] + h * b[k]) };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &add(y, &k1, 0.5 * dt));
    let k3 = f(t + 0.5 * dt, &add(y, &k2, 0.5 * dt));
    let k4 = f(t + dt, &add(y, &k3, dt));
    for k in 0..N {
        y[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
}

/// Integrates the switched RC circuit from 0 to `t_end`. Switch events are
/// snapped to the step grid.
pub fn solve_rc(circuit: &RcCircuit, dt: f64, t_end: f64) -> Result<Waveform, TransientError> {
    circuit.validate()?;
    let required = circuit.max_dt();
    if !(dt > 0.0) || dt > required * (1.0 + 1e-12) {
        return Err(TransientError::StepTooCoarse { dt, required });
    }
    let steps = (t_end / dt).round() as usize;
    let events: Vec<(usize, SwitchState)> =
        circuit.schedule.iter().map(|&(t, s)| ((t / dt).round() as usize, s)).collect();
    let (r, c, src) = (circuit.r, circuit.c, circuit.source);

    let current = |state: SwitchState, t: f64, v: f64| -> (f64, f64) {
        match state {
            SwitchState::Source => {
                let vs = src.value(t);
                ((vs - v) / r, vs)
            }
            SwitchState::Ground => (-v / r, 0.0),
            SwitchState::Open => (0.0, 0.0),
        }
    };

    let mut wf = Waveform::new(&["C", "S"]);
    // y = [v_c, source energy, dissipated energy]
    let mut y = [circuit.v0, 0.0, 0.0];
    let mut state = SwitchState::Open;
    let mut next_event = 0;
    let stored = |v: f64| 0.5 * c * v * v;

    for k in 0..=steps {
        while next_event < events.len() && events[next_event].0 <= k {
            state = events[next_event].1;
            next_event += 1;
        }
        let t = k as f64 * dt;
        let (i, vs) = current(state, t, y[0]);
        wf.push(t, vec![y[0], vs], i, y[1], stored(y[0]), y[2]);
        if k == steps {
            break;
        }
        rk4(&mut y, t, dt, |t, y| {
            let (i, vs) = current(state, t, y[0]);
            [i / c, vs * i, i * i * r]
        });
    }
    Ok(wf)
}

/// Slow-ramp loss of one raised-cosine charge from 0 to `v` in `period / 2`.
pub fn slow_ramp_loss(r: f64, c: f64, period: f64, v: f64) -> f64 {
    PI * PI / 4.0 * (r * c / period) * c * v * v
}

/// Power-clock generator: tank capacitor, inductor and PC node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgState {
    pub c_tank: f64,
    pub l_pc: f64,
    pub c_pc: f64,
    pub v_sup: f64,
    /// Energy held by the tank, joules. The tank voltage is derived from it
    /// so that successive drains compose by plain subtraction.
    pub tank_energy: f64,
    /// Switched load on the PC node, farads.
    pub load_cap: f64,
    /// Calibrated ratio of PC peak to tank voltage.
    pub peak_gain: f64,
    pub depleted: bool,
}

impl Default for PcgState {
    fn default() -> Self {
        Self {
            c_tank: 100e-9,
            l_pc: 0.39e-3,
            c_pc: 25e-12,
            v_sup: 0.62,
            tank_energy: 0.5 * 100e-9 * 0.62 * 0.62,
            load_cap: 0.0,
            peak_gain: 2.37,
            depleted: false,
        }
    }
}

impl PcgState {
    pub fn validate(&self) -> Result<(), TransientError> {
        let ok = self.c_tank > 0.0
            && self.l_pc > 0.0
            && self.c_pc > 0.0
            && self.load_cap >= 0.0
            && self.v_sup > 0.0
            && self.peak_gain > 0.0
            && self.tank_energy >= 0.0
            && self.v_tank() <= self.v_sup * (1.0 + 1e-12);
        if ok {
            Ok(())
        } else {
            Err(TransientError::Invalid(format!("{self:?}")))
        }
    }

    pub fn stored_energy(&self) -> f64 {
        self.tank_energy
    }

    pub fn v_tank(&self) -> f64 {
        (2.0 * self.tank_energy / self.c_tank).sqrt()
    }

    pub fn with_v_tank(&self, v: f64) -> Self {
        Self { tank_energy: 0.5 * self.c_tank * v * v, ..*self }
    }

    pub fn v_peak(&self) -> f64 {
        self.peak_gain * self.v_tank()
    }

    /// Capacitance the inductor resonates with: the PC node in series with the tank.
    pub fn resonant_cap(&self) -> f64 {
        let node = self.c_pc + self.load_cap;
        node * self.c_tank / (node + self.c_tank)
    }

    pub fn resonant_frequency(&self) -> f64 {
        resonant_frequency(self.l_pc, self.resonant_cap())
    }

    pub fn recharged(&self) -> Self {
        Self { depleted: false, ..self.with_v_tank(self.v_sup) }
    }
}

pub fn resonant_frequency(l: f64, c: f64) -> f64 {
    1.0 / (2.0 * PI * (l * c).sqrt())
}

/// Removes `e_op` joules from the tank.
pub fn drain_tank(state: &PcgState, e_op: f64) -> PcgState {
    let e = state.tank_energy - e_op.max(0.0);
    if e > 0.0 {
        PcgState { tank_energy: e, ..*state }
    } else {
        PcgState { tank_energy: 0.0, depleted: true, ..*state }
    }
}

/// PC peak voltage for each of `ops` consecutive operations without
/// recharge. `e_op(v_peak)` is the energy one operation draws from the tank.
pub fn vmax_schedule(state: &PcgState, ops: usize, e_op: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut s = *state;
    let mut out = Vec::with_capacity(ops);
    for _ in 0..ops {
        let v = s.v_peak();
        out.push(v);
        s = drain_tank(&s, e_op(v));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseWidth {
    /// Hold PULSE closed for one resonant period (until the inductor current
    /// returns to zero for the second time).
    Resonant,
    /// Fixed PULSE width in nanoseconds.
    FixedNs { ns: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgConfig {
    /// Series resistance of the inductor path, ohms.
    pub r_series: f64,
    /// Series resistance in front of the lumped load, ohms.
    pub r_load: f64,
    pub pulse: PulseWidth,
    /// Recharge the tank to `v_sup` before every cycle.
    pub recharge: bool,
    pub chrg_ns: f64,
    pub pulseb_ns: f64,
}

impl Default for PcgConfig {
    fn default() -> Self {
        Self {
            r_series: 200.0,
            r_load: 1000.0,
            pulse: PulseWidth::Resonant,
            recharge: false,
            chrg_ns: 10_000.0,
            pulseb_ns: 100.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PcgCycle {
    pub v_pc_peak: f64,
    pub v_tank_after: f64,
    /// Energy drawn from the tank during the cycle.
    pub tank_energy: f64,
    pub r_series_loss: f64,
    pub r_load_loss: f64,
    /// Charge left on the PC node and load, dumped by PULSEb.
    pub reset_loss: f64,
    pub pulse_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PcgRun {
    pub cycles: Vec<PcgCycle>,
    /// Times at which the inductor current crossed zero during PULSE.
    pub zero_crossings: Vec<f64>,
}

/// Simulates `n_cycles` of CHRG → PULSE → PULSEb.
///
/// During PULSE the state is `(v_tank, i_L, v_pc, v_load)` with
/// `L·di/dt = v_tank − v_pc − R_s·i` and the load a series `R_load`, `C_L`
/// branch on the PC node.
pub fn solve_pcg(
    state: &PcgState,
    cfg: &PcgConfig,
    n_cycles: usize,
    dt: f64,
) -> Result<(Waveform, PcgState, PcgRun), TransientError> {
    state.validate()?;
    if cfg.r_series < 0.0 || cfg.r_load < 0.0 {
        return Err(TransientError::Invalid("resistances must be nonnegative".into()));
    }
    if state.tank_energy <= 0.0 && !cfg.recharge {
        return Err(TransientError::Depleted);
    }
    let has_load = state.load_cap > 0.0;
    if has_load && cfg.r_load <= 0.0 {
        return Err(TransientError::Invalid("a nonzero load needs r_load > 0".into()));
    }
    let period = 1.0 / state.resonant_frequency();
    let mut required = period / 50.0;
    if has_load {
        required = required.min(cfg.r_load * state.load_cap / 5.0);
    }
    if !(dt > 0.0) || dt > required * (1.0 + 1e-12) {
        return Err(TransientError::StepTooCoarse { dt, required });
    }

    let (ct, l, cpc, cl) = (state.c_tank, state.l_pc, state.c_pc, state.load_cap);
    let (rs, rl) = (cfg.r_series, cfg.r_load);
    let stored = |y: &[f64; 7]| 0.5 * l * y[1] * y[1] + 0.5 * cpc * y[2] * y[2] + 0.5 * cl * y[3] * y[3];

    let mut wf = Waveform::new(&["tank", "pc", "load"]);
    let mut run = PcgRun::default();
    let mut s = *state;
    let mut t = 0.0;
    // Totals carried across cycles so the waveform stays cumulative.
    let (mut e_src_total, mut e_diss_total) = (0.0, 0.0);

    for _ in 0..n_cycles {
        if cfg.recharge {
            s = s.recharged();
            t += cfg.chrg_ns * 1e-9;
        }
        if s.tank_energy <= 0.0 {
            s.depleted = true;
            break;
        }
        let e_before = s.stored_energy();
        // y = [v_tank, i_L, v_pc, v_load, tank energy out, R_s loss, R_load loss]
        let mut y = [s.v_tank(), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let f = |_t: f64, y: &[f64; 7]| -> [f64; 7] {
            let i = y[1];
            let il = if has_load { (y[2] - y[3]) / rl } else { 0.0 };
            [
                -i / ct,
                (y[0] - y[2] - rs * i) / l,
                (i - il) / cpc,
                if has_load { il / cl } else { 0.0 },
                y[0] * i,
                rs * i * i,
                rl * il * il,
            ]
        };
        let max_steps = match cfg.pulse {
            PulseWidth::Resonant => (3.0 * period / dt).ceil() as usize,
            PulseWidth::FixedNs { ns } => (ns * 1e-9 / dt).round() as usize,
        };
        let mut peak: f64 = 0.0;
        let mut crossings = 0;
        let t0 = t;
        let record = |wf: &mut Waveform, t: f64, y: &[f64; 7], es: f64, ed: f64| {
            wf.push(t, vec![y[0], y[2], y[3]], y[1], es + y[4], stored(y), ed + y[5] + y[6]);
        };
        record(&mut wf, t, &y, e_src_total, e_diss_total);
        for _ in 0..max_steps {
            let prev_i = y[1];
            rk4(&mut y, t, dt, f);
            t += dt;
            peak = peak.max(y[2]);
            if prev_i != 0.0 && prev_i.signum() != y[1].signum() {
                let frac = prev_i / (prev_i - y[1]);
                run.zero_crossings.push(t - dt + frac * dt);
                crossings += 1;
            }
            record(&mut wf, t, &y, e_src_total, e_diss_total);
            if cfg.pulse == PulseWidth::Resonant && crossings == 2 {
                break;
            }
        }
        // Opening PULSE strands whatever current is left in the inductor.
        let open_loss = 0.5 * l * y[1] * y[1];
        let reset_loss = 0.5 * cpc * y[2] * y[2] + 0.5 * cl * y[3] * y[3] + open_loss;
        e_src_total += y[4];
        e_diss_total += y[5] + y[6] + reset_loss;
        s = s.with_v_tank(y[0].max(0.0));
        let pulse_seconds = t - t0;
        t += cfg.pulseb_ns * 1e-9;
        wf.push(t, vec![s.v_tank(), 0.0, 0.0], 0.0, e_src_total, 0.0, e_diss_total);
        run.cycles.push(PcgCycle {
            v_pc_peak: peak,
            v_tank_after: s.v_tank(),
            tank_energy: e_before - s.stored_energy(),
            r_series_loss: y[5],
            r_load_loss: y[6],
            reset_loss,
            pulse_seconds,
        });
    }
    Ok((wf, s, run))
}

/// Resonant frequency measured from inductor-current zero crossings of a
/// lossless, free-running PULSE.
pub fn measure_resonance(state: &PcgState, dt: f64, half_periods: usize) -> Result<f64, TransientError> {
    let period = 1.0 / state.resonant_frequency();
    let cfg = PcgConfig {
        r_series: 0.0,
        pulse: PulseWidth::FixedNs { ns: (half_periods as f64 + 0.5) * 0.5 * period * 1e9 },
        ..PcgConfig::default()
    };
    let (_, _, run) = solve_pcg(&PcgState { load_cap: 0.0, ..*state }, &cfg, 1, dt)?;
    let z = &run.zero_crossings;
    if z.len() < 2 {
        return Err(TransientError::Invalid("run too short to see two zero crossings".into()));
    }
    let mean_half = (z[z.len() - 1] - z[0]) / (z.len() - 1) as f64;
    Ok(1.0 / (2.0 * mean_half))
}
