use acnn_core::transient::{
    drain_tank, solve_pcg, solve_rc, PcgConfig, PcgState, PulseWidth, RcCircuit, Source, SwitchState, TransientError,
};
use proptest::prelude::*;

fn sine_residual(dt_div: f64) -> f64 {
    let (r, c) = (2e3, 3e-13);
    let tau = r * c;
    let circ = RcCircuit::new(r, c, Source::Sine { v: 1.2, period: 40.0 * tau })
        .with_schedule(vec![(0.0, SwitchState::Source), (20.0 * tau, SwitchState::Ground)]);
    solve_rc(&circ, tau / dt_div, 40.0 * tau).unwrap().conservation_residual()
}

#[test]
fn rc_energy_balance_converges() {
    let coarse = sine_residual(50.0);
    let fine = sine_residual(100.0);
    assert!(coarse <= 1e-3, "{coarse}");
    assert!(fine <= 0.5 * coarse || fine < 1e-12, "{coarse} -> {fine}");
}

#[test]
fn open_switch_holds_charge() {
    let (r, c) = (1e3, 1e-12);
    let tau = r * c;
    let circ = RcCircuit::new(r, c, Source::Step { v: 1.0 })
        .with_schedule(vec![(0.0, SwitchState::Source), (20.0 * tau, SwitchState::Open)]);
    let wf = solve_rc(&circ, tau / 50.0, 40.0 * tau).unwrap();
    let v = wf.node("C").unwrap();
    let held = v[v.len() - 1];
    assert!((held - 1.0).abs() < 1e-6);
    let mid = wf.t.iter().position(|&t| t >= 21.0 * tau).unwrap();
    assert_eq!(v[mid], held);
}

#[test]
fn waveform_csv_has_all_columns() {
    let circ = RcCircuit::new(1e3, 1e-12, Source::Step { v: 1.0 });
    let wf = solve_rc(&circ, 1e-11, 1e-10).unwrap();
    let mut buf = Vec::new();
    wf.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,V_C,V_S,I,E_source,E_stored,E_dissipated");
    assert_eq!(lines.count(), wf.len());
}

#[test]
fn pcg_pulse_conserves_energy() {
    let s = PcgState { load_cap: 10e-12, ..PcgState::default() };
    let period = 1.0 / s.resonant_frequency();
    let cfg = PcgConfig::default();
    let (wf, after, run) = solve_pcg(&s, &cfg, 3, period / 2000.0).unwrap();
    assert!(wf.conservation_residual() < 1e-3, "{}", wf.conservation_residual());
    assert_eq!(run.cycles.len(), 3);
    for c in &run.cycles {
        let lost = c.r_series_loss + c.r_load_loss + c.reset_loss;
        assert!((c.tank_energy - lost).abs() <= 1e-3 * c.tank_energy, "{} vs {lost}", c.tank_energy);
    }
    assert!(after.tank_energy < s.tank_energy);
    let peaks: Vec<f64> = run.cycles.iter().map(|c| c.v_pc_peak).collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
}

#[test]
fn recharge_restores_peak() {
    let s = PcgState { load_cap: 10e-12, ..PcgState::default() };
    let period = 1.0 / s.resonant_frequency();
    let cfg = PcgConfig { recharge: true, ..PcgConfig::default() };
    let (_, _, run) = solve_pcg(&s, &cfg, 3, period / 1000.0).unwrap();
    let p = &run.cycles;
    assert!((p[0].v_pc_peak - p[2].v_pc_peak).abs() < 1e-12);
}

#[test]
fn pcg_step_limits() {
    let s = PcgState { load_cap: 1e-12, ..PcgState::default() };
    let cfg = PcgConfig { r_load: 10.0, ..PcgConfig::default() };
    let err = solve_pcg(&s, &cfg, 1, 1e-9).unwrap_err();
    assert!(matches!(err, TransientError::StepTooCoarse { required, .. } if (required - 2e-12).abs() < 1e-24));
    let empty = drain_tank(&PcgState::default(), 1.0);
    assert!(empty.depleted);
    assert_eq!(solve_pcg(&empty, &PcgConfig::default(), 1, 1e-10).unwrap_err(), TransientError::Depleted);
}

#[test]
fn fixed_pulse_width_runs_to_length() {
    let s = PcgState::default();
    let cfg = PcgConfig { pulse: PulseWidth::FixedNs { ns: 100.0 }, ..PcgConfig::default() };
    let (_, _, run) = solve_pcg(&s, &cfg, 1, 1e-10).unwrap();
    assert!((run.cycles[0].pulse_seconds - 100e-9).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_loss_is_half_cv2(r in 10.0f64..1e5, c in 1e-15f64..1e-9, v in 0.1f64..3.0) {
        let tau = r * c;
        let wf = solve_rc(&RcCircuit::new(r, c, Source::Step { v }), tau / 50.0, 40.0 * tau).unwrap();
        let want = 0.5 * c * v * v;
        prop_assert!((wf.dissipated() - want).abs() <= 1e-3 * want);
        prop_assert!(wf.conservation_residual() <= 1e-6);
    }

    #[test]
    fn drains_never_go_negative(es in prop::collection::vec(0.0f64..1e-8, 1..50)) {
        let mut s = PcgState::default();
        for e in es {
            let before = s.tank_energy;
            s = drain_tank(&s, e);
            prop_assert!(s.tank_energy >= 0.0 && s.tank_energy <= before);
            prop_assert!(s.v_peak() >= 0.0);
        }
    }
}
