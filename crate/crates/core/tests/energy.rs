use acnn_core::bnn::Activation;
use acnn_core::capmap::{compile_chip, MapSpec};
use acnn_core::energy::{
    esop, multi_op_experiment, op_energy, op_loads, EnergyLedger, EnergyMode, EnergyModelCfg, ImportedTables,
    NoiseTrials, OpRecord,
};
use acnn_core::transient::PcgState;
use acnn_core::{BinaryNet, ChipModel, Class, Image64, LayerSpec};
use proptest::prelude::*;

fn chip() -> ChipModel {
    let l1 = vec![vec![0.5, -0.2, 0.1, 0.0], vec![-0.3, 0.9, 0.0, 0.2], vec![0.1, 0.1, -0.6, 0.4]];
    let l2 = vec![vec![0.4, -0.4, 0.2], vec![-0.2, 0.5, 0.3], vec![0.3, 0.3, -0.5], vec![-0.6, 0.2, 0.2]];
    let net =
        BinaryNet::new(vec![LayerSpec::new(l1, Activation::Heaviside), LayerSpec::new(l2, Activation::Heaviside)], 0.1)
            .unwrap();
    compile_chip(&net, &MapSpec::default()).unwrap().quantized().0
}

fn record(op: usize, v: f64) -> OpRecord {
    OpRecord {
        op,
        v_peak: 1.0,
        switched_ff: 100.0,
        adiabatic_pj: v,
        cmos_pj: 2.0 * v,
        pcg_pj: 3.0 * v,
        pcg_baseline_pj: v,
        error_rate: 0.0,
    }
}

#[test]
fn energies_scale_with_v_squared() {
    let chip = chip();
    let pcg = PcgState::default();
    let x = [true, false, true, true];
    for mode in [EnergyMode::Behavioral, EnergyMode::Coupled] {
        let cfg = EnergyModelCfg { mode, ..EnergyModelCfg::default() };
        let a = op_energy(&chip, &x, 1.2, &pcg, &cfg).unwrap();
        let b = op_energy(&chip, &x, 0.6, &pcg, &cfg).unwrap();
        for (hi, lo) in [(a.adiabatic_pj, b.adiabatic_pj), (a.pcg_pj, b.pcg_pj), (a.pcg_baseline_pj, b.pcg_baseline_pj)]
        {
            assert!(hi > 0.0);
            assert!((hi / lo - 4.0).abs() < 1e-3, "{mode:?}: {hi} / {lo}");
        }
        assert!(a.pcg_pj > a.pcg_baseline_pj);
        assert_eq!(a.cmos_pj, b.cmos_pj);
    }
}

#[test]
fn coupled_and_behavioral_agree_in_trend() {
    let chip = chip();
    let pcg = PcgState::default();
    let xs = [[false; 4], [true, false, false, false], [true, true, false, true], [true; 4]];
    let series = |mode| -> Vec<f64> {
        let cfg = EnergyModelCfg { mode, ..EnergyModelCfg::default() };
        xs.iter().map(|x| op_energy(&chip, x, 1.0, &pcg, &cfg).unwrap().pcg_pj).collect()
    };
    let b = series(EnergyMode::Behavioral);
    let c = series(EnergyMode::Coupled);
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            if b[i] < b[j] * (1.0 - 1e-6) {
                assert!(c[i] < c[j], "behavioral {b:?} coupled {c:?}");
            }
        }
    }
    for (b, c) in b.iter().zip(&c) {
        assert!(c / b > 0.2 && c / b < 5.0, "{b} vs {c}");
    }
}

#[test]
fn loads_follow_pulse_accounting() {
    let chip = chip();
    let x = [true, true, false, false];
    let loads = op_loads(&chip, &x, 3);
    assert_eq!(loads.pulses.len(), 3);
    assert_eq!(loads.pulses[1], loads.pulses[2]);
    let total: f64 = loads.pulses[1].iter().sum();
    assert!((total - loads.switched_ff).abs() < 1e-9);
    let first: f64 = loads.pulses[0].iter().sum();
    assert!(first <= total);
}

#[test]
fn multi_op_is_deterministic_and_monotone() {
    let chip = chip().with_seed(4);
    let img = Image64::new(u64::MAX, Class::Up);
    let cfg = EnergyModelCfg::default();
    let noise = NoiseTrials { trials: 10, seed: 2, threshold: 0.5 };
    let a = multi_op_experiment(&chip, &img, 40, &PcgState::default(), &cfg, &noise).unwrap();
    let b = multi_op_experiment(&chip, &img, 40, &PcgState::default(), &cfg, &noise).unwrap();
    assert_eq!(a.ledger, b.ledger);
    assert!(a.o_max <= 40);
    let v: Vec<f64> = a.ledger.records.iter().map(|r| r.v_peak).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    a.ledger.validate().unwrap();
}

#[test]
fn tables_reject_bad_rows() {
    let bad = "sample,ops,acnn_with_pcg_pj,acnn_without_pcg_pj,ccnn_pj\nUP,1,nope,1,1\n";
    let err = ImportedTables::read_csv(bad.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
}

#[test]
fn esop_rejects_nonphysical() {
    assert!(esop(1.0, 2.0, 1, 816, 1.0).is_err());
    assert!(esop(1.0, 0.5, 0, 816, 1.0).is_err());
    assert!(EnergyLedger::new(816).with_gamma(1.5, "").is_err());
}

proptest! {
    #[test]
    fn totals_ignore_record_order(vals in prop::collection::vec(1e-3f64..10.0, 1..40), seed in any::<u64>()) {
        let mut ledger = EnergyLedger::new(816);
        ledger.records = vals.iter().enumerate().map(|(i, &v)| record(i + 1, v)).collect();
        let a = ledger.totals();
        let n = ledger.records.len();
        let mut shuffled = ledger.clone();
        for i in (1..n).rev() {
            let j = (acnn_core::rng::mix64(seed ^ i as u64) % (i as u64 + 1)) as usize;
            shuffled.records.swap(i, j);
        }
        prop_assert_eq!(a, shuffled.totals());
    }

    #[test]
    fn esop_is_homogeneous(e in 1.0f64..1e3, frac in 0.0f64..1.0, k in 0.01f64..100.0, o in 1usize..1000) {
        let base = esop(e, e * frac, o, 816, 2.0 / 3.0).unwrap();
        let scaled = esop(k * e, k * e * frac, o, 816, 2.0 / 3.0).unwrap();
        prop_assert!((scaled - k * base).abs() <= 1e-12 * scaled.abs().max(1e-300));
        let more = esop(e, e * frac, 2 * o, 816, 2.0 / 3.0).unwrap();
        prop_assert!((more - base / 2.0).abs() <= 1e-12 * base.max(1e-300));
    }
}
