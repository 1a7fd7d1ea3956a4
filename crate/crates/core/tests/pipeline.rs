use acnn_core::bnn::{self, load_net, save_net, TrainCfg};
use acnn_core::capmap::{compile_chip, MapSpec};
use acnn_core::chip::{load_chip, save_chip};
use acnn_core::dataset::{self, load_dataset, save_dataset};
use acnn_core::sim::{self, run_split, simulate_op, write_trace_csv, McConfig};
use acnn_core::{ChipModel, DatasetSplit};

fn small() -> (DatasetSplit, acnn_core::BinaryNet) {
    let split = dataset::generate_dataset(7, 1200, 400).unwrap();
    let cfg = TrainCfg { epochs: 6, ..TrainCfg::default() };
    let net = bnn::train(&split, &cfg, 3).unwrap().quantize(&cfg.quant).with_heaviside_output();
    (split, net)
}

#[test]
fn dataset_is_reproducible_and_round_trips() {
    let a = dataset::generate_dataset(11, 500, 100).unwrap();
    let b = dataset::generate_dataset(11, 500, 100).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, dataset::generate_dataset(12, 500, 100).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("arrows.csv");
    save_dataset(&a, &p).unwrap();
    assert_eq!(load_dataset(&p).unwrap(), a);
    let counts = DatasetSplit::class_counts(&a.test);
    assert!(counts.iter().all(|&c| c >= 20), "{counts:?}");
}

#[test]
fn full_pipeline_is_deterministic() {
    let (split, net) = small();
    let (again_split, again_net) = small();
    assert_eq!(split, again_split);
    assert_eq!(net, again_net);

    let dir = tempfile::tempdir().unwrap();
    save_net(&net, dir.path().join("net.json")).unwrap();
    let net2 = load_net(dir.path().join("net.json")).unwrap();
    assert_eq!(net, net2);

    let (chip, _) = compile_chip(&net, &MapSpec::default()).unwrap().quantized();
    save_chip(&chip, dir.path().join("chip.json")).unwrap();
    let chip2 = load_chip(dir.path().join("chip.json")).unwrap();
    assert_eq!(chip, chip2);

    let cfg = McConfig { v_peak: 1.5, iterations: 3, chip_seeds: vec![1, 2] };
    let r1 = run_split(&chip, &net, &split.test, &cfg).unwrap();
    let r2 = run_split(&chip2, &net2, &split.test, &cfg).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(r1.chips.len(), 2);
    assert!(r1.accuracy_mean_std().0 > 0.8);
}

#[test]
fn chip_realization_depends_only_on_seed() {
    let (split, net) = small();
    let chip: ChipModel = compile_chip(&net, &MapSpec::default()).unwrap().with_seed(5);
    let a = chip.realize();
    let b = chip.realize();
    assert_eq!(a, b);
    assert_ne!(a, chip.with_seed(6).realize());
    let x = split.test[0].bits();
    let t1 = simulate_op(&a, &x, 1.5, Some(9));
    let t2 = simulate_op(&b, &x, 1.5, Some(9));
    assert_eq!(t1, t2);
    assert_eq!(t1.valid_after_cycles, 2);
}

#[test]
fn trace_csv_lists_every_neuron() {
    let (split, net) = small();
    let chip = compile_chip(&net, &MapSpec::default()).unwrap();
    let trace = simulate_op(&chip.realize(), &split.test[3].bits(), 1.5, Some(1));
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let rows = String::from_utf8(buf).unwrap().lines().count() - 1;
    assert_eq!(rows, chip.layers.iter().map(Vec::len).sum::<usize>());
}

#[test]
fn noise_rate_grows_with_comparator_noise() {
    let (split, net) = small();
    let chip = compile_chip(&net, &MapSpec::default()).unwrap().noiseless();
    let mut rates = Vec::new();
    for sigma in [0.0, 0.005, 0.05] {
        let mut c = chip.clone();
        c.comparator.noise_sigma = sigma;
        rates.push(sim::noise_error_rates(&c.realize(), &split.test[..100], &[1.0], 50, 3)[0]);
    }
    assert_eq!(rates[0], 0.0);
    assert!(rates[0] <= rates[1] && rates[1] < rates[2], "{rates:?}");
}
