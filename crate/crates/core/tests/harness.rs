use std::path::PathBuf;

use topomsd::harness::{
    add_noise, compare_theory, keyed_rng, ExperimentConfig, HypothesisSpec, SliceLaw, SliceSpec,
    SliceSpecs, TopologySpec, Workspace,
};
use topomsd::linalg::norm_sq;
use topomsd::performance::threshold_for_pfa;
use topomsd::spectral::{Decomposition, Flavor, Part};

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn slices(node: SliceLaw, edge: SliceLaw, triangle: SliceLaw, side_power: f64) -> HypothesisSpec {
    HypothesisSpec::Slices(SliceSpecs {
        node: SliceSpec { law: node, power: side_power },
        edge: SliceSpec { law: edge, power: 1.0 },
        triangle: SliceSpec { law: triangle, power: side_power },
    })
}

fn forex() -> Workspace {
    Workspace::from_spec(&TopologySpec::Complete { n: 25 }).unwrap()
}

#[test]
fn signal_laws_land_in_their_subspaces() {
    let ws = forex();
    let h = ws.hodge(1).unwrap();
    let mut rng = keyed_rng(3, 77, 0);

    let curl = slices(SliceLaw::Zero, SliceLaw::CurlInduced, SliceLaw::Zero, 1.0);
    let s = ws.generate_signal(&curl, Flavor::Hodge(1), &mut rng).unwrap();
    let f = h.energy_fractions(s.slice(1)).unwrap();
    assert!(f[1] >= 1.0 - 1e-9 && f[0] <= 1e-9, "{f:?}");

    let grad = slices(SliceLaw::Zero, SliceLaw::GradientInduced, SliceLaw::Zero, 1.0);
    let s = ws.generate_signal(&grad, Flavor::Hodge(1), &mut rng).unwrap();
    let cx = ws.complex();
    assert!(norm_sq(&cx.curl(s.slice(1)).unwrap()) <= 1e-18 * norm_sq(s.slice(1)));
    assert!(norm_sq(&cx.divergence(s.slice(1)).unwrap()) > 1.0);
    // Unit average power per simplex.
    assert!((norm_sq(s.slice(1)) - 300.0).abs() < 1e-9);

    let h0 = slices(SliceLaw::LowerInduced, SliceLaw::GradientInduced, SliceLaw::Zero, 1.0);
    let s = ws.generate_signal(&h0, Flavor::Dirac, &mut rng).unwrap();
    let d = ws.dirac().unwrap();
    let flat = s.flatten();
    assert!(d.part(Part::Curl).energy(&flat).unwrap() <= 1e-9 * norm_sq(&flat));
}

#[test]
fn clean_signals_have_equal_energy() {
    let ws = forex();
    let cfg = config("forex_dsd.json");
    for t in 0..4 {
        let (s0, s1) = ws.clean_pair(&cfg, t).unwrap();
        assert!(s1.energy() > 0.0);
        assert!((s0.energy() - s1.energy()).abs() <= 1e-10 * s1.energy());
    }
}

#[test]
fn zero_db_noise_matches_signal_energy() {
    let ws = Workspace::from_spec(&TopologySpec::Complete { n: 5 }).unwrap();
    let spec = slices(SliceLaw::Zero, SliceLaw::CurlInduced, SliceLaw::Zero, 1.0);
    let s = ws
        .generate_signal(&spec, Flavor::Hodge(1), &mut keyed_rng(1, 9, 0))
        .unwrap();
    let draws = 10_000;
    let mut mean = 0.0;
    let mut sigma2 = 0.0;
    for seed in 0..draws {
        let (noisy, v) = add_noise(&s, 0.0, seed).unwrap();
        sigma2 = v;
        let n: f64 = noisy
            .flatten()
            .iter()
            .zip(s.flatten())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        mean += n / draws as f64;
    }
    let dim = s.len() as f64;
    let sd_of_mean = sigma2 * (2.0 * dim).sqrt() / (draws as f64).sqrt();
    assert!((mean - s.energy()).abs() <= 3.0 * sd_of_mean, "{mean} vs {}", s.energy());
}

#[test]
fn null_false_alarm_rate_is_binomial() {
    let ws = forex();
    let mut cfg = config("forex_hsd.json");
    cfg.trials = 4000;
    cfg.seed = 99;
    let out = ws.run(&cfg).unwrap();
    let g = threshold_for_pfa(0.1, out.dof.unwrap() as f64).unwrap();
    let rate = out.h0.iter().filter(|&&t| t > g).count() as f64 / cfg.trials as f64;
    let band = 3.0 * (0.1 * 0.9 / cfg.trials as f64).sqrt();
    assert!((rate - 0.1).abs() <= band, "{rate}");
}

#[test]
fn matched_theory_gap_is_small() {
    let ws = forex();
    let mut cfg = config("forex_hsd.json");
    cfg.trials = 10_000;
    let out = ws.run(&cfg).unwrap();
    let cmp = compare_theory(&out.roc().unwrap(), 276.0, out.delta.unwrap()).unwrap();
    assert!(cmp.gap <= 0.02, "{cmp:?}");

    // Same law under both hypotheses.
    cfg.h1 = cfg.h0.clone();
    cfg.trials = 2000;
    let out = ws.run(&cfg).unwrap();
    assert!(out.delta.unwrap() < 1e-9);
    let cmp = compare_theory(&out.roc().unwrap(), 276.0, out.delta.unwrap()).unwrap();
    assert!((cmp.theoretical - 0.5).abs() < 1e-3);
    assert!((cmp.empirical - 0.5).abs() < 0.05);
}

#[test]
fn fresh_samples_are_reproducible() {
    let ws = Workspace::from_spec(&TopologySpec::Complete { n: 8 }).unwrap();
    let mut cfg = config("forex_hsd.json");
    cfg.topology = TopologySpec::Complete { n: 8 };
    cfg.fresh_samples = true;
    cfg.trials = 64;
    let a = ws.run(&cfg).unwrap();
    let b = ws.run(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.deltas.len(), 64);
    assert!(a.deltas.windows(2).any(|w| w[0] != w[1]));
}

/// Node and triangle signals carry no information for the edge-only
/// detector, but they add noncentrality to the joint detector.
#[test]
fn dirac_overtakes_hodge_as_side_signals_grow() {
    let ws = forex();
    let hodge = ws.run(&config("forex_hsd.json")).unwrap().roc().unwrap().auc;
    let mut gaps = Vec::new();
    for power in [0.0, 0.05, 0.2, 0.5, 1.0] {
        let mut cfg = config("forex_dsd.json");
        cfg.seed = config("forex_hsd.json").seed;
        cfg.h0 = slices(SliceLaw::LowerInduced, SliceLaw::GradientInduced, SliceLaw::Zero, power);
        cfg.h1 = slices(SliceLaw::Zero, SliceLaw::CurlInduced, SliceLaw::UpperInduced, power);
        let auc = ws.run(&cfg).unwrap().roc().unwrap().auc;
        gaps.push(auc - hodge);
    }
    assert!(gaps[0] <= 0.0, "{gaps:?}");
    assert!(*gaps.last().unwrap() > 0.0, "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] >= w[0] - 0.01), "{gaps:?}");
}
