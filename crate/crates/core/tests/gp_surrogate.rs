use std::sync::OnceLock;
use std::time::Instant;

use plastic_corrector::surrogate::{
    build_training_set, train, training_inputs, SurrogateModel, TrainOptions, SIGMA_LOW_RATIO,
};
use plastic_corrector::{integrate_point, LoadHistory, MaterialParams, QoiKind, SolverSettings};

fn steel() -> MaterialParams {
    MaterialParams::reference_steel(0.3).unwrap()
}

/// Sine with growing amplitude ending on its largest peak.
fn load() -> LoadHistory {
    let v: Vec<f64> = (0..1000)
        .map(|k| {
            let t = k as f64 / 999.0;
            (0.5 + 0.5 * t) * (2.0 * std::f64::consts::PI * 4.25 * t).sin()
        })
        .collect();
    LoadHistory::from_values(v).unwrap()
}

fn ep_model() -> &'static SurrogateModel {
    static MODEL: OnceLock<SurrogateModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let m = steel();
        let set = build_training_set(
            &m,
            &load(),
            150,
            12.0,
            QoiKind::EpFinal,
            &SolverSettings::for_material(&m),
        )
        .unwrap();
        train(&set, &TrainOptions::default()).unwrap()
    })
}

#[test]
fn two_samples_sit_at_the_interval_ends() {
    let x = training_inputs(100.0, 2, 12.0).unwrap();
    assert_eq!(x.len(), 2);
    assert!((x[0] - SIGMA_LOW_RATIO * 100.0).abs() <= 1e-15 * x[0]);
    assert_eq!(x[1], 1200.0);
}

#[test]
fn targets_vanish_below_onset_and_grow_above() {
    let m = steel();
    let l = load();
    let set = build_training_set(&m, &l, 150, 12.0, QoiKind::EpFinal, &SolverSettings::for_material(&m)).unwrap();
    let onset = set.onset.unwrap();
    assert!((onset - m.sigma_y / l.max_abs()).abs() <= 1e-12 * onset);
    let mut last = 0.0;
    for (&x, &t) in set.inputs.iter().zip(&set.targets) {
        if x <= onset {
            assert_eq!(t, 0.0, "stress {x}");
        } else {
            assert!(t > last, "stress {x}: {t} after {last}");
            last = t;
        }
    }
}

#[test]
fn sub_yield_load_trains_to_zero() {
    let m = steel();
    let quiet = LoadHistory::triangle(0.05, 2, 10).unwrap();
    let set = build_training_set(&m, &quiet, 40, 12.0, QoiKind::PFinal, &SolverSettings::for_material(&m)).unwrap();
    assert!(set.targets.iter().all(|&t| t == 0.0));
    let model = train(&set, &TrainOptions::default()).unwrap();
    for s in [0.5, 10.0, 300.0, 1199.0] {
        assert_eq!(model.predict_value(s).unwrap().0, 0.0);
    }
}

#[test]
fn leave_one_out_log_error_is_small() {
    let mut errs: Vec<f64> = ep_model().leave_one_out_log_errors().iter().map(|e| e.abs()).collect();
    errs.sort_by(f64::total_cmp);
    let median = errs[errs.len() / 2];
    assert!(median < 0.01, "{median:e}");
}

#[test]
fn predictions_are_nearly_monotone() {
    let model = ep_model();
    let (lo, hi) = (SIGMA_LOW_RATIO * 100.0, model.upper_limit());
    let grid: Vec<f64> = (0..1000).map(|i| lo + (hi - lo) * i as f64 / 999.0).collect();
    let pred: Vec<f64> = grid.iter().map(|&s| model.predict_value(s).unwrap().0).collect();
    let inversions = pred.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(inversions as f64 <= 0.01 * 999.0, "{inversions} inversions");
}

#[test]
fn prediction_throughput() {
    let model = ep_model();
    let n = 200_000;
    let hi = model.upper_limit();
    let start = Instant::now();
    let mut acc = 0.0;
    for i in 0..n {
        acc += model.predict_value(hi * (i as f64 + 0.5) / n as f64).unwrap().0;
    }
    let rate = n as f64 / start.elapsed().as_secs_f64();
    assert!(acc > 0.0);
    assert!(rate >= 1e5, "{rate:.3e} values/s");
}

#[test]
fn matches_direct_corrector_on_a_sweep() {
    let m = steel();
    let l = load();
    let st = SolverSettings::for_material(&m);
    let model = ep_model();
    for i in 0..200 {
        let s = 1.0 + 1199.0 * i as f64 / 199.0;
        let truth = integrate_point(s, &l, &m, &st).unwrap().last().e_p;
        let pred = model.predict_value(s).unwrap().0;
        if truth == 0.0 {
            assert_eq!(pred, 0.0, "stress {s}");
        } else {
            assert!(
                (pred - truth).abs() <= 0.02 * truth.abs(),
                "stress {s}: {pred} vs {truth}"
            );
        }
    }
}

#[test]
fn saved_model_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    ep_model().save(&path).unwrap();
    let back = SurrogateModel::load(&path).unwrap();
    for s in [0.3, 150.0, 640.0, 1200.0, 5000.0] {
        assert_eq!(back.predict(s).unwrap(), ep_model().predict(s).unwrap());
    }
}
