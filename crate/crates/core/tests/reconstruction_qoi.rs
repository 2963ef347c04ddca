use plastic_corrector::oracle::{integrate_tensorial, ProjectedScalars};
use plastic_corrector::qoi::{delta_p, dissipation};
use plastic_corrector::reconstruction::{reconstruct_all, reconstruct_stress};
use plastic_corrector::{
    integrate_point, ElasticPointRecord, LoadHistory, MaterialParams, QoiKind, SolverSettings, SymTensor3,
};
use proptest::prelude::*;

fn steel() -> MaterialParams {
    MaterialParams::reference_steel(0.3).unwrap()
}

/// Uniaxial-dominated elastic stress with some shear and a hydrostatic part.
fn record(svm: f64) -> ElasticPointRecord {
    let stress = SymTensor3::new(3.0, 0.4, -0.2, 0.5, 0.0, 0.1);
    let dev = stress.deviatoric();
    let k = svm / dev.equivalent_norm();
    ElasticPointRecord::new("n", None, Some(dev * k), Some(stress.trace() * k)).unwrap()
}

#[test]
fn ramp_axial_stress_matches_tensorial() {
    let m = steel();
    let load = LoadHistory::ramp(1.55, 1000).unwrap();
    let rec = record(m.sigma_y);
    let series = integrate_point(rec.sigma_vm, &load, &m, &SolverSettings::for_material(&m)).unwrap();
    let rebuilt = reconstruct_stress(&series, &rec, &load).unwrap();
    let oracle = integrate_tensorial(&rec, &load, &m, 1e-9 * m.sigma_y).unwrap();
    let last = load.len() - 1;
    let (dev, trace) = (rec.dev_sigma.unwrap(), rec.trace_sigma.unwrap());
    let axial = rebuilt[last].xx - load.values()[last] * trace / 3.0;
    assert_eq!(axial, series.last().s * dev.xx);
    let reference = oracle.states[last].dev_stress.xx;
    assert!(
        (axial - reference).abs() <= 1e-8 * reference.abs(),
        "{axial} vs {reference}"
    );
    for (a, b) in rebuilt.iter().zip(&oracle.states) {
        let d = (a.deviatoric() - b.dev_stress).frobenius_norm();
        assert!(d <= 1e-8 * rec.sigma_vm, "{d:e}");
    }
}

#[test]
fn reconstructed_equivalent_stress_matches_scalar_form() {
    let m = steel();
    let load = LoadHistory::triangle(0.9, 3, 20).unwrap();
    let rec = record(3.0 * m.sigma_y);
    let series = integrate_point(rec.sigma_vm, &load, &m, &SolverSettings::for_material(&m)).unwrap();
    let tensors = reconstruct_all(&series, &rec, &load, &m).unwrap();
    let scalar = series.equivalent_stress(m.mu());
    for ((t, j), st) in tensors.iter().zip(&scalar).zip(&series.states) {
        let from_tensors = (t.stress.deviatoric() - t.back_stress).equivalent_norm();
        assert!(
            (from_tensors - j).abs() <= 1e-9 * j.max(1e-300),
            "{from_tensors} vs {j}"
        );
        let vm = t.stress.deviatoric().equivalent_norm();
        assert!((vm - st.s.abs() * rec.sigma_vm).abs() <= 1e-12 * rec.sigma_vm);
    }
}

fn tensorial_delta_p(p: &[ProjectedScalars], window: (usize, usize)) -> f64 {
    let w = &p[window.0..=window.1];
    let hi = w.iter().map(|s| s.p_hat).fold(f64::NEG_INFINITY, f64::max);
    let lo = w.iter().map(|s| s.p_hat).fold(f64::INFINITY, f64::min);
    hi - lo
}

#[test]
fn twentieth_cycle_plastic_range_matches_tensorial() {
    let m = steel();
    let load = LoadHistory::triangle(0.8, 20, 25).unwrap();
    let rec = record(2.0 * m.sigma_y);
    let series = integrate_point(rec.sigma_vm, &load, &m, &SolverSettings::for_material(&m)).unwrap();
    let oracle = integrate_tensorial(&rec, &load, &m, 1e-9 * m.sigma_y)
        .unwrap()
        .projections();
    let dp20 = delta_p(&series, &load, 20).unwrap();
    let reference = tensorial_delta_p(&oracle, load.cycle_window(20).unwrap());
    assert!(dp20 > 0.0);
    assert!((dp20 - reference).abs() <= 1e-6 * reference, "{dp20} vs {reference}");
    assert_eq!(QoiKind::DeltaP(20).evaluate(&series, &load, &m).unwrap(), dp20);

    let dp2 = delta_p(&series, &load, 2).unwrap();
    assert!(dp20 <= dp2 + 1e-12, "{dp20} > {dp2}");
}

#[test]
fn elastic_cycle_dissipates_nothing() {
    let m = steel();
    let load = LoadHistory::triangle(0.8, 4, 10).unwrap();
    let series = integrate_point(1.2 * m.sigma_y, &load, &m, &SolverSettings::for_material(&m)).unwrap();
    assert_eq!(delta_p(&series, &load, 3).unwrap(), 0.0);
    assert_eq!(dissipation(&series, &m, 0, series.len() - 1).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn dissipation_is_never_negative(
        values in prop::collection::vec(-1.6f64..1.6, 2..50),
        k in 0.0f64..12.0,
        a in 0usize..50,
        b in 0usize..50,
    ) {
        let m = steel();
        let load = LoadHistory::from_values(values).unwrap();
        let series = integrate_point(k * m.sigma_y, &load, &m, &SolverSettings::for_material(&m)).unwrap();
        let n = series.len();
        let (a, b) = (a % n, b % n);
        let (a, b) = (a.min(b), a.max(b));
        prop_assert!(dissipation(&series, &m, a, b).unwrap() >= 0.0);
    }

    #[test]
    fn elastic_points_rebuild_the_scaled_field(values in prop::collection::vec(-1.0f64..1.0, 2..30)) {
        let m = steel();
        let load = LoadHistory::from_values(values).unwrap();
        let rec = record(0.9 * m.sigma_y);
        let series = integrate_point(rec.sigma_vm, &load, &m, &SolverSettings::for_material(&m)).unwrap();
        let full = rec.dev_sigma.unwrap() + SymTensor3::IDENTITY * (rec.trace_sigma.unwrap() / 3.0);
        for (t, f) in reconstruct_stress(&series, &rec, &load).unwrap().iter().zip(load.values()) {
            prop_assert!((*t - full * *f).frobenius_norm() <= 1e-12 * full.frobenius_norm());
        }
    }
}
