//! Independent reference implementations used to verify the corrector.

pub mod fine;
pub mod projection;
pub mod radial_return;
pub mod tensorial;

pub use fine::{dissipation_trapezoid, integrate_fine};
pub use projection::{projection_error, ProjectionErrors};
pub use radial_return::{radial_return_uniaxial, UniaxialState};
pub use tensorial::{integrate_tensorial, ProjectedScalars, TensorCorrectorState, TensorSeries};

use crate::corrector::CorrectedSeries;
use crate::material::MaterialParams;

/// Names of the columns returned by [`compare_with_tensorial`].
pub const COMPARED: [&str; 5] = ["s", "e", "e_p", "p_hat", "x"];

/// Largest difference between two sequences, scaled by the largest magnitude
/// of the reference sequence (or 1 when the reference is identically zero).
pub fn series_relative_difference(a: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    a.iter().zip(reference).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// [`series_relative_difference`] that reports 0 when both sequences stay
/// within `negligible` of zero.
pub fn series_difference_above(a: &[f64], reference: &[f64], negligible: f64) -> f64 {
    let peak = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak(a) <= negligible && peak(reference) <= negligible {
        0.0
    } else {
        series_relative_difference(a, reference)
    }
}

/// Series-relative differences in `(s, e, e_p, p_hat, x)` between a scalar
/// series and the projected tensorial reference.
///
/// A point loaded to within round-off of the yield stress may flow by a
/// sub-tolerance amount in one formulation and not the other. Variables whose
/// two series both stay below the change implied by `fy_tolerance` therefore
/// count as agreeing.
pub fn compare_with_tensorial(
    series: &CorrectedSeries,
    reference: &[ProjectedScalars],
    params: &MaterialParams,
    fy_tolerance: f64,
) -> [f64; 5] {
    let svm = series.sigma_vm;
    let ratio = if svm > 0.0 { fy_tolerance / svm } else { 0.0 };
    let mu = params.mu();
    let negligible = [ratio, ratio, ratio, ratio * svm / (3.0 * mu), ratio * 2.0 * mu];
    let scalar: [fn(&crate::corrector::ScalarCorrectorState) -> f64; 5] =
        [|s| s.s, |s| s.e, |s| s.e_p, |s| s.p_hat, |s| s.x];
    let tensor: [fn(&ProjectedScalars) -> f64; 5] = [|t| t.s, |t| t.e, |t| t.e_p, |t| t.p_hat, |t| t.x];
    std::array::from_fn(|k| {
        let a: Vec<f64> = series.states.iter().map(scalar[k]).collect();
        let b: Vec<f64> = reference.iter().map(tensor[k]).collect();
        series_difference_above(&a, &b, negligible[k])
    })
}
