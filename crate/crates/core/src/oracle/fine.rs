//! Convergence oracle: the scalar corrector on a load history subdivided
//! `refinement` times, plus a trapezoidal dissipation integral.

use crate::corrector::{integrate_point, CorrectedSeries, SolverSettings};
use crate::error::{Error, Result};
use crate::load::LoadHistory;
use crate::material::MaterialParams;
use crate::qoi::dissipation_rate;

/// Series on the refined history; sample `i` of the original load sits at
/// index `i * refinement`.
pub fn integrate_fine(
    sigma_vm: f64,
    load: &LoadHistory,
    params: &MaterialParams,
    refinement: usize,
) -> Result<CorrectedSeries> {
    let fine = load.refined(refinement)?;
    integrate_point(sigma_vm, &fine, params, &SolverSettings::for_material(params))
}

/// Keeps every `refinement`-th state so the result aligns with the coarse load.
pub fn coarse_view(series: &CorrectedSeries, refinement: usize) -> CorrectedSeries {
    CorrectedSeries {
        sigma_vm: series.sigma_vm,
        states: series.states.iter().step_by(refinement.max(1)).copied().collect(),
    }
}

/// Dissipation between samples `start` and `end` by the trapezoidal rule in
/// `p_hat`.
pub fn dissipation_trapezoid(
    series: &CorrectedSeries,
    params: &MaterialParams,
    start: usize,
    end: usize,
) -> Result<f64> {
    if start > end || end >= series.len() {
        return Err(Error::Input(format!(
            "window [{start}, {end}] outside a series of {} samples",
            series.len()
        )));
    }
    let mut phi = 0.0;
    let mut rate_prev = dissipation_rate(&series.states[start], series.sigma_vm, params)?;
    for w in series.states[start..=end].windows(2) {
        let rate = dissipation_rate(&w[1], series.sigma_vm, params)?;
        let dp = w[1].p_hat - w[0].p_hat;
        if dp > 0.0 {
            phi += 0.5 * (rate + rate_prev) * dp;
        }
        rate_prev = rate;
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_refinement_is_the_corrector() {
        let m = MaterialParams::reference_steel(0.3).unwrap();
        let load = LoadHistory::triangle(0.8, 2, 12).unwrap();
        let direct = integrate_point(260.0, &load, &m, &SolverSettings::for_material(&m)).unwrap();
        let fine = integrate_fine(260.0, &load, &m, 1).unwrap();
        assert_eq!(direct, fine);
    }

    #[test]
    fn sub_yield_zeros_at_any_refinement() {
        let m = MaterialParams::reference_steel(0.3).unwrap();
        let load = LoadHistory::triangle(0.8, 2, 5).unwrap();
        for r in [1, 3, 10] {
            let s = integrate_fine(110.0, &load, &m, r).unwrap();
            assert!(s
                .states
                .iter()
                .all(|st| st.p_hat == 0.0 && st.e_p == 0.0 && st.x == 0.0));
        }
    }

    #[test]
    fn coarse_view_aligns() {
        let m = MaterialParams::reference_steel(0.3).unwrap();
        let load = LoadHistory::ramp(1.5, 10).unwrap();
        let fine = integrate_fine(150.0, &load, &m, 4).unwrap();
        assert_eq!(coarse_view(&fine, 4).len(), load.len());
    }
}
