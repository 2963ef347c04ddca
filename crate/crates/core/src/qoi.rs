//! Scalar quantities of interest computed from a corrected series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corrector::{CorrectedSeries, ScalarCorrectorState};
use crate::error::{Error, Result};
use crate::load::LoadHistory;
use crate::material::MaterialParams;

/// Range of cumulative plastic strain over cycle `cycle` (1-based).
pub fn delta_p(series: &CorrectedSeries, load: &LoadHistory, cycle: usize) -> Result<f64> {
    let (a, b) = load.cycle_window(cycle)?;
    let window = series
        .states
        .get(a..=b)
        .ok_or_else(|| Error::Input("series shorter than the load history".into()))?;
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s.p_hat), hi.max(s.p_hat))
    });
    Ok(hi - lo)
}

/// Integrand of the intrinsic dissipation per unit `dp_hat`:
/// `f_y + sigma_y + R^2/(2Q) + D/(2C) J(X)^2`.
pub fn dissipation_rate(state: &ScalarCorrectorState, sigma_vm: f64, params: &MaterialParams) -> Result<f64> {
    let mu = params.mu();
    let f_y = state.yield_function(sigma_vm, params);
    // R^2/(2Q) with R = Q(1 - exp(-b p)), written without the division
    let sat = -(-params.b * state.p_hat).exp_m1();
    let isotropic = 0.5 * params.q * sat * sat;
    let j_x = state.back_stress_norm(sigma_vm, mu);
    let kinematic = if params.c > 0.0 {
        params.d / (2.0 * params.c) * j_x * j_x
    } else if j_x == 0.0 || params.d == 0.0 {
        0.0
    } else {
        return Err(Error::ParameterDomain(
            "dissipation needs C > 0 when the back-stress is non-zero".into(),
        ));
    };
    Ok(f_y + params.sigma_y + isotropic + kinematic)
}

/// Intrinsic dissipation between samples `start` and `end`, accumulated with
/// end-of-step values times `dp_hat` increments.
pub fn dissipation(series: &CorrectedSeries, params: &MaterialParams, start: usize, end: usize) -> Result<f64> {
    if start > end || end >= series.len() {
        return Err(Error::Input(format!(
            "dissipation window [{start}, {end}] outside a series of {} samples",
            series.len()
        )));
    }
    let mut phi = 0.0;
    for w in series.states[start..=end].windows(2) {
        let dp = w[1].p_hat - w[0].p_hat;
        if dp > 0.0 {
            phi += dissipation_rate(&w[1], series.sigma_vm, params)? * dp;
        }
    }
    Ok(phi)
}

/// Scalar outputs that can be requested per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QoiKind {
    /// `p_hat` at the last sample.
    PFinal,
    /// `e_p` at the last sample.
    EpFinal,
    /// `s` at the last sample.
    SFinal,
    /// Cumulative plastic strain range over a cycle.
    DeltaP(usize),
    /// Dissipation over a cycle, or over the whole history with `None`.
    Dissipation(Option<usize>),
}

impl QoiKind {
    pub fn evaluate(&self, series: &CorrectedSeries, load: &LoadHistory, params: &MaterialParams) -> Result<f64> {
        match *self {
            QoiKind::PFinal => Ok(series.last().p_hat),
            QoiKind::EpFinal => Ok(series.last().e_p),
            QoiKind::SFinal => Ok(series.last().s),
            QoiKind::DeltaP(c) => delta_p(series, load, c),
            QoiKind::Dissipation(None) => dissipation(series, params, 0, series.len() - 1),
            QoiKind::Dissipation(Some(c)) => {
                let (a, b) = load.cycle_window(c)?;
                dissipation(series, params, a, b)
            }
        }
    }

    /// Checks that the load history supports this output.
    pub fn check(&self, load: &LoadHistory) -> Result<()> {
        match *self {
            QoiKind::DeltaP(c) | QoiKind::Dissipation(Some(c)) => load.cycle_window(c).map(|_| ()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for QoiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QoiKind::PFinal => write!(f, "p"),
            QoiKind::EpFinal => write!(f, "ep"),
            QoiKind::SFinal => write!(f, "s"),
            QoiKind::DeltaP(c) => write!(f, "dp:{c}"),
            QoiKind::Dissipation(None) => write!(f, "phi"),
            QoiKind::Dissipation(Some(c)) => write!(f, "phi:{c}"),
        }
    }
}

impl FromStr for QoiKind {
    type Err = Error;

    /// `p`, `ep`, `s`, `dp:<cycle>`, `phi` or `phi:<cycle>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("unknown quantity of interest `{s}`"));
        let cycle = |c: &str| -> Result<usize> { c.parse::<usize>().ok().filter(|&c| c > 0).ok_or_else(bad) };
        match s.trim().split_once(':') {
            None => match s.trim() {
                "p" => Ok(QoiKind::PFinal),
                "ep" => Ok(QoiKind::EpFinal),
                "s" => Ok(QoiKind::SFinal),
                "phi" => Ok(QoiKind::Dissipation(None)),
                _ => Err(bad()),
            },
            Some(("dp", c)) => Ok(QoiKind::DeltaP(cycle(c)?)),
            Some(("phi", c)) => Ok(QoiKind::Dissipation(Some(cycle(c)?))),
            Some(_) => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{integrate_point, SolverSettings};
    use approx::assert_relative_eq;

    fn run(svm: f64, params: &MaterialParams, load: &LoadHistory) -> CorrectedSeries {
        integrate_point(svm, load, params, &SolverSettings::for_material(params)).unwrap()
    }

    #[test]
    fn sub_yield_cycling_has_no_range_or_dissipation() {
        let m = MaterialParams::reference_steel(0.3).unwrap();
        let load = LoadHistory::triangle(0.8, 3, 10).unwrap();
        let s = run(100.0, &m, &load);
        assert_eq!(delta_p(&s, &load, 3).unwrap(), 0.0);
        assert_eq!(dissipation(&s, &m, 0, s.len() - 1).unwrap(), 0.0);
    }

    #[test]
    fn cycle_out_of_range() {
        let m = MaterialParams::reference_steel(0.3).unwrap();
        let load = LoadHistory::triangle(0.8, 2, 10).unwrap();
        let s = run(300.0, &m, &load);
        assert!(matches!(delta_p(&s, &load, 3), Err(Error::Input(_))));
        assert!(dissipation(&s, &m, 5, 4).is_err());
        assert!(dissipation(&s, &m, 0, s.len()).is_err());
    }

    #[test]
    fn perfect_plasticity_dissipates_yield_stress_times_p() {
        let m = MaterialParams::new(200_000.0, 0.3, 100.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let load = LoadHistory::ramp(1.5, 200).unwrap();
        let s = run(200.0, &m, &load);
        let p = s.last().p_hat;
        assert!(p > 0.0);
        let phi = dissipation(&s, &m, 0, s.len() - 1).unwrap();
        assert_relative_eq!(phi, m.sigma_y * p, max_relative = 1e-9);
    }

    #[test]
    fn kinematic_term_requires_modulus() {
        let m = MaterialParams::new(200_000.0, 0.3, 100.0, 0.0, 10.0, 0.0, 0.0).unwrap();
        let st = ScalarCorrectorState {
            x: 5.0,
            ..Default::default()
        };
        assert!(dissipation_rate(&st, 100.0, &m).is_err());
    }

    #[test]
    fn qoi_parsing() {
        for s in ["p", "ep", "s", "dp:20", "phi", "phi:3"] {
            assert_eq!(s.parse::<QoiKind>().unwrap().to_string(), s);
        }
        for s in ["q", "dp", "dp:0", "dp:x", "phi:"] {
            assert!(s.parse::<QoiKind>().is_err(), "{s}");
        }
    }
}
