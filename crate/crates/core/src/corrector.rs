//! Scalar plastic corrector.
//!
//! Under local proportionality every deviatoric tensor at a quadrature point
//! is a scalar multiple of the elastic solution at `f = 1`, and the whole
//! elasto-plastic update reduces to five ratios `(s, e, e_p, p_hat, x)`:
//!
//! ```text
//! Neuber          (s - s_o)(e - e_o) = (f - f_o)^2
//! elasticity      (s - s_o) = (e - e_o) - (e_p - e_p_o)
//! yield           f_y = |s - x/(2 mu)| svm - sigma_y - R(p_hat) <= 0
//! kinematic       dx = 2/3 C de_p - D x dp_hat
//! cumulative      dp_hat = |de_p| svm / (3 mu)
//! ```
//!
//! Time integration is fully implicit. Each step first tries an elastic
//! update at frozen `e_p`; if the trial yield function is positive the new
//! `e_p` is found by Newton iteration on `f_y(e_p) = 0` with a central
//! finite-difference slope, falling back to bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load::{Direction, LoadHistory};
use crate::material::MaterialParams;

/// Points whose elastic von Mises stress is below this fraction of the
/// yield stress are integrated as the elastic identity `s = e = f`.
pub const NEGLIGIBLE_STRESS_RATIO: f64 = 1e-12;

/// Values of the scalar variables at the last load reversal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Origin {
    pub s: f64,
    pub e: f64,
    pub e_p: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalarCorrectorState {
    /// Deviatoric stress ratio.
    pub s: f64,
    /// Deviatoric strain ratio.
    pub e: f64,
    /// Deviatoric plastic strain ratio.
    pub e_p: f64,
    /// Cumulative plastic strain.
    pub p_hat: f64,
    /// Back-stress ratio, in MPa.
    pub x: f64,
    pub origin: Origin,
}

impl ScalarCorrectorState {
    /// Equivalent stress `|s - x/(2 mu)| svm`.
    pub fn equivalent_stress(&self, sigma_vm: f64, mu: f64) -> f64 {
        (self.s - self.x / (2.0 * mu)).abs() * sigma_vm
    }

    /// Yield function at this state.
    pub fn yield_function(&self, sigma_vm: f64, params: &MaterialParams) -> f64 {
        self.equivalent_stress(sigma_vm, params.mu()) - params.sigma_y - params.isotropic_hardening(self.p_hat)
    }

    /// Von Mises norm of the back-stress, `|x| svm / (2 mu)`.
    pub fn back_stress_norm(&self, sigma_vm: f64, mu: f64) -> f64 {
        self.x.abs() * sigma_vm / (2.0 * mu)
    }

    /// Residual of the Neuber constraint at load level `f`.
    pub fn neuber_residual(&self, f: f64) -> f64 {
        let df = f - self.origin.f;
        (self.s - self.origin.s) * (self.e - self.origin.e) - df * df
    }

    fn reset_origin(&mut self, f: f64) {
        self.origin = Origin {
            s: self.s,
            e: self.e,
            e_p: self.e_p,
            f,
        };
    }
}

/// Local solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Convergence threshold on `|f_y|`, in MPa.
    pub fy_tolerance: f64,
    pub max_newton_iters: usize,
    /// Relative finite-difference step; the absolute step is
    /// `max(fd_step, fd_step * |e_p|)`.
    pub fd_step: f64,
    pub bisection_fallback: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            fy_tolerance: 1e-7,
            max_newton_iters: 50,
            fd_step: 1e-8,
            bisection_fallback: true,
        }
    }
}

impl SolverSettings {
    /// Defaults with the yield tolerance set to `1e-9 sigma_y`.
    pub fn for_material(params: &MaterialParams) -> Self {
        SolverSettings {
            fy_tolerance: 1e-9 * params.sigma_y,
            ..SolverSettings::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fy_tolerance > 0.0) {
            return Err(Error::ParameterDomain("fy_tolerance must be > 0".into()));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::ParameterDomain("max_newton_iters must be >= 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::ParameterDomain("fd_step must be > 0".into()));
        }
        Ok(())
    }
}

/// Trial stress ratio at frozen plastic strain: the root of the Neuber
/// quadratic on the branch selected by the loading direction.
pub fn trial_stress_ratio(e_p_prev: f64, f_next: f64, f_prev: f64, origin: &Origin) -> f64 {
    let dir = if f_next >= f_prev { 1.0 } else { -1.0 };
    neuber_stress(e_p_prev - origin.e_p, f_next - origin.f, dir) + origin.s
}

/// `s - s_o` solving `r^2 + delta r - df^2 = 0` on the branch `dir`.
#[inline]
fn neuber_stress(delta: f64, df: f64, dir: f64) -> f64 {
    0.5 * (-delta + dir * (delta * delta + 4.0 * df * df).sqrt())
}

/// Everything that stays fixed while solving one step.
struct StepProblem<'a> {
    prev: &'a ScalarCorrectorState,
    df: f64,
    dir: f64,
    /// flow direction, sign of `s - x/(2 mu)`
    flow: f64,
    sigma_vm: f64,
    mu2: f64,
    /// `svm / (3 mu)`: converts `|de_p|` into `dp_hat`
    p_factor: f64,
    params: &'a MaterialParams,
}

impl StepProblem<'_> {
    /// Yield function along the admissible branch `flow * (e_p - e_p_prev) >= 0`,
    /// written without absolute values so it is smooth in `e_p`.
    #[inline]
    fn residual(&self, e_p: f64) -> f64 {
        let prev = self.prev;
        let inc = e_p - prev.e_p;
        let dp = self.flow * inc * self.p_factor;
        let s = prev.origin.s + neuber_stress(e_p - prev.origin.e_p, self.df, self.dir);
        let x = (prev.x + (2.0 / 3.0) * self.params.c * inc) / (1.0 + self.params.d * dp);
        self.flow * (s - x / self.mu2) * self.sigma_vm
            - self.params.sigma_y
            - self.params.isotropic_hardening(prev.p_hat + dp)
    }

    fn state_at(&self, e_p: f64) -> ScalarCorrectorState {
        let prev = self.prev;
        let inc = e_p - prev.e_p;
        let dp = inc.abs() * self.p_factor;
        let s = prev.origin.s + neuber_stress(e_p - prev.origin.e_p, self.df, self.dir);
        let e = prev.origin.e + (s - prev.origin.s) + (e_p - prev.origin.e_p);
        let x = (prev.x + (2.0 / 3.0) * self.params.c * inc) / (1.0 + self.params.d * dp);
        ScalarCorrectorState {
            s,
            e,
            e_p,
            p_hat: prev.p_hat + dp,
            x,
            origin: prev.origin,
        }
    }

    fn newton(&self, settings: &SolverSettings) -> Option<f64> {
        let start = self.prev.e_p;
        let mut e_p = start;
        let mut r = self.residual(e_p);
        for _ in 0..settings.max_newton_iters {
            if r.abs() <= settings.fy_tolerance {
                return Some(e_p);
            }
            let h = settings.fd_step.max(settings.fd_step * e_p.abs());
            let slope = (self.residual(e_p + h) - self.residual(e_p - h)) / (2.0 * h);
            if !(slope.is_finite() && slope != 0.0) {
                return None;
            }
            let next = e_p - r / slope;
            if !next.is_finite() || self.flow * (next - start) < 0.0 {
                return None;
            }
            e_p = next;
            r = self.residual(e_p);
        }
        (r.abs() <= settings.fy_tolerance).then_some(e_p)
    }

    fn bisection(&self, settings: &SolverSettings, r_start: f64) -> Option<f64> {
        let start = self.prev.e_p;
        let mut lo = start;
        let mut width = 1e-6 * (1.0 + start.abs());
        let mut hi = start + self.flow * width;
        let mut r_hi = self.residual(hi);
        let mut grow = 0;
        while r_hi > 0.0 {
            lo = hi;
            width *= 2.0;
            hi = start + self.flow * width;
            r_hi = self.residual(hi);
            grow += 1;
            if grow > 200 || !r_hi.is_finite() {
                return None;
            }
        }
        debug_assert!(r_start > 0.0);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            let r = self.residual(mid);
            if r.abs() <= settings.fy_tolerance {
                return Some(mid);
            }
            if mid == lo || mid == hi {
                break;
            }
            if r > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        None
    }
}

/// Advances the scalar state from load level `f_prev` to `f_next`.
///
/// The origin stored in `state` is used as is; callers reset it at reversals.
/// The error carries time index 0; [`integrate_point`] fills in the sample.
pub fn step(
    state: &ScalarCorrectorState,
    f_prev: f64,
    f_next: f64,
    sigma_vm: f64,
    params: &MaterialParams,
    settings: &SolverSettings,
) -> Result<ScalarCorrectorState> {
    let Some(direction) = Direction::of(f_prev, f_next) else {
        return Ok(*state);
    };
    if sigma_vm < NEGLIGIBLE_STRESS_RATIO * params.sigma_y {
        return Ok(ScalarCorrectorState {
            s: f_next,
            e: f_next,
            ..*state
        });
    }
    let dir = direction.sign();
    let origin = state.origin;
    let df = f_next - origin.f;
    let mu2 = 2.0 * params.mu();

    let s_trial = origin.s + neuber_stress(state.e_p - origin.e_p, df, dir);
    let shifted = s_trial - state.x / mu2;
    let fy_trial = shifted.abs() * sigma_vm - params.sigma_y - params.isotropic_hardening(state.p_hat);
    if fy_trial <= 0.0 {
        return Ok(ScalarCorrectorState {
            s: s_trial,
            e: origin.e + (s_trial - origin.s) + (state.e_p - origin.e_p),
            ..*state
        });
    }

    let problem = StepProblem {
        prev: state,
        df,
        dir,
        flow: shifted.signum(),
        sigma_vm,
        mu2,
        p_factor: sigma_vm / (3.0 * params.mu()),
        params,
    };
    let e_p = problem
        .newton(settings)
        .or_else(|| {
            settings
                .bisection_fallback
                .then(|| problem.bisection(settings, fy_trial))
                .flatten()
        })
        .ok_or_else(|| Error::Convergence {
            time_index: 0,
            reason: format!("plastic solve failed from f = {f_prev} to {f_next}, trial f_y = {fy_trial:e}"),
        })?;
    Ok(problem.state_at(e_p))
}

/// Scalar time series of one quadrature point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedSeries {
    pub sigma_vm: f64,
    /// One state per load sample.
    pub states: Vec<ScalarCorrectorState>,
}

impl CorrectedSeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &ScalarCorrectorState {
        self.states.last().expect("series is never empty")
    }

    /// `p_hat(t)`.
    pub fn p_hat(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.p_hat)
    }

    /// Equivalent stress `J(t) = |s - x/(2 mu)| svm`.
    pub fn equivalent_stress(&self, mu: f64) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.equivalent_stress(self.sigma_vm, mu))
            .collect()
    }
}

/// Integrates one point over the full load history, calling `visit` with the
/// converged state at every sample. The unloaded state at `f = 0` with zero
/// origin precedes the first sample.
pub fn integrate_with<F>(
    sigma_vm: f64,
    load: &LoadHistory,
    params: &MaterialParams,
    settings: &SolverSettings,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &ScalarCorrectorState),
{
    if !(sigma_vm >= 0.0 && sigma_vm.is_finite()) {
        return Err(Error::Precondition(format!(
            "elastic von Mises stress must be finite and >= 0, got {sigma_vm}"
        )));
    }
    let values = load.values();
    let resets = load.origin_resets();
    let mut next_reset = resets.iter().copied().peekable();
    let with_index = |e: Error, i: usize| match e {
        Error::Convergence { reason, .. } => Error::Convergence { time_index: i, reason },
        other => other,
    };

    let mut state = step(
        &ScalarCorrectorState::default(),
        0.0,
        values[0],
        sigma_vm,
        params,
        settings,
    )
    .map_err(|e| with_index(e, 0))?;
    visit(0, &state);
    for i in 1..values.len() {
        if next_reset.peek() == Some(&(i - 1)) {
            next_reset.next();
            state.reset_origin(values[i - 1]);
        }
        state = step(&state, values[i - 1], values[i], sigma_vm, params, settings).map_err(|e| with_index(e, i))?;
        visit(i, &state);
    }
    Ok(())
}

/// Full scalar series for one point.
pub fn integrate_point(
    sigma_vm: f64,
    load: &LoadHistory,
    params: &MaterialParams,
    settings: &SolverSettings,
) -> Result<CorrectedSeries> {
    let mut states = Vec::with_capacity(load.len());
    integrate_with(sigma_vm, load, params, settings, |_, s| states.push(*s))?;
    Ok(CorrectedSeries { sigma_vm, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn steel() -> MaterialParams {
        MaterialParams::reference_steel(0.3).unwrap()
    }

    #[test]
    fn trial_elastic_branch() {
        let o = Origin::default();
        assert_eq!(trial_stress_ratio(0.0, 0.5, 0.0, &o), 0.5);
        assert_eq!(trial_stress_ratio(0.0, -0.5, 0.0, &o), -0.5);
    }

    #[test]
    fn trial_with_plastic_strain() {
        let s = trial_stress_ratio(0.2, 1.0, 0.0, &Origin::default());
        // closed form (-0.2 + sqrt(0.04 + 4)) / 2
        assert_relative_eq!(s, 0.904_987_562_112_089, max_relative = 1e-14);
        assert_relative_eq!(s * (s + 0.2), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn trial_respects_origin() {
        let o = Origin {
            s: 0.9,
            e: 1.4,
            e_p: 0.5,
            f: 1.1,
        };
        let s = trial_stress_ratio(0.5, 0.6, 1.1, &o);
        assert_relative_eq!(s - o.s, -0.5, max_relative = 1e-14);
    }

    #[test]
    fn plateau_is_noop() {
        let m = steel();
        let st = ScalarCorrectorState {
            s: 0.3,
            e: 0.7,
            e_p: 0.4,
            p_hat: 0.01,
            x: 12.0,
            origin: Origin::default(),
        };
        let out = step(&st, 0.6, 0.6, 500.0, &m, &SolverSettings::for_material(&m)).unwrap();
        assert_eq!(out, st);
    }

    #[test]
    fn below_yield_point_stays_elastic() {
        let m = steel();
        let load = LoadHistory::ramp(1.0, 37).unwrap();
        let series = integrate_point(50.0, &load, &m, &SolverSettings::for_material(&m)).unwrap();
        let last = series.last();
        assert_eq!(last.p_hat, 0.0);
        assert_relative_eq!(last.s, 1.0, max_relative = 1e-15);
        assert_relative_eq!(last.e, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn stress_free_point() {
        let m = steel();
        let load = LoadHistory::triangle(0.8, 2, 10).unwrap();
        let series = integrate_point(0.0, &load, &m, &SolverSettings::for_material(&m)).unwrap();
        for (st, f) in series.states.iter().zip(load.values()) {
            assert_eq!((st.s, st.e, st.e_p, st.p_hat, st.x), (*f, *f, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn yield_onset_sample() {
        let m = steel();
        let load = LoadHistory::ramp(1.55, 1000).unwrap();
        let svm = 100.0;
        let series = integrate_point(svm, &load, &m, &SolverSettings::for_material(&m)).unwrap();
        let first_plastic = series.states.iter().position(|s| s.p_hat > 0.0).unwrap();
        let first_over = load.values().iter().position(|f| f.abs() * svm > m.sigma_y).unwrap();
        assert_eq!(first_plastic, first_over);
    }

    #[test]
    fn plastic_step_is_consistent() {
        let m = steel();
        let settings = SolverSettings::for_material(&m);
        let load = LoadHistory::ramp(1.55, 50).unwrap();
        let svm = 200.0;
        let series = integrate_point(svm, &load, &m, &settings).unwrap();
        let mut prev = ScalarCorrectorState::default();
        for (st, f) in series.states.iter().zip(load.values()) {
            assert!(st.neuber_residual(*f).abs() <= 1e-9 * f.powi(2).max(1.0));
            let elastic = (st.s - st.origin.s) - ((st.e - st.origin.e) - (st.e_p - st.origin.e_p));
            assert!(elastic.abs() <= 1e-14 * st.e.abs().max(1.0));
            let fy = st.yield_function(svm, &m);
            assert!(fy <= settings.fy_tolerance);
            if st.p_hat > prev.p_hat {
                assert!(fy.abs() <= settings.fy_tolerance);
            }
            assert!(st.s >= 0.0 && st.e >= st.s && st.e_p >= 0.0);
            prev = *st;
        }
        assert!(series.last().p_hat > 0.0);
    }

    #[test]
    fn rejects_negative_stress() {
        let m = steel();
        let load = LoadHistory::ramp(1.0, 3).unwrap();
        assert!(integrate_point(-1.0, &load, &m, &SolverSettings::for_material(&m)).is_err());
    }

    #[test]
    fn settings_validation() {
        let mut s = SolverSettings::default();
        assert!(s.validate().is_ok());
        s.max_newton_iters = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn bisection_alone_converges() {
        let m = steel();
        let mut settings = SolverSettings::for_material(&m);
        let load = LoadHistory::triangle(0.8, 2, 20).unwrap();
        let newton = integrate_point(400.0, &load, &m, &settings).unwrap();
        settings.max_newton_iters = 1;
        let bisect = integrate_point(400.0, &load, &m, &settings).unwrap();
        for (a, b) in newton.states.iter().zip(&bisect.states) {
            // f_y tolerance 1e-7 MPa over a hardening slope ~2e5 MPa, summed over steps
            assert!((a.p_hat - b.p_hat).abs() <= 1e-11, "{} {}", a.p_hat, b.p_hat);
        }
    }
}
