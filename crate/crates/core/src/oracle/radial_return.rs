//! Strain-driven uniaxial Chaboche model integrated by backward-Euler return
//! mapping. Used to check the hardening laws independently of the corrector.
//!
//! In uniaxial stress the axial back-stress `X = 3/2 alpha_11` satisfies
//! `X_{n+1} = (X_n + C d_eps_p) / (1 + D dp)` with `dp = |d_eps_p|`, and
//! `J(alpha) = |X|`.

use crate::error::{Error, Result};
use crate::material::MaterialParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UniaxialState {
    pub strain: f64,
    pub stress: f64,
    pub plastic_strain: f64,
    pub back_stress: f64,
    pub p: f64,
}

const MAX_ITERS: usize = 100;

/// Integrates the given axial strain history starting from a virgin state.
pub fn radial_return_uniaxial(strain: &[f64], params: &MaterialParams) -> Result<Vec<UniaxialState>> {
    let e = params.youngs_modulus;
    let tol = 1e-12 * params.sigma_y;
    let mut st = UniaxialState::default();
    let mut out = Vec::with_capacity(strain.len());
    for (i, &eps) in strain.iter().enumerate() {
        if !eps.is_finite() {
            return Err(Error::Input(format!("strain sample {i} is not finite")));
        }
        let sigma_tr = e * (eps - st.plastic_strain);
        let xi = sigma_tr - st.back_stress;
        let r_n = params.isotropic_hardening(st.p);
        if xi.abs() - params.sigma_y - r_n <= 0.0 {
            st = UniaxialState {
                strain: eps,
                stress: sigma_tr,
                ..st
            };
            out.push(st);
            continue;
        }
        let n = xi.signum();
        let g = |dp: f64| {
            let x = (n * st.back_stress + params.c * dp) / (1.0 + params.d * dp);
            n * sigma_tr - e * dp - x - params.sigma_y - params.isotropic_hardening(st.p + dp)
        };
        let dg = |dp: f64| {
            let den = 1.0 + params.d * dp;
            -e - (params.c - params.d * n * st.back_stress) / (den * den)
                - params.q * params.b * (-params.b * (st.p + dp)).exp()
        };
        // g is decreasing on dp >= 0 with g(0) > 0 and g(xi/E) < 0
        let (mut lo, mut hi) = (0.0, xi.abs() / e);
        let mut dp = 0.0;
        let mut converged = false;
        for _ in 0..MAX_ITERS {
            let gv = g(dp);
            if gv.abs() <= tol {
                converged = true;
                break;
            }
            if gv > 0.0 {
                lo = dp;
            } else {
                hi = dp;
            }
            let next = dp - gv / dg(dp);
            dp = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        if !converged {
            return Err(Error::Convergence {
                time_index: i,
                reason: "return mapping did not converge".into(),
            });
        }
        st = UniaxialState {
            strain: eps,
            stress: sigma_tr - e * n * dp,
            plastic_strain: st.plastic_strain + n * dp,
            back_stress: (st.back_stress + params.c * n * dp) / (1.0 + params.d * dp),
            p: st.p + dp,
        };
        out.push(st);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn steel() -> MaterialParams {
        MaterialParams::reference_steel(0.3).unwrap()
    }

    #[test]
    fn elastic_slope_and_onset() {
        let m = steel();
        let eps_y = m.sigma_y / m.youngs_modulus;
        let strain: Vec<f64> = (0..=10).map(|k| eps_y * k as f64 / 10.0).collect();
        let out = radial_return_uniaxial(&strain, &m).unwrap();
        for s in &out {
            assert_relative_eq!(s.stress, m.youngs_modulus * s.strain, max_relative = 1e-9);
            assert_eq!(s.p, 0.0);
        }
        assert_relative_eq!(out[10].stress, m.sigma_y, max_relative = 1e-9);
        let past = radial_return_uniaxial(&[eps_y * (1.0 + 1e-9)], &m).unwrap()[0];
        assert_relative_eq!(past.stress, m.sigma_y, max_relative = 1e-9);
    }

    #[test]
    fn back_stress_saturates() {
        let m = steel();
        let strain: Vec<f64> = (0..=2000).map(|k| 0.05 * k as f64 / 2000.0).collect();
        let out = radial_return_uniaxial(&strain, &m).unwrap();
        let sat = m.kinematic_saturation().unwrap();
        for s in &out {
            assert!(s.back_stress.abs() <= sat * (1.0 + 1e-12));
            if s.p >= 0.02 {
                assert!((s.back_stress - sat).abs() <= 0.01 * sat);
            }
        }
        let last = out.last().unwrap();
        assert!(last.p >= 0.02);
        // kinematic part saturated
        assert_relative_eq!(
            last.stress,
            m.sigma_y + m.isotropic_hardening(last.p) + sat,
            max_relative = 1e-3
        );
    }

    #[test]
    fn reversed_loading_yields_against_back_stress() {
        let m = steel();
        let mut strain: Vec<f64> = (0..=100).map(|k| 0.01 * k as f64 / 100.0).collect();
        strain.extend((1..=200).map(|k| 0.01 - 0.02 * k as f64 / 200.0));
        let out = radial_return_uniaxial(&strain, &m).unwrap();
        for s in &out {
            let f = (s.stress - s.back_stress).abs() - m.sigma_y - m.isotropic_hardening(s.p);
            assert!(f <= 1e-9 * m.sigma_y);
        }
        assert!(out.last().unwrap().stress < 0.0);
    }
}
