//! Error introduced by the local proportionality rule alone: a reference
//! deviatoric stress history is projected on the elastic direction and
//! compared with itself.

use crate::error::{Error, Result};
use crate::tensor::SymTensor3;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionErrors {
    /// `|xi|_F / |sigma_d|_F`; `None` where the reference stress vanishes.
    pub xi_rel: Vec<Option<f64>>,
    /// Absolute error `|xi|_F`, always defined.
    pub xi_abs: Vec<f64>,
    pub projected: Vec<SymTensor3>,
}

/// Projects every sample of `reference` onto `dev_sharp`.
pub fn projection_error(reference: &[SymTensor3], dev_sharp: &SymTensor3) -> Result<ProjectionErrors> {
    let nn = dev_sharp.ddot(dev_sharp);
    if !(nn > 0.0) {
        return Err(Error::Precondition("elastic deviator must be non-zero".into()));
    }
    let mut out = ProjectionErrors {
        xi_rel: Vec::with_capacity(reference.len()),
        xi_abs: Vec::with_capacity(reference.len()),
        projected: Vec::with_capacity(reference.len()),
    };
    for sig in reference {
        let projected = *dev_sharp * (dev_sharp.ddot(sig) / nn);
        let xi = (*sig - projected).frobenius_norm();
        let norm = sig.frobenius_norm();
        out.xi_rel.push((norm > 0.0).then(|| xi / norm));
        out.xi_abs.push(xi);
        out.projected.push(projected);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sharp() -> SymTensor3 {
        SymTensor3::new(2.0, -1.0, -1.0, 0.0, 0.0, 0.0) * (1.0 / 6f64.sqrt())
    }

    // unit deviator orthogonal to `sharp`
    fn ortho() -> SymTensor3 {
        SymTensor3::new(0.0, 1.0, -1.0, 0.0, 0.0, 0.0) * (1.0 / 2f64.sqrt())
    }

    #[test]
    fn proportional_history_has_no_error() {
        let hist: Vec<_> = [0.3, 1.0, -2.5].iter().map(|c| sharp() * 70.0 * *c).collect();
        let out = projection_error(&hist, &sharp()).unwrap();
        assert!(out.xi_rel.iter().all(|x| x.unwrap() <= 1e-15));
    }

    #[test]
    fn orthogonal_history_is_fully_wrong() {
        let out = projection_error(&[ortho() * 3.0], &sharp()).unwrap();
        assert_relative_eq!(out.xi_rel[0].unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn pythagorean_mix() {
        assert!(sharp().ddot(&ortho()).abs() < 1e-15);
        let mix = sharp() * 0.8 + ortho() * 0.6;
        let out = projection_error(&[mix * 120.0], &sharp()).unwrap();
        assert_relative_eq!(out.xi_rel[0].unwrap(), 0.6, max_relative = 1e-12);
        let xi = mix * 120.0 - out.projected[0];
        assert!(xi.ddot(&out.projected[0]).abs() <= 1e-10 * (120.0f64).powi(2));
    }

    #[test]
    fn zero_stress_gives_sentinel() {
        let out = projection_error(&[SymTensor3::ZERO], &sharp()).unwrap();
        assert_eq!(out.xi_rel[0], None);
        assert_eq!(out.xi_abs[0], 0.0);
        assert!(projection_error(&[], &SymTensor3::ZERO).is_err());
    }
}
