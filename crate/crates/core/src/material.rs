//! Elastic constants and the Chaboche hardening laws shared by the corrector
//! and the verification oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic elasticity plus Chaboche hardening.
///
/// `c`/`d` are the nonlinear kinematic hardening modulus and recall
/// coefficient, `q`/`b` the saturation stress and rate of the exponential
/// isotropic hardening `R(p) = Q (1 - exp(-b p))`. Stresses in MPa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialInput", into = "MaterialInput")]
pub struct MaterialParams {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub sigma_y: f64,
    pub c: f64,
    pub d: f64,
    pub q: f64,
    pub b: f64,
    mu: f64,
    lambda: f64,
}

/// On-disk form of [`MaterialParams`]; the Lamé pair is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialInput {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub sigma_y: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub b: f64,
}

impl TryFrom<MaterialInput> for MaterialParams {
    type Error = Error;

    fn try_from(m: MaterialInput) -> Result<Self> {
        MaterialParams::new(m.youngs_modulus, m.poisson_ratio, m.sigma_y, m.c, m.d, m.q, m.b)
    }
}

impl From<MaterialParams> for MaterialInput {
    fn from(m: MaterialParams) -> Self {
        MaterialInput {
            youngs_modulus: m.youngs_modulus,
            poisson_ratio: m.poisson_ratio,
            sigma_y: m.sigma_y,
            c: m.c,
            d: m.d,
            q: m.q,
            b: m.b,
        }
    }
}

impl MaterialParams {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, sigma_y: f64, c: f64, d: f64, q: f64, b: f64) -> Result<Self> {
        let (lambda, mu) = lame_from_engineering(youngs_modulus, poisson_ratio)?;
        if !(sigma_y > 0.0 && sigma_y.is_finite()) {
            return Err(Error::ParameterDomain(format!("sigma_y must be > 0, got {sigma_y}")));
        }
        for (name, v) in [("C", c), ("D", d), ("Q", q), ("b", b)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ParameterDomain(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(MaterialParams {
            youngs_modulus,
            poisson_ratio,
            sigma_y,
            c,
            d,
            q,
            b,
            mu,
            lambda,
        })
    }

    /// Hardening constants used for the notched and porous specimens:
    /// E = 200 GPa, σ_y = 100 MPa, b = 10, Q = 100 MPa, C = 40 GPa, D = 400.
    /// Poisson's ratio is not part of that set and must be supplied.
    pub fn reference_steel(poisson_ratio: f64) -> Result<Self> {
        MaterialParams::new(200_000.0, poisson_ratio, 100.0, 40_000.0, 400.0, 100.0, 10.0)
    }

    /// Shear modulus.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Saturated back-stress magnitude `C/D`, or `None` without recall term.
    pub fn kinematic_saturation(&self) -> Option<f64> {
        (self.d > 0.0).then(|| self.c / self.d)
    }

    pub fn isotropic_hardening(&self, p: f64) -> f64 {
        self.q * (-(-self.b * p).exp_m1())
    }
}

/// Lamé coefficients `(λ, μ)` from Young's modulus and Poisson's ratio.
pub fn lame_from_engineering(youngs_modulus: f64, poisson_ratio: f64) -> Result<(f64, f64)> {
    if !(youngs_modulus > 0.0 && youngs_modulus.is_finite()) {
        return Err(Error::ParameterDomain(format!(
            "Young's modulus must be > 0, got {youngs_modulus}"
        )));
    }
    if !(poisson_ratio > -1.0 && poisson_ratio < 0.5) {
        return Err(Error::ParameterDomain(format!(
            "Poisson's ratio must lie in (-1, 0.5), got {poisson_ratio}"
        )));
    }
    let mu = youngs_modulus / (2.0 * (1.0 + poisson_ratio));
    let lambda = youngs_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
    Ok((lambda, mu))
}

/// `R(p) = Q (1 - exp(-b p))`, defined for `p >= 0`.
pub fn isotropic_hardening(p: f64, params: &MaterialParams) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::Precondition(format!(
            "cumulative plastic strain must be >= 0, got {p}"
        )));
    }
    Ok(params.isotropic_hardening(p))
}
