//! Tensor-form corrector: the Neuber rule on deviatoric contractions plus the
//! Chaboche flow rule, integrated with a radial-return update parameterised
//! by the cumulative plastic strain increment.
//!
//! Shares no code with [`crate::corrector`] beyond the material constants.
//! The Neuber constraint is solved for the stress increment magnitude along
//! the elastic direction and the yield condition for `dp` by bisection.

use serde::{Deserialize, Serialize};

use crate::corrector::NEGLIGIBLE_STRESS_RATIO;
use crate::error::{Error, Result};
use crate::load::{Direction, LoadHistory};
use crate::material::MaterialParams;
use crate::reconstruction::ElasticPointRecord;
use crate::tensor::SymTensor3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TensorCorrectorState {
    pub dev_stress: SymTensor3,
    pub dev_strain: SymTensor3,
    pub dev_plastic_strain: SymTensor3,
    pub back_stress: SymTensor3,
    pub p_hat: f64,
}

/// Scalar ratios obtained by projecting the tensors on the elastic direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectedScalars {
    pub s: f64,
    pub e: f64,
    pub e_p: f64,
    pub p_hat: f64,
    pub x: f64,
}

#[derive(Debug, Clone)]
pub struct TensorSeries {
    /// Elastic deviatoric stress at `f = 1`.
    pub dev_sharp: SymTensor3,
    pub mu: f64,
    pub states: Vec<TensorCorrectorState>,
}

impl TensorSeries {
    /// `s = sig:sig#/sig#:sig#`, and likewise for the strain-like variables
    /// against `eps# = sig#/(2 mu)`.
    pub fn projections(&self) -> Vec<ProjectedScalars> {
        let sig = self.dev_sharp;
        let eps = sig * (0.5 / self.mu);
        let ss = sig.ddot(&sig);
        let ee = eps.ddot(&eps);
        self.states
            .iter()
            .map(|st| {
                if ss == 0.0 {
                    return ProjectedScalars {
                        p_hat: st.p_hat,
                        ..Default::default()
                    };
                }
                ProjectedScalars {
                    s: st.dev_stress.ddot(&sig) / ss,
                    e: st.dev_strain.ddot(&eps) / ee,
                    e_p: st.dev_plastic_strain.ddot(&eps) / ee,
                    p_hat: st.p_hat,
                    x: st.back_stress.ddot(&eps) / ee,
                }
            })
            .collect()
    }
}

struct Origin {
    stress: SymTensor3,
    plastic: SymTensor3,
    f: f64,
}

/// Integrates the tensorial corrector at one point.
///
/// `yield_tolerance` only flags suspicious results: the plastic increment is
/// always bisected down to the floating-point resolution.
pub fn integrate_tensorial(
    record: &ElasticPointRecord,
    load: &LoadHistory,
    params: &MaterialParams,
    yield_tolerance: f64,
) -> Result<TensorSeries> {
    let dev_sharp = record
        .dev_sigma
        .ok_or_else(|| Error::Capability(format!("point {} has no stress deviator", record.id)))?;
    let mu = params.mu();
    let norm = dev_sharp.frobenius_norm();
    let values = load.values();
    let mut states = Vec::with_capacity(values.len());

    if record.sigma_vm < NEGLIGIBLE_STRESS_RATIO * params.sigma_y || norm == 0.0 {
        for &f in values {
            states.push(TensorCorrectorState {
                dev_stress: dev_sharp * f,
                dev_strain: dev_sharp * (f / (2.0 * mu)),
                ..Default::default()
            });
        }
        return Ok(TensorSeries { dev_sharp, mu, states });
    }

    let unit = dev_sharp * (1.0 / norm);
    // sig#:eps# at f = 1
    let neuber_scale = dev_sharp.ddot(&dev_sharp) / (2.0 * mu);
    let resets = load.origin_resets();

    let mut state = TensorCorrectorState::default();
    let mut origin = Origin {
        stress: SymTensor3::ZERO,
        plastic: SymTensor3::ZERO,
        f: 0.0,
    };
    let mut f_prev = 0.0;
    for (i, &f) in values.iter().enumerate() {
        if i > 0 && resets.contains(&(i - 1)) {
            origin = Origin {
                stress: state.dev_stress,
                plastic: state.dev_plastic_strain,
                f: f_prev,
            };
        }
        if let Some(dir) = Direction::of(f_prev, f) {
            let rhs = (f - origin.f).powi(2) * neuber_scale;
            state = advance(&state, &origin, unit, rhs, dir.sign(), params, yield_tolerance)
                .map_err(|reason| Error::Convergence { time_index: i, reason })?;
        }
        states.push(state);
        f_prev = f;
    }
    Ok(TensorSeries { dev_sharp, mu, states })
}

/// Tensors after a plastic increment `dp` along the flow direction `flow`.
#[allow(clippy::too_many_arguments)]
fn trial(
    prev: &TensorCorrectorState,
    origin: &Origin,
    unit: SymTensor3,
    rhs: f64,
    dir: f64,
    flow: SymTensor3,
    dp: f64,
    params: &MaterialParams,
) -> TensorCorrectorState {
    let mu = params.mu();
    let d_plastic = flow * dp;
    let plastic = prev.dev_plastic_strain + d_plastic;
    let back = (prev.back_stress + d_plastic * (2.0 / 3.0 * params.c)) * (1.0 / (1.0 + params.d * dp));
    // (A):(A/(2mu) + W) = rhs with A = a * unit, W = plastic - plastic_o
    let w = unit.ddot(&(plastic - origin.plastic));
    let a = mu * (-w + dir * (w * w + 2.0 * rhs / mu).sqrt());
    let stress = origin.stress + unit * a;
    TensorCorrectorState {
        dev_stress: stress,
        dev_strain: stress * (0.5 / mu) + plastic,
        dev_plastic_strain: plastic,
        back_stress: back,
        p_hat: prev.p_hat + dp,
    }
}

fn yield_value(st: &TensorCorrectorState, params: &MaterialParams) -> f64 {
    (st.dev_stress - st.back_stress).equivalent_norm() - params.sigma_y - params.isotropic_hardening(st.p_hat)
}

fn advance(
    prev: &TensorCorrectorState,
    origin: &Origin,
    unit: SymTensor3,
    rhs: f64,
    dir: f64,
    params: &MaterialParams,
    tol: f64,
) -> std::result::Result<TensorCorrectorState, String> {
    let elastic = trial(prev, origin, unit, rhs, dir, SymTensor3::ZERO, 0.0, params);
    let g0 = yield_value(&elastic, params);
    if g0 <= 0.0 {
        return Ok(elastic);
    }
    // radial return: the flow direction is the normalised trial relative stress
    let rel = elastic.dev_stress - elastic.back_stress;
    let flow = rel * (1.5 / rel.equivalent_norm());
    let g = |dp: f64| yield_value(&trial(prev, origin, unit, rhs, dir, flow, dp, params), params);

    let mut lo = 0.0;
    let mut hi = 1e-12;
    let mut g_hi = g(hi);
    let mut grow = 0;
    while g_hi > 0.0 {
        lo = hi;
        hi *= 2.0;
        g_hi = g(hi);
        grow += 1;
        if grow > 2000 || !g_hi.is_finite() {
            return Err(format!("could not bracket the plastic increment (trial f_y = {g0:e})"));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    let dp = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
    let out = trial(prev, origin, unit, rhs, dir, flow, dp, params);
    let residual = yield_value(&out, params);
    if residual.abs() > tol {
        return Err(format!("yield residual {residual:e} above tolerance {tol:e}"));
    }
    let end_flow = out.dev_stress - out.back_stress;
    if end_flow.ddot(&rel) <= 0.0 {
        return Err("flow direction reversed during the increment".into());
    }
    Ok(out)
}
