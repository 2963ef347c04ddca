//! Elastic point records and reconstruction of tensor histories from the
//! scalar corrector output.

use serde::{Deserialize, Serialize};

use crate::corrector::CorrectedSeries;
use crate::error::{Error, Result};
use crate::load::LoadHistory;
use crate::material::MaterialParams;
use crate::tensor::SymTensor3;

/// Relative tolerance between a stated von Mises stress and the one implied
/// by the deviatoric tensor.
pub const SVM_CONSISTENCY_TOLERANCE: f64 = 1e-6;

/// Elastic solution at one quadrature point for `f = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticPointRecord {
    pub id: String,
    pub sigma_vm: f64,
    pub dev_sigma: Option<SymTensor3>,
    pub trace_sigma: Option<f64>,
}

impl ElasticPointRecord {
    /// Scalar-only record.
    pub fn scalar(id: impl Into<String>, sigma_vm: f64) -> Result<Self> {
        Self::new(id, Some(sigma_vm), None, None)
    }

    /// Record from the full stress tensor at `f = 1`.
    pub fn from_stress(id: impl Into<String>, stress: &SymTensor3) -> Result<Self> {
        let dev = stress.deviatoric();
        Self::new(id, None, Some(dev), Some(stress.trace()))
    }

    /// Builds a record, deriving `sigma_vm` from the deviator when absent and
    /// checking the two agree when both are given.
    pub fn new(
        id: impl Into<String>,
        sigma_vm: Option<f64>,
        dev_sigma: Option<SymTensor3>,
        trace_sigma: Option<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if let Some(dev) = &dev_sigma {
            if !dev.is_deviatoric() {
                return Err(Error::Input(format!(
                    "point {id}: stress deviator has trace {:e}",
                    dev.trace()
                )));
            }
        }
        let from_dev = dev_sigma.map(|d| d.equivalent_norm());
        let sigma_vm = match (sigma_vm, from_dev) {
            (Some(v), Some(d)) => {
                if (v - d).abs() > SVM_CONSISTENCY_TOLERANCE * v.abs().max(d) {
                    return Err(Error::Input(format!(
                        "point {id}: von Mises stress {v} disagrees with deviator ({d})"
                    )));
                }
                v
            }
            (Some(v), None) => v,
            (None, Some(d)) => d,
            (None, None) => return Err(Error::Input(format!("point {id}: no von Mises stress or deviator"))),
        };
        if !(sigma_vm >= 0.0 && sigma_vm.is_finite()) {
            return Err(Error::Input(format!(
                "point {id}: von Mises stress must be finite and >= 0, got {sigma_vm}"
            )));
        }
        Ok(ElasticPointRecord {
            id,
            sigma_vm,
            dev_sigma,
            trace_sigma,
        })
    }

    pub fn has_tensor(&self) -> bool {
        self.dev_sigma.is_some() && self.trace_sigma.is_some()
    }

    fn tensors(&self) -> Result<(SymTensor3, f64)> {
        match (self.dev_sigma, self.trace_sigma) {
            (Some(d), Some(t)) => Ok((d, t)),
            _ => Err(Error::Capability(format!(
                "point {} carries no stress tensor; only scalar outputs are available",
                self.id
            ))),
        }
    }
}

/// Tensor variables at one time sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedTensors {
    pub stress: SymTensor3,
    pub dev_strain: SymTensor3,
    pub dev_plastic_strain: SymTensor3,
    pub back_stress: SymTensor3,
}

/// `sigma(t) = s(t) dev + f(t)/3 tr I`, so that `tr sigma(t) = f(t) tr`.
pub fn reconstruct_stress(
    series: &CorrectedSeries,
    record: &ElasticPointRecord,
    load: &LoadHistory,
) -> Result<Vec<SymTensor3>> {
    let (dev, trace) = record.tensors()?;
    check_lengths(series, load)?;
    Ok(series
        .states
        .iter()
        .zip(load.values())
        .map(|(st, f)| dev * st.s + SymTensor3::IDENTITY * (f * trace / 3.0))
        .collect())
}

/// Stress plus the deviatoric strain, plastic strain and back-stress, all
/// parallel to the elastic strain deviator `dev / (2 mu)`.
pub fn reconstruct_all(
    series: &CorrectedSeries,
    record: &ElasticPointRecord,
    load: &LoadHistory,
    params: &MaterialParams,
) -> Result<Vec<ReconstructedTensors>> {
    let stress = reconstruct_stress(series, record, load)?;
    let (dev, _) = record.tensors()?;
    let strain_dir = dev * (0.5 / params.mu());
    Ok(series
        .states
        .iter()
        .zip(stress)
        .map(|(st, stress)| ReconstructedTensors {
            stress,
            dev_strain: strain_dir * st.e,
            dev_plastic_strain: strain_dir * st.e_p,
            back_stress: strain_dir * st.x,
        })
        .collect())
}

fn check_lengths(series: &CorrectedSeries, load: &LoadHistory) -> Result<()> {
    if series.len() != load.len() {
        return Err(Error::Input(format!(
            "series has {} samples but the load history {}",
            series.len(),
            load.len()
        )));
    }
    Ok(())
}
