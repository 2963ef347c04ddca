//! Batch correction of a whole elastic field.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrector::{integrate_point, SolverSettings};
use crate::error::{Error, Result};
use crate::load::LoadHistory;
use crate::material::MaterialParams;
use crate::qoi::QoiKind;
use crate::reconstruction::{reconstruct_all, ElasticPointRecord};
use crate::surrogate::{build_training_set, train, SurrogateModel, TrainOptions};

use super::fmt_f64;
use super::io::{read_elastic_field, CsvOut};

pub const QOI_FILE: &str = "qoi.csv";
pub const FAILURE_FILE: &str = "failures.csv";

pub fn snapshot_file(index: usize) -> String {
    format!("snapshot_{index}.csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    Direct,
    /// Train one surrogate per quantity of interest and predict all points.
    Surrogate {
        n_s: usize,
        s_plus: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub field: PathBuf,
    pub load: PathBuf,
    pub material: MaterialParams,
    pub mode: Mode,
    pub qois: Vec<QoiKind>,
    pub snapshots: Vec<usize>,
    /// Add reconstructed tensor components to the snapshots.
    pub components: bool,
    pub workers: usize,
    pub settings: SolverSettings,
    pub output: PathBuf,
    /// Fraction of failed points above which the run is reported as failed.
    pub max_failure_fraction: f64,
}

impl RunConfig {
    pub fn validate(&self, load: &LoadHistory, records: &[ElasticPointRecord]) -> Result<()> {
        if self.qois.is_empty() && self.snapshots.is_empty() {
            return Err(Error::Input(
                "nothing requested: give at least one qoi or snapshot".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::Input("worker count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return Err(Error::Input("max_failure_fraction must lie in [0, 1]".into()));
        }
        self.settings.validate()?;
        for q in &self.qois {
            q.check(load)?;
        }
        if let Some(&bad) = self.snapshots.iter().find(|&&i| i >= load.len()) {
            return Err(Error::Input(format!(
                "snapshot index {bad} outside the load history of {} samples",
                load.len()
            )));
        }
        if matches!(self.mode, Mode::Surrogate { .. }) && !self.snapshots.is_empty() {
            return Err(Error::Input(
                "surrogate mode produces quantities of interest only".into(),
            ));
        }
        if self.components {
            let missing: Vec<&str> = records
                .iter()
                .filter(|r| !r.has_tensor())
                .map(|r| r.id.as_str())
                .take(10)
                .collect();
            if !missing.is_empty() {
                return Err(Error::Capability(format!(
                    "tensor components requested but points carry no deviator/trace: {}",
                    missing.join(", ")
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub id: String,
    pub time_index: Option<usize>,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub points: usize,
    pub steps: usize,
    /// Points whose integration failed.
    pub failed: usize,
    /// Points predicted outside the surrogate's trained range.
    pub extrapolated: usize,
    pub seconds: f64,
    pub exceeded_failure_threshold: bool,
}

impl RunSummary {
    pub fn point_steps_per_second(&self) -> f64 {
        (self.points * self.steps) as f64 / self.seconds.max(1e-12)
    }
}

/// Per-point output, kept in input order.
struct PointResult {
    qois: Option<Vec<f64>>,
    /// One row of formatted cells per requested snapshot.
    snapshots: Vec<Vec<String>>,
    failure: Option<Failure>,
}

fn correct_point(
    record: &ElasticPointRecord,
    load: &LoadHistory,
    config: &RunConfig,
) -> Result<(Vec<f64>, Vec<Vec<String>>)> {
    let series = integrate_point(record.sigma_vm, load, &config.material, &config.settings)?;
    let qois = config
        .qois
        .iter()
        .map(|q| q.evaluate(&series, load, &config.material))
        .collect::<Result<Vec<_>>>()?;
    let tensors = if config.components {
        Some(reconstruct_all(&series, record, load, &config.material)?)
    } else {
        None
    };
    let snapshots = config
        .snapshots
        .iter()
        .map(|&i| {
            let st = &series.states[i];
            let mut row: Vec<String> = [st.s, st.e, st.e_p, st.p_hat, st.x]
                .iter()
                .map(|v| fmt_f64(*v))
                .collect();
            if let Some(t) = &tensors {
                let t = &t[i];
                for tensor in [t.stress, t.dev_strain, t.dev_plastic_strain, t.back_stress] {
                    row.extend(tensor.components().iter().map(|v| fmt_f64(*v)));
                }
            }
            row
        })
        .collect();
    Ok((qois, snapshots))
}

fn direct(records: &[ElasticPointRecord], load: &LoadHistory, config: &RunConfig) -> Vec<PointResult> {
    records
        .par_iter()
        .map(|r| match correct_point(r, load, config) {
            Ok((qois, snapshots)) => PointResult {
                qois: Some(qois),
                snapshots,
                failure: None,
            },
            Err(e) => PointResult {
                qois: None,
                snapshots: Vec::new(),
                failure: Some(Failure {
                    id: r.id.clone(),
                    time_index: match e {
                        Error::Convergence { time_index, .. } => Some(time_index),
                        _ => None,
                    },
                    kind: if e.is_numeric() { "convergence" } else { "evaluation" },
                    message: e.to_string(),
                }),
            },
        })
        .collect()
}

fn surrogate(
    records: &[ElasticPointRecord],
    load: &LoadHistory,
    config: &RunConfig,
    n_s: usize,
    s_plus: f64,
) -> Result<(Vec<PointResult>, usize)> {
    let models = config
        .qois
        .iter()
        .map(|&q| {
            let set = build_training_set(&config.material, load, n_s, s_plus, q, &config.settings)?;
            train(&set, &TrainOptions::default())
        })
        .collect::<Result<Vec<SurrogateModel>>>()?;
    let results: Vec<(PointResult, bool)> = records
        .par_iter()
        .map(|r| {
            let mut extrapolated = false;
            let mut values = Vec::with_capacity(models.len());
            for m in &models {
                match m.predict_value(r.sigma_vm) {
                    Ok((v, flag)) => {
                        extrapolated |= flag;
                        values.push(v);
                    }
                    Err(e) => {
                        return (
                            PointResult {
                                qois: None,
                                snapshots: Vec::new(),
                                failure: Some(Failure {
                                    id: r.id.clone(),
                                    time_index: None,
                                    kind: "evaluation",
                                    message: e.to_string(),
                                }),
                            },
                            false,
                        )
                    }
                }
            }
            let failure = extrapolated.then(|| Failure {
                id: r.id.clone(),
                time_index: None,
                kind: "extrapolation",
                message: format!(
                    "stress {} outside the trained range (0, {}]",
                    r.sigma_vm,
                    s_plus * config.material.sigma_y
                ),
            });
            (
                PointResult {
                    qois: Some(values),
                    snapshots: Vec::new(),
                    failure,
                },
                extrapolated,
            )
        })
        .collect();
    let count = results.iter().filter(|(_, e)| *e).count();
    Ok((results.into_iter().map(|(r, _)| r).collect(), count))
}

/// Reads the inputs named in `config`, corrects every point and writes the
/// output directory. Per-point failures go to the failure report and do not
/// stop the run.
pub fn run_correction(config: &RunConfig) -> Result<RunSummary> {
    let load = LoadHistory::read_csv(&config.load)?;
    let records = read_elastic_field(&config.field)?;
    run_on(config, &records, &load)
}

/// Same as [`run_correction`] with the inputs already in memory.
pub fn run_on(config: &RunConfig, records: &[ElasticPointRecord], load: &LoadHistory) -> Result<RunSummary> {
    config.validate(load, records)?;
    std::fs::create_dir_all(&config.output).map_err(|e| Error::io(&config.output, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Input(format!("cannot start {} workers: {e}", config.workers)))?;

    let start = Instant::now();
    let (results, extrapolated) = pool.install(|| match config.mode {
        Mode::Direct => Ok((direct(records, load, config), 0)),
        Mode::Surrogate { n_s, s_plus } => surrogate(records, load, config, n_s, s_plus),
    })?;
    let seconds = start.elapsed().as_secs_f64();

    write_outputs(&config.output, config, records, &results)?;
    let failed = results.iter().filter(|r| r.qois.is_none()).count();
    Ok(RunSummary {
        points: records.len(),
        steps: load.len(),
        failed,
        extrapolated,
        seconds,
        exceeded_failure_threshold: failed as f64 > config.max_failure_fraction * records.len() as f64,
    })
}

fn write_outputs(
    dir: &Path,
    config: &RunConfig,
    records: &[ElasticPointRecord],
    results: &[PointResult],
) -> Result<()> {
    if !config.qois.is_empty() {
        let mut w = CsvOut::create(&dir.join(QOI_FILE))?;
        w.row(std::iter::once("id".to_string()).chain(config.qois.iter().map(|q| q.to_string())))?;
        for (r, res) in records.iter().zip(results) {
            let cells: Vec<String> = match &res.qois {
                Some(v) => v.iter().map(|x| fmt_f64(*x)).collect(),
                None => vec![String::new(); config.qois.len()],
            };
            w.row(std::iter::once(r.id.clone()).chain(cells))?;
        }
        w.finish()?;
    }
    for (k, &idx) in config.snapshots.iter().enumerate() {
        let mut w = CsvOut::create(&dir.join(snapshot_file(idx)))?;
        let mut header: Vec<String> = ["id", "s", "e", "e_p", "p_hat", "x"].map(String::from).to_vec();
        if config.components {
            for prefix in ["sig", "eps", "epsp", "back"] {
                for c in ["11", "22", "33", "12", "13", "23"] {
                    header.push(format!("{prefix}{c}"));
                }
            }
        }
        let width = header.len() - 1;
        w.row(header)?;
        for (r, res) in records.iter().zip(results) {
            let cells = res
                .snapshots
                .get(k)
                .cloned()
                .unwrap_or_else(|| vec![String::new(); width]);
            w.row(std::iter::once(r.id.clone()).chain(cells))?;
        }
        w.finish()?;
    }
    let mut w = CsvOut::create(&dir.join(FAILURE_FILE))?;
    w.row(["id", "time_index", "kind", "message"])?;
    for f in results.iter().filter_map(|r| r.failure.as_ref()) {
        w.row([
            f.id.clone(),
            f.time_index.map(|i| i.to_string()).unwrap_or_default(),
            f.kind.to_string(),
            f.message.clone(),
        ])?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> RunConfig {
        let material = MaterialParams::reference_steel(0.3).unwrap();
        RunConfig {
            field: dir.join("field.csv"),
            load: dir.join("load.csv"),
            material,
            mode: Mode::Direct,
            qois: vec![QoiKind::PFinal, QoiKind::DeltaP(2)],
            snapshots: vec![10],
            components: false,
            workers: 2,
            settings: SolverSettings::for_material(&material),
            output: dir.join("out"),
            max_failure_fraction: 0.0,
        }
    }

    #[test]
    fn sub_yield_points_stay_elastic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let load = LoadHistory::triangle(0.8, 2, 5).unwrap();
        let records: Vec<_> = (0..100)
            .map(|i| ElasticPointRecord::scalar(format!("p{i}"), i as f64).unwrap())
            .collect();
        let summary = run_on(&cfg, &records, &load).unwrap();
        assert_eq!(summary.failed, 0);
        let text = std::fs::read_to_string(cfg.output.join(QOI_FILE)).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 100);
        assert!(rows[0].starts_with("p0,"));
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn bad_requests_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let load = LoadHistory::triangle(0.8, 2, 5).unwrap();
        let records = vec![ElasticPointRecord::scalar("a", 150.0).unwrap()];
        let mut cfg = config(dir.path());
        cfg.snapshots = vec![load.len()];
        assert!(matches!(run_on(&cfg, &records, &load), Err(Error::Input(_))));
        let mut cfg = config(dir.path());
        cfg.qois = vec![QoiKind::DeltaP(3)];
        assert!(run_on(&cfg, &records, &load).is_err());
        let mut cfg = config(dir.path());
        cfg.components = true;
        assert!(matches!(run_on(&cfg, &records, &load), Err(Error::Capability(_))));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let dir = tempfile::tempdir().unwrap();
        let load = LoadHistory::triangle(0.8, 2, 10).unwrap();
        let records: Vec<_> = (0..200)
            .map(|i| ElasticPointRecord::scalar(format!("p{i}"), 5.0 * i as f64).unwrap())
            .collect();
        let mut outputs = Vec::new();
        for workers in [1, 3] {
            let mut cfg = config(dir.path());
            cfg.workers = workers;
            cfg.output = dir.path().join(format!("out{workers}"));
            run_on(&cfg, &records, &load).unwrap();
            outputs.push((
                std::fs::read(cfg.output.join(QOI_FILE)).unwrap(),
                std::fs::read(cfg.output.join(snapshot_file(10))).unwrap(),
            ));
        }
        assert_eq!(outputs[0], outputs[1]);
    }
}
