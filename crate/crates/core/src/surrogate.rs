//! One-dimensional Gaussian-process surrogate for a scalar quantity of
//! interest as a function of the elastic von Mises stress, at a fixed load
//! history.
//!
//! Inputs and targets are log-transformed. The kernel is squared-exponential
//! on top of a linear trend fitted by least squares. The length-scale
//! maximises the marginal likelihood with the signal variance profiled out.
//!
//! Plastic quantities vanish identically below the yield onset
//! `sigma_y / max|f|` and grow from zero just above it, which puts a
//! logarithmic singularity into the log-log data. When the onset is supplied
//! the model predicts zero below it and, above it, regresses
//! `ln(q / (sigma/onset - 1))` on `ln(sigma)`, which stays smooth up to the
//! onset because `q` grows linearly there.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corrector::{integrate_point, SolverSettings};
use crate::error::{Error, Result};
use crate::load::LoadHistory;
use crate::material::MaterialParams;
use crate::qoi::QoiKind;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_FLOOR: f64 = 1e-12;
/// Lower end of the training grid relative to `sigma_y`.
pub const SIGMA_LOW_RATIO: f64 = 1e-3;
const FLOOR_MARGIN: f64 = 1e-6;
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Raw training data: stresses and untransformed targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub sigma_y: f64,
    pub s_plus: f64,
    /// Stress below which the target is zero, when known.
    pub onset: Option<f64>,
}

/// `n_s` stresses log-uniformly spaced on `[1e-3 sigma_y, s_plus sigma_y]`.
pub fn training_inputs(sigma_y: f64, n_s: usize, s_plus: f64) -> Result<Vec<f64>> {
    if n_s < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 training samples, got {n_s}"
        )));
    }
    if !(s_plus > SIGMA_LOW_RATIO && s_plus.is_finite()) {
        return Err(Error::Precondition(format!(
            "s_plus must exceed {SIGMA_LOW_RATIO}, got {s_plus}"
        )));
    }
    let (a, b) = ((SIGMA_LOW_RATIO * sigma_y).ln(), (s_plus * sigma_y).ln());
    let mut out: Vec<f64> = (0..n_s)
        .map(|k| (a + (b - a) * k as f64 / (n_s - 1) as f64).exp())
        .collect();
    out[n_s - 1] = s_plus * sigma_y;
    Ok(out)
}

/// Whether `qoi` is identically zero while the response stays elastic.
pub fn vanishes_below_onset(qoi: QoiKind) -> bool {
    !matches!(qoi, QoiKind::SFinal)
}

/// Runs the corrector at every training stress and evaluates `qoi`.
pub fn build_training_set(
    params: &MaterialParams,
    load: &LoadHistory,
    n_s: usize,
    s_plus: f64,
    qoi: QoiKind,
    settings: &SolverSettings,
) -> Result<TrainingSet> {
    qoi.check(load)?;
    let inputs = training_inputs(params.sigma_y, n_s, s_plus)?;
    let targets = inputs
        .iter()
        .map(|&svm| {
            let series = integrate_point(svm, load, params, settings)?;
            qoi.evaluate(&series, load, params)
        })
        .collect::<Result<Vec<_>>>()?;
    let peak = load.max_abs();
    let onset = (vanishes_below_onset(qoi) && peak > 0.0).then(|| params.sigma_y / peak);
    Ok(TrainingSet {
        inputs,
        targets,
        sigma_y: params.sigma_y,
        s_plus,
        onset,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub floor: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Use the onset-scaled targets when the training set knows its onset.
    pub use_onset: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            floor: DEFAULT_FLOOR,
            restarts: 5,
            seed: 0x5eed,
            use_onset: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub length_scale: f64,
    pub signal_variance: f64,
    /// Jitter as a fraction of the signal variance.
    pub jitter: f64,
}

/// Serialized form; the factorization is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    sigma_y: f64,
    s_plus: f64,
    floor: f64,
    onset: Option<f64>,
    /// Zero-target samples below the onset that do not enter the regression.
    skipped: usize,
    inputs: Vec<f64>,
    log_targets: Vec<f64>,
    trend: [f64; 2],
    hyper: Hyperparameters,
}

#[derive(Debug, Clone)]
pub struct SurrogateModel {
    file: ModelFile,
    alpha: DVector<f64>,
    chol: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// Posterior mean and variance of the log target.
    pub log_mean: f64,
    pub log_variance: f64,
    pub extrapolated: bool,
}

fn kernel(a: f64, b: f64, length: f64) -> f64 {
    let d = (a - b) / length;
    (-0.5 * d * d).exp()
}

fn correlation(u: &[f64], length: f64, jitter: f64) -> DMatrix<f64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |i, j| {
        kernel(u[i], u[j], length) + if i == j { jitter } else { 0.0 }
    })
}

/// Lower Cholesky factor of the correlation matrix with escalating jitter.
fn factorize(u: &[f64], length: f64) -> Option<(DMatrix<f64>, f64)> {
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        if let Some(c) = correlation(u, length, jitter).cholesky() {
            return Some((c.unpack(), jitter));
        }
        jitter *= 10.0;
    }
    None
}

struct Fit {
    chol: DMatrix<f64>,
    jitter: f64,
    /// `R^-1 y`
    beta: DVector<f64>,
    signal_variance: f64,
    log_likelihood: f64,
}

fn fit(u: &[f64], y: &DVector<f64>, length: f64) -> Option<Fit> {
    let n = u.len() as f64;
    let (chol, jitter) = factorize(u, length)?;
    let l = chol.clone();
    let z = l.solve_lower_triangular(y)?;
    let beta = l.transpose().solve_upper_triangular(&z)?;
    let quad = y.dot(&beta).max(f64::MIN_POSITIVE);
    let signal_variance = quad / n;
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let log_likelihood =
        -0.5 * n * signal_variance.ln() - 0.5 * log_det - 0.5 * n * (1.0 + (2.0 * std::f64::consts::PI).ln());
    log_likelihood.is_finite().then_some(Fit {
        chol,
        jitter,
        beta,
        signal_variance,
        log_likelihood,
    })
}

fn least_squares_line(u: &[f64], y: &[f64]) -> [f64; 2] {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = u.iter().map(|a| (a - mu) * (a - mu)).sum();
    let sxy: f64 = u.iter().zip(y).map(|(a, b)| (a - mu) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    [my - slope * mu, slope]
}

/// Trains on `(inputs, targets)`. Zero targets are replaced by `floor`
/// before the log transform.
pub fn train(set: &TrainingSet, options: &TrainOptions) -> Result<SurrogateModel> {
    let TrainingSet { inputs, targets, .. } = set;
    if inputs.len() != targets.len() || inputs.len() < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 paired samples, got {} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if !(options.floor > 0.0) || options.restarts == 0 {
        return Err(Error::Precondition("floor must be positive and restarts >= 1".into()));
    }
    let mut sorted = inputs.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition("training inputs must be distinct".into()));
    }
    for (&x, &t) in inputs.iter().zip(targets) {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Input(format!("training input {x} is not a positive stress")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Input(format!(
                "target {t} at stress {x} cannot be log-transformed"
            )));
        }
    }

    // onset-shifted regression needs every sample above the onset to be
    // strictly positive and at least two of them
    let onset = set.onset.filter(|&on| {
        options.use_onset && {
            let above: Vec<_> = inputs.iter().zip(targets).filter(|(x, _)| **x > on).collect();
            above.len() >= 2 && above.iter().all(|(_, t)| **t > options.floor)
        }
    });
    let mut u = Vec::with_capacity(inputs.len());
    let mut y = Vec::with_capacity(inputs.len());
    let mut skipped = 0;
    for (&x, &t) in inputs.iter().zip(targets) {
        match onset {
            Some(on) if x <= on => {
                if t != 0.0 {
                    return Err(Error::Training(format!(
                        "target {t} at stress {x} below the onset {on} should vanish"
                    )));
                }
                skipped += 1;
            }
            Some(on) => {
                u.push(x.ln());
                y.push(t.ln() - (x / on - 1.0).ln());
            }
            None => {
                u.push(x.ln());
                y.push(t.max(options.floor).ln());
            }
        }
    }

    let trend = least_squares_line(&u, &y);
    let resid = DVector::from_iterator(u.len(), u.iter().zip(&y).map(|(a, b)| b - trend[0] - trend[1] * a));
    let span = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - u.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let (lo, hi) = ((1e-3 * span).ln(), (10.0 * span).ln());
    let objective = |log_l: f64| fit(&u, &resid, log_l.exp()).map(|f| f.log_likelihood);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..options.restarts {
        let start = rng.gen_range(lo..=hi);
        if let Some(found) = pattern_search(&objective, start, lo, hi) {
            if best.is_none_or(|(_, v)| found.1 > v) {
                best = Some(found);
            }
        }
    }
    let (log_l, _) = best.ok_or_else(|| {
        Error::Training(format!(
            "covariance singular for every length-scale even at jitter {JITTER_MAX:e}"
        ))
    })?;
    let length_scale = log_l.exp();
    let f = fit(&u, &resid, length_scale).ok_or_else(|| Error::Training("final factorization failed".into()))?;
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        sigma_y: set.sigma_y,
        s_plus: set.s_plus,
        floor: options.floor,
        onset,
        skipped,
        inputs: u,
        log_targets: y,
        trend,
        hyper: Hyperparameters {
            length_scale,
            signal_variance: f.signal_variance,
            jitter: f.jitter,
        },
    };
    Ok(SurrogateModel {
        file,
        alpha: f.beta,
        chol: f.chol,
    })
}

/// Compass search on a bounded interval; `None` when no feasible point is met.
fn pattern_search(objective: &impl Fn(f64) -> Option<f64>, start: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let mut x = start;
    let mut v = objective(x)?;
    let mut h = 0.1 * (hi - lo);
    while h > 1e-6 {
        let mut moved = false;
        for cand in [(x + h).min(hi), (x - h).max(lo)] {
            if let Some(cv) = objective(cand) {
                if cv > v {
                    x = cand;
                    v = cv;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    Some((x, v))
}

impl SurrogateModel {
    pub fn hyperparameters(&self) -> Hyperparameters {
        self.file.hyper
    }

    pub fn onset(&self) -> Option<f64> {
        self.file.onset
    }

    pub fn floor(&self) -> f64 {
        self.file.floor
    }

    /// Upper end of the trusted input range.
    pub fn upper_limit(&self) -> f64 {
        self.file.s_plus * self.file.sigma_y
    }

    /// Regression input and the log of the factor that multiplies the
    /// regressed quantity; `None` below the onset.
    fn transform(&self, sigma_vm: f64) -> Option<(f64, f64)> {
        match self.file.onset {
            Some(on) if sigma_vm <= on => None,
            Some(on) => Some((sigma_vm.ln(), (sigma_vm / on - 1.0).ln())),
            None => Some((sigma_vm.ln(), 0.0)),
        }
    }

    fn log_mean(&self, u: f64) -> f64 {
        let l = self.file.hyper.length_scale;
        let [a, b] = self.file.trend;
        a + b * u
            + self
                .file
                .inputs
                .iter()
                .zip(self.alpha.iter())
                .map(|(&ui, &ai)| ai * kernel(u, ui, l))
                .sum::<f64>()
    }

    fn check_input(&self, sigma_vm: f64) -> Result<bool> {
        if !(sigma_vm >= 0.0 && sigma_vm.is_finite()) {
            return Err(Error::Input(format!("cannot predict at stress {sigma_vm}")));
        }
        Ok(sigma_vm == 0.0 || sigma_vm > self.upper_limit())
    }

    fn finish(&self, log_mean: f64) -> f64 {
        let v = log_mean.exp();
        // floor-valued training data come back with round-off on top
        if v <= self.file.floor * (1.0 + FLOOR_MARGIN) {
            0.0
        } else {
            v
        }
    }

    /// Point prediction without the posterior variance.
    pub fn predict_value(&self, sigma_vm: f64) -> Result<(f64, bool)> {
        let extrapolated = self.check_input(sigma_vm)?;
        let value = match (sigma_vm > 0.0).then(|| self.transform(sigma_vm)).flatten() {
            Some((u, shift)) => self.finish(self.log_mean(u) + shift),
            None => 0.0,
        };
        Ok((value, extrapolated))
    }

    pub fn predict(&self, sigma_vm: f64) -> Result<Prediction> {
        let extrapolated = self.check_input(sigma_vm)?;
        let Some((u, shift)) = (sigma_vm > 0.0).then(|| self.transform(sigma_vm)).flatten() else {
            return Ok(Prediction {
                value: 0.0,
                log_mean: f64::NEG_INFINITY,
                log_variance: 0.0,
                extrapolated,
            });
        };
        let log_mean = self.log_mean(u) + shift;
        let h = self.file.hyper;
        let k = DVector::from_iterator(
            self.file.inputs.len(),
            self.file.inputs.iter().map(|&ui| kernel(u, ui, h.length_scale)),
        );
        let v = self
            .chol
            .solve_lower_triangular(&k)
            .ok_or_else(|| Error::Training("factor is singular".into()))?;
        let log_variance = (h.signal_variance * (1.0 + h.jitter - v.dot(&v))).max(0.0);
        Ok(Prediction {
            value: self.finish(log_mean),
            log_mean,
            log_variance,
            extrapolated,
        })
    }

    pub fn predict_many(&self, sigma_vm: &[f64]) -> Result<Vec<Prediction>> {
        sigma_vm.iter().map(|&s| self.predict(s)).collect()
    }

    /// Leave-one-out residuals of the log targets, from the closed form
    /// `r_i = [R^-1 y]_i / [R^-1]_ii`.
    pub fn leave_one_out_log_errors(&self) -> Vec<f64> {
        let n = self.file.inputs.len();
        let identity = DMatrix::<f64>::identity(n, n);
        let inv = self
            .chol
            .solve_lower_triangular(&identity)
            .map(|li| li.transpose() * li);
        match inv {
            Some(inv) => (0..n).map(|i| self.alpha[i] / inv[(i, i)]).collect(),
            None => vec![f64::NAN; n],
        }
    }

    /// Log-space standard deviation of the interpolation noise.
    pub fn noise_std(&self) -> f64 {
        (self.file.hyper.jitter * self.file.hyper.signal_variance).sqrt()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.file)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Input(format!(
                "surrogate format version {} is not supported (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let resid = DVector::from_iterator(
            file.inputs.len(),
            file.inputs
                .iter()
                .zip(&file.log_targets)
                .map(|(a, b)| b - file.trend[0] - file.trend[1] * a),
        );
        let chol = correlation(&file.inputs, file.hyper.length_scale, file.hyper.jitter)
            .cholesky()
            .ok_or_else(|| Error::Training("stored hyperparameters give a singular covariance".into()))?
            .unpack();
        let alpha = chol
            .solve_lower_triangular(&resid)
            .and_then(|z| chol.transpose().solve_upper_triangular(&z))
            .ok_or_else(|| Error::Training("stored model cannot be factorized".into()))?;
        Ok(SurrogateModel { file, alpha, chol })
    }
}
