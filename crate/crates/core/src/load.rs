//! Sampled proportional load functions `f(t)` and their reversal structure.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction of a load segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn of(from: f64, to: f64) -> Option<Direction> {
        if to > from {
            Some(Direction::Increasing)
        } else if to < from {
            Some(Direction::Decreasing)
        } else {
            None
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

/// Sampled load multiplier applied to the elastic solution computed at `f = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LoadSamples", into = "LoadSamples")]
pub struct LoadHistory {
    times: Vec<f64>,
    values: Vec<f64>,
    reversals: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadSamples {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TryFrom<LoadSamples> for LoadHistory {
    type Error = Error;
    fn try_from(s: LoadSamples) -> Result<Self> {
        LoadHistory::new(s.times, s.values)
    }
}

impl From<LoadHistory> for LoadSamples {
    fn from(l: LoadHistory) -> Self {
        LoadSamples {
            times: l.times,
            values: l.values,
        }
    }
}

impl LoadHistory {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Input(format!(
                "load history has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite load value at sample {i}")));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Input(format!(
                "load times must be strictly increasing (samples {} and {})",
                i,
                i + 1
            )));
        }
        let reversals = detect_reversals(&values)?;
        Ok(LoadHistory {
            times,
            values,
            reversals,
        })
    }

    /// Samples at unit time spacing.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| i as f64).collect();
        LoadHistory::new(times, values)
    }

    /// Monotone ramp from 0 to `peak` in `steps` equal increments.
    pub fn ramp(peak: f64, steps: usize) -> Result<Self> {
        let values = (0..=steps).map(|i| peak * i as f64 / steps as f64).collect();
        LoadHistory::from_values(values)
    }

    /// Symmetric triangle wave `0 -> +a -> -a -> 0` repeated `cycles` times,
    /// with `per_quarter` increments on each quarter cycle.
    pub fn triangle(amplitude: f64, cycles: usize, per_quarter: usize) -> Result<Self> {
        let n = per_quarter as f64;
        let mut values = vec![0.0];
        for _ in 0..cycles {
            values.extend((1..=per_quarter).map(|k| amplitude * k as f64 / n));
            values.extend((1..=2 * per_quarter).map(|k| amplitude * (1.0 - k as f64 / n)));
            values.extend((1..=per_quarter).map(|k| amplitude * (k as f64 / n - 1.0)));
        }
        LoadHistory::from_values(values)
    }

    /// Reads a `t,f` CSV file with a mandatory header.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Input(format!("load file lacks a `{name}` column")))
        };
        let (ti, fi) = (col("t")?, col("f")?);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            let parse = |i: usize, name: &str| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Input(format!("load file line {line}: bad `{name}` value")))
            };
            times.push(parse(ti, "t")?);
            values.push(parse(fi, "f")?);
        }
        LoadHistory::new(times, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "f"])?;
        for (t, f) in self.times.iter().zip(&self.values) {
            w.write_record([crate::field::fmt_f64(*t), crate::field::fmt_f64(*f)])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interior sample indices where the loading direction flips.
    pub fn reversal_indices(&self) -> &[usize] {
        &self.reversals
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reversals as seen by the integrator, which starts from an unloaded
    /// state at `f = 0`: index 0 is added when the first sample is off zero
    /// and the load then turns back.
    pub fn origin_resets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.reversals.len() + 1);
        let start = Direction::of(0.0, self.values[0]);
        let first = self.values.windows(2).find_map(|w| Direction::of(w[0], w[1]));
        if let (Some(a), Some(b)) = (start, first) {
            if a != b {
                // the turn happens at the last sample before the first move
                let idx = self.values.windows(2).position(|w| w[0] != w[1]).unwrap_or(0);
                out.push(idx);
            }
        }
        out.extend_from_slice(&self.reversals);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Boundaries of load cycles: the start of the history followed by every
    /// reversal after which the load increases again (the valleys).
    ///
    /// Cycle `k` (1-based) spans `[bounds[k-1], bounds[k]]`.
    pub fn cycle_bounds(&self) -> Vec<usize> {
        let mut bounds = vec![0];
        for &r in &self.reversals {
            let next = self.values[r + 1..]
                .iter()
                .find_map(|&v| Direction::of(self.values[r], v));
            if next == Some(Direction::Increasing) {
                bounds.push(r);
            }
        }
        bounds
    }

    /// Sample window `(start, end)` of cycle `cycle` (1-based).
    pub fn cycle_window(&self, cycle: usize) -> Result<(usize, usize)> {
        let bounds = self.cycle_bounds();
        let available = bounds.len() - 1;
        if cycle == 0 || cycle > available {
            return Err(Error::Input(format!(
                "cycle {cycle} requested but the load history holds {available} complete cycles"
            )));
        }
        Ok((bounds[cycle - 1], bounds[cycle]))
    }

    /// Same history with each segment split into `refinement` equal substeps.
    pub fn refined(&self, refinement: usize) -> Result<LoadHistory> {
        if refinement == 0 {
            return Err(Error::Precondition("refinement must be >= 1".into()));
        }
        if refinement == 1 {
            return Ok(self.clone());
        }
        let n = (self.len() - 1) * refinement + 1;
        let mut times = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for i in 0..self.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let (f0, f1) = (self.values[i], self.values[i + 1]);
            for k in 0..refinement {
                let a = k as f64 / refinement as f64;
                times.push(t0 + a * (t1 - t0));
                values.push(if k == 0 { f0 } else { f0 + a * (f1 - f0) });
            }
        }
        times.push(*self.times.last().unwrap());
        values.push(*self.values.last().unwrap());
        LoadHistory::new(times, values)
    }
}

/// Interior indices `i` where the direction of `f` after `i` differs from the
/// last non-zero direction before it. Plateaus carry the previous direction,
/// so a flat peak reports its last sample.
pub fn detect_reversals(values: &[f64]) -> Result<Vec<usize>> {
    if values.len() < 2 {
        return Err(Error::Input(format!(
            "a load history needs at least 2 samples, got {}",
            values.len()
        )));
    }
    let mut out = Vec::new();
    let mut carried: Option<Direction> = None;
    for (i, w) in values.windows(2).enumerate() {
        if let Some(dir) = Direction::of(w[0], w[1]) {
            if carried.is_some_and(|c| c != dir) {
                out.push(i);
            }
            carried = Some(dir);
        }
    }
    Ok(out)
}
