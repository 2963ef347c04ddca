//! CSV readers and writers for elastic fields and per-point results.
//!
//! Field files carry a mandatory header with columns
//! `id,svm[,s11,s22,s33,s12,s13,s23,tr]`, where the `s..` columns are the
//! deviatoric elastic stress at `f = 1` and `tr` its trace. Either `svm` or
//! the six deviatoric components must be present.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::reconstruction::{ElasticPointRecord, SVM_CONSISTENCY_TOLERANCE};
use crate::tensor::SymTensor3;

use super::fmt_f64;

const COMPONENTS: [&str; 6] = ["s11", "s22", "s33", "s12", "s13", "s23"];
/// Input deviators may carry CSV round-off in their trace.
const TRACE_TOLERANCE: f64 = 1e-6;

pub fn read_elastic_field(path: impl AsRef<Path>) -> Result<Vec<ElasticPointRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_elastic_field_from(file).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_elastic_field_from<R: Read>(reader: R) -> Result<Vec<ElasticPointRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id").ok_or_else(|| Error::Input("header has no `id` column".into()))?;
    let svm_col = col("svm");
    let comp_cols: Vec<Option<usize>> = COMPONENTS.iter().map(|c| col(c)).collect();
    let tensor_cols: Option<Vec<usize>> = match comp_cols.iter().filter(|c| c.is_some()).count() {
        0 => None,
        6 => Some(comp_cols.into_iter().flatten().collect()),
        _ => {
            return Err(Error::Input(
                "header must name all six of s11,s22,s33,s12,s13,s23 or none".into(),
            ))
        }
    };
    let tr_col = col("tr");
    if svm_col.is_none() && tensor_cols.is_none() {
        return Err(Error::Input("header needs `svm` or the deviatoric components".into()));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut inconsistent = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |c: usize| row.get(c).unwrap_or("");
        let num = |c: usize| -> Result<Option<f64>> {
            let text = field(c);
            if text.is_empty() {
                return Ok(None);
            }
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Input(format!("line {line}: `{text}` is not a finite number")))
        };
        let id = field(id_col).to_string();
        if id.is_empty() {
            return Err(Error::Input(format!("line {line}: empty id")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Input(format!("line {line}: duplicate id `{id}`")));
        }
        let svm = svm_col.map(num).transpose()?.flatten();
        let dev = match &tensor_cols {
            Some(cols) => {
                let vals = cols.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?;
                match vals.iter().filter(|v| v.is_some()).count() {
                    0 => None,
                    6 => {
                        let v: Vec<f64> = vals.into_iter().flatten().collect();
                        let t = SymTensor3::new(v[0], v[1], v[2], v[3], v[4], v[5]);
                        if t.trace().abs() > TRACE_TOLERANCE * t.frobenius_norm() {
                            return Err(Error::Input(format!(
                                "line {line}: stress components are not deviatoric (trace {:e})",
                                t.trace()
                            )));
                        }
                        Some(t.deviatoric())
                    }
                    _ => return Err(Error::Input(format!("line {line}: incomplete deviator"))),
                }
            }
            None => None,
        };
        let tr = tr_col.map(num).transpose()?.flatten();
        if let (Some(v), Some(d)) = (svm, dev) {
            let d = d.equivalent_norm();
            if (v - d).abs() > SVM_CONSISTENCY_TOLERANCE * v.abs().max(d) {
                inconsistent.push(id);
                continue;
            }
        }
        let record = ElasticPointRecord::new(id, svm, dev, tr).map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("line {line}: {msg}")),
            other => other,
        })?;
        records.push(record);
    }
    if !inconsistent.is_empty() {
        return Err(Error::Input(format!(
            "von Mises stress disagrees with the deviator beyond {SVM_CONSISTENCY_TOLERANCE:e} relative for ids: {}",
            inconsistent.join(", ")
        )));
    }
    if records.is_empty() {
        return Err(Error::Input("field file has no rows".into()));
    }
    Ok(records)
}

pub fn write_elastic_field(path: impl AsRef<Path>, records: &[ElasticPointRecord]) -> Result<()> {
    let with_tensor = records.iter().any(|r| r.dev_sigma.is_some());
    let mut w = CsvOut::create(path.as_ref())?;
    let mut header = vec!["id", "svm"];
    if with_tensor {
        header.extend(COMPONENTS);
        header.push("tr");
    }
    w.row(header.iter().map(|s| s.to_string()))?;
    for r in records {
        let mut row = vec![r.id.clone(), fmt_f64(r.sigma_vm)];
        if with_tensor {
            match r.dev_sigma {
                Some(d) => row.extend(d.components().iter().map(|v| fmt_f64(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), 6)),
            }
            row.push(r.trace_sigma.map(fmt_f64).unwrap_or_default());
        }
        w.row(row)?;
    }
    w.finish()
}

/// Buffered CSV writer that reports I/O errors with the file path.
pub(crate) struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
    path: std::path::PathBuf,
}

impl CsvOut {
    pub(crate) fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(CsvOut {
            inner: csv::WriterBuilder::new()
                .flexible(true)
                .from_writer(BufWriter::new(file)),
            path: path.to_path_buf(),
        })
    }

    pub(crate) fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(|e| self.wrap(e))
    }

    /// Single-cell line, used for trailing summaries.
    pub(crate) fn raw_line(&mut self, line: &str) -> Result<()> {
        self.row([line])
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }

    fn wrap(&self, e: csv::Error) -> Error {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&self.path, io),
            other => Error::Input(format!("{}: {other:?}", self.path.display())),
        }
    }
}
