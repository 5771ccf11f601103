use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::BblKey;

/// Marker for a missing cell.
pub const MISSING: f64 = f64::NAN;

#[inline]
pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[inline]
pub fn from_opt(v: Option<f64>) -> f64 {
    v.unwrap_or(MISSING)
}

#[inline]
pub fn to_opt(v: f64) -> Option<f64> {
    if v.is_nan() {
        None
    } else {
        Some(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSetKind {
    Base,
    Zone,
    Spatial,
}

impl FeatureSetKind {
    pub const ALL: [FeatureSetKind; 3] = [FeatureSetKind::Base, FeatureSetKind::Zone, FeatureSetKind::Spatial];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureSetKind::Base => "base",
            FeatureSetKind::Zone => "zone",
            FeatureSetKind::Spatial => "spatial",
        }
    }
}

impl std::str::FromStr for FeatureSetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(FeatureSetKind::Base),
            "zone" | "zip" => Ok(FeatureSetKind::Zone),
            "spatial" => Ok(FeatureSetKind::Spatial),
            other => Err(Error::InvalidInput(format!("unknown feature set {other:?}"))),
        }
    }
}

impl std::fmt::Display for FeatureSetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    /// Integer level codes, one-hot encoded by the learners.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Short identifier of how the column is derived.
    pub formula: String,
}

impl ColumnSpec {
    pub fn numeric(name: impl Into<String>, formula: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Numeric,
            formula: formula.into(),
        }
    }

    pub fn categorical(name: impl Into<String>, formula: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Categorical,
            formula: formula.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub bbl: BblKey,
    pub year: i32,
}

/// Column manifest persisted next to a feature matrix CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnManifest {
    pub kind: FeatureSetKind,
    pub columns: Vec<ColumnSpec>,
}

/// Named numeric columns over `(bbl, year)` rows, stored column-major.
/// Missing cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    kind: FeatureSetKind,
    keys: Vec<RowKey>,
    columns: Vec<ColumnSpec>,
    data: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(kind: FeatureSetKind, keys: Vec<RowKey>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(keys.len());
        if let Some(dup) = keys.iter().find(|k| !seen.insert(**k)) {
            return Err(Error::InvalidInput(format!(
                "duplicate row key {} {}",
                dup.bbl, dup.year
            )));
        }
        Ok(FeatureMatrix {
            kind,
            keys,
            columns: Vec::new(),
            data: Vec::new(),
        })
    }

    pub fn push_column(&mut self, spec: ColumnSpec, values: Vec<f64>) -> Result<()> {
        if values.len() != self.keys.len() {
            return Err(Error::InvalidInput(format!(
                "column {} has {} values for {} rows",
                spec.name,
                values.len(),
                self.keys.len()
            )));
        }
        if self.column_index(&spec.name).is_some() {
            return Err(Error::InvalidInput(format!("duplicate column {}", spec.name)));
        }
        self.columns.push(spec);
        self.data.push(values);
        Ok(())
    }

    /// Copy with a different kind, keeping every column.
    pub fn extend_as(&self, kind: FeatureSetKind) -> Self {
        FeatureMatrix {
            kind,
            ..self.clone()
        }
    }

    pub fn kind(&self) -> FeatureSetKind {
        self.kind
    }

    pub fn keys(&self) -> &[RowKey] {
        &self.keys
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.data[i].as_slice())
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.data[index]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col][row]
    }

    pub fn manifest(&self) -> ColumnManifest {
        ColumnManifest {
            kind: self.kind,
            columns: self.columns.clone(),
        }
    }

    /// Rows at the given indices, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        FeatureMatrix {
            kind: self.kind,
            keys: rows.iter().map(|&r| self.keys[r]).collect(),
            columns: self.columns.clone(),
            data: self
                .data
                .iter()
                .map(|col| rows.iter().map(|&r| col[r]).collect())
                .collect(),
        }
    }

    pub fn filter_rows(&self, mut keep: impl FnMut(&RowKey) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&r| keep(&self.keys[r])).collect();
        self.select_rows(&idx)
    }

    pub fn row_index(&self) -> HashMap<RowKey, usize> {
        self.keys.iter().enumerate().map(|(i, k)| (*k, i)).collect()
    }

    /// SHA-256 over the keys and exact cell bits of rows in `year`.
    pub fn year_hash(&self, year: i32) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            h.update(c.name.as_bytes());
            h.update([0u8]);
        }
        for (r, key) in self.keys.iter().enumerate() {
            if key.year != year {
                continue;
            }
            h.update(key.bbl.to_string().as_bytes());
            h.update(key.year.to_le_bytes());
            for col in &self.data {
                let v = col[r];
                // all NaNs hash alike
                let bits = if v.is_nan() { u64::MAX } else { v.to_bits() };
                h.update(bits.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["bbl".to_string(), "year".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for (r, key) in self.keys.iter().enumerate() {
            record.clear();
            record.push(key.bbl.to_string());
            record.push(key.year.to_string());
            for col in &self.data {
                let v = col[r];
                record.push(if v.is_nan() { String::new() } else { v.to_string() });
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, manifest: &ColumnManifest) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(BufReader::new(file));
        let header = r.headers()?.clone();
        let expected: Vec<&str> = ["bbl", "year"]
            .into_iter()
            .chain(manifest.columns.iter().map(|c| c.name.as_str()))
            .collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(Error::InvalidInput(format!(
                "{}: header does not match its manifest",
                path.display()
            )));
        }
        let mut keys = Vec::new();
        let mut data: Vec<Vec<f64>> = vec![Vec::new(); manifest.columns.len()];
        for rec in r.records() {
            let rec = rec?;
            let bbl: BblKey = rec[0].parse()?;
            let year: i32 = rec[1]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad year {:?}", &rec[1])))?;
            keys.push(RowKey { bbl, year });
            for (c, col) in data.iter_mut().enumerate() {
                let cell = &rec[c + 2];
                col.push(if cell.is_empty() {
                    MISSING
                } else {
                    cell.parse().map_err(|_| {
                        Error::InvalidInput(format!("bad number {cell:?} in {}", manifest.columns[c].name))
                    })?
                });
            }
        }
        let mut m = FeatureMatrix::new(manifest.kind, keys)?;
        for (spec, col) in manifest.columns.iter().cloned().zip(data) {
            m.push_column(spec, col)?;
        }
        Ok(m)
    }
}
