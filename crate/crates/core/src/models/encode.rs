use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::{ColumnKind, ColumnSpec};

pub const DEFAULT_MAX_LEVELS: usize = 50;

/// How one source column expands into design columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceEncoding {
    /// Raw value. Dense designs replace missing cells with `median` and,
    /// when `indicator` is set, append a 0/1 missing flag.
    Numeric { median: f64, indicator: bool },
    /// One column per kept level, plus an `other` column when some training
    /// levels overflowed the cap. Missing cells are all zeros.
    Categorical { levels: Vec<f64>, other: bool },
}

/// Column expansion learned from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub sources: Vec<SourceEncoding>,
    pub max_levels: usize,
}

/// Column-major design matrix with the source column of every design column.
#[derive(Debug, Clone)]
pub struct Design {
    pub columns: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub source_of: Vec<usize>,
    pub n_rows: usize,
}

fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl Encoder {
    pub fn fit(specs: &[ColumnSpec], columns: &[&[f64]], max_levels: usize) -> Encoder {
        let sources = specs
            .iter()
            .zip(columns)
            .map(|(spec, col)| match spec.kind {
                ColumnKind::Numeric => SourceEncoding::Numeric {
                    median: median(col),
                    indicator: col.iter().any(|v| v.is_nan()),
                },
                ColumnKind::Categorical => {
                    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
                    for v in col.iter().filter(|v| !v.is_nan()) {
                        *counts.entry(v.to_bits()).or_default() += 1;
                    }
                    let mut by_freq: Vec<(u64, usize)> = counts.into_iter().collect();
                    // most frequent first, ties by value
                    by_freq.sort_by(|a, b| {
                        b.1.cmp(&a.1)
                            .then(f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)))
                    });
                    let other = by_freq.len() > max_levels;
                    let mut levels: Vec<f64> = by_freq
                        .into_iter()
                        .take(max_levels)
                        .map(|(bits, _)| f64::from_bits(bits))
                        .collect();
                    levels.sort_by(f64::total_cmp);
                    SourceEncoding::Categorical { levels, other }
                }
            })
            .collect();
        Encoder {
            sources,
            max_levels,
        }
    }

    /// Expands source columns. With `dense`, numeric missing cells are
    /// imputed and flagged; otherwise they stay NaN for the trees.
    pub fn transform(&self, specs: &[ColumnSpec], columns: &[&[f64]], dense: bool) -> Design {
        let n_rows = columns.first().map_or(0, |c| c.len());
        let mut out = Design {
            columns: Vec::new(),
            names: Vec::new(),
            source_of: Vec::new(),
            n_rows,
        };
        for (s, (enc, col)) in self.sources.iter().zip(columns).enumerate() {
            let name = &specs[s].name;
            match enc {
                SourceEncoding::Numeric { median, indicator } => {
                    if dense {
                        out.push(
                            name.clone(),
                            s,
                            col.iter().map(|v| if v.is_nan() { *median } else { *v }).collect(),
                        );
                        if *indicator {
                            out.push(
                                format!("{name}__missing"),
                                s,
                                col.iter().map(|v| f64::from(u8::from(v.is_nan()))).collect(),
                            );
                        }
                    } else {
                        out.push(name.clone(), s, col.to_vec());
                    }
                }
                SourceEncoding::Categorical { levels, other } => {
                    let slot: Vec<Option<usize>> = col
                        .iter()
                        .map(|v| {
                            if v.is_nan() {
                                None
                            } else {
                                match levels.binary_search_by(|l| l.total_cmp(v)) {
                                    Ok(k) => Some(k),
                                    Err(_) if *other => Some(levels.len()),
                                    Err(_) => None,
                                }
                            }
                        })
                        .collect();
                    for (k, level) in levels.iter().enumerate() {
                        out.push(
                            format!("{name}={level}"),
                            s,
                            slot.iter().map(|x| f64::from(u8::from(*x == Some(k)))).collect(),
                        );
                    }
                    if *other {
                        let k = levels.len();
                        out.push(
                            format!("{name}=other"),
                            s,
                            slot.iter().map(|x| f64::from(u8::from(*x == Some(k)))).collect(),
                        );
                    }
                }
            }
        }
        out
    }
}

impl Design {
    fn push(&mut self, name: String, source: usize, values: Vec<f64>) {
        self.names.push(name);
        self.source_of.push(source);
        self.columns.push(values);
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Sums per-design-column scores back onto their source columns.
    pub fn fold_to_sources(source_of: &[usize], scores: &[f64], n_sources: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_sources];
        for (&s, v) in source_of.iter().zip(scores) {
            out[s] += v;
        }
        out
    }
}

/// Per-column centering and scaling fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(columns: &[Vec<f64>]) -> Self {
        let mut mean = Vec::with_capacity(columns.len());
        let mut scale = Vec::with_capacity(columns.len());
        for col in columns {
            let n = col.len().max(1) as f64;
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            // constant columns are centered only
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, columns: &mut [Vec<f64>]) {
        for ((col, m), s) in columns.iter_mut().zip(&self.mean).zip(&self.scale) {
            for v in col.iter_mut() {
                *v = (*v - m) / s;
            }
        }
    }
}
