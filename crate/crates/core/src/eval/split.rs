use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RowKey;

/// Out-of-time split: an inclusive training year range, then one
/// validation year and one test year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_start: i32,
    pub train_end: i32,
    pub validation_year: i32,
    pub test_year: i32,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_start > self.train_end {
            return Err(Error::config("split.train_start", "must not exceed train_end"));
        }
        if !(self.train_end < self.validation_year && self.validation_year < self.test_year) {
            return Err(Error::config(
                "split",
                "years must satisfy train_end < validation_year < test_year",
            ));
        }
        Ok(())
    }

    /// Last two years for validation and test, the rest for training.
    pub fn trailing(years: &[i32]) -> Result<SplitSpec> {
        if years.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "need at least three panel years for an out-of-time split, got {}",
                years.len()
            )));
        }
        let n = years.len();
        Ok(SplitSpec {
            train_start: years[0],
            train_end: years[n - 3],
            validation_year: years[n - 2],
            test_year: years[n - 1],
        })
    }
}

/// Row indices allowed into model fitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainRows(Vec<usize>);

/// Row indices only ever scored, never fitted on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeldOutRows(Vec<usize>);

impl TrainRows {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

impl HeldOutRows {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: TrainRows,
    pub validation: HeldOutRows,
    pub test: HeldOutRows,
    pub warnings: Vec<String>,
}

/// Partitions rows by year. Rows outside every range are left out.
pub fn out_of_time_split(keys: &[RowKey], spec: &SplitSpec) -> Result<Partition> {
    spec.validate()?;
    let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (i, k) in keys.iter().enumerate() {
        if (spec.train_start..=spec.train_end).contains(&k.year) {
            train.push(i);
        } else if k.year == spec.validation_year {
            validation.push(i);
        } else if k.year == spec.test_year {
            test.push(i);
        }
    }
    let mut warnings = Vec::new();
    for (name, rows, year) in [
        ("validation", &validation, spec.validation_year),
        ("test", &test, spec.test_year),
    ] {
        if rows.is_empty() {
            let w = format!("{name} year {year} has no rows");
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    Ok(Partition {
        train: TrainRows(train),
        validation: HeldOutRows(validation),
        test: HeldOutRows(test),
        warnings,
    })
}
