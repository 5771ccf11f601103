use std::collections::HashMap;

use super::base::{check_sorted, history_columns};
use super::matrix::{from_opt, ColumnSpec, FeatureMatrix, FeatureSetKind, MISSING};
use super::moving::percent_change;
use super::panel::PanelYears;
use crate::error::{Error, Result};
use crate::ingest::PropertyYearRecord;

#[derive(Default, Clone, Copy)]
struct Acc {
    sum: f64,
    n: u32,
}

impl Acc {
    fn add(&mut self, v: f64) {
        if !v.is_nan() {
            self.sum += v;
            self.n += 1;
        }
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            MISSING
        } else {
            self.sum / f64::from(self.n)
        }
    }
}

/// Appends zip-level means of the sale-history columns, the same means
/// restricted to the row's building category (`_bt_only`), and the count of
/// zip sales in the previous panel year.
///
/// The means are taken over year-t rows, whose history columns only see
/// sales before t.
pub fn zone_features(base: &FeatureMatrix, panel: &[PropertyYearRecord]) -> Result<FeatureMatrix> {
    check_sorted(panel)?;
    if base.n_rows() != panel.len() || base.kind() != FeatureSetKind::Base {
        return Err(Error::InvalidInput(
            "zone features need the base matrix built from the same panel".into(),
        ));
    }
    let history = history_columns();
    let cols: Vec<&[f64]> = history
        .iter()
        .map(|h| {
            base.column(h)
                .ok_or_else(|| Error::InvalidInput(format!("base matrix lacks {h}")))
        })
        .collect::<Result<_>>()?;

    let zip_of = |r: &PropertyYearRecord| r.parcel.zip.trim().to_string();
    let cat_of = |r: &PropertyYearRecord| r.parcel.category().unwrap_or('?');

    let mut zip_acc: HashMap<(String, i32), Vec<Acc>> = HashMap::new();
    let mut bt_acc: HashMap<(String, char, i32), Vec<Acc>> = HashMap::new();
    let mut zip_sold: HashMap<(String, i32), u32> = HashMap::new();
    for (i, row) in panel.iter().enumerate() {
        let z = zip_of(row);
        let y = row.year();
        let za = zip_acc.entry((z.clone(), y)).or_insert_with(|| vec![Acc::default(); history.len()]);
        for (k, col) in cols.iter().enumerate() {
            za[k].add(col[i]);
        }
        let ba = bt_acc
            .entry((z.clone(), cat_of(row), y))
            .or_insert_with(|| vec![Acc::default(); history.len()]);
        for (k, col) in cols.iter().enumerate() {
            ba[k].add(col[i]);
        }
        *zip_sold.entry((z, y)).or_default() += u32::from(row.sold);
    }

    let years = PanelYears::new(panel);
    let sold_count = |z: &str, year: Option<i32>| -> Option<f64> {
        let y = year?;
        Some(f64::from(zip_sold.get(&(z.to_string(), y)).copied().unwrap_or(0)))
    };

    let mut m = base.extend_as(FeatureSetKind::Zone);
    let n = panel.len();
    let mut zip_cols = vec![Vec::with_capacity(n); history.len()];
    let mut bt_cols = vec![Vec::with_capacity(n); history.len()];
    let mut last_sold = Vec::with_capacity(n);
    let mut last_sold_change = Vec::with_capacity(n);
    for row in panel {
        let z = zip_of(row);
        let y = row.year();
        let za = &zip_acc[&(z.clone(), y)];
        let ba = &bt_acc[&(z.clone(), cat_of(row), y)];
        for k in 0..history.len() {
            zip_cols[k].push(za[k].mean());
            bt_cols[k].push(ba[k].mean());
        }
        let prev = years.previous(y);
        let cur = sold_count(&z, prev);
        let before = sold_count(&z, prev.and_then(|p| years.previous(p)));
        last_sold.push(from_opt(cur));
        last_sold_change.push(from_opt(percent_change(cur, before)));
    }
    for (h, values) in history.iter().zip(zip_cols) {
        m.push_column(ColumnSpec::numeric(format!("{h}_zip_average"), "zone:zip_mean"), values)?;
    }
    for (h, values) in history.iter().zip(bt_cols) {
        m.push_column(ColumnSpec::numeric(format!("{h}_bt_only"), "zone:zip_category_mean"), values)?;
    }
    m.push_column(ColumnSpec::numeric("Last_Year_Zip_Sold", "zone:zip_sales_prev_year"), last_sold)?;
    m.push_column(
        ColumnSpec::numeric("Last_Year_Zip_Sold_Percent_Change", "zone:percent_change"),
        last_sold_change,
    )?;
    Ok(m)
}
