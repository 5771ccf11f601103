use serde::{Deserialize, Serialize};

use super::matrix::{from_opt, ColumnSpec, FeatureMatrix, FeatureSetKind, RowKey, MISSING};
use super::moving::{ema, percent_change, sma};
use crate::error::{Error, Result};
use crate::ingest::PropertyYearRecord;

pub const SHARE_COLUMNS: [&str; 8] = [
    "Percent_Com",
    "Percent_Res",
    "Percent_Office",
    "Percent_Retail",
    "Percent_Garage",
    "Percent_Storage",
    "Percent_Factory",
    "Percent_Other",
];

pub const SMA_WINDOWS: [usize; 3] = [2, 3, 5];
pub const EMA_WINDOWS: [usize; 3] = [2, 3, 5];
pub const CHANGE_WINDOWS: [usize; 2] = [2, 5];

/// Sale-history columns, in matrix order.
pub fn history_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "Last_Sale_Price",
        "Last_Sale_Price_Total",
        "Last_Sale_Year",
        "Years_Since_Last_Sale",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(SMA_WINDOWS.iter().map(|n| format!("SMA_Price_{n}_year")));
    cols.extend(EMA_WINDOWS.iter().map(|n| format!("EMA_Price_{n}_year")));
    cols.extend(CHANGE_WINDOWS.iter().map(|n| format!("Percent_Change_SMA_{n}")));
    cols.extend(CHANGE_WINDOWS.iter().map(|n| format!("Percent_Change_EMA_{n}")));
    cols
}

/// Moving-average columns that get spatial lags.
pub fn price_trend_columns() -> Vec<String> {
    history_columns()
        .into_iter()
        .filter(|c| c.starts_with("SMA_") || c.starts_with("EMA_") || c.starts_with("Percent_Change_"))
        .collect()
}

/// Per-parcel sale history, advanced one panel year at a time.
///
/// Prices enter the history only from market sales with a positive price
/// per square foot. Any sale, including a zero-price transfer, resets the
/// last sale year.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SaleHistoryState {
    pub last_psf: Option<f64>,
    pub last_total: Option<f64>,
    pub last_sale_year: Option<i32>,
    /// Carried-forward last price, one entry per observed year.
    carried: Vec<f64>,
    prev_sma: [Option<f64>; 2],
    prev_ema: [Option<f64>; 2],
    last_year: Option<i32>,
}

/// History features for one parcel-year, using sales strictly before it.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySnapshot {
    pub values: Vec<Option<f64>>,
}

impl SaleHistoryState {
    /// Snapshot for `year`, then fold in that year's sale.
    pub fn advance(&mut self, row: &PropertyYearRecord) -> Result<HistorySnapshot> {
        let year = row.year();
        if let Some(prev) = self.last_year {
            if year <= prev {
                return Err(Error::InvalidInput(format!(
                    "{}: history must advance in year order ({year} after {prev})",
                    row.parcel.bbl
                )));
            }
        }
        self.last_year = Some(year);
        if let Some(p) = self.last_psf {
            self.carried.push(p);
        }
        let smas: Vec<Option<f64>> = SMA_WINDOWS.iter().map(|&n| sma(&self.carried, n)).collect();
        let emas: Vec<Option<f64>> = EMA_WINDOWS.iter().map(|&n| ema(&self.carried, n)).collect();
        let sma_at = |n: usize| smas[SMA_WINDOWS.iter().position(|&w| w == n).unwrap()];
        let ema_at = |n: usize| emas[EMA_WINDOWS.iter().position(|&w| w == n).unwrap()];

        let mut values = vec![
            self.last_psf,
            self.last_total,
            self.last_sale_year.map(f64::from),
            self.last_sale_year.map(|y| f64::from(year - y)),
        ];
        values.extend(&smas);
        values.extend(&emas);
        let mut cur_sma = [None; 2];
        let mut cur_ema = [None; 2];
        for (k, &n) in CHANGE_WINDOWS.iter().enumerate() {
            cur_sma[k] = sma_at(n);
            values.push(percent_change(cur_sma[k], self.prev_sma[k]));
        }
        for (k, &n) in CHANGE_WINDOWS.iter().enumerate() {
            cur_ema[k] = ema_at(n);
            values.push(percent_change(cur_ema[k], self.prev_ema[k]));
        }
        self.prev_sma = cur_sma;
        self.prev_ema = cur_ema;

        if row.sold {
            self.last_sale_year = Some(year);
            if let Some(psf) = row.priced_sale_psf() {
                self.last_psf = Some(psf);
                self.last_total = row.sale_price_total;
            }
        }
        Ok(HistorySnapshot { values })
    }
}

pub(crate) fn check_sorted(panel: &[PropertyYearRecord]) -> Result<()> {
    for w in panel.windows(2) {
        if w[0].key() >= w[1].key() {
            return Err(Error::InvalidInput(format!(
                "panel must be sorted by (bbl, year) without duplicates: {} {} then {} {}",
                w[0].parcel.bbl,
                w[0].year(),
                w[1].parcel.bbl,
                w[1].year()
            )));
        }
    }
    Ok(())
}

pub fn row_keys(panel: &[PropertyYearRecord]) -> Vec<RowKey> {
    panel
        .iter()
        .map(|r| RowKey {
            bbl: r.parcel.bbl,
            year: r.year(),
        })
        .collect()
}

fn category_code(row: &PropertyYearRecord) -> f64 {
    match row.parcel.category() {
        Some(c) if c.is_ascii_uppercase() => f64::from(c as u8 - b'A' + 1),
        _ => MISSING,
    }
}

fn zip_code(row: &PropertyYearRecord) -> f64 {
    row.parcel.zip.trim().parse::<u32>().map(f64::from).unwrap_or(MISSING)
}

/// Raw building attributes, usage shares and sale-history features.
pub fn base_features(panel: &[PropertyYearRecord]) -> Result<FeatureMatrix> {
    check_sorted(panel)?;
    let mut m = FeatureMatrix::new(FeatureSetKind::Base, row_keys(panel))?;

    let raw = |f: &dyn Fn(&PropertyYearRecord) -> f64| panel.iter().map(f).collect::<Vec<f64>>();
    m.push_column(ColumnSpec::categorical("BoroCode", "raw:borough"), raw(&|r| f64::from(r.parcel.borough)))?;
    m.push_column(ColumnSpec::categorical("ZipCode", "raw:zip"), raw(&zip_code))?;
    m.push_column(ColumnSpec::categorical("BldgCategory", "raw:building_class[0]"), raw(&category_code))?;
    let numeric: [(&str, &dyn Fn(&PropertyYearRecord) -> f64); 15] = [
        ("NumBldgs", &|r| f64::from(r.parcel.num_bldgs)),
        ("BldgArea", &|r| r.parcel.areas.total),
        ("ComArea", &|r| r.parcel.areas.commercial),
        ("ResArea", &|r| r.parcel.areas.residential),
        ("OfficeArea", &|r| r.parcel.areas.office),
        ("RetailArea", &|r| r.parcel.areas.retail),
        ("GarageArea", &|r| r.parcel.areas.garage),
        ("StrgeArea", &|r| r.parcel.areas.storage),
        ("FactryArea", &|r| r.parcel.areas.factory),
        ("OtherArea", &|r| r.parcel.areas.other),
        ("AssessTot", &|r| r.parcel.assessed_total),
        ("YearBuilt", &|r| r.parcel.year_built.map(f64::from).unwrap_or(MISSING)),
        ("NumFloors", &|r| r.parcel.floors),
        ("UnitsRes", &|r| r.parcel.units_res),
        ("UnitsTotal", &|r| r.parcel.units_total),
    ];
    for (name, f) in numeric {
        m.push_column(ColumnSpec::numeric(name, format!("raw:{name}")), raw(f))?;
    }

    m.push_column(
        ColumnSpec::numeric("has_building_area", "indicator:BldgArea>0"),
        raw(&|r| if r.parcel.areas.total > 0.0 { 1.0 } else { 0.0 }),
    )?;
    for (k, name) in SHARE_COLUMNS.iter().enumerate() {
        let values = panel
            .iter()
            .map(|r| {
                let total = r.parcel.areas.total;
                if total > 0.0 {
                    r.parcel.areas.components()[k] / total
                } else {
                    MISSING
                }
            })
            .collect();
        m.push_column(ColumnSpec::numeric(*name, "share:component/BldgArea"), values)?;
    }

    let names = history_columns();
    let mut history: Vec<Vec<f64>> = vec![Vec::with_capacity(panel.len()); names.len()];
    let mut state = SaleHistoryState::default();
    for (i, row) in panel.iter().enumerate() {
        if i == 0 || panel[i - 1].parcel.bbl != row.parcel.bbl {
            state = SaleHistoryState::default();
        }
        let snap = state.advance(row)?;
        for (col, v) in history.iter_mut().zip(snap.values) {
            col.push(from_opt(v));
        }
    }
    for (name, values) in names.into_iter().zip(history) {
        let formula = if name.starts_with("SMA") {
            "history:sma"
        } else if name.starts_with("EMA") {
            "history:ema"
        } else if name.starts_with("Percent_Change") {
            "history:percent_change"
        } else {
            "history:carry_forward"
        };
        m.push_column(ColumnSpec::numeric(name, formula), values)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::matrix::is_missing;
    use crate::features::test_support::{row, sold_row};

    #[test]
    fn fully_residential_building() {
        let panel = vec![row("1_1_1", 2010, "A1", "10001")];
        let m = base_features(&panel).unwrap();
        assert_eq!(m.column("Percent_Res").unwrap()[0], 1.0);
        for other in SHARE_COLUMNS.iter().filter(|c| **c != "Percent_Res") {
            assert_eq!(m.column(other).unwrap()[0], 0.0, "{other}");
        }
        assert_eq!(m.column("has_building_area").unwrap()[0], 1.0);
    }

    #[test]
    fn empty_lot_has_no_shares() {
        let mut r = row("1_1_1", 2010, "A1", "10001");
        r.parcel.areas = Default::default();
        let m = base_features(&[r]).unwrap();
        assert_eq!(m.column("has_building_area").unwrap()[0], 0.0);
        assert!(SHARE_COLUMNS.iter().all(|c| is_missing(m.column(c).unwrap()[0])));
    }

    #[test]
    fn carry_forward_three_years() {
        let panel = vec![
            sold_row("1_1_1", 2010, 300.0),
            row("1_1_1", 2011, "A1", "10001"),
            row("1_1_1", 2012, "A1", "10001"),
            row("1_1_1", 2013, "A1", "10001"),
        ];
        let m = base_features(&panel).unwrap();
        let last = m.column("Last_Sale_Price").unwrap();
        let since = m.column("Years_Since_Last_Sale").unwrap();
        assert!(is_missing(last[0]), "the sale year itself sees no history");
        assert_eq!(last[3], 300.0);
        assert_eq!(since[3], 3.0);
        assert_eq!(m.column("SMA_Price_2_year").unwrap()[3], 300.0);
    }

    #[test]
    fn moving_averages_follow_carried_series() {
        let panel = vec![
            sold_row("1_1_1", 2010, 100.0),
            sold_row("1_1_1", 2011, 200.0),
            row("1_1_1", 2012, "A1", "10001"),
        ];
        let m = base_features(&panel).unwrap();
        // carried series at 2012: [100 (2011), 200 (2012)]
        assert_eq!(m.column("SMA_Price_2_year").unwrap()[2], 150.0);
        let ema2 = m.column("EMA_Price_2_year").unwrap()[2];
        assert!((ema2 - 500.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.column("Percent_Change_SMA_2").unwrap()[2], 0.5);
    }

    #[test]
    fn zero_price_sale_moves_year_but_not_price() {
        let mut zero = sold_row("1_1_1", 2011, 0.0);
        zero.sale_price_total = Some(0.0);
        let panel = vec![
            sold_row("1_1_1", 2010, 250.0),
            zero,
            row("1_1_1", 2012, "A1", "10001"),
        ];
        let m = base_features(&panel).unwrap();
        assert_eq!(m.column("Last_Sale_Price").unwrap()[2], 250.0);
        assert_eq!(m.column("Years_Since_Last_Sale").unwrap()[2], 1.0);
    }

    #[test]
    fn shares_sum_to_one_when_components_cover_total() {
        let mut r = row("1_1_1", 2010, "C1", "10001");
        let a = &mut r.parcel.areas;
        a.total = 1000.0;
        a.residential = 600.0;
        a.retail = 250.0;
        a.office = 150.0;
        let m = base_features(&[r]).unwrap();
        let sum: f64 = SHARE_COLUMNS.iter().map(|c| m.column(c).unwrap()[0]).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsorted_panel_rejected() {
        let panel = vec![row("1_1_1", 2011, "A1", "1"), row("1_1_1", 2010, "A1", "1")];
        assert!(base_features(&panel).is_err());
    }
}
