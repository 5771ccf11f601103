use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::bbl::BblKey;
use super::records::{AliasTable, ParcelRecord, PropertyYearRecord, SaleRecord};

/// Building categories kept by [`apply_global_filters`].
pub const INCLUDED_CATEGORIES: [char; 8] = ['A', 'B', 'C', 'D', 'F', 'G', 'L', 'O'];
pub const MAX_BUILDINGS_PER_LOT: u32 = 2;

/// Replaces each reported key with its canonical alias, when one exists.
pub fn resolve_sales(sales: &[SaleRecord], aliases: &AliasTable) -> Vec<SaleRecord> {
    sales
        .iter()
        .map(|s| {
            let mut out = s.clone();
            if let Some(canonical) = aliases.resolve(&s.raw_bbl) {
                out.raw_bbl = *canonical;
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinStats {
    pub parcel_years: usize,
    pub sales: usize,
    /// Sales whose (bbl, year) matched no parcel row.
    pub unmatched_sales: usize,
    /// Parcel-years dropped for having two or more sales.
    pub multi_sale_parcel_years: usize,
    /// Duplicate (bbl, year) parcel rows; the first is kept.
    pub duplicate_parcel_rows: usize,
    pub missing_coordinates: usize,
    pub rows: usize,
}

impl JoinStats {
    pub fn unmatched_rate(&self) -> f64 {
        if self.sales == 0 {
            0.0
        } else {
            self.unmatched_sales as f64 / self.sales as f64
        }
    }
}

/// Left-joins sales onto parcel-years.
///
/// Parcel-years with two or more sales are dropped. The output is sorted by
/// `(bbl, year)`. Rows without coordinates are kept and counted in the stats.
pub fn join_panel(
    parcels: &[ParcelRecord],
    sales: &[SaleRecord],
) -> (Vec<PropertyYearRecord>, JoinStats) {
    let mut stats = JoinStats {
        sales: sales.len(),
        ..Default::default()
    };

    let mut by_key: BTreeMap<(BblKey, i32), &ParcelRecord> = BTreeMap::new();
    for p in parcels {
        match by_key.entry((p.bbl, p.year)) {
            Entry::Vacant(slot) => {
                slot.insert(p);
            }
            Entry::Occupied(_) => stats.duplicate_parcel_rows += 1,
        }
    }
    stats.parcel_years = by_key.len();

    let mut sales_by_key: HashMap<(BblKey, i32), Vec<&SaleRecord>> = HashMap::new();
    for s in sales {
        let key = (s.raw_bbl, s.sale_year);
        if by_key.contains_key(&key) {
            sales_by_key.entry(key).or_default().push(s);
        } else {
            stats.unmatched_sales += 1;
        }
    }

    let mut rows = Vec::with_capacity(by_key.len());
    for (key, parcel) in by_key {
        let record = match sales_by_key.get(&key).map(Vec::as_slice) {
            None | Some([]) => PropertyYearRecord::unsold(parcel.clone()),
            Some([sale]) => {
                let psf = if sale.gross_square_feet > 0.0 {
                    Some(sale.sale_price_total / sale.gross_square_feet)
                } else {
                    None
                };
                PropertyYearRecord {
                    parcel: parcel.clone(),
                    sold: true,
                    sale_price_total: Some(sale.sale_price_total),
                    gross_square_feet: Some(sale.gross_square_feet),
                    sale_psf: psf,
                }
            }
            Some(_) => {
                stats.multi_sale_parcel_years += 1;
                continue;
            }
        };
        if record.parcel.coordinates().is_none() {
            stats.missing_coordinates += 1;
        }
        rows.push(record);
    }
    stats.rows = rows.len();
    (rows, stats)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_rows: usize,
    pub retained_rows: usize,
}

impl FilterReport {
    pub fn retention(&self) -> f64 {
        if self.input_rows == 0 {
            1.0
        } else {
            self.retained_rows as f64 / self.input_rows as f64
        }
    }
}

pub fn passes_global_filters(row: &PropertyYearRecord) -> bool {
    let category_ok = row
        .parcel
        .category()
        .is_some_and(|c| INCLUDED_CATEGORIES.contains(&c));
    category_ok && row.parcel.num_bldgs <= MAX_BUILDINGS_PER_LOT
}

/// Keeps the included building categories on lots with at most two buildings.
pub fn apply_global_filters(
    panel: Vec<PropertyYearRecord>,
) -> (Vec<PropertyYearRecord>, FilterReport) {
    let input_rows = panel.len();
    let kept: Vec<_> = panel.into_iter().filter(passes_global_filters).collect();
    let report = FilterReport {
        input_rows,
        retained_rows: kept.len(),
    };
    (kept, report)
}

/// Category and borough rule for the second modeling stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetRule {
    pub categories: BTreeSet<char>,
    /// Borough names as used in the config, e.g. `MN`.
    pub boroughs: Vec<String>,
    /// Borough name to numeric code.
    #[serde(default = "default_borough_codes")]
    pub borough_codes: BTreeMap<String, u8>,
}

pub fn default_borough_codes() -> BTreeMap<String, u8> {
    [("MN", 1), ("BX", 2), ("BK", 3), ("QN", 4), ("SI", 5)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

impl Default for SubsetRule {
    /// Walk-up and elevator apartments in Manhattan, Brooklyn and the Bronx.
    fn default() -> Self {
        SubsetRule {
            categories: ['C', 'D'].into_iter().collect(),
            boroughs: vec!["MN".into(), "BK".into(), "BX".into()],
            borough_codes: default_borough_codes(),
        }
    }
}

impl SubsetRule {
    pub fn borough_code_set(&self) -> crate::Result<BTreeSet<u8>> {
        self.boroughs
            .iter()
            .map(|name| {
                self.borough_codes.get(name).copied().ok_or_else(|| {
                    crate::Error::config("stage2.boroughs", format!("unknown borough {name:?}"))
                })
            })
            .collect()
    }

    pub fn matches(&self, row: &PropertyYearRecord, codes: &BTreeSet<u8>) -> bool {
        row.parcel
            .category()
            .is_some_and(|c| self.categories.contains(&c))
            && codes.contains(&row.parcel.borough)
    }
}

pub fn subset_stage2(
    panel: &[PropertyYearRecord],
    rule: &SubsetRule,
) -> crate::Result<Vec<PropertyYearRecord>> {
    let codes = rule.borough_code_set()?;
    Ok(panel
        .iter()
        .filter(|r| rule.matches(r, &codes))
        .cloned()
        .collect())
}
