//! Parcel and sale ingestion: keys, alias resolution, the parcel-year join,
//! global filters, and the synthetic city generator.

mod bbl;
pub mod io;
mod join;
mod records;
pub mod synth;

pub use bbl::{make_bbl, BblKey};
pub use join::{
    apply_global_filters, default_borough_codes, join_panel, passes_global_filters,
    resolve_sales, subset_stage2, FilterReport, JoinStats, SubsetRule, INCLUDED_CATEGORIES,
    MAX_BUILDINGS_PER_LOT,
};
pub use records::{
    AliasTable, BuildingAreas, ParcelRecord, PropertyYearRecord, SaleRecord,
};
pub use synth::{synth_city, SynthCity, SynthConfig};

/// Sorted distinct years present in a panel.
pub fn panel_years(panel: &[PropertyYearRecord]) -> Vec<i32> {
    let mut years: Vec<i32> = panel.iter().map(|r| r.year()).collect();
    years.sort_unstable();
    years.dedup();
    years
}

/// Diagnostics from [`build_panel`].
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IngestReport {
    pub join: JoinStats,
    pub filter: FilterReport,
}

/// Resolves aliases, joins sales onto parcel-years and applies the global
/// filters.
pub fn build_panel(
    parcels: &[ParcelRecord],
    sales: &[SaleRecord],
    aliases: &AliasTable,
) -> (Vec<PropertyYearRecord>, IngestReport) {
    let resolved = resolve_sales(sales, aliases);
    let (joined, join) = join_panel(parcels, &resolved);
    let (panel, filter) = apply_global_filters(joined);
    (panel, IngestReport { join, filter })
}
