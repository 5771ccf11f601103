//! Base, zone-aggregate and spatial-lag feature matrices plus labels.
//!
//! All three matrices share the panel's row keys; zone and spatial matrices
//! start with the base columns in the same order.

mod base;
mod labels;
mod matrix;
mod moving;
mod panel;
mod spatial;
mod zone;

pub use base::{base_features, history_columns, SaleHistoryState, SHARE_COLUMNS};
pub use labels::{make_labels, Labels};
pub use matrix::{
    from_opt, is_missing, to_opt, ColumnKind, ColumnManifest, ColumnSpec, FeatureMatrix,
    FeatureSetKind, RowKey, MISSING,
};
pub use moving::{ema, ema_alpha, percent_change, sma};
pub use panel::{truncate_for_year, PanelYears};
pub use spatial::{
    idw_weights, lag_pair, spatial_lag_features, MIN_WEIGHT_DISTANCE_M, NEIGHBORS_SOLD_COLUMN,
    RADIUS_COLUMNS,
};
pub use zone::zone_features;

use crate::error::Result;
use crate::ingest::PropertyYearRecord;
use crate::spatial_index::KeyedGraph;

/// Builds the matrix of the requested kind. `graph` is required for
/// [`FeatureSetKind::Spatial`] only.
pub fn build_features(
    kind: FeatureSetKind,
    panel: &[PropertyYearRecord],
    graph: Option<&KeyedGraph>,
) -> Result<FeatureMatrix> {
    let base = base_features(panel)?;
    match kind {
        FeatureSetKind::Base => Ok(base),
        FeatureSetKind::Zone => zone_features(&base, panel),
        FeatureSetKind::Spatial => match graph {
            Some(g) => spatial_lag_features(&base, panel, g),
            None => Err(crate::Error::MissingArtifact {
                path: "graph.csv".into(),
                hint: "run `index` first to build the neighbor graph".into(),
            }),
        },
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::ingest::{BuildingAreas, ParcelRecord, PropertyYearRecord};
    use crate::spatial_index::KeyedGraph;

    pub fn row(bbl: &str, year: i32, class: &str, zip: &str) -> PropertyYearRecord {
        let bbl: crate::ingest::BblKey = bbl.parse().unwrap();
        PropertyYearRecord::unsold(ParcelRecord {
            bbl,
            year,
            lat: Some(40.7),
            lon: Some(-73.9),
            building_class: class.into(),
            borough: bbl.borough(),
            zip: zip.into(),
            num_bldgs: 1,
            areas: BuildingAreas {
                total: 2000.0,
                residential: 2000.0,
                ..Default::default()
            },
            assessed_total: 1e5,
            year_built: Some(1920),
            floors: 3.0,
            units_res: 4.0,
            units_total: 4.0,
        })
    }

    pub fn sold_row_in(bbl: &str, year: i32, psf: f64, class: &str, zip: &str) -> PropertyYearRecord {
        let mut r = row(bbl, year, class, zip);
        r.sold = true;
        r.gross_square_feet = Some(2000.0);
        r.sale_price_total = Some(psf * 2000.0);
        r.sale_psf = Some(psf);
        r
    }

    pub fn sold_row(bbl: &str, year: i32, psf: f64) -> PropertyYearRecord {
        sold_row_in(bbl, year, psf, "A1", "10001")
    }

    pub fn graph_from_edges(edges: &[(&str, &str, f64)]) -> KeyedGraph {
        let e: Vec<_> = edges
            .iter()
            .map(|(a, b, d)| (a.parse().unwrap(), b.parse().unwrap(), *d))
            .collect();
        KeyedGraph::from_edges(500.0, &e)
    }
}
