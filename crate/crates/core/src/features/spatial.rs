use rayon::prelude::*;

use super::base::{check_sorted, price_trend_columns, SHARE_COLUMNS};
use super::matrix::{from_opt, to_opt, ColumnSpec, FeatureMatrix, FeatureSetKind, MISSING};
use super::moving::percent_change;
use super::panel::{row_lookup, PanelYears};
use crate::error::{Error, Result};
use crate::ingest::PropertyYearRecord;
use crate::spatial_index::KeyedGraph;

/// Smallest distance used in inverse-distance weights, in meters.
pub const MIN_WEIGHT_DISTANCE_M: f64 = 1.0;

pub const RADIUS_COLUMNS: [&str; 5] = [
    "Radius_Total_Sold_In_Year",
    "Radius_Res_Units_Sold_In_Year",
    "Radius_All_Units_Sold_In_Year",
    "Radius_SF_Sold_In_Year",
    "Radius_Average_Years_Since_Last_Sale",
];

pub const NEIGHBORS_SOLD_COLUMN: &str = "Percent_Neighbors_Sold";

/// Inverse-distance weights normalized to sum to 1.
pub fn idw_weights(distances: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = distances
        .iter()
        .map(|d| 1.0 / d.max(MIN_WEIGHT_DISTANCE_M))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// `(dist, basic)` lags of `(distance, value)` pairs. Missing values are
/// dropped before weighting; no usable neighbor gives missing.
pub fn lag_pair(pairs: &[(f64, f64)]) -> (f64, f64) {
    let usable: Vec<(f64, f64)> = pairs.iter().copied().filter(|(_, v)| !v.is_nan()).collect();
    if usable.is_empty() {
        return (MISSING, MISSING);
    }
    let dists: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let dist = idw_weights(&dists)
        .iter()
        .zip(&usable)
        .map(|(w, (_, v))| w * v)
        .sum();
    let basic = usable.iter().map(|p| p.1).sum::<f64>() / usable.len() as f64;
    (dist, basic)
}

struct Layout {
    shares: usize,
    trends: Vec<String>,
}

impl Layout {
    const RADIUS: usize = RADIUS_COLUMNS.len();
    const PNS: usize = Self::RADIUS;
    const SHARE_DIST: usize = Self::PNS + 1;

    fn share_basic(&self) -> usize {
        Self::SHARE_DIST + self.shares
    }
    fn trend_dist(&self) -> usize {
        self.share_basic() + self.shares
    }
    fn trend_basic(&self) -> usize {
        self.trend_dist() + self.trends.len()
    }
    fn width(&self) -> usize {
        self.trend_basic() + self.trends.len()
    }
}

/// Appends neighbor-aggregate features to the base matrix.
///
/// Sale-derived quantities for a row in year t come from neighbor rows in
/// the previous panel year; attribute and history lags use the neighbors'
/// year-t base values, which only see sales before t. Rows whose parcel has
/// no neighbors in `graph` get missing values throughout.
pub fn spatial_lag_features(
    base: &FeatureMatrix,
    panel: &[PropertyYearRecord],
    graph: &KeyedGraph,
) -> Result<FeatureMatrix> {
    check_sorted(panel)?;
    if base.n_rows() != panel.len() || base.kind() != FeatureSetKind::Base {
        return Err(Error::InvalidInput(
            "spatial features need the base matrix built from the same panel".into(),
        ));
    }
    let col = |name: &str| {
        base.column(name)
            .ok_or_else(|| Error::InvalidInput(format!("base matrix lacks {name}")))
    };
    let years_since = col("Years_Since_Last_Sale")?;
    let shares: Vec<&[f64]> = SHARE_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let layout = Layout {
        shares: SHARE_COLUMNS.len(),
        trends: price_trend_columns_with_last(),
    };
    let trends: Vec<&[f64]> = layout.trends.iter().map(|c| col(c)).collect::<Result<_>>()?;

    let years = PanelYears::new(panel);
    let lookup = row_lookup(panel);
    let width = layout.width();

    let raw: Vec<Vec<f64>> = panel
        .par_iter()
        .map(|row| {
            let mut out = vec![MISSING; width];
            let nbrs = graph.neighbors(&row.parcel.bbl);
            if nbrs.is_empty() {
                return out;
            }
            let t = row.year();
            let current: Vec<(f64, usize)> = nbrs
                .iter()
                .filter_map(|(k, d)| lookup.get(&(*k, t)).map(|&j| (*d, j)))
                .collect();

            if let Some(prev) = years.previous(t) {
                let (mut count, mut res, mut units, mut sf) = (0.0, 0.0, 0.0, 0.0);
                for (k, _) in nbrs {
                    if let Some(&j) = lookup.get(&(*k, prev)) {
                        let p = &panel[j];
                        if p.sold {
                            count += 1.0;
                            res += p.parcel.units_res;
                            units += p.parcel.units_total;
                            sf += p.parcel.areas.total;
                        }
                    }
                }
                out[0] = count;
                out[1] = res;
                out[2] = units;
                out[3] = sf;
                out[Layout::PNS] = count / nbrs.len() as f64;
            }
            let ys: Vec<f64> = current
                .iter()
                .map(|&(_, j)| years_since[j])
                .filter(|v| !v.is_nan())
                .collect();
            if !ys.is_empty() {
                out[4] = ys.iter().sum::<f64>() / ys.len() as f64;
            }

            let mut pairs = Vec::with_capacity(current.len());
            let mut lag_into = |src: &[f64], dist_at: usize, basic_at: usize| {
                pairs.clear();
                pairs.extend(current.iter().map(|&(d, j)| (d, src[j])));
                let (dist, basic) = lag_pair(&pairs);
                out[dist_at] = dist;
                out[basic_at] = basic;
            };
            for (k, src) in shares.iter().enumerate() {
                lag_into(src, Layout::SHARE_DIST + k, layout.share_basic() + k);
            }
            for (k, src) in trends.iter().enumerate() {
                lag_into(src, layout.trend_dist() + k, layout.trend_basic() + k);
            }
            out
        })
        .collect();

    // index of the same parcel's row in the previous panel year
    let prev_row: Vec<Option<usize>> = panel
        .iter()
        .map(|r| {
            years
                .previous(r.year())
                .and_then(|p| lookup.get(&(r.parcel.bbl, p)).copied())
        })
        .collect();
    let change = |i: usize, c: usize, values: &dyn Fn(usize, usize) -> f64| -> f64 {
        let prev = prev_row[i].map(|p| values(p, c));
        from_opt(percent_change(to_opt(values(i, c)), prev.and_then(to_opt)))
    };
    let raw_at = |i: usize, c: usize| raw[i][c];
    let sum2: Vec<Vec<f64>> = (0..panel.len())
        .map(|i| {
            (0..Layout::RADIUS)
                .map(|c| match prev_row[i] {
                    Some(p) => raw[i][c] + raw[p][c],
                    None => MISSING,
                })
                .collect()
        })
        .collect();
    let sum2_at = |i: usize, c: usize| sum2[i][c];

    let n = panel.len();
    let column = |f: &dyn Fn(usize) -> f64| (0..n).map(f).collect::<Vec<f64>>();
    let mut m = base.extend_as(FeatureSetKind::Spatial);
    for (c, name) in RADIUS_COLUMNS.iter().enumerate() {
        m.push_column(ColumnSpec::numeric(*name, "lag:radius_prev_year"), column(&|i| raw[i][c]))?;
        m.push_column(
            ColumnSpec::numeric(format!("{name}_sum_over_2_years"), "lag:radius_sum_2y"),
            column(&|i| sum2[i][c]),
        )?;
        m.push_column(
            ColumnSpec::numeric(format!("{name}_percent_change"), "lag:percent_change"),
            column(&|i| change(i, c, &raw_at)),
        )?;
        m.push_column(
            ColumnSpec::numeric(
                format!("{name}_sum_over_2_years_percent_change"),
                "lag:percent_change",
            ),
            column(&|i| change(i, c, &sum2_at)),
        )?;
    }
    m.push_column(
        ColumnSpec::numeric(NEIGHBORS_SOLD_COLUMN, "lag:sold_fraction_prev_year"),
        column(&|i| raw[i][Layout::PNS]),
    )?;
    for (k, name) in SHARE_COLUMNS.iter().enumerate() {
        let d = Layout::SHARE_DIST + k;
        let b = layout.share_basic() + k;
        m.push_column(ColumnSpec::numeric(format!("{name}_dist"), "lag:idw"), column(&|i| raw[i][d]))?;
        m.push_column(ColumnSpec::numeric(format!("{name}_basic"), "lag:mean"), column(&|i| raw[i][b]))?;
        m.push_column(
            ColumnSpec::numeric(format!("{name}_dist_perc_change"), "lag:percent_change"),
            column(&|i| change(i, d, &raw_at)),
        )?;
    }
    for (k, name) in layout.trends.iter().enumerate() {
        let d = layout.trend_dist() + k;
        let b = layout.trend_basic() + k;
        m.push_column(ColumnSpec::numeric(format!("{name}_dist"), "lag:idw"), column(&|i| raw[i][d]))?;
        m.push_column(ColumnSpec::numeric(format!("{name}_basic"), "lag:mean"), column(&|i| raw[i][b]))?;
        m.push_column(
            ColumnSpec::numeric(format!("{name}_dist_perc_change"), "lag:percent_change"),
            column(&|i| change(i, d, &raw_at)),
        )?;
        m.push_column(
            ColumnSpec::numeric(format!("{name}_basic_perc_change"), "lag:percent_change"),
            column(&|i| change(i, b, &raw_at)),
        )?;
    }
    Ok(m)
}

fn price_trend_columns_with_last() -> Vec<String> {
    let mut cols = vec!["Last_Sale_Price".to_string()];
    cols.extend(price_trend_columns());
    cols
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::base::base_features;
    use crate::features::matrix::is_missing;
    use crate::features::test_support::{graph_from_edges, row, sold_row};
    use proptest::prelude::*;

    #[test]
    fn two_neighbor_weights() {
        let (dist, basic) = lag_pair(&[(100.0, 0.0), (300.0, 400.0)]);
        assert!((dist - 100.0).abs() < 1e-12);
        assert_eq!(basic, 200.0);
        let w = idw_weights(&[100.0, 300.0]);
        assert!((w[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_neighbor_collapses() {
        assert_eq!(lag_pair(&[(250.0, 7.5)]), (7.5, 7.5));
    }

    #[test]
    fn zero_distance_is_clamped() {
        let w = idw_weights(&[0.0, 1.0]);
        assert_eq!(w, vec![0.5, 0.5]);
        let w = idw_weights(&[0.0, 2.0]);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn missing_neighbor_values_are_skipped() {
        assert_eq!(lag_pair(&[(10.0, f64::NAN), (20.0, 3.0)]), (3.0, 3.0));
        let (d, b) = lag_pair(&[(10.0, f64::NAN)]);
        assert!(is_missing(d) && is_missing(b));
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(d in prop::collection::vec(0.0f64..1000.0, 1..40)) {
            let s: f64 = idw_weights(&d).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn basic_lag_scales(
            v in prop::collection::vec((1.0f64..500.0, -1e3f64..1e3), 1..30),
            c in -10.0f64..10.0,
        ) {
            let scaled: Vec<(f64, f64)> = v.iter().map(|&(d, x)| (d, c * x)).collect();
            let (_, b) = lag_pair(&v);
            let (_, bs) = lag_pair(&scaled);
            prop_assert!((bs - c * b).abs() <= 1e-9 * (1.0 + (c * b).abs()));
        }
    }

    fn fixture() -> (Vec<PropertyYearRecord>, KeyedGraph) {
        let mut panel = Vec::new();
        for (bbl, psf) in [("1_1_1", 100.0), ("1_1_2", 300.0), ("1_1_3", 500.0)] {
            panel.push(sold_row(bbl, 2010, psf));
            panel.push(row(bbl, 2011, "A1", "10001"));
            panel.push(row(bbl, 2012, "A1", "10001"));
        }
        panel.push(row("1_9_9", 2011, "A1", "10001"));
        panel.sort_by_key(|r| r.key());
        let graph = graph_from_edges(&[("1_1_1", "1_1_2", 100.0), ("1_1_1", "1_1_3", 300.0)]);
        (panel, graph)
    }

    fn at(m: &FeatureMatrix, name: &str, bbl: &str, year: i32) -> f64 {
        let r = m.row_index()[&crate::features::RowKey {
            bbl: bbl.parse().unwrap(),
            year,
        }];
        m.column(name).unwrap()[r]
    }

    #[test]
    fn lags_over_panel() {
        let (panel, graph) = fixture();
        let base = base_features(&panel).unwrap();
        let m = spatial_lag_features(&base, &panel, &graph).unwrap();
        assert_eq!(at(&m, "Radius_Total_Sold_In_Year", "1_1_1", 2011), 2.0);
        assert_eq!(at(&m, NEIGHBORS_SOLD_COLUMN, "1_1_1", 2011), 1.0);
        assert_eq!(at(&m, NEIGHBORS_SOLD_COLUMN, "1_1_1", 2012), 0.0);
        assert_eq!(at(&m, "Radius_Total_Sold_In_Year_sum_over_2_years", "1_1_1", 2012), 2.0);
        assert_eq!(at(&m, "Radius_Total_Sold_In_Year_percent_change", "1_1_1", 2012), -1.0);
        assert!(is_missing(at(&m, "Radius_Total_Sold_In_Year", "1_1_1", 2010)));
        // neighbors 300 at 100 m, 500 at 300 m
        assert!((at(&m, "Last_Sale_Price_dist", "1_1_1", 2011) - 350.0).abs() < 1e-9);
        assert_eq!(at(&m, "Last_Sale_Price_basic", "1_1_1", 2011), 400.0);
        assert_eq!(at(&m, "Last_Sale_Price_dist", "1_1_2", 2011), 100.0);
        assert_eq!(at(&m, "Radius_SF_Sold_In_Year", "1_1_2", 2011), 2000.0);
    }

    #[test]
    fn isolated_parcel_is_all_missing() {
        let (panel, graph) = fixture();
        let base = base_features(&panel).unwrap();
        let m = spatial_lag_features(&base, &panel, &graph).unwrap();
        let r = m.row_index()[&crate::features::RowKey {
            bbl: "1_9_9".parse().unwrap(),
            year: 2011,
        }];
        for c in base.n_cols()..m.n_cols() {
            assert!(is_missing(m.get(r, c)), "{}", m.columns()[c].name);
        }
    }

    #[test]
    fn spatial_columns_extend_base() {
        let (panel, graph) = fixture();
        let base = base_features(&panel).unwrap();
        let m = spatial_lag_features(&base, &panel, &graph).unwrap();
        assert_eq!(&m.column_names()[..base.n_cols()], base.column_names().as_slice());
        assert!(m.n_cols() > base.n_cols());
        assert_eq!(m.keys(), base.keys());
    }
}
