//! Synthetic parcel/sales panels with planted spatial structure.
//!
//! Sale occurrence follows
//! `logit p(i, t) = logit(base_sale_rate) + contagion * f(i, t-1) + activity(i, t)`
//! where `f(i, t-1)` is the fraction of parcels within `contagion_radius_m`
//! of `i` that sold the previous year and `activity` is a smooth field whose
//! bump amplitudes follow a stationary AR(1) across years. Price per square foot is a smooth
//! log-surface that drifts per neighborhood over time, scaled by a building
//! category multiplier and a size effect, with log-normal noise.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::bbl::BblKey;
use super::records::{AliasTable, BuildingAreas, ParcelRecord, SaleRecord};
use crate::error::{Error, Result};
use crate::spatial_index::{neighbors_grid, LocalProjection, ProjectedPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_parcels: usize,
    pub start_year: i32,
    pub n_years: usize,
    /// Years simulated but not emitted, e.g. a reporting gap.
    pub skip_years: Vec<i32>,
    pub burn_in_years: usize,
    pub center_lat: f64,
    pub center_lon: f64,
    /// Side of the square city, in meters.
    pub extent_m: f64,
    pub n_clusters: usize,
    /// Share of parcels drawn around cluster centers rather than uniformly.
    pub cluster_share: f64,
    pub cluster_sd_m: f64,
    pub zip_size_m: f64,
    pub block_size_m: f64,

    pub base_sale_rate: f64,
    /// Logit increase per unit fraction of neighbors sold last year. Above 4
    /// the dynamics admit a second, saturated equilibrium.
    pub contagion: f64,
    pub contagion_radius_m: f64,
    /// Standard deviation (logit units) of the activity field.
    pub activity_strength: f64,
    pub activity_length_m: f64,
    /// Year-to-year autocorrelation of the activity field, in [0, 1].
    pub activity_persistence: f64,

    pub base_psf: f64,
    pub annual_inflation: f64,
    pub n_price_bumps: usize,
    /// Standard deviation of bump amplitudes on the log-price scale.
    pub bump_amplitude: f64,
    pub bump_radius_m: f64,
    /// Standard deviation of per-bump log-price drift per year.
    pub drift_sd: f64,
    pub size_elasticity: f64,
    pub price_noise_sd: f64,
    pub assessment_noise_sd: f64,

    pub category_mix: BTreeMap<char, f64>,
    pub three_building_fraction: f64,
    pub alias_fraction: f64,
    pub missing_coordinate_fraction: f64,
    pub multi_sale_fraction: f64,
    pub zero_price_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_parcels: 5000,
            start_year: 2008,
            n_years: 10,
            skip_years: Vec::new(),
            burn_in_years: 3,
            center_lat: 40.73,
            center_lon: -73.95,
            extent_m: 10_000.0,
            n_clusters: 6,
            cluster_share: 0.6,
            cluster_sd_m: 900.0,
            zip_size_m: 2_500.0,
            block_size_m: 100.0,
            base_sale_rate: 0.05,
            contagion: 3.0,
            contagion_radius_m: 500.0,
            activity_strength: 1.5,
            activity_length_m: 350.0,
            activity_persistence: 0.85,
            base_psf: 400.0,
            annual_inflation: 0.03,
            n_price_bumps: 30,
            bump_amplitude: 0.5,
            bump_radius_m: 1_000.0,
            drift_sd: 0.06,
            size_elasticity: -0.12,
            price_noise_sd: 0.08,
            assessment_noise_sd: 0.5,
            category_mix: default_category_mix(),
            three_building_fraction: 0.03,
            alias_fraction: 0.0,
            missing_coordinate_fraction: 0.0,
            multi_sale_fraction: 0.0,
            zero_price_fraction: 0.0,
        }
    }
}

pub fn default_category_mix() -> BTreeMap<char, f64> {
    [
        ('A', 0.22),
        ('B', 0.18),
        ('C', 0.22),
        ('D', 0.12),
        ('F', 0.02),
        ('G', 0.02),
        ('L', 0.01),
        ('O', 0.05),
        ('H', 0.03),
        ('K', 0.06),
        ('V', 0.07),
    ]
    .into_iter()
    .collect()
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl SynthConfig {
    /// Closed-form sale probability given the fraction of neighbors sold the
    /// previous year and the parcel's activity field value.
    pub fn sale_probability(&self, neighbor_sold_fraction: f64, activity: f64) -> f64 {
        sigmoid(logit(self.base_sale_rate) + self.contagion * neighbor_sold_fraction + activity)
    }

    pub fn emitted_years(&self) -> Vec<i32> {
        (0..self.n_years as i32)
            .map(|k| self.start_year + k)
            .filter(|y| !self.skip_years.contains(y))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("synth.{field}"), msg))
            }
        };
        check(
            self.base_sale_rate > 0.0 && self.base_sale_rate < 1.0,
            "base_sale_rate",
            "must be in (0, 1)",
        )?;
        check(self.extent_m > 0.0, "extent_m", "must be positive")?;
        check(self.zip_size_m > 0.0, "zip_size_m", "must be positive")?;
        check(self.block_size_m > 0.0, "block_size_m", "must be positive")?;
        check(
            self.contagion_radius_m > 0.0,
            "contagion_radius_m",
            "must be positive",
        )?;
        for (field, v) in [
            ("cluster_share", self.cluster_share),
            ("alias_fraction", self.alias_fraction),
            ("missing_coordinate_fraction", self.missing_coordinate_fraction),
            ("multi_sale_fraction", self.multi_sale_fraction),
            ("zero_price_fraction", self.zero_price_fraction),
            ("three_building_fraction", self.three_building_fraction),
            ("activity_persistence", self.activity_persistence),
        ] {
            check((0.0..=1.0).contains(&v), field, "must be in [0, 1]")?;
        }
        check(
            !self.category_mix.is_empty() && self.category_mix.values().all(|w| *w >= 0.0),
            "category_mix",
            "needs non-negative weights",
        )?;
        Ok(())
    }
}

/// Generator output.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCity {
    pub parcels: Vec<ParcelRecord>,
    pub sales: Vec<SaleRecord>,
    pub aliases: AliasTable,
}

struct Bump {
    x: f64,
    y: f64,
    inv_two_r2: f64,
    level: f64,
    drift: f64,
}

impl Bump {
    fn weight(&self, x: f64, y: f64) -> f64 {
        let d2 = (x - self.x).powi(2) + (y - self.y).powi(2);
        (-d2 * self.inv_two_r2).exp()
    }
}

struct Site {
    x: f64,
    y: f64,
    category: char,
    subclass: u8,
    num_bldgs: u32,
    areas: BuildingAreas,
    floors: f64,
    units_res: f64,
    units_total: f64,
    year_built: i32,
    assessed: f64,
    borough: u8,
    zip: String,
    bbl: BblKey,
    alias: Option<BblKey>,
    coords_missing: bool,
}

fn category_multiplier(c: char) -> f64 {
    match c {
        'A' => 1.0,
        'B' => 0.92,
        'C' => 1.08,
        'D' => 1.3,
        'F' => 0.6,
        'G' => 0.5,
        'L' => 1.15,
        'O' => 1.25,
        'H' => 1.2,
        'K' => 1.05,
        _ => 0.8,
    }
}

fn borough_of(fx: f64, fy: f64) -> u8 {
    match (fx < 0.4, fy > 0.5) {
        (true, true) => 1,
        (true, false) => 3,
        (false, true) if fx < 0.7 => 2,
        (false, true) => 5,
        (false, false) => 4,
    }
}

fn draw_building(rng: &mut ChaCha8Rng, category: char) -> (BuildingAreas, f64, f64, f64) {
    let mut a = BuildingAreas::default();
    let (floors, units_res, units_total);
    match category {
        'A' | 'B' => {
            let total = rng.gen_range(1_100.0..3_400.0_f64).round();
            a.total = total;
            a.residential = total;
            floors = rng.gen_range(1..=3) as f64;
            units_res = if category == 'A' { 1.0 } else { 2.0 };
            units_total = units_res;
        }
        'C' | 'D' => {
            let total = if category == 'C' {
                rng.gen_range(3_000.0..14_000.0_f64)
            } else {
                rng.gen_range(15_000.0..120_000.0_f64)
            }
            .round();
            let retail = (total * rng.gen_range(0.0..0.2_f64)).round();
            a.total = total;
            a.retail = retail;
            a.residential = total - retail;
            floors = if category == 'C' {
                rng.gen_range(3..=6) as f64
            } else {
                rng.gen_range(7..=30) as f64
            };
            units_res = (a.residential / rng.gen_range(700.0..1_100.0)).round().max(3.0);
            units_total = units_res + if retail > 0.0 { 1.0 } else { 0.0 };
        }
        'V' => {
            floors = 0.0;
            units_res = 0.0;
            units_total = 0.0;
        }
        _ => {
            let total = rng.gen_range(2_000.0..40_000.0_f64).round();
            a.total = total;
            match category {
                'F' => a.factory = total,
                'G' => a.garage = total,
                'O' => a.office = total,
                'K' => a.retail = total,
                'L' => {
                    a.office = (total * 0.5).round();
                    a.residential = total - a.office;
                }
                'H' => a.commercial = total,
                _ => {
                    a.storage = (total * 0.5).round();
                    a.other = total - a.storage;
                }
            }
            floors = rng.gen_range(1..=12) as f64;
            units_res = if a.residential > 0.0 {
                (a.residential / 900.0).round()
            } else {
                0.0
            };
            units_total = units_res + 1.0;
        }
    }
    (a, floors, units_res, units_total)
}

/// Generates parcels, sales and an alias table. Deterministic in `seed`.
pub fn synth_city(config: &SynthConfig, seed: u64) -> Result<SynthCity> {
    config.validate()?;
    if config.n_parcels == 0 {
        return Ok(SynthCity {
            parcels: Vec::new(),
            sales: Vec::new(),
            aliases: AliasTable::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let extent = config.extent_m;

    let centers: Vec<(f64, f64)> = (0..config.n_clusters.max(1))
        .map(|_| {
            (
                rng.gen_range(0.15 * extent..0.85 * extent),
                rng.gen_range(0.15 * extent..0.85 * extent),
            )
        })
        .collect();
    let make_bumps = |rng: &mut ChaCha8Rng, n: usize, radius: f64, amp: f64, drift: f64| {
        (0..n)
            .map(|_| {
                let r = radius * rng.gen_range(0.5..1.5);
                Bump {
                    x: rng.gen_range(0.0..extent),
                    y: rng.gen_range(0.0..extent),
                    inv_two_r2: 1.0 / (2.0 * r * r),
                    level: amp * std_normal.sample(rng),
                    drift: drift * std_normal.sample(rng),
                }
            })
            .collect::<Vec<_>>()
    };
    let price_bumps = make_bumps(
        &mut rng,
        config.n_price_bumps,
        config.bump_radius_m,
        config.bump_amplitude,
        config.drift_sd,
    );
    let n_activity = ((extent / config.activity_length_m).powi(2) * 2.0).ceil() as usize;
    let activity_bumps = make_bumps(&mut rng, n_activity, config.activity_length_m, 1.0, 0.0);

    let categories: Vec<(char, f64)> = config.category_mix.iter().map(|(c, w)| (*c, *w)).collect();
    let total_weight: f64 = categories.iter().map(|c| c.1).sum();

    // locations and building stock
    let mut raw_sites = Vec::with_capacity(config.n_parcels);
    for _ in 0..config.n_parcels {
        let (x, y) = if rng.gen_bool(config.cluster_share) {
            let c = centers[rng.gen_range(0..centers.len())];
            (
                (c.0 + config.cluster_sd_m * std_normal.sample(&mut rng)).clamp(0.0, extent),
                (c.1 + config.cluster_sd_m * std_normal.sample(&mut rng)).clamp(0.0, extent),
            )
        } else {
            (rng.gen_range(0.0..extent), rng.gen_range(0.0..extent))
        };
        let mut pick = rng.gen_range(0.0..total_weight);
        let mut category = categories[categories.len() - 1].0;
        for &(c, w) in &categories {
            if pick < w {
                category = c;
                break;
            }
            pick -= w;
        }
        raw_sites.push((x, y, category));
    }
    // Activity weights per site. The field is scaled by its initial spread
    // and not re-centered, so the AR(1) levels keep it mean-zero in law.
    let activity_weights: Vec<Vec<f64>> = raw_sites
        .iter()
        .map(|&(x, y, _)| activity_bumps.iter().map(|b| b.weight(x, y)).collect())
        .collect();
    let mut activity_levels: Vec<f64> = activity_bumps.iter().map(|b| b.level).collect();
    let field = |levels: &[f64]| -> Vec<f64> {
        activity_weights
            .iter()
            .map(|w| w.iter().zip(levels).map(|(w, l)| w * l).sum())
            .collect()
    };
    let initial = field(&activity_levels);
    let mean = initial.iter().sum::<f64>() / initial.len() as f64;
    let activity_scale = config.activity_strength
        / (initial.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / initial.len() as f64)
            .sqrt()
            .max(1e-12);

    let log_surface = |x: f64, y: f64, t: f64| -> f64 {
        config.base_psf.ln()
            + config.annual_inflation * t
            + price_bumps
                .iter()
                .map(|b| b.weight(x, y) * (b.level + b.drift * t))
                .sum::<f64>()
    };

    let mut lots_per_block: BTreeMap<(u8, u32), u32> = BTreeMap::new();
    let blocks_per_row = (extent / config.block_size_m).ceil() as u32 + 1;
    let zips_per_row = (extent / config.zip_size_m).ceil() as u32 + 1;
    let mut sites = Vec::with_capacity(config.n_parcels);
    for &(x, y, category) in &raw_sites {
        let (areas, floors, units_res, units_total) = draw_building(&mut rng, category);
        let borough = borough_of(x / extent, y / extent);
        let block = (y / config.block_size_m) as u32 * blocks_per_row + (x / config.block_size_m) as u32;
        let lot = lots_per_block.entry((borough, block)).or_insert(0);
        *lot += 1;
        let bbl = BblKey::new(borough as i64, block as i64, *lot as i64)?;
        let zip_cell = (y / config.zip_size_m) as u32 * zips_per_row + (x / config.zip_size_m) as u32;
        let value0 = log_surface(x, y, 0.0).exp() * category_multiplier(category) * areas.total;
        let assessed = (0.45 * value0 * (config.assessment_noise_sd * std_normal.sample(&mut rng)).exp()).round();
        let num_bldgs = if rng.gen_bool(config.three_building_fraction) {
            3
        } else if rng.gen_bool(0.1) {
            2
        } else {
            1
        };
        sites.push(Site {
            x,
            y,
            category,
            subclass: rng.gen_range(1..=9),
            num_bldgs,
            areas,
            floors,
            units_res,
            units_total,
            year_built: rng.gen_range(1890..=2000),
            assessed,
            borough,
            zip: (10_000 + zip_cell).to_string(),
            bbl,
            alias: None,
            coords_missing: false,
        });
    }

    // condo-style billing lots and missing coordinates
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.shuffle(&mut rng);
    let n_alias = (config.alias_fraction * sites.len() as f64).round() as usize;
    let mut billing: BTreeMap<(u8, u32), u32> = BTreeMap::new();
    for &i in &order[..n_alias] {
        let s = &mut sites[i];
        let next = billing.entry((s.bbl.borough(), s.bbl.block())).or_insert(7500);
        *next += 1;
        s.alias = Some(BblKey::new(
            s.bbl.borough() as i64,
            s.bbl.block() as i64,
            *next as i64,
        )?);
    }
    order.shuffle(&mut rng);
    let n_missing = (config.missing_coordinate_fraction * sites.len() as f64).round() as usize;
    for &i in &order[..n_missing] {
        sites[i].coords_missing = true;
    }

    // contagion neighborhoods on true locations
    let points: Vec<ProjectedPoint> = sites
        .iter()
        .enumerate()
        .map(|(id, s)| ProjectedPoint { id, x: s.x, y: s.y })
        .collect();
    let graph = neighbors_grid(&points, config.contagion_radius_m, config.contagion_radius_m)?;

    let projection = LocalProjection {
        lat0: config.center_lat,
        lon0: config.center_lon,
    };
    let emitted = config.emitted_years();
    let first_sim_year = config.start_year - config.burn_in_years as i32;
    let last_year = config.start_year + config.n_years as i32 - 1;
    let mut parcels = Vec::new();
    let mut sales = Vec::new();
    let mut aliases = AliasTable::new();
    for s in &sites {
        if let Some(raw) = s.alias {
            aliases.insert(raw, s.bbl)?;
        }
    }

    let rho = config.activity_persistence;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut sold_prev = vec![false; sites.len()];
    for year in first_sim_year..=last_year {
        let t = (year - config.start_year) as f64;
        let emit = emitted.contains(&year);
        if year > first_sim_year {
            for l in activity_levels.iter_mut() {
                *l = rho * *l + innovation * std_normal.sample(&mut rng);
            }
        }
        let activity = field(&activity_levels);
        let mut sold_now = vec![false; sites.len()];
        for (i, s) in sites.iter().enumerate() {
            let ns = graph.neighbors(i);
            let frac = if ns.is_empty() {
                0.0
            } else {
                ns.iter().filter(|n| sold_prev[n.index]).count() as f64 / ns.len() as f64
            };
            let p = config.sale_probability(frac, activity[i] * activity_scale);
            sold_now[i] = rng.gen_bool(p);
            if !emit {
                continue;
            }
            let (lat, lon) = if s.coords_missing {
                (None, None)
            } else {
                let (cx, cy) = (s.x - extent / 2.0, s.y - extent / 2.0);
                let (lat, lon) = projection.inverse(cx, cy);
                (Some(lat), Some(lon))
            };
            parcels.push(ParcelRecord {
                bbl: s.bbl,
                year,
                lat,
                lon,
                building_class: format!("{}{}", s.category, s.subclass),
                borough: s.borough,
                zip: s.zip.clone(),
                num_bldgs: s.num_bldgs,
                areas: s.areas,
                assessed_total: s.assessed,
                year_built: Some(s.year_built),
                floors: s.floors,
                units_res: s.units_res,
                units_total: s.units_total,
            });
            // the noise draw happens for every row so the stream does not
            // depend on which rows sold
            let noise = config.price_noise_sd * std_normal.sample(&mut rng);
            let zero_price = rng.gen_bool(config.zero_price_fraction);
            let duplicate = rng.gen_bool(config.multi_sale_fraction);
            if !sold_now[i] {
                continue;
            }
            let size_effect = if s.areas.total > 0.0 {
                (s.areas.total / 2_500.0).powf(config.size_elasticity)
            } else {
                1.0
            };
            let psf = (log_surface(s.x, s.y, t) + noise).exp()
                * category_multiplier(s.category)
                * size_effect;
            let price = if zero_price {
                0.0
            } else if s.areas.total > 0.0 {
                (psf * s.areas.total).round()
            } else {
                (psf * 2_000.0).round()
            };
            let sale = SaleRecord {
                raw_bbl: s.alias.unwrap_or(s.bbl),
                sale_year: year,
                sale_price_total: price,
                gross_square_feet: s.areas.total,
            };
            if duplicate {
                sales.push(sale.clone());
            }
            sales.push(sale);
        }
        sold_prev = sold_now;
    }
    parcels.sort_by(|a, b| (a.bbl, a.year).cmp(&(b.bbl, b.year)));
    Ok(SynthCity {
        parcels,
        sales,
        aliases,
    })
}
