use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bbl::BblKey;
use crate::error::{Error, Result};

/// Building floor areas in square feet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildingAreas {
    pub total: f64,
    pub commercial: f64,
    pub residential: f64,
    pub office: f64,
    pub retail: f64,
    pub garage: f64,
    pub storage: f64,
    pub factory: f64,
    pub other: f64,
}

impl BuildingAreas {
    /// The eight usage components, in `Percent_*` column order.
    pub fn components(&self) -> [f64; 8] {
        [
            self.commercial,
            self.residential,
            self.office,
            self.retail,
            self.garage,
            self.storage,
            self.factory,
            self.other,
        ]
    }
}

/// One parcel observed in one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParcelRecord {
    pub bbl: BblKey,
    pub year: i32,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    /// Single-letter category followed by a subclass, e.g. `C4`.
    pub building_class: String,
    pub borough: u8,
    pub zip: String,
    pub num_bldgs: u32,
    pub areas: BuildingAreas,
    pub assessed_total: f64,
    pub year_built: Option<i32>,
    pub floors: f64,
    pub units_res: f64,
    pub units_total: f64,
}

impl ParcelRecord {
    pub fn category(&self) -> Option<char> {
        self.building_class
            .chars()
            .next()
            .map(|c| c.to_ascii_uppercase())
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        match (self.lat, self.lon) {
            (Some(lat), Some(lon)) if lat.is_finite() && lon.is_finite() => Some((lat, lon)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("total", self.areas.total),
            ("commercial", self.areas.commercial),
            ("residential", self.areas.residential),
            ("office", self.areas.office),
            ("retail", self.areas.retail),
            ("garage", self.areas.garage),
            ("storage", self.areas.storage),
            ("factory", self.areas.factory),
            ("other", self.areas.other),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{} {}: negative {name} area {v}",
                    self.bbl, self.year
                )));
            }
        }
        if let Some(lat) = self.lat {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(Error::InvalidInput(format!(
                    "{} {}: latitude {lat} out of range",
                    self.bbl, self.year
                )));
            }
        }
        if let Some(lon) = self.lon {
            if !(-180.0..=180.0).contains(&lon) {
                return Err(Error::InvalidInput(format!(
                    "{} {}: longitude {lon} out of range",
                    self.bbl, self.year
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaleRecord {
    pub raw_bbl: BblKey,
    pub sale_year: i32,
    pub sale_price_total: f64,
    pub gross_square_feet: f64,
}

/// Reported key to canonical key. Functional by construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AliasTable {
    map: BTreeMap<BblKey, BblKey>,
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a mapping. Re-mapping a reported key to a different target is
    /// rejected so the table stays a function.
    pub fn insert(&mut self, reported: BblKey, canonical: BblKey) -> Result<()> {
        match self.map.get(&reported) {
            Some(existing) if *existing != canonical => Err(Error::InvalidInput(format!(
                "alias {reported} maps to both {existing} and {canonical}"
            ))),
            _ => {
                self.map.insert(reported, canonical);
                Ok(())
            }
        }
    }

    pub fn resolve(&self, key: &BblKey) -> Option<&BblKey> {
        self.map.get(key)
    }

    pub fn contains(&self, key: &BblKey) -> bool {
        self.map.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BblKey, &BblKey)> {
        self.map.iter()
    }
}

impl FromIterator<(BblKey, BblKey)> for AliasTable {
    fn from_iter<I: IntoIterator<Item = (BblKey, BblKey)>>(iter: I) -> Self {
        AliasTable {
            map: iter.into_iter().collect(),
        }
    }
}

/// A parcel-year row of the modeling panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyYearRecord {
    pub parcel: ParcelRecord,
    pub sold: bool,
    pub sale_price_total: Option<f64>,
    pub gross_square_feet: Option<f64>,
    pub sale_psf: Option<f64>,
}

impl PropertyYearRecord {
    pub fn unsold(parcel: ParcelRecord) -> Self {
        PropertyYearRecord {
            parcel,
            sold: false,
            sale_price_total: None,
            gross_square_feet: None,
            sale_psf: None,
        }
    }

    pub fn key(&self) -> (BblKey, i32) {
        (self.parcel.bbl, self.parcel.year)
    }

    pub fn year(&self) -> i32 {
        self.parcel.year
    }

    /// Market sale with a usable positive price per square foot.
    pub fn priced_sale_psf(&self) -> Option<f64> {
        match self.sale_psf {
            Some(p) if self.sold && p > 0.0 && p.is_finite() => Some(p),
            _ => None,
        }
    }

    /// Drops this row's sale outcome, leaving the parcel attributes.
    pub fn clear_outcome(&mut self) {
        self.sold = false;
        self.sale_price_total = None;
        self.gross_square_feet = None;
        self.sale_psf = None;
    }
}
