//! Delimited-text readers and writers for parcels, sales, aliases and the
//! joined panel.
//!
//! Readers look columns up by canonical field name. A JSON sidecar can map
//! canonical names onto whatever headers the source export uses:
//!
//! ```json
//! { "delimiter": ",", "columns": { "bldg_area": "BldgArea", "zip": "ZipCode" } }
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bbl::BblKey;
use super::records::{AliasTable, BuildingAreas, ParcelRecord, PropertyYearRecord, SaleRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    /// Single-character field delimiter; inferred from the extension when absent.
    #[serde(default)]
    pub delimiter: Option<char>,
    /// Canonical field name to source header.
    #[serde(default)]
    pub columns: BTreeMap<String, String>,
}

impl ColumnMapping {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }

    fn header_for<'a>(&'a self, field: &'a str) -> &'a str {
        self.columns.get(field).map(String::as_str).unwrap_or(field)
    }

    fn delimiter_for(&self, path: &Path) -> u8 {
        match self.delimiter {
            Some(c) => c as u8,
            None => match path.extension().and_then(|e| e.to_str()) {
                Some("tsv") | Some("tab") => b'\t',
                _ => b',',
            },
        }
    }
}

pub const PARCEL_FIELDS: [&str; 22] = [
    "bbl",
    "year",
    "lat",
    "lon",
    "building_class",
    "borough",
    "zip",
    "num_bldgs",
    "bldg_area",
    "com_area",
    "res_area",
    "office_area",
    "retail_area",
    "garage_area",
    "storage_area",
    "factory_area",
    "other_area",
    "assessed_total",
    "year_built",
    "floors",
    "units_res",
    "units_total",
];

pub const SALE_FIELDS: [&str; 4] = ["bbl", "sale_year", "sale_price", "gross_square_feet"];

pub const PANEL_FIELDS: [&str; 26] = [
    "bbl",
    "year",
    "lat",
    "lon",
    "building_class",
    "borough",
    "zip",
    "num_bldgs",
    "bldg_area",
    "com_area",
    "res_area",
    "office_area",
    "retail_area",
    "garage_area",
    "storage_area",
    "factory_area",
    "other_area",
    "assessed_total",
    "year_built",
    "floors",
    "units_res",
    "units_total",
    "sold",
    "sale_price_total",
    "gross_square_feet",
    "sale_psf",
];

struct Row<'a> {
    record: &'a csv::StringRecord,
    index: &'a HashMap<String, usize>,
    line: u64,
}

impl Row<'_> {
    fn raw(&self, field: &str) -> Option<&str> {
        self.index
            .get(field)
            .and_then(|&i| self.record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }

    fn text(&self, field: &str) -> Result<String> {
        self.raw(field)
            .map(str::to_string)
            .ok_or_else(|| self.err(field, "missing value"))
    }

    fn opt_num(&self, field: &str) -> Result<Option<f64>> {
        match self.raw(field) {
            None => Ok(None),
            Some(s) => {
                let cleaned: String = s.chars().filter(|c| !matches!(c, ',' | '$')).collect();
                if cleaned == "NA" || cleaned.eq_ignore_ascii_case("nan") {
                    return Ok(None);
                }
                cleaned
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| self.err(field, &format!("not a number: {s:?}")))
            }
        }
    }

    fn num_or_zero(&self, field: &str) -> Result<f64> {
        Ok(self.opt_num(field)?.unwrap_or(0.0))
    }

    fn num(&self, field: &str) -> Result<f64> {
        self.opt_num(field)?
            .ok_or_else(|| self.err(field, "missing value"))
    }

    fn int(&self, field: &str) -> Result<i64> {
        let v = self.num(field)?;
        if v.fract() != 0.0 {
            return Err(self.err(field, &format!("not an integer: {v}")));
        }
        Ok(v as i64)
    }

    fn bbl(&self) -> Result<BblKey> {
        if let Some(s) = self.raw("bbl") {
            return s.parse();
        }
        BblKey::new(self.int("borough")?, self.int("block")?, self.int("lot")?)
    }

    fn err(&self, field: &str, msg: &str) -> Error {
        Error::InvalidInput(format!("line {}: field `{field}`: {msg}", self.line))
    }
}

fn read_rows<T>(
    path: &Path,
    mapping: &ColumnMapping,
    fields: &[&str],
    extra: &[&str],
    mut parse: impl FnMut(&Row<'_>) -> Result<T>,
) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter_for(path))
        .flexible(false)
        .from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    let position: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();
    let mut index = HashMap::new();
    for field in fields.iter().chain(extra) {
        if let Some(&i) = position.get(mapping.header_for(field)) {
            index.insert(field.to_string(), i);
        }
    }
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        out.push(parse(&Row {
            record: &record,
            index: &index,
            line,
        })?);
    }
    Ok(out)
}

fn parse_parcel(row: &Row<'_>) -> Result<ParcelRecord> {
    let bbl = row.bbl()?;
    let borough = match row.opt_num("borough")? {
        Some(b) => b as u8,
        None => bbl.borough(),
    };
    let record = ParcelRecord {
        bbl,
        year: row.int("year")? as i32,
        lat: row.opt_num("lat")?,
        lon: row.opt_num("lon")?,
        building_class: row.raw("building_class").unwrap_or("").to_string(),
        borough,
        zip: row.raw("zip").unwrap_or("").to_string(),
        num_bldgs: row.num_or_zero("num_bldgs")? as u32,
        areas: BuildingAreas {
            total: row.num_or_zero("bldg_area")?,
            commercial: row.num_or_zero("com_area")?,
            residential: row.num_or_zero("res_area")?,
            office: row.num_or_zero("office_area")?,
            retail: row.num_or_zero("retail_area")?,
            garage: row.num_or_zero("garage_area")?,
            storage: row.num_or_zero("storage_area")?,
            factory: row.num_or_zero("factory_area")?,
            other: row.num_or_zero("other_area")?,
        },
        assessed_total: row.num_or_zero("assessed_total")?,
        year_built: row.opt_num("year_built")?.map(|v| v as i32),
        floors: row.num_or_zero("floors")?,
        units_res: row.num_or_zero("units_res")?,
        units_total: row.num_or_zero("units_total")?,
    };
    record.validate()?;
    Ok(record)
}

pub fn read_parcels(path: &Path, mapping: &ColumnMapping) -> Result<Vec<ParcelRecord>> {
    read_rows(path, mapping, &PARCEL_FIELDS, &["block", "lot"], parse_parcel)
}

pub fn read_sales(path: &Path, mapping: &ColumnMapping) -> Result<Vec<SaleRecord>> {
    read_rows(path, mapping, &SALE_FIELDS, &["borough", "block", "lot"], |row| {
        let price = row.num("sale_price")?;
        if price < 0.0 {
            return Err(row.err("sale_price", "negative price"));
        }
        Ok(SaleRecord {
            raw_bbl: row.bbl()?,
            sale_year: row.int("sale_year")? as i32,
            sale_price_total: price,
            gross_square_feet: row.num_or_zero("gross_square_feet")?,
        })
    })
}

pub fn read_aliases(path: &Path) -> Result<AliasTable> {
    let pairs = read_rows(
        path,
        &ColumnMapping::default(),
        &["reported_bbl", "canonical_bbl"],
        &[],
        |row| {
            let reported: BblKey = row.text("reported_bbl")?.parse()?;
            let canonical: BblKey = row.text("canonical_bbl")?.parse()?;
            Ok((reported, canonical))
        },
    )?;
    let mut table = AliasTable::new();
    for (reported, canonical) in pairs {
        table.insert(reported, canonical)?;
    }
    Ok(table)
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parcel_cells(p: &ParcelRecord) -> Vec<String> {
    let a = &p.areas;
    vec![
        p.bbl.to_string(),
        p.year.to_string(),
        opt(p.lat),
        opt(p.lon),
        p.building_class.clone(),
        p.borough.to_string(),
        p.zip.clone(),
        p.num_bldgs.to_string(),
        a.total.to_string(),
        a.commercial.to_string(),
        a.residential.to_string(),
        a.office.to_string(),
        a.retail.to_string(),
        a.garage.to_string(),
        a.storage.to_string(),
        a.factory.to_string(),
        a.other.to_string(),
        p.assessed_total.to_string(),
        p.year_built.map(|y| y.to_string()).unwrap_or_default(),
        p.floors.to_string(),
        p.units_res.to_string(),
        p.units_total.to_string(),
    ]
}

pub fn write_parcels(path: &Path, parcels: &[ParcelRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(PARCEL_FIELDS)?;
    for p in parcels {
        w.write_record(parcel_cells(p))?;
    }
    flush(w, path)
}

pub fn write_sales(path: &Path, sales: &[SaleRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(SALE_FIELDS)?;
    for s in sales {
        w.write_record([
            s.raw_bbl.to_string(),
            s.sale_year.to_string(),
            s.sale_price_total.to_string(),
            s.gross_square_feet.to_string(),
        ])?;
    }
    flush(w, path)
}

pub fn write_aliases(path: &Path, aliases: &AliasTable) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["reported_bbl", "canonical_bbl"])?;
    for (reported, canonical) in aliases.iter() {
        w.write_record([reported.to_string(), canonical.to_string()])?;
    }
    flush(w, path)
}

/// Writes the panel with the fixed [`PANEL_FIELDS`] header.
pub fn write_panel(path: &Path, panel: &[PropertyYearRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(PANEL_FIELDS)?;
    for r in panel {
        let mut cells = parcel_cells(&r.parcel);
        cells.push(u8::from(r.sold).to_string());
        cells.push(opt(r.sale_price_total));
        cells.push(opt(r.gross_square_feet));
        cells.push(opt(r.sale_psf));
        w.write_record(cells)?;
    }
    flush(w, path)
}

pub fn read_panel(path: &Path) -> Result<Vec<PropertyYearRecord>> {
    read_rows(path, &ColumnMapping::default(), &PANEL_FIELDS, &[], |row| {
        let sold = match row.raw("sold") {
            Some("1") => true,
            Some("0") => false,
            other => return Err(row.err("sold", &format!("expected 0/1, got {other:?}"))),
        };
        Ok(PropertyYearRecord {
            parcel: parse_parcel(row)?,
            sold,
            sale_price_total: row.opt_num("sale_price_total")?,
            gross_square_feet: row.opt_num("gross_square_feet")?,
            sale_psf: row.opt_num("sale_psf")?,
        })
    })
}

fn flush(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
