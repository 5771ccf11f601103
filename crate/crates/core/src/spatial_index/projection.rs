use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    /// Index of the point in the caller's key list.
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

/// Equirectangular projection about a reference latitude/longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    pub lat0: f64,
    pub lon0: f64,
}

impl LocalProjection {
    /// Centred on the arithmetic mean of the coordinates.
    pub fn centered_on(coords: &[(f64, f64)]) -> Option<Self> {
        if coords.is_empty() {
            return None;
        }
        let n = coords.len() as f64;
        let lat0 = coords.iter().map(|c| c.0).sum::<f64>() / n;
        let lon0 = coords.iter().map(|c| c.1).sum::<f64>() / n;
        Some(LocalProjection { lat0, lon0 })
    }

    pub fn forward(&self, lat: f64, lon: f64) -> (f64, f64) {
        let x = EARTH_RADIUS_M * (lon - self.lon0).to_radians() * self.lat0.to_radians().cos();
        let y = EARTH_RADIUS_M * (lat - self.lat0).to_radians();
        (x, y)
    }

    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let lat = self.lat0 + (y / EARTH_RADIUS_M).to_degrees();
        let lon = self.lon0 + (x / (EARTH_RADIUS_M * self.lat0.to_radians().cos())).to_degrees();
        (lat, lon)
    }
}

/// Projects `(lat, lon)` pairs to planar meters about their centroid. Point ids
/// are the input positions.
pub fn project(coords: &[(f64, f64)]) -> (Option<LocalProjection>, Vec<ProjectedPoint>) {
    let Some(proj) = LocalProjection::centered_on(coords) else {
        return (None, Vec::new());
    };
    let points = coords
        .iter()
        .enumerate()
        .map(|(id, &(lat, lon))| {
            let (x, y) = proj.forward(lat, lon);
            ProjectedPoint { id, x, y }
        })
        .collect();
    (Some(proj), points)
}
