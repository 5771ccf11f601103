use super::base::row_keys;
use super::matrix::{RowKey, MISSING};
use crate::ingest::PropertyYearRecord;

/// Targets aligned with the panel rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub keys: Vec<RowKey>,
    /// 1.0 when the parcel sold in that year, else 0.0.
    pub sold: Vec<f64>,
    /// Sale price per square foot for market sales, NaN otherwise.
    pub sale_psf: Vec<f64>,
}

impl Labels {
    /// Rows usable for price regression.
    pub fn regression_rows(&self) -> Vec<usize> {
        (0..self.sale_psf.len())
            .filter(|&i| !self.sale_psf[i].is_nan())
            .collect()
    }
}

pub fn make_labels(panel: &[PropertyYearRecord]) -> Labels {
    Labels {
        keys: row_keys(panel),
        sold: panel.iter().map(|r| if r.sold { 1.0 } else { 0.0 }).collect(),
        sale_psf: panel
            .iter()
            .map(|r| r.priced_sale_psf().unwrap_or(MISSING))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::test_support::{row, sold_row};

    #[test]
    fn label_cases() {
        let mut zero = sold_row("1_1_3", 2010, 0.0);
        zero.sale_price_total = Some(0.0);
        let panel = vec![
            row("1_1_1", 2010, "A1", "1"),
            sold_row("1_1_2", 2010, 250.0),
            zero,
        ];
        let l = make_labels(&panel);
        assert_eq!(l.sold, vec![0.0, 1.0, 1.0]);
        assert_eq!(l.sale_psf[1], 250.0);
        assert_eq!(l.regression_rows(), vec![1]);
    }
}
