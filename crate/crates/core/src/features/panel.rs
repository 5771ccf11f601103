use std::collections::HashMap;

use crate::ingest::{BblKey, PropertyYearRecord};

/// Sorted distinct years of a panel. "Previous year" means the previous
/// year present in the panel, so gaps are skipped rather than filled.
#[derive(Debug, Clone)]
pub struct PanelYears {
    years: Vec<i32>,
}

impl PanelYears {
    pub fn new(panel: &[PropertyYearRecord]) -> Self {
        let mut years: Vec<i32> = panel.iter().map(|r| r.year()).collect();
        years.sort_unstable();
        years.dedup();
        PanelYears { years }
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn previous(&self, year: i32) -> Option<i32> {
        let i = self.years.partition_point(|&y| y < year);
        i.checked_sub(1).map(|i| self.years[i])
    }
}

pub(crate) fn row_lookup(panel: &[PropertyYearRecord]) -> HashMap<(BblKey, i32), usize> {
    panel.iter().enumerate().map(|(i, r)| (r.key(), i)).collect()
}

/// Panel as seen at the start of `year`: later rows removed, and the
/// outcomes of `year` itself cleared.
pub fn truncate_for_year(panel: &[PropertyYearRecord], year: i32) -> Vec<PropertyYearRecord> {
    panel
        .iter()
        .filter(|r| r.year() <= year)
        .cloned()
        .map(|mut r| {
            if r.year() == year {
                r.clear_outcome();
            }
            r
        })
        .collect()
}
