use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Borough-Block-Lot tax lot identifier.
///
/// The canonical text form is `{borough}_{block}_{lot}`, e.g. `1_829_16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BblKey {
    borough: u8,
    block: u32,
    lot: u32,
}

pub fn make_bbl(borough: i64, block: i64, lot: i64) -> Result<BblKey> {
    BblKey::new(borough, block, lot)
}

impl BblKey {
    pub fn new(borough: i64, block: i64, lot: i64) -> Result<Self> {
        if !(1..=5).contains(&borough) {
            return Err(Error::InvalidKey(format!(
                "borough {borough} outside 1..=5"
            )));
        }
        let block = u32::try_from(block)
            .map_err(|_| Error::InvalidKey(format!("block {block} out of range")))?;
        let lot =
            u32::try_from(lot).map_err(|_| Error::InvalidKey(format!("lot {lot} out of range")))?;
        Ok(BblKey {
            borough: borough as u8,
            block,
            lot,
        })
    }

    pub fn borough(&self) -> u8 {
        self.borough
    }

    pub fn block(&self) -> u32 {
        self.block
    }

    pub fn lot(&self) -> u32 {
        self.lot
    }
}

impl fmt::Display for BblKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{}", self.borough, self.block, self.lot)
    }
}

impl FromStr for BblKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split('_');
        let mut next = |what: &str| -> Result<i64> {
            parts
                .next()
                .ok_or_else(|| Error::InvalidKey(format!("{s:?}: missing {what}")))?
                .parse::<i64>()
                .map_err(|_| Error::InvalidKey(format!("{s:?}: bad {what}")))
        };
        let borough = next("borough")?;
        let block = next("block")?;
        let lot = next("lot")?;
        if parts.next().is_some() {
            return Err(Error::InvalidKey(format!("{s:?}: too many components")));
        }
        BblKey::new(borough, block, lot)
    }
}

impl Serialize for BblKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BblKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
