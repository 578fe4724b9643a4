//! Report value types: every rational carries its exact `"p/q"` string and a
//! non-authoritative 12-significant-digit decimal rendering.

use serde::{Serialize, Serializer};
use serde::ser::SerializeStruct;

use crate::rat::Rat;

pub const DECIMAL_DIGITS: u32 = 12;

/// An exact rational as it appears in reports.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact {
    pub exact: Rat,
}

impl From<Rat> for Exact {
    fn from(exact: Rat) -> Self {
        Exact { exact }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Exact", 2)?;
        s.serialize_field("exact", &self.exact)?;
        s.serialize_field("decimal_non_authoritative", &self.exact.to_decimal(DECIMAL_DIGITS))?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_both_forms() {
        let e: Exact = Rat::new(1, 3).into();
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"exact":"1/3","decimal_non_authoritative":"0.333333333333"}"#
        );
    }
}
