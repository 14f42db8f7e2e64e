use serde::ser::Error as _;
use serde::{Serialize, Serializer};

/// A float that serializes infinities as the strings `"inf"` and `"-inf"`
/// and refuses NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x == f64::INFINITY {
            s.serialize_str("inf")
        } else if x == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            Err(S::Error::custom("refusing to emit NaN"))
        }
    }
}
