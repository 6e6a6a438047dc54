//! Shared CSV/JSON output conventions.

use crate::error::Error;

/// Formats a real with 17 significant digits, enough to round-trip an f64.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
