//! Number rendering shared by the CSV and JSON outputs.

use serde::Serializer;

/// 17 significant digits, scientific notation; `inf` for +infinity.
pub fn sig17(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Serializes an extended real: finite values as JSON numbers, infinities as `"inf"`.
pub fn ext_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*x)
    }
}

pub fn opt_ext_real<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ext_real(v, s),
        None => s.serialize_none(),
    }
}
