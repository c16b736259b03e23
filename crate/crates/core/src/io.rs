//! Point-set files and canonical report serialization.
//!
//! Point-set files are JSON documents `{dim, window: {kind, center, extent},
//! points}` with repetition encoding multiplicity. They are written losslessly
//! (shortest round-trip float form). Reports are written with sorted keys and
//! floats rounded to 12 significant digits so identical runs diff cleanly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::pointset::{Point, PointConfiguration, Window};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointSetDocument {
    dim: usize,
    window: Window,
    points: Vec<Point>,
}

pub fn point_set_from_str(s: &str) -> Result<PointConfiguration> {
    let doc: PointSetDocument = serde_json::from_str(s)?;
    let window = Window::new(doc.window.kind, doc.window.center, doc.window.extent)?;
    if window.dim() != doc.dim {
        return Err(Error::DimensionMismatch {
            expected: doc.dim,
            found: window.dim(),
        });
    }
    PointConfiguration::new(window, doc.points)
}

pub fn point_set_to_string(config: &PointConfiguration) -> Result<String> {
    let value = serde_json::to_value(config)?;
    Ok(serde_json::to_string(&value)? + "\n")
}

pub fn read_point_set(path: impl AsRef<Path>) -> Result<PointConfiguration> {
    point_set_from_str(&fs::read_to_string(path)?)
}

pub fn write_point_set(path: impl AsRef<Path>, config: &PointConfiguration) -> Result<()> {
    fs::write(path, point_set_to_string(config)?)?;
    Ok(())
}

/// Rounds to `digits` significant digits; non-finite values pass through and
/// negative zero becomes zero.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Formats a float for CSV output with the canonical precision.
pub fn format_float(x: f64) -> String {
    let r = round_sig(x, SIGNIFICANT_DIGITS);
    if r.is_finite() {
        serde_json::Number::from_f64(r)
            .map(|n| n.to_string())
            .unwrap_or_else(|| r.to_string())
    } else if r.is_nan() {
        "nan".into()
    } else if r > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = serde_json::Number::from_f64(round_sig(x, SIGNIFICANT_DIGITS)) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and 12-significant-digit floats.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_points_outside_window() {
        let doc = r#"{"dim":1,"window":{"kind":"cube","center":[0],"extent":2},"points":[[0.5],[1.0]]}"#;
        assert!(matches!(point_set_from_str(doc), Err(Error::OutsideWindow { index: 1 })));
    }

    #[test]
    fn rejects_dimension_disagreement() {
        let doc = r#"{"dim":2,"window":{"kind":"ball","center":[0],"extent":2},"points":[]}"#;
        assert!(point_set_from_str(doc).is_err());
        let doc = r#"{"dim":1,"window":{"kind":"ball","center":[0],"extent":2},"points":[[0,1]]}"#;
        assert!(point_set_from_str(doc).is_err());
    }

    #[test]
    fn rejects_bad_extent() {
        let doc = r#"{"dim":1,"window":{"kind":"cube","center":[0],"extent":-1},"points":[]}"#;
        assert!(matches!(point_set_from_str(doc), Err(Error::InvalidWindow(_))));
    }

    #[test]
    fn multiplicity_survives() {
        let doc = r#"{"dim":1,"window":{"kind":"cube","center":[0],"extent":2},"points":[[0.5],[0.5]]}"#;
        assert_eq!(point_set_from_str(doc).unwrap().len(), 2);
    }

    #[test]
    fn canonical_rounding() {
        assert_eq!(round_sig(2.0f64.sqrt() * 1e5, 12), 141421.356237);
        assert_eq!(round_sig(-0.0, 12), 0.0);
        let s = canonical_json(&serde_json::json!({"b": 0.1 + 0.2, "a": 1})).unwrap();
        assert_eq!(s, "{\n  \"a\": 1,\n  \"b\": 0.3\n}\n");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
    }

    proptest! {
        #[test]
        fn point_sets_round_trip(xs in prop::collection::vec(-10.0f64..10.0, 0..40)) {
            let w = Window::interval(-10.0, 10.0).unwrap();
            let c = PointConfiguration::new(w, xs.into_iter().map(Point::from).collect()).unwrap();
            let back = point_set_from_str(&point_set_to_string(&c).unwrap()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
