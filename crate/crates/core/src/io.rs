//! Text dump of grid fields: a JSON header line followed by one value per
//! line in flat (last axis fastest) order. Readers skip `#` lines before the
//! header.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub d: usize,
    /// Box half-width `L`.
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    pub rho: f64,
}

pub fn field_to_text<T: Scalar>(u: &Field<T>, rho: T) -> String {
    let g = u.grid();
    let header = FieldHeader {
        d: g.d(),
        half_width: g.half_width().as_f64(),
        n: g.n(),
        rho: rho.as_f64(),
    };
    let mut s = String::with_capacity(24 * (u.values().len() + 4));
    let _ = writeln!(s, "{}", serde_json::to_string(&header).expect("header serializes"));
    for v in u.values() {
        let _ = writeln!(s, "{:.17e}", v.as_f64());
    }
    s
}

/// Parses [`field_to_text`] output into the field and its `ρ`.
pub fn field_from_text<T: Scalar>(text: &str) -> Result<(Field<T>, T)> {
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    let first = lines.next().ok_or_else(|| Error::Domain("empty field dump".into()))?;
    let header: FieldHeader =
        serde_json::from_str(first).map_err(|e| Error::Domain(format!("bad field dump header: {e}")))?;
    let grid = Grid::new(header.d, T::lit(header.half_width), header.n)?;
    let values = lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|e| Error::Domain(format!("field dump value {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok((Field::from_values(grid, values)?, T::lit(header.rho)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = Grid::<f64>::new(2, 1.5, 17).unwrap();
        let u = Field::from_fn(g, |x| (x[0] - 0.3 * x[1]).sin() / 3.0);
        let text = field_to_text(&u, 12.5);
        assert!(text.starts_with(r#"{"d":2,"L":1.5,"n":17,"rho":12.5}"#));
        let (v, rho) = field_from_text::<f64>(&format!("# provenance\n{text}")).unwrap();
        assert_eq!(rho, 12.5);
        assert_eq!(v.values(), u.values());
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let g = Grid::<f64>::new(1, 1.0, 17).unwrap();
        let text = field_to_text(&Field::from_fn(g, |x| x[0]), 1.0);
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(field_from_text::<f64>(&cut).is_err());
        assert!(field_from_text::<f64>("{\"d\":1}\n").is_err());
    }
}
