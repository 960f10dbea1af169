//! IES LM-63 photometric tables.
//!
//! Only `TILT=NONE` files are accepted. The candela table is stored one row
//! per horizontal angle, each row holding one value per vertical angle, as
//! in the file. Lookups interpolate bilinearly and clamp at the grid edges.

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub struct IesTable {
    /// Vertical (polar) angles in degrees, 0 = nadir.
    pub vertical_angles: Vec<f64>,
    /// Horizontal (azimuth) angles in degrees.
    pub horizontal_angles: Vec<f64>,
    /// `candela[h][v]`, already multiplied by the file's candela multiplier.
    pub candela: Vec<Vec<f64>>,
}

impl IesTable {
    pub fn new(
        vertical_angles: Vec<f64>,
        horizontal_angles: Vec<f64>,
        candela: Vec<Vec<f64>>,
    ) -> Result<Self, ParseError> {
        check_increasing(&vertical_angles, "vertical")?;
        check_increasing(&horizontal_angles, "horizontal")?;
        if vertical_angles.is_empty() || horizontal_angles.is_empty() {
            return Err(ParseError::Invalid("empty angle list".into()));
        }
        if vertical_angles[0] < 0.0 || *vertical_angles.last().unwrap() > 180.0 {
            return Err(ParseError::Invalid(
                "vertical angles must lie in [0, 180]".into(),
            ));
        }
        if horizontal_angles[0] < 0.0 || *horizontal_angles.last().unwrap() > 360.0 {
            return Err(ParseError::Invalid(
                "horizontal angles must lie in [0, 360]".into(),
            ));
        }
        if candela.len() != horizontal_angles.len()
            || candela.iter().any(|row| row.len() != vertical_angles.len())
        {
            return Err(ParseError::Invalid(
                "candela table dimensions do not match angle lists".into(),
            ));
        }
        if candela.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(ParseError::Invalid(
                "candela values must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            vertical_angles,
            horizontal_angles,
            candela,
        })
    }

    pub fn peak(&self) -> f64 {
        self.candela.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Candela toward (`vertical`, `horizontal`) degrees.
    pub fn lookup(&self, vertical: f64, horizontal: f64) -> f64 {
        let h = self.fold_horizontal(horizontal);
        let (h0, h1, wh) = bracket(&self.horizontal_angles, h);
        let (v0, v1, wv) = bracket(&self.vertical_angles, vertical);
        let row = |hi: usize| {
            let r = &self.candela[hi];
            r[v0] * (1.0 - wv) + r[v1] * wv
        };
        row(h0) * (1.0 - wh) + row(h1) * wh
    }

    /// Maps an azimuth onto the range covered by the table using the
    /// LM-63 symmetry conventions implied by the last horizontal angle.
    fn fold_horizontal(&self, horizontal: f64) -> f64 {
        let last = *self.horizontal_angles.last().unwrap();
        let mut h = horizontal.rem_euclid(360.0);
        if self.horizontal_angles.len() == 1 {
            return self.horizontal_angles[0];
        }
        if last <= 90.0 {
            if h > 180.0 {
                h = 360.0 - h;
            }
            if h > 90.0 {
                h = 180.0 - h;
            }
        } else if last <= 180.0 && h > 180.0 {
            h = 360.0 - h;
        }
        h
    }
}

/// Returns the two grid indices around `x` and the weight of the upper one.
fn bracket(grid: &[f64], x: f64) -> (usize, usize, f64) {
    let last = grid.len() - 1;
    if x <= grid[0] {
        return (0, 0, 0.0);
    }
    if x >= grid[last] {
        return (last, last, 0.0);
    }
    let hi = grid.partition_point(|g| *g <= x);
    let lo = hi - 1;
    let w = (x - grid[lo]) / (grid[hi] - grid[lo]);
    (lo, hi, w)
}

fn check_increasing(values: &[f64], which: &'static str) -> Result<(), ParseError> {
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ParseError::NonMonotonicAngles { which });
    }
    Ok(())
}

/// Parses LM-63 text into a candela table.
pub fn parse_ies(text: &str) -> Result<IesTable, ParseError> {
    let mut lines = text.lines().enumerate();
    let mut tilt_line = None;
    for (idx, line) in lines.by_ref() {
        let trimmed = line.trim();
        if let Some(mode) = trimmed.strip_prefix("TILT=") {
            if mode.trim() != "NONE" {
                return Err(ParseError::UnsupportedTilt(mode.trim().to_string()));
            }
            tilt_line = Some(idx + 1);
            break;
        }
    }
    let tilt_line = tilt_line.ok_or_else(|| ParseError::Syntax {
        line: 1,
        column: 1,
        message: "missing TILT= line".into(),
    })?;

    let mut tokens = Vec::new();
    for (idx, line) in lines {
        for (col, tok) in split_tokens(line) {
            let value: f64 = tok.parse().map_err(|_| ParseError::Syntax {
                line: idx + 1,
                column: col + 1,
                message: format!("expected a number, found `{tok}`"),
            })?;
            tokens.push(value);
        }
    }

    const HEADER: usize = 13;
    if tokens.len() < HEADER {
        return Err(ParseError::Syntax {
            line: tilt_line + 1,
            column: 1,
            message: format!(
                "photometric header needs {HEADER} numbers, found {}",
                tokens.len()
            ),
        });
    }
    let multiplier = tokens[2];
    let n_vertical = count(tokens[3], "vertical angle count")?;
    let n_horizontal = count(tokens[4], "horizontal angle count")?;
    let body = &tokens[HEADER..];
    let expected = n_vertical + n_horizontal + n_vertical * n_horizontal;
    if body.len() < expected {
        return Err(ParseError::TruncatedTable {
            expected,
            found: body.len(),
        });
    }
    let vertical = body[..n_vertical].to_vec();
    let horizontal = body[n_vertical..n_vertical + n_horizontal].to_vec();
    let candela = body[n_vertical + n_horizontal..expected]
        .chunks(n_vertical)
        .map(|row| row.iter().map(|c| c * multiplier).collect())
        .collect();
    IesTable::new(vertical, horizontal, candela)
}

fn count(value: f64, what: &str) -> Result<usize, ParseError> {
    if value >= 1.0 && value.fract() == 0.0 && value < 1e6 {
        Ok(value as usize)
    } else {
        Err(ParseError::Invalid(format!("invalid {what}: {value}")))
    }
}

fn split_tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        let sep = c.is_whitespace() || c == ',';
        match (sep, start) {
            (true, Some(s)) => {
                out.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
}

/// Renders a table back to minimal LM-63 text (multiplier 1).
pub fn render_ies(table: &IesTable) -> String {
    let mut out = String::from("IESNA:LM-63-2002\n[TEST] generated\nTILT=NONE\n");
    out.push_str(&format!(
        "1 -1 1 {} {} 1 2 0 0 0\n1 1 0\n",
        table.vertical_angles.len(),
        table.horizontal_angles.len()
    ));
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    out.push_str(&join(&table.vertical_angles));
    out.push('\n');
    out.push_str(&join(&table.horizontal_angles));
    out.push('\n');
    for row in &table.candela {
        out.push_str(&join(row));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(vertical: &str, horizontal: &str, rows: &[&str], nv: usize, nh: usize) -> String {
        format!(
            "IESNA:LM-63-2002\n[MANUFAC] test\nTILT=NONE\n1 -1 1 {nv} {nh} 1 2 0 0 0\n1 1 10\n{vertical}\n{horizontal}\n{}\n",
            rows.join("\n")
        )
    }

    #[test]
    fn constant_table_is_isotropic() {
        let text = file(
            "0 45 90 135 180",
            "0 90 180",
            &["100 100 100 100 100"; 3],
            5,
            3,
        );
        let t = parse_ies(&text).unwrap();
        for v in [0.0, 10.0, 77.7, 180.0] {
            for h in [0.0, 45.0, 200.0, 359.0] {
                assert_eq!(t.lookup(v, h), 100.0);
            }
        }
    }

    #[test]
    fn midpoint_interpolation() {
        let t = parse_ies(&file("0 90", "0", &["200 0"], 2, 1)).unwrap();
        assert_eq!(t.lookup(45.0, 0.0), 100.0);
        assert_eq!(t.lookup(0.0, 123.0), 200.0);
        // clamped past the last vertical angle
        assert_eq!(t.lookup(170.0, 0.0), 0.0);
    }

    #[test]
    fn tilt_include_rejected() {
        let text = "IESNA:LM-63-2002\nTILT=INCLUDE\n1\n";
        assert_eq!(
            parse_ies(text),
            Err(ParseError::UnsupportedTilt("INCLUDE".into()))
        );
    }

    #[test]
    fn truncated_table() {
        let text = file("0 90", "0 180", &["200 0", "100"], 2, 2);
        assert!(matches!(
            parse_ies(&text),
            Err(ParseError::TruncatedTable {
                expected: 8,
                found: 7
            })
        ));
    }

    #[test]
    fn non_monotonic_angles() {
        let text = file("0 90 45", "0", &["1 2 3"], 3, 1);
        assert_eq!(
            parse_ies(&text),
            Err(ParseError::NonMonotonicAngles { which: "vertical" })
        );
    }

    #[test]
    fn multiplier_applied() {
        let text = "TILT=NONE\n1 -1 2.5 2 1 1 2 0 0 0\n1 1 0\n0 90\n0\n10 4\n";
        let t = parse_ies(text).unwrap();
        assert_eq!(t.candela, vec![vec![25.0, 10.0]]);
    }

    #[test]
    fn quadrant_symmetry_folds_azimuth() {
        let text = file("0", "0 90", &["10", "30"], 1, 2);
        let t = parse_ies(&text).unwrap();
        assert_eq!(t.lookup(0.0, 45.0), 20.0);
        assert_eq!(t.lookup(0.0, 135.0), 20.0);
        assert_eq!(t.lookup(0.0, 270.0), 30.0);
        assert_eq!(t.lookup(0.0, 180.0), 10.0);
    }

    #[test]
    fn render_roundtrip() {
        let t = IesTable::new(
            vec![0.0, 30.0, 90.0],
            vec![0.0, 180.0],
            vec![vec![5.0, 3.5, 0.25], vec![4.0, 2.0, 0.0]],
        )
        .unwrap();
        assert_eq!(parse_ies(&render_ies(&t)).unwrap(), t);
    }
}
