//! CSV and plain-PGM writers for sweep, heatmap, cover, inference and
//! accuracy outputs. Everything renders to `String` so callers decide where
//! it goes; output is deterministic for identical inputs.

use std::fmt::Write;

use crate::ingest::LocationAccuracy;
use crate::planning::CoverSolution;
use crate::scene::CandidatePoint;
use crate::transport::ContributionMatrix;

/// Formats `v` with `digits` significant digits in the style of C's `%g`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if exp < -4 || exp >= digits as i32 {
        let (mantissa, _) = sci.split_at(sci.find('e').unwrap());
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `point_index,door_state,lum_0..lum_{n-1}`, six significant digits.
pub fn contributions_csv(matrix: &ContributionMatrix) -> String {
    let n = matrix.luminaire_count();
    let mut out = String::from("point_index,door_state");
    for i in 0..n {
        write!(out, ",lum_{i}").unwrap();
    }
    out.push('\n');
    for p in 0..matrix.point_count() {
        for q in 0..matrix.door_state_count() {
            write!(out, "{p},{q}").unwrap();
            for v in matrix.values(p, q) {
                write!(out, ",{}", format_sig(*v, 6)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// `x,y,score` per candidate point.
pub fn heatmap_csv(points: &[CandidatePoint], scores: &[usize]) -> String {
    let mut out = String::from("x,y,score\n");
    for (p, s) in points.iter().zip(scores) {
        writeln!(out, "{},{},{}", p.position.x, p.position.y, s).unwrap();
    }
    out
}

/// Raster of scores over the distinct x/y coordinates of the points, with
/// the largest y in the top row. Cells without a point hold 0.
pub fn heatmap_raster(points: &[CandidatePoint], scores: &[usize]) -> Vec<Vec<usize>> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.position.x).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p.position.y).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let mut raster = vec![vec![0; xs.len()]; ys.len()];
    for (p, &s) in points.iter().zip(scores) {
        let col = xs.partition_point(|&x| x < p.position.x);
        let row = ys.len() - 1 - ys.partition_point(|&y| y < p.position.y);
        raster[row][col] = raster[row][col].max(s);
    }
    raster
}

/// Plain (P2) portable graymap.
pub fn pgm(raster: &[Vec<usize>], maxval: usize) -> String {
    let height = raster.len();
    let width = raster.first().map_or(0, Vec::len);
    let mut out = format!("P2\n{width} {height}\n{maxval}\n");
    for row in raster {
        let line: Vec<String> = row.iter().map(|v| v.min(&maxval).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// `step,point_index,x,y,gain,cumulative` for each chosen point.
pub fn cover_csv(solution: &CoverSolution, points: &[CandidatePoint]) -> String {
    let mut out = String::from("step,point_index,x,y,gain,cumulative\n");
    let mut total = 0;
    for (step, (&idx, &gain)) in solution.chosen.iter().zip(&solution.gains).enumerate() {
        total += gain;
        let p = points[idx].position;
        writeln!(out, "{step},{idx},{},{},{gain},{total}", p.x, p.y).unwrap();
    }
    out
}

/// One disaggregated reading. `config_p` and `accuracy` are empty in the
/// CSV when the true configuration is unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRow {
    pub point_index: usize,
    pub door_state: usize,
    pub config_p: Option<u32>,
    pub n_candidates: usize,
    pub accuracy: Option<f64>,
    pub no_solution: bool,
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// `point_index,door_state,config_p,n_candidates,accuracy,no_solution`.
pub fn inference_csv(rows: &[InferenceRow]) -> String {
    let mut out =
        String::from("point_index,door_state,config_p,n_candidates,accuracy,no_solution\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.point_index,
            r.door_state,
            opt(r.config_p, |p| p.to_string()),
            r.n_candidates,
            opt(r.accuracy, |a| format_sig(a, 6)),
            r.no_solution
        )
        .unwrap();
    }
    out
}

/// Vote-fused verdict for one multi-sensor observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedRow {
    pub reading: u64,
    pub door_state: usize,
    pub sensors: usize,
    pub config_p: Option<u32>,
    pub fused_p: u32,
    pub accuracy: Option<f64>,
}

/// `reading,door_state,sensors,config_p,fused_p,accuracy`.
pub fn fused_csv(rows: &[FusedRow]) -> String {
    let mut out = String::from("reading,door_state,sensors,config_p,fused_p,accuracy\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.reading,
            r.door_state,
            r.sensors,
            opt(r.config_p, |p| p.to_string()),
            r.fused_p,
            opt(r.accuracy, |a| format_sig(a, 6)),
        )
        .unwrap();
    }
    out
}

/// `location,min,q1,median,mean,q3,max,n`.
pub fn accuracy_csv(results: &[LocationAccuracy]) -> String {
    let mut out = String::from("location,min,q1,median,mean,q3,max,n\n");
    for r in results {
        let s = r.summary;
        let f = |v: f64| format_sig(v, 6);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.location,
            f(s.min),
            f(s.q1),
            f(s.median),
            f(s.mean),
            f(s.q3),
            f(s.max),
            s.n
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Point2, SensorNormal};

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(25.0, 6), "25");
        assert_eq!(format_sig(6.25, 6), "6.25");
        assert_eq!(format_sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(format_sig(123456.7, 6), "123457");
        assert_eq!(format_sig(999999.6, 6), "1e6");
        assert_eq!(format_sig(0.000012345678, 6), "1.23457e-5");
        assert_eq!(format_sig(-2.5, 6), "-2.5");
        assert_eq!(format_sig(0.0, 6), "0");
    }

    fn pt(x: f64, y: f64) -> CandidatePoint {
        CandidatePoint {
            position: Point2::new(x, y),
            height: 1.0,
            normal: SensorNormal::Omni,
        }
    }

    #[test]
    fn raster_orientation() {
        let points = [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)];
        let raster = heatmap_raster(&points, &[1, 2, 3]);
        assert_eq!(raster, vec![vec![3, 0], vec![1, 2]]);
        assert_eq!(pgm(&raster, 4), "P2\n2 2\n4\n3 0\n1 2\n");
    }

    #[test]
    fn unknown_truth_leaves_fields_empty() {
        let row = InferenceRow {
            point_index: 3,
            door_state: 1,
            config_p: None,
            n_candidates: 2,
            accuracy: None,
            no_solution: false,
        };
        assert_eq!(inference_csv(&[row]).lines().nth(1), Some("3,1,,2,,false"));
    }
}
