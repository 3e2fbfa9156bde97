//! Plain-text writers shared by the command-line tool.

use std::fmt::Write;

use nalgebra::DMatrix;

use crate::points::PointSet;
use crate::spectral::SpectrumRow;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn points_csv(ps: &PointSet) -> String {
    let mut out = String::new();
    for p in ps.iter() {
        let cells: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut out = String::from("index,lambda_M,lambda_M_pow_m,lambda_C\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.index,
            fmt_f64(r.lambda_m),
            fmt_f64(r.lambda_m_pow_m),
            fmt_f64(r.lambda_c)
        )
        .unwrap();
    }
    out
}

pub fn profile_csv(profile: &[f64]) -> String {
    let mut out = String::from("index,probability\n");
    for (i, &v) in profile.iter().enumerate() {
        writeln!(out, "{},{}", i, fmt_f64(v)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.649_158_683_274_018, -1e-300, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn csv_round_trips_through_loader() {
        let ps = PointSet::new(vec![vec![0.1, -2.5], vec![1e-20, 3.0]]).unwrap();
        assert_eq!(crate::points::load_points(&points_csv(&ps)).unwrap(), ps);
    }
}
