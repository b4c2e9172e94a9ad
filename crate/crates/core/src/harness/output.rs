//! CSV helpers with a fixed numeric format: 12 significant digits, '.' as the
//! decimal separator, LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tradeoff::TradeoffPoint;

pub const SIG_DIGITS: usize = 12;

/// Shortest `%.12g`-style rendering: fixed notation for exponents in
/// `[-5, 12)`, scientific otherwise, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = BufWriter::new(File::create(path)?);
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

/// Writes `alpha,dof,label`, one row per point.
pub fn emit_tradeoff_csv(points: &[TradeoffPoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("tradeoff points"));
    }
    let mut w = csv_writer(path)?;
    w.write_record(["alpha", "dof", "label"])?;
    for p in points {
        w.write_record([fmt_num(p.alpha), fmt_num(p.dof), p.label.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file written by [`emit_tradeoff_csv`].
pub fn read_tradeoff_csv(path: &Path) -> Result<Vec<TradeoffPoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidConfig {
                    field: "tradeoff.csv".into(),
                    reason: format!("bad number in column {i}"),
                })
        };
        out.push(TradeoffPoint::new(num(0)?, num(1)?, rec.get(2).unwrap_or_default()));
    }
    Ok(out)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tradeoff::corner_points;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.25), "-2.25");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(4.0 / 3.0), "1.33333333333");
        assert_eq!(fmt_num(1e280), "1e280");
        assert_eq!(fmt_num(1.5e-7), "1.5e-7");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(1e12), "1e12");
    }

    #[test]
    fn corner_points_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_tradeoff_csv(&corner_points(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "alpha,dof,label\n0,0.5,interference-alignment\n1,1,cooperation-alignment\n"
        );
        assert!(emit_tradeoff_csv(&[], &path).is_err());
    }

    #[test]
    fn parse_back_within_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let pts: Vec<TradeoffPoint> = (0..20)
            .map(|i| {
                let a = i as f64 * 0.1234567890123 + 1e-3;
                TradeoffPoint::new(a, (1.0 + a).sqrt() / 3.0, format!("p{i}"))
            })
            .collect();
        emit_tradeoff_csv(&pts, &path).unwrap();
        let back = read_tradeoff_csv(&path).unwrap();
        assert_eq!(back.len(), pts.len());
        // 12 significant digits: absolute 1e-12 below 1, half a unit in the 12th digit above.
        let tol = |x: f64| if x.abs() < 1.0 { 1e-12 } else { 5e-12 * x.abs() };
        for (a, b) in pts.iter().zip(&back) {
            assert!((a.alpha - b.alpha).abs() <= tol(a.alpha), "{} vs {}", a.alpha, b.alpha);
            assert!((a.dof - b.dof).abs() <= tol(a.dof));
            assert_eq!(a.label, b.label);
        }
    }
}
