//! Plain-text and binary dumps of matrices, sweeps and field samples.
//!
//! Binary matrices are two little-endian `u64` (rows, cols) followed by the
//! entries in row-major order, each as a little-endian pair of `f64`
//! (real part, imaginary part). CSV writers accept leading comment lines,
//! written as `# <line>`, for provenance such as a configuration hash.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, C64};
use crate::potentials::FieldSample;
use crate::spectral::SweepRecord;

/// Header line of the sweep CSV.
pub const SWEEP_HEADER: &str =
    "kappa,sigma_min_v,sigma_min_w,sigma_min_coupled,angle_v,angle_coupled";

/// Header line of the field CSV.
pub const FIELD_HEADER: &str = "x,y,re,im,side";

/// Refuse to allocate more than this many entries when reading a binary dump.
const MAX_BINARY_ENTRIES: u64 = 1 << 28;

fn comments(w: &mut impl Write, lines: &[String]) -> Result<()> {
    for l in lines {
        for part in l.lines() {
            writeln!(w, "# {part}")?;
        }
    }
    Ok(())
}

pub fn write_matrix_binary(w: &mut impl Write, m: &DenseMatrix<C64>) -> Result<()> {
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.data().len());
    for z in m.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix_binary(r: &mut impl Read) -> Result<DenseMatrix<C64>> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let rows = u64::from_le_bytes(next(r)?);
    let cols = u64::from_le_bytes(next(r)?);
    let count = rows
        .checked_mul(cols)
        .filter(|&c| c <= MAX_BINARY_ENTRIES)
        .ok_or_else(|| Error::Parse(format!("implausible matrix size {rows} x {cols}")))?;
    let mut bytes = vec![0u8; 16 * count as usize];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    DenseMatrix::from_row_major(rows as usize, cols as usize, data)
}

/// One line per entry: `row,col,re,im`.
pub fn write_matrix_csv(w: &mut impl Write, m: &DenseMatrix<C64>, header: &[String]) -> Result<()> {
    comments(w, header)?;
    writeln!(w, "row,col,re,im")?;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m[(i, j)];
            writeln!(w, "{i},{j},{:e},{:e}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Reads what [`write_matrix_csv`] writes. Missing entries are zero.
pub fn read_matrix_csv(r: impl BufRead) -> Result<DenseMatrix<C64>> {
    let mut entries = Vec::new();
    let (mut rows, mut cols) = (0, 0);
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("row") {
            continue;
        }
        let bad = || Error::Parse(format!("line {}: expected row,col,re,im", lineno + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let i: usize = f[0].parse().map_err(|_| bad())?;
        let j: usize = f[1].parse().map_err(|_| bad())?;
        let re: f64 = f[2].parse().map_err(|_| bad())?;
        let im: f64 = f[3].parse().map_err(|_| bad())?;
        rows = rows.max(i + 1);
        cols = cols.max(j + 1);
        entries.push((i, j, C64::new(re, im)));
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    for (i, j, z) in entries {
        m[(i, j)] = z;
    }
    Ok(m)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Missing values are left empty.
pub fn write_sweep_csv(
    w: &mut impl Write,
    records: &[SweepRecord],
    header: &[String],
) -> Result<()> {
    comments(w, header)?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.kappa,
            opt(r.sigma_min_v),
            opt(r.sigma_min_w),
            opt(r.sigma_min_coupled),
            opt(r.kernel_angle_v),
            opt(r.kernel_angle_coupled)
        )?;
    }
    Ok(())
}

pub fn write_field_csv(w: &mut impl Write, sample: &FieldSample, header: &[String]) -> Result<()> {
    comments(w, header)?;
    writeln!(w, "{FIELD_HEADER}")?;
    for ((p, z), side) in sample.points.iter().zip(&sample.values).zip(&sample.sides) {
        writeln!(w, "{},{},{:e},{:e},{side}", p[0], p[1], z.re, z.im)?;
    }
    Ok(())
}

/// Values indexed by position, written as `index,re,im`. Used for trace
/// vectors and FEM coefficient vectors.
pub fn write_vector_csv(w: &mut impl Write, v: &[C64], header: &[String]) -> Result<()> {
    comments(w, header)?;
    writeln!(w, "index,re,im")?;
    for (i, z) in v.iter().enumerate() {
        writeln!(w, "{i},{:e},{:e}", z.re, z.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PointSide;

    fn sample_matrix() -> DenseMatrix<C64> {
        DenseMatrix::from_fn(3, 2, |i, j| C64::new(i as f64 + 0.25, -(j as f64) / 3.0))
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let m = sample_matrix();
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 16 * 6);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        let back = read_matrix_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_binary_is_an_error() {
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &sample_matrix()).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(read_matrix_binary(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn csv_round_trip_with_header() {
        let m = sample_matrix();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m, &["config_sha256=abc".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config_sha256=abc\nrow,col,re,im\n"));
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn sweep_csv_leaves_missing_columns_empty() {
        let r = SweepRecord {
            kappa: 2.5,
            sigma_min_v: Some(0.5),
            sigma_min_w: None,
            sigma_min_coupled: None,
            kernel_angle_v: None,
            kernel_angle_coupled: None,
            cond_v: None,
            cond_w: None,
        };
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[r], &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines[1], "2.5,5e-1,,,,");
    }

    #[test]
    fn field_csv_tags_sides() {
        let s = FieldSample {
            points: vec![[3.0, 0.0]],
            sides: vec![PointSide::Exterior],
            values: vec![C64::new(1.0, -2.0)],
        };
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &s, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,y,re,im,side\n3,0,1e0,-2e0,exterior\n"
        );
    }
}
