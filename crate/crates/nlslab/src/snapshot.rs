//! Persistence: the NLSF binary field snapshot and round-trip-exact CSVs.
//!
//! NLSF layout (all little-endian): magic bytes "NLSF", u32 dim, u64 N,
//! f64 L, then N interleaved (re, im) f64 pairs. CSV floats are printed with
//! 17 significant digits so that parsing them reproduces the exact bits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{NlsError, Result};
use crate::field::ComplexField;
use crate::grid::make_grid;
use crate::modulation::ModulationState;
use crate::propagator::TrajectorySample;

const MAGIC: &[u8; 4] = b"NLSF";

pub fn write_snapshot(path: &Path, field: &ComplexField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&field.grid.dim.to_le_bytes())?;
    w.write_all(&(field.grid.n as u64).to_le_bytes())?;
    w.write_all(&field.grid.l.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<ComplexField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NlsError::Snapshot(format!(
            "{}: bad magic {magic:?} (expected \"NLSF\")",
            path.display()
        )));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4);
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let l = f64::from_le_bytes(b8);
    let grid = make_grid(dim, l, n)
        .map_err(|e| NlsError::Snapshot(format!("{}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        values.push(C64::new(re, im));
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(NlsError::Snapshot(format!(
            "{}: trailing bytes after {n} samples",
            path.display()
        )));
    }
    Ok(ComplexField::from_values(&grid, values))
}

/// Format a float with 17 significant digits (bit round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a CSV with the given header and rows of floats.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(NlsError::Validation(format!(
                "CSV row width {} does not match header width {}",
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Modulation time series CSV: t, alpha_plus, alpha_minus, gamma0..gammad,
/// g_h1, h_h1, theta, xshift.
pub fn write_modulation_csv(path: &Path, series: &[ModulationState]) -> Result<()> {
    let d = series.first().map(|m| m.gamma.len()).unwrap_or(1);
    let mut header: Vec<String> = vec!["t".into(), "alpha_plus".into(), "alpha_minus".into()];
    for j in 0..d {
        header.push(format!("gamma{j}"));
    }
    header.extend(["g_h1".into(), "h_h1".into(), "theta".into(), "xshift".into()]);
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<f64>> = series
        .iter()
        .map(|m| {
            let mut row = vec![m.t, m.alpha_plus, m.alpha_minus];
            row.extend_from_slice(&m.gamma);
            row.extend([m.g_h1, m.h_h1, m.theta, m.xshift]);
            row
        })
        .collect();
    write_csv(path, &header_refs, &rows)
}

/// Trajectory CSV: t, mass, energy, scattering_density, accumulated_scattering.
pub fn write_trajectory_csv(path: &Path, samples: &[TrajectorySample]) -> Result<()> {
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| vec![s.t, s.mass, s.energy, s.scattering_density, s.accumulated_scattering])
        .collect();
    write_csv(
        path,
        &["t", "mass", "energy", "scattering_density", "accumulated_scattering"],
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let g = make_grid(1, 20.0, 512).unwrap();
        let f = ComplexField::from_fn(&g, |x| C64::new((-x * x).exp(), x.sin()));
        let dir = tempdir().unwrap();
        let path = dir.path().join("field.nlsf");
        write_snapshot(&path, &f).unwrap();
        let g2 = read_snapshot(&path).unwrap();
        assert!(g2.grid.same_as(&f.grid));
        for (a, b) in f.values.iter().zip(&g2.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn rejects_bad_magic_and_trailing_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.nlsf");
        std::fs::write(&path, b"XXXX").unwrap();
        assert!(matches!(read_snapshot(&path), Err(NlsError::Snapshot(_))));

        let g = make_grid(1, 20.0, 256).unwrap();
        let f = ComplexField::zeros(&g);
        let path2 = dir.path().join("trail.nlsf");
        write_snapshot(&path2, &f).unwrap();
        let mut bytes = std::fs::read(&path2).unwrap();
        bytes.push(0);
        std::fs::write(&path2, bytes).unwrap();
        assert!(matches!(read_snapshot(&path2), Err(NlsError::Snapshot(_))));
    }

    #[test]
    fn csv_floats_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let vals = [1.0 / 3.0, 2.90508837787251, f64::MIN_POSITIVE, -0.0, 1e300];
        write_csv(&path, &["v"], &vals.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for (line, v) in text.lines().skip(1).zip(vals) {
            let parsed: f64 = line.parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{line}");
        }
    }
}
