//! Dump/load of complex matrices.
//!
//! Binary layout: two little-endian `u64` (rows, cols) followed by
//! `rows * cols` entries in row-major order, each a pair of little-endian
//! `f64` (real, imaginary).
//!
//! Text layout: a header line `"rows cols"` followed by one `"real imag"`
//! line per entry, row-major.

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn write_binary<W: Write>(m: &DMatrix<Complex64>, mut w: W) -> Result<()> {
    let (rows, cols) = m.shape();
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<DMatrix<Complex64>> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)
            .map_err(|e| Error::MatrixFormat(format!("truncated input: {e}")))?;
        Ok(word)
    };
    let rows = u64::from_le_bytes(next(&mut r)?) as usize;
    let cols = u64::from_le_bytes(next(&mut r)?) as usize;
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::MatrixFormat("trailing bytes after matrix payload".into()));
    }
    Ok(m)
}

pub fn write_text<W: Write>(m: &DMatrix<Complex64>, mut w: W) -> Result<()> {
    let (rows, cols) = m.shape();
    writeln!(w, "{rows} {cols}")?;
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            // `{:?}` prints the shortest representation that round-trips.
            writeln!(w, "{:?} {:?}", z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<DMatrix<Complex64>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixFormat("missing header".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::MatrixFormat(format!("bad header `{header}`")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::MatrixFormat(format!("bad header `{header}`")));
    };
    let mut values = Vec::with_capacity(rows * cols);
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace().map(str::parse::<f64>);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(Ok(re)), Some(Ok(im)), None) => values.push(Complex64::new(re, im)),
            _ => return Err(Error::MatrixFormat(format!("line {}: expected `real imag`", n + 2))),
        }
    }
    if values.len() != rows * cols {
        return Err(Error::MatrixFormat(format!(
            "expected {} entries, found {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}
