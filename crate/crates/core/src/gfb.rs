//! The `GFB1` binary field format.
//!
//! An ASCII header line `GFB1 n N L p,q count\n` followed by little-endian
//! `f64` values, point by point (row-major point order) with the `count`
//! components of each point stored contiguously. `p,q` is the valence
//! (covariant, contravariant); metrics are written as `2,0` with the packed
//! `n(n+1)/2` lower-triangle components.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{MetricField, TensorField};
use crate::grid::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GfbHeader {
    pub grid: GridSpec,
    pub covariant: usize,
    pub contravariant: usize,
    pub count: usize,
}

/// Writes component-major `data` in the point-major file layout.
pub fn write<W: Write>(mut w: W, header: &GfbHeader, data: &[f64]) -> Result<()> {
    let g = &header.grid;
    let np = g.num_points();
    if data.len() != np * header.count {
        return Err(Error::Format(format!(
            "{} values for {} points x {} components",
            data.len(),
            np,
            header.count
        )));
    }
    writeln!(
        w,
        "GFB1 {} {} {} {},{} {}",
        g.dim, g.points_per_axis, g.period, header.covariant, header.contravariant, header.count
    )?;
    let mut buf = Vec::with_capacity(8 * header.count);
    for p in 0..np {
        buf.clear();
        for c in 0..header.count {
            buf.extend_from_slice(&data[c * np + p].to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file into its header and component-major data.
pub fn read<R: Read>(r: R) -> Result<(GfbHeader, Vec<f64>)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header = parse_header(line.trim_end_matches('\n'))?;
    let np = header.grid.num_points();
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != 8 * np * header.count {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            raw.len(),
            8 * np * header.count
        )));
    }
    let mut data = vec![0.0; np * header.count];
    for (k, chunk) in raw.chunks_exact(8).enumerate() {
        let (p, c) = (k / header.count, k % header.count);
        data[c * np + p] = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    }
    Ok((header, data))
}

fn parse_header(line: &str) -> Result<GfbHeader> {
    let bad = || Error::Format(format!("malformed GFB1 header: {line:?}"));
    let tok: Vec<&str> = line.split(' ').collect();
    if tok.len() != 6 || tok[0] != "GFB1" {
        return Err(bad());
    }
    let dim: usize = tok[1].parse().map_err(|_| bad())?;
    let n: usize = tok[2].parse().map_err(|_| bad())?;
    let period: f64 = tok[3].parse().map_err(|_| bad())?;
    let (p, q) = tok[4].split_once(',').ok_or_else(bad)?;
    let covariant: usize = p.parse().map_err(|_| bad())?;
    let contravariant: usize = q.parse().map_err(|_| bad())?;
    let count: usize = tok[5].parse().map_err(|_| bad())?;
    let grid = GridSpec::new(dim, n, period).map_err(|e| Error::Format(e.to_string()))?;
    Ok(GfbHeader {
        grid,
        covariant,
        contravariant,
        count,
    })
}

impl MetricField {
    pub fn write_gfb(&self, path: &Path) -> Result<()> {
        let header = GfbHeader {
            grid: *self.grid(),
            covariant: 2,
            contravariant: 0,
            count: self.grid().sym_components(),
        };
        write(BufWriter::new(File::create(path)?), &header, self.data())
    }

    pub fn read_gfb(path: &Path) -> Result<Self> {
        let (h, data) = read(File::open(path)?)?;
        if (h.covariant, h.contravariant) != (2, 0) || h.count != h.grid.sym_components() {
            return Err(Error::Format(
                "file does not hold a packed symmetric metric".into(),
            ));
        }
        MetricField::new(h.grid, data)
    }
}

impl TensorField {
    pub fn write_gfb(&self, path: &Path) -> Result<()> {
        let (covariant, contravariant) = self.valence();
        let header = GfbHeader {
            grid: *self.grid(),
            covariant,
            contravariant,
            count: self.ncomp(),
        };
        write(BufWriter::new(File::create(path)?), &header, self.data())
    }

    pub fn read_gfb(path: &Path) -> Result<Self> {
        let (h, data) = read(File::open(path)?)?;
        if h.count != h.grid.dim.pow((h.covariant + h.contravariant) as u32) {
            return Err(Error::Format("component count does not match valence".into()));
        }
        TensorField::new(h.grid, h.covariant, h.contravariant, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_round_trip_is_bit_exact() {
        let grid = GridSpec::new(2, 8, std::f64::consts::TAU).unwrap();
        let g = MetricField::from_fn(grid, |x| {
            [[1.0 + 0.1 * x[0].sin(), 0.01 * x[1], 0.0], [0.01 * x[1], 1.3, 0.0], [0.0; 3]]
        })
        .unwrap();
        let mut bytes = Vec::new();
        let header = GfbHeader {
            grid,
            covariant: 2,
            contravariant: 0,
            count: 3,
        };
        write(&mut bytes, &header, g.data()).unwrap();
        assert!(bytes.starts_with(b"GFB1 2 8 6.283185307179586 2,0 3\n"));
        let (h2, data) = read(&bytes[..]).unwrap();
        assert_eq!(h2, header);
        assert_eq!(data, g.data());
    }

    #[test]
    fn point_major_payload() {
        let grid = GridSpec::new(2, 8, 1.0).unwrap();
        let np = grid.num_points();
        let data: Vec<f64> = (0..2 * np).map(|k| k as f64).collect();
        let header = GfbHeader {
            grid,
            covariant: 0,
            contravariant: 1,
            count: 2,
        };
        let mut bytes = Vec::new();
        write(&mut bytes, &header, &data).unwrap();
        let start = bytes.iter().position(|b| *b == b'\n').unwrap() + 1;
        let second = f64::from_le_bytes(bytes[start + 8..start + 16].try_into().unwrap());
        assert_eq!(second, np as f64);
    }

    #[test]
    fn rejects_truncated_payload() {
        let bytes = b"GFB1 2 8 1 2,0 3\n\x00\x00";
        assert!(matches!(read(&bytes[..]), Err(Error::Format(_))));
    }
}
