//! Square cell-centered sampling grids and the `QDIMGRID` binary format.
//!
//! Samples are stored row-major with the bottom row first: index `j * n + i`
//! holds the sample in column `i` (left to right) and row `j` (bottom to top).

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magic header of every grid file.
pub const GRID_MAGIC: &[u8; 16] = b"QDIMGRID\0\0\0\0v001";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    center: Complex64,
    half_width: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(center: Complex64, half_width: f64, n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two >= 16"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width {half_width} must be positive"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::InvalidGrid("center must be finite".into()));
        }
        Ok(Self {
            center,
            half_width,
            n,
        })
    }

    /// Grid centered at the origin, the usual choice for quasiline experiments.
    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), half_width, n)
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell side length.
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn x(&self, i: usize) -> f64 {
        self.center.re - self.half_width + (i as f64 + 0.5) * self.step()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.center.im - self.half_width + (j as f64 + 0.5) * self.step()
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    /// All sample points in storage order.
    pub fn points(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.n {
            for i in 0..self.n {
                out.push(self.point(i, j));
            }
        }
        out
    }

    /// True when z -> conj(z) permutes the samples. With an even cell-centered
    /// grid this also means no sample lies on the real axis.
    pub fn is_conjugation_symmetric(&self) -> bool {
        self.center.im == 0.0
    }

    pub fn require_conjugation_symmetric(&self) -> Result<()> {
        if self.is_conjugation_symmetric() {
            Ok(())
        } else {
            Err(Error::NotConjugationSymmetric(self.center))
        }
    }

    /// Row holding the conjugate of row `j` on a conjugation-symmetric grid.
    pub fn mirror_row(&self, j: usize) -> usize {
        self.n - 1 - j
    }

    /// Rows `n/2..n` lie in the upper half-plane on a symmetric grid.
    pub fn is_upper_row(&self, j: usize) -> bool {
        j >= self.n / 2
    }

    /// Fractional sample coordinates of `z`: sample `(i, j)` sits at `(i, j)`.
    pub fn fractional(&self, z: Complex64) -> (f64, f64) {
        let h = self.step();
        let u = (z.re - (self.center.re - self.half_width)) / h - 0.5;
        let v = (z.im - (self.center.im - self.half_width)) / h - 0.5;
        (u, v)
    }

    /// Whether `z` lies within the sample hull (between the outermost samples).
    pub fn contains(&self, z: Complex64) -> bool {
        let (u, v) = self.fractional(z);
        let top = (self.n - 1) as f64;
        (0.0..=top).contains(&u) && (0.0..=top).contains(&v)
    }

    pub fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Writes a grid of complex samples in the `QDIMGRID` layout.
pub fn write_grid<W: Write>(mut w: W, grid: &GridSpec, values: &[Complex64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples for an {}x{} grid",
            values.len(),
            grid.n(),
            grid.n()
        )));
    }
    let n = u32::try_from(grid.n()).map_err(|_| Error::InvalidGrid("n exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(16 + 4 + 24 + 16 * values.len());
    buf.extend_from_slice(GRID_MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&grid.center().re.to_le_bytes());
    buf.extend_from_slice(&grid.center().im.to_le_bytes());
    buf.extend_from_slice(&grid.half_width().to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a `QDIMGRID` stream. Returns the grid and its samples; trailing bytes
/// are left unread in `r`.
pub fn read_grid<R: Read>(mut r: R) -> Result<(GridSpec, Vec<Complex64>)> {
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("missing header: {e}")))?;
    if &magic != GRID_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    let center_re = read_f64(&mut r)?;
    let center_im = read_f64(&mut r)?;
    let half_width = read_f64(&mut r)?;
    let grid = GridSpec::new(Complex64::new(center_re, center_im), half_width, n)?;

    let mut raw = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut raw)
        .map_err(|e| Error::Format(format!("truncated samples: {e}")))?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok((grid, values))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(GridSpec::centered(1.0, 8).is_err());
        assert!(GridSpec::centered(1.0, 48).is_err());
        assert!(GridSpec::centered(0.0, 16).is_err());
        assert!(GridSpec::centered(1.0, 16).is_ok());
    }

    #[test]
    fn cell_centers_avoid_the_real_axis() {
        let g = GridSpec::centered(2.0, 16).unwrap();
        for j in 0..16 {
            assert!(g.y(j) != 0.0);
            assert_eq!(g.y(g.mirror_row(j)), -g.y(j));
        }
        assert!(g.y(7) < 0.0 && g.y(8) > 0.0);
        assert!(g.is_upper_row(8) && !g.is_upper_row(7));
    }

    #[test]
    fn fractional_coordinates_hit_samples() {
        let g = GridSpec::new(Complex64::new(0.5, 0.0), 3.0, 32).unwrap();
        let (u, v) = g.fractional(g.point(5, 17));
        assert!((u - 5.0).abs() < 1e-12 && (v - 17.0).abs() < 1e-12);
    }

    #[test]
    fn file_layout_is_bit_exact() {
        let g = GridSpec::new(Complex64::new(0.25, 0.0), 2.0, 16).unwrap();
        let values: Vec<_> = (0..g.len())
            .map(|k| Complex64::new(k as f64, -(k as f64)))
            .collect();
        let mut buf = Vec::new();
        write_grid(&mut buf, &g, &values).unwrap();
        assert_eq!(buf.len(), 16 + 4 + 24 + 16 * 256);
        assert_eq!(&buf[..16], GRID_MAGIC);
        assert_eq!(&buf[16..20], &16u32.to_le_bytes());
        assert_eq!(&buf[20..28], &0.25f64.to_le_bytes());
        assert_eq!(&buf[36..44], &2.0f64.to_le_bytes());
        // second sample of the bottom row
        assert_eq!(&buf[44 + 16..44 + 24], &1.0f64.to_le_bytes());
        let (g2, v2) = read_grid(&buf[..]).unwrap();
        assert_eq!(g, g2);
        assert_eq!(values, v2);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut buf = [0u8; 64];
        buf[..8].copy_from_slice(b"NOTAGRID");
        assert!(matches!(read_grid(&buf[..]), Err(Error::Format(_))));
    }
}
