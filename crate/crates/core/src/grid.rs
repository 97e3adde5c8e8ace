use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic fast-time grid on `[-box_len/2, box_len/2)` with `n` samples.
///
/// Sample `n / 2` sits exactly at `xi = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    box_len: f64,
}

impl Grid {
    pub fn new(n: usize, box_len: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n_grid", "must be at least 1"));
        }
        if !(box_len.is_finite() && box_len > 0.0) {
            return Err(Error::invalid("box", format!("must be finite and > 0, got {box_len}")));
        }
        Ok(Self { n, box_len })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn dxi(&self) -> f64 {
        self.box_len / self.n as f64
    }

    pub fn xi(&self, i: usize) -> f64 {
        -0.5 * self.box_len + i as f64 * self.dxi()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.xi(i)).collect()
    }

    pub fn center_index(&self) -> usize {
        self.n / 2
    }

    /// Angular wavenumbers in FFT order. For even `n` the Nyquist bin carries `-pi/dxi`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * PI / self.box_len;
        (0..n)
            .map(|m| {
                let signed = if 2 * m < n { m } else { m - n };
                signed as f64 * dk
            })
            .collect()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && (self.box_len - other.box_len).abs() <= 1e-12 * self.box_len
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "n = {} / box = {} vs n = {} / box = {}",
                self.n, self.box_len, other.n, other.box_len
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_sample_is_origin() {
        let g = Grid::new(256, 40.0).unwrap();
        assert_eq!(g.xi(g.center_index()), 0.0);
        assert!((g.dxi() - 40.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn wavenumbers_follow_fft_order() {
        let g = Grid::new(6, 6.0).unwrap();
        let k = g.wavenumbers();
        let dk = 2.0 * PI / 6.0;
        let expected = [0.0, 1.0, 2.0, -3.0, -2.0, -1.0];
        for (a, b) in k.iter().zip(expected) {
            assert!((a - b * dk).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new(0, 1.0).is_err());
        assert!(Grid::new(4, 0.0).is_err());
        assert!(Grid::new(4, f64::NAN).is_err());
    }
}
