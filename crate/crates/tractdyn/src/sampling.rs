//! Deterministic low-discrepancy sequences.

use crate::Complex;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base` (van der Corput sequence).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

/// Halton point `index` in `[0,1)^dim`, `dim <= 8`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton dimension above {}", PRIMES.len());
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

/// Iterator over Halton points starting after `skip` entries.
///
/// Index 0 maps to the origin for every base, so the sequence starts at 1.
pub struct Halton {
    next: u64,
    dim: usize,
}

impl Halton {
    pub fn new(dim: usize, skip: u64) -> Self {
        Halton { next: skip + 1, dim }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let p = halton(self.next, self.dim);
        self.next += 1;
        Some(p)
    }
}

/// `n` points filling the closed disk of radius `radius` (area-uniform).
pub fn disk_points(n: usize, radius: f64, skip: u64) -> Vec<Complex> {
    Halton::new(2, skip)
        .take(n)
        .map(|u| {
            let rho = radius * u[0].sqrt();
            Complex::from_polar(rho, 2.0 * std::f64::consts::PI * u[1])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_two_prefix() {
        let v: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn base_three_prefix() {
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((radical_inverse(4, 3) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn disk_points_stay_inside() {
        for z in disk_points(500, 2.0, 0) {
            assert!(z.norm() <= 2.0);
        }
    }
}
