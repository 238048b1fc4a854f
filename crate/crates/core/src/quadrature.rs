//! Midpoint-rule sampling of the plate and a reduction tree whose shape
//! depends only on the number of nodes.
//!
//! Node evaluation may run on any number of threads; partial sums are
//! always combined in the same binary tree, so results are bitwise
//! reproducible regardless of scheduling.

use std::ops::Range;

use num_complex::Complex64;

use crate::em::{Medium, RisAperture};
use crate::error::{Error, Result};

/// Default sampling density per axis.
pub const DEFAULT_SAMPLES_PER_WAVELENGTH: f64 = 8.0;

/// Ranges at most this long are summed sequentially.
const LEAF: usize = 64;
/// Ranges at most this long are not split across threads.
const PAR_THRESHOLD: usize = 2048;

/// Uniform midpoint grid over a [`RisAperture`].
///
/// Node `i` has coordinates `(xs[i % nx], ys[i / nx])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    samples_per_wavelength: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    cell_area: f64,
}

impl SurfaceGrid {
    pub fn new(aperture: &RisAperture, medium: &Medium, samples_per_wavelength: f64) -> Result<Self> {
        if !(samples_per_wavelength.is_finite() && samples_per_wavelength > 0.0) {
            return Err(Error::invalid(
                "numerics.samples_per_wavelength",
                format!("must be positive, got {samples_per_wavelength}"),
            ));
        }
        let count = |len: f64| -> usize {
            let n = (len / medium.wavelength() * samples_per_wavelength).ceil();
            (n as usize).max(2)
        };
        let nx = count(aperture.length_x());
        let ny = count(aperture.length_y());
        Ok(Self::with_counts(aperture, nx, ny, samples_per_wavelength))
    }

    /// Grid with an explicit number of nodes per axis.
    pub fn with_counts(aperture: &RisAperture, nx: usize, ny: usize, samples_per_wavelength: f64) -> Self {
        let axis = |len: f64, n: usize| -> Vec<f64> {
            let h = len / n as f64;
            (0..n).map(|i| -0.5 * len + (i as f64 + 0.5) * h).collect()
        };
        let xs = axis(aperture.length_x(), nx);
        let ys = axis(aperture.length_y(), ny);
        let cell_area = (aperture.length_x() / nx as f64) * (aperture.length_y() / ny as f64);
        Self {
            samples_per_wavelength,
            xs,
            ys,
            cell_area,
        }
    }

    pub fn default_for(aperture: &RisAperture, medium: &Medium) -> Result<Self> {
        Self::new(aperture, medium, DEFAULT_SAMPLES_PER_WAVELENGTH)
    }

    pub fn samples_per_wavelength(&self) -> f64 {
        self.samples_per_wavelength
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    /// Coordinates of node `i`.
    #[inline]
    pub fn node(&self, i: usize) -> (f64, f64) {
        let nx = self.xs.len();
        (self.xs[i % nx], self.ys[i / nx])
    }

    /// `sum_i f(x_i, y_i) * dA`.
    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        if self.is_empty() {
            return Err(Error::Empty("surface grid"));
        }
        let sum = tree_reduce(
            0..self.len(),
            &|r: Range<usize>| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in r {
                    let (x, y) = self.node(i);
                    acc += f(x, y);
                }
                acc
            },
            &|a, b| a + b,
        );
        Ok(sum * self.cell_area)
    }

    /// Real-valued variant of [`SurfaceGrid::integrate`].
    pub fn integrate_real<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        if self.is_empty() {
            return Err(Error::Empty("surface grid"));
        }
        let sum = tree_reduce(
            0..self.len(),
            &|r: Range<usize>| {
                let mut acc = 0.0;
                for i in r {
                    let (x, y) = self.node(i);
                    acc += f(x, y);
                }
                acc
            },
            &|a, b| a + b,
        );
        Ok(sum * self.cell_area)
    }

    /// Integrates an `len`-vector valued integrand. `f(i, x, y, acc)` adds
    /// the contribution of node `i` into the accumulator it is handed.
    pub fn integrate_vec<F>(&self, len: usize, f: F) -> Result<Vec<Complex64>>
    where
        F: Fn(usize, f64, f64, &mut [Complex64]) + Sync,
    {
        if self.is_empty() {
            return Err(Error::Empty("surface grid"));
        }
        let mut sum = tree_reduce(
            0..self.len(),
            &|r: Range<usize>| {
                let mut acc = vec![Complex64::new(0.0, 0.0); len];
                for i in r {
                    let (x, y) = self.node(i);
                    f(i, x, y, &mut acc);
                }
                acc
            },
            &|mut a, b| {
                for (u, v) in a.iter_mut().zip(&b) {
                    *u += v;
                }
                a
            },
        );
        for v in &mut sum {
            *v *= self.cell_area;
        }
        Ok(sum)
    }
}

/// Reduces `range` with a fixed binary tree.
///
/// Ranges longer than the leaf size are split at their midpoint; the two
/// halves may be evaluated concurrently but are always combined as
/// `combine(left, right)`.
pub fn tree_reduce<T, L, C>(range: Range<usize>, leaf: &L, combine: &C) -> T
where
    T: Send,
    L: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    let len = range.end - range.start;
    if len <= LEAF {
        return leaf(range);
    }
    let mid = range.start + len / 2;
    let (left, right) = if len > PAR_THRESHOLD {
        rayon::join(
            || tree_reduce(range.start..mid, leaf, combine),
            || tree_reduce(mid..range.end, leaf, combine),
        )
    } else {
        (
            tree_reduce(range.start..mid, leaf, combine),
            tree_reduce(mid..range.end, leaf, combine),
        )
    };
    combine(left, right)
}

/// Fixed-tree sum of a slice.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    if values.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    tree_reduce(
        0..values.len(),
        &|r: Range<usize>| values[r].iter().sum::<Complex64>(),
        &|a, b| a + b,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn node_counts_and_placement() {
        let m = Medium::new(0.1, 377.0).unwrap();
        let ap = RisAperture::new(2.0, 1.0).unwrap();
        let g = SurfaceGrid::new(&ap, &m, 8.0).unwrap();
        assert_eq!(g.ny(), 160);
        assert_eq!(g.nx(), 80);
        assert!(g.xs().iter().all(|x| x.abs() < 0.5));
        assert!(g.ys().iter().all(|y| y.abs() < 1.0));
        assert_relative_eq!(g.cell_area() * g.len() as f64, ap.area(), max_relative = 1e-14);

        let tiny = RisAperture::square(1e-3).unwrap();
        let g = SurfaceGrid::new(&tiny, &m, 8.0).unwrap();
        assert_eq!((g.nx(), g.ny()), (2, 2));
        assert!(SurfaceGrid::new(&ap, &m, 0.0).is_err());
    }

    #[test]
    fn midpoint_rule_exact_for_bilinear() {
        let m = Medium::new(0.1, 377.0).unwrap();
        let ap = RisAperture::new(2.0, 3.0).unwrap();
        let g = SurfaceGrid::new(&ap, &m, 2.0).unwrap();
        let v = g.integrate_real(|x, y| 1.0 + x + 2.0 * y + x * y).unwrap();
        assert_relative_eq!(v, 6.0, max_relative = 1e-13);
    }

    #[test]
    fn tree_sum_independent_of_thread_count() {
        let values: Vec<Complex64> = (0..100_003)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() * 1e-3))
            .collect();
        let reference = pairwise_sum(&values);
        for threads in [1, 2, 3, 7] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let s = pool.install(|| pairwise_sum(&values));
            assert_eq!(s.re.to_bits(), reference.re.to_bits());
            assert_eq!(s.im.to_bits(), reference.im.to_bits());
        }
    }
}
