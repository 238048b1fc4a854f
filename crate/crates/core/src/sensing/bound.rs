//! Signal gradients, the Fisher information matrix and the position error
//! bound of a scan.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::scan::ScanSetup;
use crate::em::UlaReceiver;
use crate::error::{Error, Result};
use crate::propagation::{channel_gradient, RowKernel};

/// Cartesian coordinate of the receiver position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Self::X => 0,
            Self::Y => 1,
            Self::Z => 2,
        }
    }

    /// The two in-plane coordinates of a `yz`-plane scan.
    pub const IN_PLANE: [Axis; 2] = [Axis::Y, Axis::Z];
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// `ds[m, t] / dXi` for each Cartesian axis, slot-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalJacobian {
    num_antennas: usize,
    num_slots: usize,
    grads: [Vec<Complex64>; 3],
}

impl SignalJacobian {
    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    /// Gradient component along `axis`, slot-major.
    pub fn along(&self, axis: Axis) -> &[Complex64] {
        &self.grads[axis.index()]
    }
}

/// Gradients of the noise-free scan signals with respect to the position
/// of `truth`, by quadrature of the differentiated kernel.
///
/// The derivative covers the `1/d` amplitude, the obliquity term `z/d` and
/// the phase `exp(-j k d)`.
pub fn signal_jacobian(truth: &UlaReceiver, setup: &ScanSetup) -> Result<SignalJacobian> {
    let rx = setup.receiver_at(&truth.center());
    if rx != *truth {
        return Err(Error::invalid(
            "receiver",
            "the true array must share size, attitude and gain with the scan template",
        ));
    }
    let (surface, wave, medium) = (setup.surface(), setup.wave(), setup.medium());
    let m = setup.num_antennas();
    let per_slot: Vec<[Vec<Complex64>; 3]> = if setup.designs().iter().all(|d| d.is_x_invariant()) {
        let kernels = RowKernel::gradients(surface, truth, wave, medium)?;
        setup
            .designs()
            .par_iter()
            .map(|d| {
                let rows = d.sample_rows(surface.ys())?;
                let part = |k: &RowKernel| k.apply(&rows).map(|h| h.entries().to_vec());
                Ok([part(&kernels[0])?, part(&kernels[1])?, part(&kernels[2])?])
            })
            .collect::<Result<_>>()?
    } else {
        setup
            .designs()
            .iter()
            .map(|d| {
                let [gx, gy, gz] = channel_gradient(d, surface, truth, wave, medium)?;
                Ok([gx.entries().to_vec(), gy.entries().to_vec(), gz.entries().to_vec()])
            })
            .collect::<Result<_>>()?
    };
    let gather = |a: usize| per_slot.iter().flat_map(|g| g[a].iter().copied()).collect();
    Ok(SignalJacobian {
        num_antennas: m,
        num_slots: setup.num_slots(),
        grads: [gather(0), gather(1), gather(2)],
    })
}

/// Fisher information of the receiver position, in `1/m^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherMatrix {
    axes: Vec<Axis>,
    #[serde(serialize_with = "serialize_matrix")]
    matrix: DMatrix<f64>,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

impl FisherMatrix {
    /// `J_ij = (2 / sigma^2) Re sum ds/dXi_i conj(ds/dXi_j)`.
    pub fn new(jac: &SignalJacobian, sigma: f64, axes: &[Axis]) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("noise.sigma", format!("must be positive, got {sigma}")));
        }
        if axes.is_empty() {
            return Err(Error::Empty("Fisher axes"));
        }
        let n = axes.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            jac.along(axes[i])
                .iter()
                .zip(jac.along(axes[j]))
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>()
        });
        // Symmetrize so that rounding cannot break the invariant.
        let gram = (&gram + gram.transpose()) * 0.5;
        Ok(Self {
            axes: axes.to_vec(),
            matrix: gram * (2.0 / (sigma * sigma)),
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `J^{-1}`, or a rank-deficiency error naming the weakest direction.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let (imin, &lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty matrix");
        let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-12 * lmax).count();
        if !(lmax > 0.0) || lmin <= 1e-12 * lmax {
            return Err(Error::RankDeficient {
                rank,
                dim: self.axes.len(),
                null_direction: eig.eigenvectors.column(imin).iter().copied().collect(),
            });
        }
        self.matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::domain("Fisher matrix inversion failed"))
    }
}

/// Fisher matrix and `PEB = sqrt(trace(J^{-1}))` in meters.
pub fn peb(jac: &SignalJacobian, sigma: f64, axes: &[Axis]) -> Result<(FisherMatrix, f64)> {
    let fim = FisherMatrix::new(jac, sigma, axes)?;
    let inv = fim.inverse()?;
    Ok((fim, inv.trace().sqrt()))
}
