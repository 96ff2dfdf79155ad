use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::FeatureSet;

/// Ridge added to both covariance diagonals before any square root.
pub const DEFAULT_FRECHET_EPS: f64 = 1e-6;

/// Sample mean and unbiased covariance of a feature set.
pub fn mean_and_covariance(set: &FeatureSet) -> (DVector<f64>, DMatrix<f64>) {
    let (n, d) = (set.len(), set.dim());
    let x = DMatrix::from_row_iterator(n, d, set.data().iter().map(|&v| v as f64));
    let mean = DVector::from_iterator(d, x.column_iter().map(|c| c.sum() / n as f64));
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (mean, cov)
}

/// Square root of a symmetric positive semidefinite matrix; negative
/// eigenvalues are treated as zero.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Squared Fréchet distance between Gaussian fits of two feature sets.
///
/// `‖μa − μb‖² + tr(Σa + Σb − 2·(Σa^½ Σb Σa^½)^½)` with `eps·I` added to each
/// covariance. Tiny negative results from rounding are clamped to zero.
pub fn frechet_distance(a: &FeatureSet, b: &FeatureSet, eps: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    for set in [a, b] {
        if set.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: set.len(),
            });
        }
    }
    let d = a.dim();
    let (mu_a, mut cov_a) = mean_and_covariance(a);
    let (mu_b, mut cov_b) = mean_and_covariance(b);
    for i in 0..d {
        cov_a[(i, i)] += eps;
        cov_b[(i, i)] += eps;
    }

    let root_a = sqrtm_psd(&cov_a);
    let inner = symmetrize(&(&root_a * &cov_b * &root_a));
    let tr_cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();

    let diff = mu_a - mu_b;
    let d2 = diff.dot(&diff) + cov_a.trace() + cov_b.trace() - 2.0 * tr_cross;
    Ok(d2.max(0.0))
}
