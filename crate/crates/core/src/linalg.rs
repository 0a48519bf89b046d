//! Dense complex linear-algebra helpers shared across the crate: unitarity
//! residuals, eigendecomposition of unitary matrices, kernel extraction, and
//! circular phase matching for eigenphase tracking.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use std::f64::consts::{PI, TAU};

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Max-norm of M M† - 1.
pub fn unitarity_residual(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint();
    let id = DMatrix::<Complex64>::identity(n, n);
    max_abs(&(prod - id))
}

/// Determinant via pivoted LU.
pub fn determinant(m: &DMatrix<Complex64>) -> Complex64 {
    m.clone().lu().determinant()
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_to_pi(x: f64) -> f64 {
    let mut y = x % TAU;
    if y > PI {
        y -= TAU;
    } else if y <= -PI {
        y += TAU;
    }
    y
}

/// Phase of a complex number in [0, 2*pi).
pub fn phase_in_tau(c: Complex64) -> f64 {
    let a = c.arg();
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Eigendecomposition of a (numerically) unitary matrix.
///
/// Eigenvalues come out sorted by phase in [0, 2*pi); eigenvector `i` is
/// column `i` of `vectors`.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
    /// max_i ||U v_i - lambda_i v_i||_2, a self-check on the decomposition.
    pub max_residual: f64,
}

/// Eigendecomposition of a unitary matrix through its Hermitian parts.
///
/// H = (U + U†)/2 and K = (U - U†)/2i commute when U is unitary, so a
/// Hermitian eigensolve of H followed by diagonalization of K projected onto
/// each (near-)degenerate H-eigenspace yields a common eigenbasis. The pair
/// (h, kappa) reassembles the unit-modulus eigenvalue h + i*kappa. Eigenvalues
/// are read back as Rayleigh quotients v† U v for accuracy.
///
/// Every conjugate pair e^{±i theta} shares the H-eigenvalue cos(theta), so
/// the projection step is the common path, not a rare fallback.
pub fn unitary_eigen(u: &DMatrix<Complex64>) -> UnitaryEigen {
    let n = u.nrows();
    assert_eq!(n, u.ncols(), "unitary_eigen expects a square matrix");
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5); // 1/(2i)
    let adj = u.adjoint();
    let h = (u + &adj) * half;
    let k = (u - &adj) * half_i;

    let se = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());

    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut filled = 0usize;
    // Cluster H-eigenvalues, then split each cluster with K.
    const CLUSTER_TOL: f64 = 1e-7;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && se.eigenvalues[order[end]] - se.eigenvalues[order[end - 1]] < CLUSTER_TOL
        {
            end += 1;
        }
        let size = end - start;
        let mut q = DMatrix::<Complex64>::zeros(n, size);
        for (c, &idx) in order[start..end].iter().enumerate() {
            q.set_column(c, &se.eigenvectors.column(idx));
        }
        if size == 1 {
            vectors.set_column(filled, &q.column(0));
            filled += 1;
        } else {
            let k_sub = q.adjoint() * &k * &q;
            let sub = nalgebra::SymmetricEigen::new(k_sub);
            let rotated = &q * &sub.eigenvectors;
            for c in 0..size {
                vectors.set_column(filled, &rotated.column(c));
                filled += 1;
            }
        }
        start = end;
    }

    // Rayleigh quotients and residuals.
    let mut pairs: Vec<(Complex64, DVector<Complex64>, f64)> = Vec::with_capacity(n);
    let mut max_residual = 0.0f64;
    for c in 0..n {
        let v: DVector<Complex64> = vectors.column(c).into_owned();
        let uv = u * &v;
        let norm2 = v.norm_squared();
        let lambda = v.dotc(&uv) / Complex64::new(norm2, 0.0);
        let res = (&uv - &v * lambda).norm() / norm2.sqrt();
        max_residual = max_residual.max(res);
        pairs.push((lambda, v, res));
    }
    pairs.sort_by(|a, b| phase_in_tau(a.0).partial_cmp(&phase_in_tau(b.0)).unwrap());

    let values: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let mut sorted_vectors = DMatrix::<Complex64>::zeros(n, n);
    for (c, (_, v, _)) in pairs.iter().enumerate() {
        sorted_vectors.set_column(c, v);
    }
    UnitaryEigen {
        values,
        vectors: sorted_vectors,
        max_residual,
    }
}

/// Eigenphases of a unitary matrix, sorted ascending in [0, 2*pi).
pub fn eigenphases(u: &DMatrix<Complex64>) -> Vec<f64> {
    let eig = unitary_eigen(u);
    let mut phases: Vec<f64> = eig.values.iter().map(|&l| phase_in_tau(l)).collect();
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    phases
}

/// Orthonormal kernel basis of `m` from its SVD: right singular vectors whose
/// singular values fall below `threshold`. Also returns the smallest singular
/// value for diagnostics.
pub fn kernel_basis(m: &DMatrix<Complex64>, threshold: f64) -> (Vec<DVector<Complex64>>, f64) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd with v_t requested");
    let mut smallest = f64::INFINITY;
    let mut vectors = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        smallest = smallest.min(s);
        if s < threshold {
            vectors.push(v_t.row(i).adjoint());
        }
    }
    (vectors, smallest)
}

/// Best cyclic matching between two sorted circular phase lists.
#[derive(Debug, Clone)]
pub struct CircularMatch {
    /// `b[(i + shift) % n]` is the partner of `a[i]`.
    pub shift: usize,
    /// Signed displacement of each pair, wrapped to (-pi, pi].
    pub displacements: Vec<f64>,
}

/// Matches two sorted phase lists on the circle.
///
/// An order-preserving matching between sorted circular lists is a cyclic
/// shift; the shift with the smallest total displacement is selected.
pub fn circular_match(a: &[f64], b: &[f64]) -> CircularMatch {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut best_shift = 0;
    let mut best_cost = f64::INFINITY;
    for shift in 0..n {
        let cost: f64 = (0..n)
            .map(|i| wrap_to_pi(b[(i + shift) % n] - a[i]).abs())
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best_shift = shift;
        }
    }
    let displacements = (0..n)
        .map(|i| wrap_to_pi(b[(i + best_shift) % n] - a[i]))
        .collect();
    CircularMatch {
        shift: best_shift,
        displacements,
    }
}
