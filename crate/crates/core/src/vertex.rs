//! Vertex boundary conditions and the k-dependent scattering matrices they
//! induce.
//!
//! A condition at a vertex of degree d is the pair of d x d matrices (A, B)
//! constraining the boundary traces, A psi + B psi' = 0, with A B† Hermitian
//! and (A, B) of full rank. The induced scattering matrix is
//!
//! ```text
//! sigma(k) = -(A + ikB)^{-1} (A - ikB),
//! ```
//!
//! unitary for real k. Dirichlet, Neumann, and Kirchhoff conditions carry
//! their canonical (A, B) and a k-independent closed form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Default tolerance for the Hermiticity and rank checks on (A, B).
pub const CONDITION_TOL: f64 = 1e-12;
/// Default tolerance for unitarity checks on scattering matrices.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Boundary condition at one vertex.
#[derive(Debug, Clone)]
pub enum VertexCondition {
    /// psi = 0; sigma = -1.
    Dirichlet,
    /// psi' = 0; sigma = +1.
    Neumann,
    /// Continuity plus vanishing sum of outgoing derivatives;
    /// sigma = (2/d) J - 1 with J the all-ones matrix.
    Kirchhoff,
    /// User-supplied (A, B) pair.
    General(GeneralCondition),
}

/// Validated general (A, B) boundary data.
#[derive(Debug, Clone)]
pub struct GeneralCondition {
    a: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
}

impl GeneralCondition {
    /// Validates A B† Hermiticity and the rank of the d x 2d block (A, B).
    pub fn new(a: DMatrix<Complex64>, b: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(a, b, CONDITION_TOL)
    }

    pub fn with_tolerance(
        a: DMatrix<Complex64>,
        b: DMatrix<Complex64>,
        tol: f64,
    ) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || b.nrows() != d || b.ncols() != d {
            return Err(Error::InvalidCondition(format!(
                "A is {}x{} and B is {}x{}; both must be square of equal size",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if d == 0 {
            return Err(Error::InvalidCondition("empty (A, B) pair".into()));
        }
        let ab = &a * b.adjoint();
        let herm = linalg::max_abs(&(&ab - ab.adjoint()));
        let scale = 1.0 + linalg::max_abs(&ab);
        if herm > tol * scale {
            return Err(Error::InvalidCondition(format!(
                "A B† is not self-adjoint: residual {herm:.3e} exceeds {:.3e}",
                tol * scale
            )));
        }
        // Rank of (A, B) from singular values, threshold relative to the largest.
        let mut block = DMatrix::<Complex64>::zeros(d, 2 * d);
        block.view_mut((0, 0), (d, d)).copy_from(&a);
        block.view_mut((0, d), (d, d)).copy_from(&b);
        let svd = block.svd(false, false);
        let largest = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > tol * largest)
            .count();
        if rank < d {
            return Err(Error::InvalidCondition(format!(
                "(A, B) has rank {rank} < {d}"
            )));
        }
        Ok(GeneralCondition { a, b })
    }

    /// The (A, B) pair realizing a prescribed unitary scattering matrix at
    /// wavenumber `k_ref`: A = (1 - sigma)/2, B = (1 + sigma)/(2 i k_ref).
    ///
    /// Setting the condition and setting the scattering matrix are
    /// equivalent; this is the constructive direction. Away from `k_ref` the
    /// induced sigma(k) varies but stays unitary.
    pub fn from_unitary(sigma: &DMatrix<Complex64>, k_ref: f64) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() {
            return Err(Error::InvalidCondition("sigma must be square".into()));
        }
        if !(k_ref > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference wavenumber must be positive, got {k_ref}"
            )));
        }
        let resid = linalg::unitarity_residual(sigma);
        if resid > UNITARITY_TOL {
            return Err(Error::InvalidCondition(format!(
                "target scattering matrix is not unitary: residual {resid:.3e}"
            )));
        }
        let d = sigma.nrows();
        let id = DMatrix::<Complex64>::identity(d, d);
        let half = Complex64::new(0.5, 0.0);
        let a = (&id - sigma) * half;
        let b = (&id + sigma) * (half / Complex64::new(0.0, k_ref));
        Self::new(a, b)
    }

    pub fn dimension(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<Complex64> {
        &self.b
    }
}

impl VertexCondition {
    pub fn general(a: DMatrix<Complex64>, b: DMatrix<Complex64>) -> Result<Self> {
        Ok(VertexCondition::General(GeneralCondition::new(a, b)?))
    }

    /// Whether sigma(k) is independent of k for this condition.
    pub fn is_k_independent(&self) -> bool {
        !matches!(self, VertexCondition::General(_))
    }

    /// The (A, B) pair at the given degree: canonical matrices for the named
    /// kinds, the stored pair for general conditions.
    pub fn matrices(&self, degree: usize) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        if degree == 0 {
            return Err(Error::InvalidArgument("vertex degree must be >= 1".into()));
        }
        let zero = DMatrix::<Complex64>::zeros(degree, degree);
        let id = DMatrix::<Complex64>::identity(degree, degree);
        match self {
            VertexCondition::Dirichlet => Ok((id, zero)),
            VertexCondition::Neumann => Ok((zero, id)),
            VertexCondition::Kirchhoff => {
                // Rows 0..d-2 of A: psi_m - psi_{m+1} = 0; last row of B: sum psi' = 0.
                let mut a = zero.clone();
                let mut b = zero;
                for m in 0..degree - 1 {
                    a[(m, m)] = Complex64::new(1.0, 0.0);
                    a[(m, m + 1)] = Complex64::new(-1.0, 0.0);
                }
                for c in 0..degree {
                    b[(degree - 1, c)] = Complex64::new(1.0, 0.0);
                }
                Ok((a, b))
            }
            VertexCondition::General(g) => {
                if g.dimension() != degree {
                    return Err(Error::InvalidCondition(format!(
                        "general condition has dimension {} but the vertex has degree {degree}",
                        g.dimension()
                    )));
                }
                Ok((g.a.clone(), g.b.clone()))
            }
        }
    }
}

/// Label of one channel of a vertex scattering matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelLabel {
    /// Abstract channel slot, used when no graph context is attached.
    Slot(usize),
    /// Channel along the edge toward this neighbor vertex.
    Edge(usize),
    /// The semi-infinite lead channel of an augmented vertex.
    Lead,
}

/// A vertex scattering matrix at fixed k, with channel labels.
///
/// Entry (out, in) maps the incoming amplitude on channel `in` to the
/// outgoing amplitude on channel `out`; diagonal entries are reflections,
/// off-diagonal entries transmissions.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    pub k: f64,
    pub matrix: DMatrix<Complex64>,
    pub channels: Vec<ChannelLabel>,
}

impl ScatteringMatrix {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }
}

/// sigma(k) at any real k != 0. Named kinds use their closed forms (exactly
/// k-independent); general conditions invert A + ikB.
pub(crate) fn sigma_matrix(
    bc: &VertexCondition,
    degree: usize,
    k: f64,
) -> Result<DMatrix<Complex64>> {
    if degree == 0 {
        return Err(Error::InvalidArgument("vertex degree must be >= 1".into()));
    }
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scattering matrices are undefined at k = {k}"
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    match bc {
        VertexCondition::Dirichlet => Ok(DMatrix::from_diagonal_element(degree, degree, -one)),
        VertexCondition::Neumann => Ok(DMatrix::identity(degree, degree)),
        VertexCondition::Kirchhoff => {
            let t = 2.0 / degree as f64;
            Ok(DMatrix::from_fn(degree, degree, |r, c| {
                if r == c {
                    Complex64::new(t - 1.0, 0.0)
                } else {
                    Complex64::new(t, 0.0)
                }
            }))
        }
        VertexCondition::General(g) => {
            if g.dimension() != degree {
                return Err(Error::InvalidCondition(format!(
                    "general condition has dimension {} but the vertex has degree {degree}",
                    g.dimension()
                )));
            }
            let ik = Complex64::new(0.0, k);
            let plus = &g.a + &g.b * ik;
            let minus = &g.a - &g.b * ik;
            let lu = plus.clone().lu();
            let solved = lu
                .solve(&minus)
                .ok_or(Error::SingularCondition { k })?;
            let sigma = -solved;
            // Guard against a solve on a numerically singular A + ikB.
            let resid = linalg::max_abs(&(&plus * &sigma + &minus));
            let scale = 1.0 + linalg::max_abs(&plus) * linalg::max_abs(&sigma);
            if !resid.is_finite() || resid > 1e-8 * scale {
                return Err(Error::SingularCondition { k });
            }
            Ok(sigma)
        }
    }
}

/// d sigma / dk = i (A + ikB)^{-1} B (1 - sigma(k)); identically zero for the
/// named k-independent kinds.
pub(crate) fn sigma_derivative(
    bc: &VertexCondition,
    degree: usize,
    k: f64,
) -> Result<DMatrix<Complex64>> {
    match bc {
        VertexCondition::General(g) => {
            if g.dimension() != degree {
                return Err(Error::InvalidCondition(format!(
                    "general condition has dimension {} but the vertex has degree {degree}",
                    g.dimension()
                )));
            }
            let sigma = sigma_matrix(bc, degree, k)?;
            let ik = Complex64::new(0.0, k);
            let plus = &g.a + &g.b * ik;
            let id = DMatrix::<Complex64>::identity(degree, degree);
            let rhs = &g.b * (id - sigma);
            let lu = plus.lu();
            let solved = lu.solve(&rhs).ok_or(Error::SingularCondition { k })?;
            Ok(solved * Complex64::new(0.0, 1.0))
        }
        _ => Ok(DMatrix::zeros(degree, degree)),
    }
}

/// The vertex scattering matrix sigma(k) for a closed vertex of the given
/// degree. Requires k > 0.
pub fn sigma_of_k(bc: &VertexCondition, degree: usize, k: f64) -> Result<ScatteringMatrix> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma_of_k requires k > 0, got {k}"
        )));
    }
    let matrix = sigma_matrix(bc, degree, k)?;
    Ok(ScatteringMatrix {
        k,
        matrix,
        channels: (0..degree).map(ChannelLabel::Slot).collect(),
    })
}

/// The scattering matrix of a lead-augmented vertex: the same condition kind
/// applied at degree `interior_degree + 1`, with the lead as the last channel.
///
/// A general condition must already be supplied at the augmented dimension.
pub fn lead_augmented_sigma(
    bc: &VertexCondition,
    interior_degree: usize,
    k: f64,
) -> Result<ScatteringMatrix> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lead_augmented_sigma requires k > 0, got {k}"
        )));
    }
    let degree = interior_degree + 1;
    let matrix = sigma_matrix(bc, degree, k)?;
    let mut channels: Vec<ChannelLabel> = (0..interior_degree).map(ChannelLabel::Slot).collect();
    channels.push(ChannelLabel::Lead);
    Ok(ScatteringMatrix {
        k,
        matrix,
        channels,
    })
}

/// Residuals of the scattering-amplitude relations at one vertex.
#[derive(Debug, Clone, Copy)]
pub struct SigmaRelationReport {
    /// max-norm of sigma(k) sigma†(k) - 1.
    pub unitarity: f64,
    /// max-norm of sigma†(k) sigma(k) - 1 (column flux conservation).
    pub co_unitarity: f64,
    /// max-norm of sigma(k) - sigma†(-k).
    pub k_reversal: f64,
}

impl SigmaRelationReport {
    pub fn max(&self) -> f64 {
        self.unitarity.max(self.co_unitarity).max(self.k_reversal)
    }
}

/// Checks sigma sigma† = 1, sigma† sigma = 1, and sigma(k) = sigma†(-k),
/// the latter by evaluating the defining formula at -k.
pub fn verify_sigma_relations(
    bc: &VertexCondition,
    degree: usize,
    k: f64,
) -> Result<SigmaRelationReport> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "verify_sigma_relations requires k > 0, got {k}"
        )));
    }
    let s = sigma_matrix(bc, degree, k)?;
    let s_neg = sigma_matrix(bc, degree, -k)?;
    let id = DMatrix::<Complex64>::identity(degree, degree);
    let unitarity = linalg::max_abs(&(&s * s.adjoint() - &id));
    let co_unitarity = linalg::max_abs(&(s.adjoint() * &s - &id));
    let k_reversal = linalg::max_abs(&(&s - s_neg.adjoint()));
    Ok(SigmaRelationReport {
        unitarity,
        co_unitarity,
        k_reversal,
    })
}
