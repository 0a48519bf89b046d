//! Root finding on the positive real k-axis.
//!
//! Zeros of det(1 - U(k)) are located by tracking the eigenphases of the
//! unitary evolution map across a k-grid: a spectral point exists where an
//! eigenphase crosses 0 (mod 2*pi). Crossings are transversal where the
//! determinant's real-axis zeros are tangential, which makes phase tracking
//! robust where amplitude bracketing is not. Each crossing is refined by
//! bisection, multiplicities come from the eigenvalues clustered at 1, and
//! eigenvectors from the kernel of (1 - U).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::evolution::{self, Convention};
use crate::graph::{BondBasis, MetricGraph};
use crate::linalg;
use crate::vertex::VertexCondition;

/// Default bisection tolerance in k.
pub const DEFAULT_REFINE_TOLERANCE: f64 = 1e-10;
/// Default threshold on |1 - lambda| for kernel membership.
pub const DEFAULT_KERNEL_THRESHOLD: f64 = 1e-8;

const AMBIGUITY_THRESHOLD: f64 = PI / 2.0;
const MAX_SUBDIVISION_DEPTH: u32 = 24;
const MAX_BISECTIONS: usize = 200;

/// Scan window and tolerances for [`find_spectrum`].
#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
    pub refine_tolerance: f64,
    pub kernel_threshold: f64,
}

impl ScanConfig {
    pub fn new(k_min: f64, k_max: f64, samples: usize) -> Result<Self> {
        let cfg = ScanConfig {
            k_min,
            k_max,
            samples,
            refine_tolerance: DEFAULT_REFINE_TOLERANCE,
            kernel_threshold: DEFAULT_KERNEL_THRESHOLD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0) || !(self.k_max > self.k_min) {
            return Err(Error::InvalidArgument(format!(
                "scan window must satisfy 0 < k_min < k_max, got ({}, {})",
                self.k_min, self.k_max
            )));
        }
        if self.samples < 2 {
            return Err(Error::InvalidArgument(
                "scan needs at least 2 samples".into(),
            ));
        }
        if !(self.refine_tolerance > 0.0) || !(self.kernel_threshold > 0.0) {
            return Err(Error::InvalidArgument(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One point of the spectrum: the wavenumber, its multiplicity, a kernel
/// basis of (1 - U^G(k)), and the wave-amplitude vectors a = S(k) p.
#[derive(Debug, Clone)]
pub struct SpectralPoint {
    pub k: f64,
    pub multiplicity: usize,
    pub p_vectors: Vec<DVector<Complex64>>,
    pub a_vectors: Vec<DVector<Complex64>>,
}

fn greens_map(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
) -> Result<DMatrix<Complex64>> {
    Ok(evolution::evolution_map(graph, conditions, k, Convention::GreensOrder)?.matrix)
}

/// Locates the spectrum in (k_min, k_max) by eigenphase tracking.
///
/// Grid samples where the scattering matrices cannot be evaluated are skipped
/// with a warning. Cells whose phase displacements are too large to match
/// unambiguously are re-sampled locally. Degenerate roots are reported once,
/// with their kernel basis.
pub fn find_spectrum(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    cfg: &ScanConfig,
) -> Result<Vec<SpectralPoint>> {
    cfg.validate()?;
    let ks: Vec<f64> = (0..cfg.samples)
        .map(|i| cfg.k_min + (cfg.k_max - cfg.k_min) * i as f64 / (cfg.samples - 1) as f64)
        .collect();
    let sampled: Vec<Option<(f64, Vec<f64>)>> = ks
        .par_iter()
        .map(|&k| match greens_map(graph, conditions, k) {
            Ok(u) => Some((k, linalg::eigenphases(&u))),
            Err(err) => {
                log::warn!("skipping sample k = {k}: {err}");
                None
            }
        })
        .collect();
    let samples: Vec<(f64, Vec<f64>)> = sampled.into_iter().flatten().collect();
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(
            "fewer than two usable samples in the scan window".into(),
        ));
    }

    let mut candidates = Vec::new();
    for pair in samples.windows(2) {
        scan_cell(graph, conditions, &pair[0], &pair[1], 0, cfg, &mut candidates);
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Merge refined crossings that landed on the same root (degeneracies).
    let merge_tol = 10.0 * cfg.refine_tolerance;
    let mut points: Vec<SpectralPoint> = Vec::new();
    let mut idx = 0;
    while idx < candidates.len() {
        let mut end = idx + 1;
        while end < candidates.len() && candidates[end] - candidates[end - 1] < merge_tol {
            end += 1;
        }
        let k_star = candidates[idx..end].iter().sum::<f64>() / (end - idx) as f64;
        match eigenvectors_at_with_threshold(graph, conditions, k_star, cfg.kernel_threshold) {
            Ok(point) => points.push(point),
            Err(err) => log::warn!("discarding candidate root k = {k_star}: {err}"),
        }
        idx = end;
    }
    Ok(points)
}

fn scan_cell(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    left: &(f64, Vec<f64>),
    right: &(f64, Vec<f64>),
    depth: u32,
    cfg: &ScanConfig,
    out: &mut Vec<f64>,
) {
    let (k_a, phases_a) = left;
    let (k_b, phases_b) = right;
    if phases_a.len() != phases_b.len() {
        return;
    }
    let matching = linalg::circular_match(phases_a, phases_b);
    let ambiguous = matching
        .displacements
        .iter()
        .any(|d| d.abs() > AMBIGUITY_THRESHOLD);
    if ambiguous && depth < MAX_SUBDIVISION_DEPTH {
        if depth == 0 {
            log::warn!(
                "scan cell [{k_a}, {k_b}] shows phase winding above {AMBIGUITY_THRESHOLD:.2}; \
                 re-sampling locally"
            );
        }
        let k_mid = 0.5 * (k_a + k_b);
        if let Ok(u) = greens_map(graph, conditions, k_mid) {
            let mid = (k_mid, linalg::eigenphases(&u));
            scan_cell(graph, conditions, left, &mid, depth + 1, cfg, out);
            scan_cell(graph, conditions, &mid, right, depth + 1, cfg, out);
            return;
        }
        // Midpoint failed to evaluate: fall through with the coarse matching.
    }
    for (i, &d) in matching.displacements.iter().enumerate() {
        let theta = phases_a[i];
        let after = theta + d;
        let crossed_up = after >= TAU;
        let crossed_down = after <= 0.0 && theta > 0.0;
        if crossed_up || crossed_down {
            let s_a = if theta > PI { theta - TAU } else { theta };
            let s_b = if crossed_up { after - TAU } else { after };
            if let Some(root) =
                refine_crossing(graph, conditions, *k_a, *k_b, s_a, s_b, cfg.refine_tolerance)
            {
                out.push(root);
            }
        }
    }
}

/// Bisection on the tracked eigenphase's signed distance from 1.
///
/// At each midpoint the branch is identified as the eigenphase closest to the
/// linear interpolation of the bracket values.
fn refine_crossing(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    mut k_lo: f64,
    mut k_hi: f64,
    mut s_lo: f64,
    mut s_hi: f64,
    tol: f64,
) -> Option<f64> {
    if s_lo == 0.0 {
        return Some(k_lo);
    }
    if s_hi == 0.0 {
        return Some(k_hi);
    }
    for _ in 0..MAX_BISECTIONS {
        if k_hi - k_lo < tol {
            break;
        }
        let k_mid = 0.5 * (k_lo + k_hi);
        let u = match greens_map(graph, conditions, k_mid) {
            Ok(u) => u,
            Err(_) => return None,
        };
        let t = (k_mid - k_lo) / (k_hi - k_lo);
        let s_pred = s_lo + (s_hi - s_lo) * t;
        let s_mid = linalg::eigenphases(&u)
            .iter()
            .map(|&theta| linalg::wrap_to_pi(theta))
            .min_by(|x, y| {
                (x - s_pred)
                    .abs()
                    .partial_cmp(&(y - s_pred).abs())
                    .unwrap()
            })?;
        if s_mid == 0.0 {
            return Some(k_mid);
        }
        if (s_mid > 0.0) == (s_lo > 0.0) {
            k_lo = k_mid;
            s_lo = s_mid;
        } else {
            k_hi = k_mid;
            s_hi = s_mid;
        }
    }
    if s_hi != s_lo {
        Some(k_lo + (k_hi - k_lo) * (-s_lo) / (s_hi - s_lo))
    } else {
        Some(0.5 * (k_lo + k_hi))
    }
}

/// Kernel basis of (1 - U^G(k)) and the derived wave amplitudes at a root,
/// using the default kernel threshold.
pub fn eigenvectors_at(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k_star: f64,
) -> Result<SpectralPoint> {
    eigenvectors_at_with_threshold(graph, conditions, k_star, DEFAULT_KERNEL_THRESHOLD)
}

/// As [`eigenvectors_at`] with an explicit threshold on the singular values
/// of (1 - U^G(k)). For unitary U these equal |1 - lambda|, so the kernel
/// dimension agrees with the count of eigenvalues near 1.
pub fn eigenvectors_at_with_threshold(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k_star: f64,
    threshold: f64,
) -> Result<SpectralPoint> {
    let assembly = evolution::assemble(graph, conditions, k_star, true)?;
    let s = evolution::bond_scattering_from(&assembly);
    let z = evolution::propagator_diagonal(graph, &assembly.basis, k_star);
    let u = evolution::compose(&s, &z, Convention::GreensOrder);
    let dim = u.nrows();
    let m = DMatrix::<Complex64>::identity(dim, dim) - u;
    let (p_vectors, smallest) = linalg::kernel_basis(&m, threshold);
    if p_vectors.is_empty() {
        return Err(Error::NotAnEigenvalue {
            k: k_star,
            smallest,
            threshold,
        });
    }
    let a_vectors: Vec<DVector<Complex64>> = p_vectors.iter().map(|p| &s * p).collect();
    Ok(SpectralPoint {
        k: k_star,
        multiplicity: p_vectors.len(),
        p_vectors,
        a_vectors,
    })
}

/// Largest boundary-condition residual over all vertices for a wave-amplitude
/// vector `a` in the bond basis, relative to ||a||.
///
/// On edge {u, v} with coordinate x from u, the wavefunction is
/// psi(x) = a_{u->v} e^{ikx} + a_{v->u} e^{ik(l - x)}, so the trace at u is
/// a_{u->v} + z a_{v->u} and the outgoing derivative ik (a_{u->v} - z a_{v->u}).
pub fn vertex_bc_residual(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    a: &DVector<Complex64>,
) -> Result<f64> {
    let topo = graph.topology();
    let n = topo.vertex_count();
    if conditions.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} vertex conditions supplied for {n} vertices",
            conditions.len()
        )));
    }
    let basis = BondBasis::new(topo);
    if a.len() != basis.len() {
        return Err(Error::InvalidArgument(format!(
            "amplitude vector has length {} but the graph has {} bonds",
            a.len(),
            basis.len()
        )));
    }
    let norm = a.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let ik = Complex64::new(0.0, k);
    let mut worst = 0.0f64;
    for v in 0..n {
        let neighbors = topo.neighborhood(v, None)?;
        let degree = neighbors.len();
        let mut values = DVector::<Complex64>::zeros(degree);
        let mut derivatives = DVector::<Complex64>::zeros(degree);
        for (c, &nb) in neighbors.iter().enumerate() {
            let out = basis.index_of(v, nb).expect("bond exists");
            let inc = basis.index_of(nb, v).expect("bond exists");
            let edge = basis.bond(out).edge;
            let z = Complex64::new(0.0, k * graph.length(edge)).exp();
            values[c] = a[out] + a[inc] * z;
            derivatives[c] = ik * (a[out] - a[inc] * z);
        }
        let (mat_a, mat_b) = conditions[v].matrices(degree)?;
        let residual = mat_a * values + mat_b * derivatives;
        worst = worst.max(residual.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    Ok(worst / norm)
}
