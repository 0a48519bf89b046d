//! Unitary-similarity verification through word traces.
//!
//! Two n x n complex matrices A and B are unitarily similar if and only if
//! tr w(A, A*) = tr w(B, B*) for every word w(s, t) in two noncommuting
//! variables of length at most n sqrt(2n^2/(n-1) + 1/4) + n/2 - 2, with *
//! the conjugate transpose. Traces are invariant under cyclic rotation of
//! the word, so only one representative per cyclic class is evaluated.
//!
//! The full word set explodes with the bound, so checks above small
//! dimensions run on a truncated length (recorded in the report): trace
//! agreement there is strong evidence, not proof, and is always paired with
//! a direct eigenvalue comparison.

use nalgebra::DMatrix;
use num_complex::Complex64;

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg;

/// Default guard on the number of cyclic word classes per check.
pub const DEFAULT_WORD_GUARD: usize = 1_000_000;
/// Default scale for the trace-agreement tolerance.
pub const DEFAULT_TRACE_TOL_SCALE: f64 = 1e-8;
/// Default tolerance on the eigenvalue match residual.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Longest word representable by the bitmask enumerator.
const MAX_SUPPORTED_LENGTH: usize = 60;

/// A word s^{m_1} t^{n_1} s^{m_2} t^{n_2} ... as its exponent list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub exponents: Vec<(u32, u32)>,
}

impl Word {
    pub fn length(&self) -> usize {
        self.exponents
            .iter()
            .map(|&(m, n)| (m + n) as usize)
            .sum()
    }

    /// Evaluates tr w(M, M*) for this word.
    pub fn trace(&self, m: &DMatrix<Complex64>) -> Complex64 {
        let adj = m.adjoint();
        let dim = m.nrows();
        let mut x = DMatrix::<Complex64>::identity(dim, dim);
        for &(ms, ns) in &self.exponents {
            for _ in 0..ms {
                x = &x * m;
            }
            for _ in 0..ns {
                x = &x * &adj;
            }
        }
        x.trace()
    }

    /// Builds a word from a bitstring (0 = s, 1 = t), first letter at the
    /// most significant of `length` bits.
    fn from_mask(mask: u64, length: usize) -> Word {
        let mut exponents = Vec::new();
        let mut pos = 0;
        while pos < length {
            let mut ms = 0u32;
            while pos < length && (mask >> (length - 1 - pos)) & 1 == 0 {
                ms += 1;
                pos += 1;
            }
            let mut ns = 0u32;
            while pos < length && (mask >> (length - 1 - pos)) & 1 == 1 {
                ns += 1;
                pos += 1;
            }
            exponents.push((ms, ns));
        }
        Word { exponents }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(m, n) in &self.exponents {
            match m {
                0 => {}
                1 => write!(f, "s")?,
                _ => write!(f, "s^{m}")?,
            }
            match n {
                0 => {}
                1 => write!(f, "t")?,
                _ => write!(f, "t^{n}")?,
            }
        }
        Ok(())
    }
}

/// The Specht word-length bound n sqrt(2n^2/(n-1) + 1/4) + n/2 - 2 for
/// n x n matrices (n >= 2).
pub fn specht_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the word-length bound needs matrix dimension >= 2".into(),
        ));
    }
    let nf = n as f64;
    Ok(nf * (2.0 * nf * nf / (nf - 1.0) + 0.25).sqrt() + nf / 2.0 - 2.0)
}

fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Number of binary cyclic classes (necklaces) of exactly length `l`.
fn necklace_count(l: usize) -> u128 {
    let l = l as u64;
    let mut total: u128 = 0;
    for d in 1..=l {
        if l % d == 0 {
            total += euler_phi(l / d) as u128 * (1u128 << d);
        }
    }
    total / l as u128
}

/// Total cyclic classes of length 1..=max_length.
pub fn word_count(max_length: usize) -> u128 {
    (1..=max_length).map(necklace_count).sum()
}

/// All words up to `max_length`, one representative per cyclic class
/// (the lexicographically minimal rotation, s before t), in deterministic
/// (length, bits) order.
pub fn enumerate_words(max_length: usize, guard: usize) -> Result<Vec<Word>> {
    if max_length == 0 {
        return Err(Error::InvalidArgument(
            "word enumeration needs max_length >= 1".into(),
        ));
    }
    if max_length > MAX_SUPPORTED_LENGTH {
        return Err(Error::InvalidArgument(format!(
            "word enumeration supports lengths up to {MAX_SUPPORTED_LENGTH}, got {max_length}"
        )));
    }
    if word_count(max_length) > guard as u128 {
        return Err(Error::ExplosionGuard {
            what: "cyclic-word",
            limit: guard,
        });
    }
    let mut words = Vec::new();
    for length in 1..=max_length {
        let span = 1u64 << length;
        'mask: for mask in 0..span {
            // Keep only masks that are minimal among their rotations.
            for shift in 1..length {
                let rotated = ((mask << shift) | (mask >> (length - shift))) & (span - 1);
                if rotated < mask {
                    continue 'mask;
                }
            }
            words.push(Word::from_mask(mask, length));
        }
    }
    Ok(words)
}

/// Knobs for [`specht_check`].
#[derive(Debug, Clone, Copy)]
pub struct SpechtOptions {
    /// Trace tolerance = scale * (1 + max |trace| among evaluated words).
    pub trace_tol_scale: f64,
    pub eigen_tolerance: f64,
    /// Cap on the word length; the theoretical bound applies when absent.
    pub max_length: Option<usize>,
    /// Cap on the number of cyclic word classes.
    pub word_guard: usize,
}

impl Default for SpechtOptions {
    fn default() -> Self {
        SpechtOptions {
            trace_tol_scale: DEFAULT_TRACE_TOL_SCALE,
            eigen_tolerance: DEFAULT_EIGEN_TOL,
            max_length: None,
            word_guard: DEFAULT_WORD_GUARD,
        }
    }
}

/// One evaluated word with both traces.
#[derive(Debug, Clone)]
pub struct WordTrace {
    pub word: Word,
    pub trace_a: Complex64,
    pub trace_b: Complex64,
}

impl WordTrace {
    pub fn difference(&self) -> f64 {
        (self.trace_a - self.trace_b).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Similar,
    NotSimilar,
    InconclusiveAtTolerance,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Similar => write!(f, "similar"),
            Verdict::NotSimilar => write!(f, "not similar"),
            Verdict::InconclusiveAtTolerance => write!(f, "inconclusive at tolerance"),
        }
    }
}

/// Outcome of a word-trace similarity check.
#[derive(Debug, Clone)]
pub struct SimilarityReport {
    pub dimension: usize,
    /// Theoretical word-length bound for this dimension.
    pub bound: f64,
    /// Word length actually enumerated.
    pub max_length_used: usize,
    /// Whether the enumeration covered the full theoretical bound; a
    /// truncated run is conjecture-supporting evidence, not proof.
    pub exhaustive: bool,
    pub word_traces: Vec<WordTrace>,
    pub max_trace_difference: f64,
    pub trace_tolerance: f64,
    pub eigen: EigenMatchReport,
    pub eigen_tolerance: f64,
    pub verdict: Verdict,
}

impl SimilarityReport {
    /// The evaluated word with the largest trace difference.
    pub fn worst_word(&self) -> Option<&WordTrace> {
        self.word_traces
            .iter()
            .max_by(|a, b| a.difference().partial_cmp(&b.difference()).unwrap())
    }
}

/// Word-trace similarity check of A against B with default options.
pub fn specht_check(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    options: &SpechtOptions,
) -> Result<SimilarityReport> {
    let dim = a.nrows();
    if a.ncols() != dim || b.nrows() != dim || b.ncols() != dim {
        return Err(Error::InvalidArgument(format!(
            "similarity check needs square matrices of equal size, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let bound = if dim >= 2 { specht_bound(dim)? } else { 1.0 };
    let bound_floor = (bound.floor() as usize).max(1);
    let mut max_length = bound_floor.min(MAX_SUPPORTED_LENGTH);
    if let Some(cap) = options.max_length {
        max_length = max_length.min(cap.max(1));
    }
    // Back off to the longest length the word guard allows.
    while max_length > 1 && word_count(max_length) > options.word_guard as u128 {
        max_length -= 1;
    }
    let words = enumerate_words(max_length, options.word_guard)?;

    let mut word_traces = Vec::with_capacity(words.len());
    let mut max_diff = 0.0f64;
    let mut max_magnitude = 0.0f64;
    for word in words {
        let trace_a = word.trace(a);
        let trace_b = word.trace(b);
        max_magnitude = max_magnitude.max(trace_a.norm()).max(trace_b.norm());
        let entry = WordTrace {
            word,
            trace_a,
            trace_b,
        };
        max_diff = max_diff.max(entry.difference());
        word_traces.push(entry);
    }
    let trace_tolerance = options.trace_tol_scale * (1.0 + max_magnitude);

    let eigen = eigen_match(a, b, options.eigen_tolerance)?;
    let traces_pass = max_diff < trace_tolerance;
    let eigen_pass = eigen.residual < options.eigen_tolerance && eigen.degeneracies_match;
    let verdict = if traces_pass && eigen_pass {
        Verdict::Similar
    } else if max_diff > 10.0 * trace_tolerance || eigen.residual > 100.0 * options.eigen_tolerance
    {
        Verdict::NotSimilar
    } else {
        Verdict::InconclusiveAtTolerance
    };
    Ok(SimilarityReport {
        dimension: dim,
        bound,
        max_length_used: max_length,
        exhaustive: max_length >= bound_floor,
        word_traces,
        max_trace_difference: max_diff,
        trace_tolerance,
        eigen,
        eigen_tolerance: options.eigen_tolerance,
        verdict,
    })
}

/// Eigenvalue comparison between two (expectedly unitary) matrices.
#[derive(Debug, Clone)]
pub struct EigenMatchReport {
    /// Max distance between matched eigenvalues.
    pub residual: f64,
    /// Cluster sizes (degeneracy structure), sorted descending.
    pub clusters_a: Vec<usize>,
    pub clusters_b: Vec<usize>,
    pub degeneracies_match: bool,
    pub unitarity_a: f64,
    pub unitarity_b: f64,
    /// Set when a non-unitary input forced the modulus-sorted comparison.
    pub moduli_sorted: bool,
}

const UNITARY_INPUT_TOL: f64 = 1e-8;

/// Compares the eigenvalue multisets of A and B.
///
/// Near-unitary inputs are matched cyclically on the unit circle (the
/// matching of two sorted circular lists is a cyclic shift). Non-unitary
/// inputs produce a warning and a comparison of (modulus, phase)-sorted
/// Schur eigenvalues. `tolerance` also sets the clustering width for the
/// degeneracy comparison.
pub fn eigen_match(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    tolerance: f64,
) -> Result<EigenMatchReport> {
    let dim = a.nrows();
    if a.ncols() != dim || b.nrows() != dim || b.ncols() != dim {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue comparison needs square matrices of equal size, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let unitarity_a = linalg::unitarity_residual(a);
    let unitarity_b = linalg::unitarity_residual(b);
    let unitary = unitarity_a < UNITARY_INPUT_TOL && unitarity_b < UNITARY_INPUT_TOL;

    let (residual, ev_a, ev_b) = if unitary {
        let ea = linalg::unitary_eigen(a).values;
        let eb = linalg::unitary_eigen(b).values;
        let phases_a: Vec<f64> = ea.iter().map(|&l| linalg::phase_in_tau(l)).collect();
        let phases_b: Vec<f64> = eb.iter().map(|&l| linalg::phase_in_tau(l)).collect();
        let matching = linalg::circular_match(&phases_a, &phases_b);
        let residual = (0..dim)
            .map(|i| (eb[(i + matching.shift) % dim] - ea[i]).norm())
            .fold(0.0, f64::max);
        (residual, ea, eb)
    } else {
        log::warn!(
            "eigenvalue comparison on non-unitary input (residuals {unitarity_a:.2e}, \
             {unitarity_b:.2e}); falling back to modulus-sorted matching"
        );
        let ea = schur_eigenvalues(a)?;
        let eb = schur_eigenvalues(b)?;
        let residual = ea
            .iter()
            .zip(&eb)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        (residual, ea, eb)
    };

    let clusters_a = cluster_sizes(&ev_a, tolerance);
    let clusters_b = cluster_sizes(&ev_b, tolerance);
    let degeneracies_match = clusters_a == clusters_b;
    Ok(EigenMatchReport {
        residual,
        clusters_a,
        clusters_b,
        degeneracies_match,
        unitarity_a,
        unitarity_b,
        moduli_sorted: !unitary,
    })
}

fn schur_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-12, 100_000)
        .ok_or_else(|| Error::InvalidArgument("eigenvalue iteration did not converge".into()))?;
    let values = schur
        .eigenvalues()
        .ok_or_else(|| Error::InvalidArgument("eigenvalues unavailable".into()))?;
    let mut sorted: Vec<Complex64> = values.iter().cloned().collect();
    sorted.sort_by(|x, y| {
        (x.norm(), x.arg())
            .partial_cmp(&(y.norm(), y.arg()))
            .unwrap()
    });
    Ok(sorted)
}

/// Eigenvalue cluster sizes under single-linkage with width `tol`,
/// sorted descending.
fn cluster_sizes(values: &[Complex64], tol: f64) -> Vec<usize> {
    let mut remaining: Vec<Complex64> = values.to_vec();
    let mut sizes = Vec::new();
    while let Some(seed) = remaining.pop() {
        let mut cluster = vec![seed];
        loop {
            let mut grew = false;
            let mut i = 0;
            while i < remaining.len() {
                if cluster.iter().any(|c| (c - remaining[i]).norm() < tol) {
                    cluster.push(remaining.swap_remove(i));
                    grew = true;
                } else {
                    i += 1;
                }
            }
            if !grew {
                break;
            }
        }
        sizes.push(cluster.len());
    }
    sizes.sort_unstable_by(|x, y| y.cmp(x));
    sizes
}
