//! The bond evolution maps.
//!
//! Over the directed-bond basis, edge propagation is the diagonal matrix
//! D(k) with entries z_e = exp(i k l_e), and vertex scattering is the
//! block-sparse matrix S(k) with
//!
//! ```text
//! S[(j -> l), (i -> j)] = sigma_j[out = {j,l}, in = {i,j}](k),
//! ```
//!
//! one unitary block per vertex. The two quantum evolution maps are
//! U = S D (propagate, then scatter) and U = D S (scatter, then propagate);
//! their secular determinants det(1 - U) share the same zeros, which form
//! the spectrum of the closed graph.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{BondBasis, MetricGraph};
use crate::linalg;
use crate::vertex::{lead_augmented_sigma, sigma_of_k, VertexCondition};

/// Factor ordering of the evolution map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// U = S(k) D(k): the wave-amplitude map.
    SchrodingerOrder,
    /// U = D(k) S(k): the path-family map.
    GreensOrder,
}

/// Per-vertex scattering data in graph context: channel c corresponds to the
/// edge toward `neighbors[c]` (sorted ascending); an augmented lead channel,
/// when present, sits last.
#[derive(Debug, Clone)]
pub(crate) struct VertexSigma {
    pub matrix: DMatrix<Complex64>,
    pub neighbors: Vec<usize>,
    pub has_lead: bool,
}

impl VertexSigma {
    pub fn channel(&self, neighbor: usize) -> usize {
        self.neighbors
            .binary_search(&neighbor)
            .expect("neighbor present in sorted adjacency list")
    }

    pub fn lead_channel(&self) -> usize {
        debug_assert!(self.has_lead);
        self.neighbors.len()
    }

    /// sigma entry scattering the incoming edge channel toward `tail_in`
    /// into the outgoing edge channel toward `head_out`.
    pub fn edge_entry(&self, head_out: usize, tail_in: usize) -> Complex64 {
        self.matrix[(self.channel(head_out), self.channel(tail_in))]
    }
}

/// Bond basis plus per-vertex scattering matrices at one wavenumber.
#[derive(Debug, Clone)]
pub(crate) struct Assembly {
    pub basis: BondBasis,
    pub sigmas: Vec<VertexSigma>,
    pub k: f64,
}

pub(crate) fn assemble(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    closed: bool,
) -> Result<Assembly> {
    let n = graph.vertex_count();
    if conditions.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} vertex conditions supplied for {n} vertices",
            conditions.len()
        )));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "evolution maps require k > 0, got {k}"
        )));
    }
    let topo = graph.topology();
    let mut sigmas = Vec::with_capacity(n);
    for v in 0..n {
        let neighbors = topo.neighborhood(v, None)?;
        let degree = neighbors.len();
        let augmented = !closed && graph.has_lead(v);
        let matrix = if augmented {
            lead_augmented_sigma(&conditions[v], degree, k)?.matrix
        } else {
            sigma_of_k(&conditions[v], degree, k)?.matrix
        };
        sigmas.push(VertexSigma {
            matrix,
            neighbors,
            has_lead: augmented,
        });
    }
    Ok(Assembly {
        basis: BondBasis::new(topo),
        sigmas,
        k,
    })
}

/// The diagonal edge-propagation factor D(k): z_b = exp(i k l_e) for each
/// bond b on edge e, so reversed bonds share the same value.
#[derive(Debug, Clone)]
pub struct EdgePropagator {
    pub k: f64,
    diagonal: Vec<Complex64>,
}

impl EdgePropagator {
    pub fn diagonal(&self) -> &[Complex64] {
        &self.diagonal
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.diagonal.len(), self.diagonal.len(), |r, c| {
            if r == c {
                self.diagonal[r]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// Builds D(k) over the bond basis. Requires k > 0.
pub fn build_propagator(graph: &MetricGraph, k: f64) -> Result<EdgePropagator> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "build_propagator requires k > 0, got {k}"
        )));
    }
    let basis = BondBasis::new(graph.topology());
    Ok(EdgePropagator {
        k,
        diagonal: propagator_diagonal(graph, &basis, k),
    })
}

pub(crate) fn propagator_diagonal(
    graph: &MetricGraph,
    basis: &BondBasis,
    k: f64,
) -> Vec<Complex64> {
    basis
        .bonds()
        .iter()
        .map(|b| Complex64::new(0.0, k * graph.length(b.edge)).exp())
        .collect()
}

/// The 2|E| x 2|E| vertex-scattering factor S(k).
#[derive(Debug, Clone)]
pub struct BondScatteringMatrix {
    pub k: f64,
    pub matrix: DMatrix<Complex64>,
}

impl BondScatteringMatrix {
    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }
}

/// Assembles S(k) vertex block by vertex block.
///
/// With `closed = true`, leads are ignored and every vertex scatters at its
/// interior degree (the bound-state map). With `closed = false`, lead
/// vertices use their augmented scattering matrix, but only the
/// interior-channel entries enter this matrix; the lead channels feed the
/// source and readout vectors of the path-family system.
pub fn build_bond_scattering(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    closed: bool,
) -> Result<BondScatteringMatrix> {
    let assembly = assemble(graph, conditions, k, closed)?;
    Ok(BondScatteringMatrix {
        k,
        matrix: bond_scattering_from(&assembly),
    })
}

pub(crate) fn bond_scattering_from(assembly: &Assembly) -> DMatrix<Complex64> {
    let basis = &assembly.basis;
    let dim = basis.len();
    let mut s = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, bond_in) in basis.bonds().iter().enumerate() {
        let j = bond_in.head;
        let sigma = &assembly.sigmas[j];
        for &row in basis.outgoing(j) {
            let bond_out = basis.bond(row);
            s[(row, col)] = sigma.edge_entry(bond_out.head, bond_in.tail);
        }
    }
    s
}

/// A quantum evolution map U(k) in one of the two factor orderings.
#[derive(Debug, Clone)]
pub struct EvolutionMap {
    pub k: f64,
    pub convention: Convention,
    pub matrix: DMatrix<Complex64>,
}

impl EvolutionMap {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }
}

/// Builds U = S D or U = D S from the same two factors. Leads are ignored:
/// the evolution map describes the closed graph.
pub fn evolution_map(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    convention: Convention,
) -> Result<EvolutionMap> {
    let assembly = assemble(graph, conditions, k, true)?;
    let s = bond_scattering_from(&assembly);
    let z = propagator_diagonal(graph, &assembly.basis, k);
    Ok(EvolutionMap {
        k,
        convention,
        matrix: compose(&s, &z, convention),
    })
}

/// Multiplies S by the diagonal propagator on the side fixed by the
/// convention: S D scales columns, D S scales rows.
pub(crate) fn compose(
    s: &DMatrix<Complex64>,
    z: &[Complex64],
    convention: Convention,
) -> DMatrix<Complex64> {
    let dim = s.nrows();
    let mut u = s.clone();
    match convention {
        Convention::SchrodingerOrder => {
            for c in 0..dim {
                let zc = z[c];
                for r in 0..dim {
                    u[(r, c)] *= zc;
                }
            }
        }
        Convention::GreensOrder => {
            for r in 0..dim {
                let zr = z[r];
                for c in 0..dim {
                    u[(r, c)] *= zr;
                }
            }
        }
    }
    u
}

/// The secular determinant det(1 - U(k)) via pivoted LU.
pub fn secular_determinant(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    convention: Convention,
) -> Result<Complex64> {
    let u = evolution_map(graph, conditions, k, convention)?;
    let dim = u.dimension();
    let m = DMatrix::<Complex64>::identity(dim, dim) - u.matrix;
    Ok(linalg::determinant(&m))
}
