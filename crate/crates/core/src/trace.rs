//! Periodic orbits and the trace formula.
//!
//! tr U^nu expands over closed bond walks of period nu: each walk contributes
//! the product of its scattering amplitudes times exp(i k l), with l the
//! total traversed length. Orbits are walks up to cyclic rotation; a walk
//! with primitive period p has exactly p distinct rotations, so
//!
//! ```text
//! tr U^nu = sum_orbits (rotations) W_p exp(i k l_p),
//! ```
//!
//! an identity this module maintains exactly and tests against dense matrix
//! powers. On top of the traces sit the spectral counting function
//!
//! ```text
//! N(k) = Nbar(k) + (1/pi) Im sum_nu (1/nu) tr U^nu,
//! ```
//!
//! with the Neumann-class smooth term Nbar = k L / (2 pi) + 1/2
//! (L = 2 sum_e l_e), and the density of states d(k) = dN/dk evaluated by
//! term-wise analytic differentiation, optionally Lorentzian-smoothed by
//! damping each orbit with exp(-eta l).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evolution::{assemble, compose, Assembly, Convention};
use crate::graph::MetricGraph;
use crate::vertex::{sigma_derivative, VertexCondition};

/// Default cap on the number of closed walks enumerated per call.
pub const DEFAULT_ORBIT_GUARD: usize = 1_000_000;

/// A periodic orbit: a closed chain of bonds up to cyclic rotation.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    /// Canonical bond sequence (lexicographically minimal rotation);
    /// consecutive bonds chain head to tail, cyclically.
    pub bonds: Vec<usize>,
    /// Total metric length l_p.
    pub length: f64,
    /// Product W_p of the scattering amplitudes picked up at each vertex
    /// transit (k-independent for the named condition kinds).
    pub amplitude: Complex64,
    /// Number of distinct cyclic rotations = primitive period.
    pub rotations: usize,
    /// How many times the primitive word repeats.
    pub repetitions: usize,
}

impl PeriodicOrbit {
    pub fn period(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_primitive(&self) -> bool {
        self.repetitions == 1
    }

    /// This orbit's term in tr U^nu: rotations * W_p * exp(i k l_p).
    pub fn contribution(&self, k: f64) -> Complex64 {
        Complex64::new(self.rotations as f64, 0.0)
            * self.amplitude
            * Complex64::new(0.0, k * self.length).exp()
    }
}

/// Sum of orbit contributions at wavenumber k; equals tr U^nu when `orbits`
/// is the full period-nu list.
pub fn orbit_sum(orbits: &[PeriodicOrbit], k: f64) -> Complex64 {
    orbits.iter().map(|p| p.contribution(k)).sum()
}

/// tr [U^G(k)]^nu by repeated matrix multiplication.
pub fn trace_power(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    nu: usize,
) -> Result<Complex64> {
    if nu == 0 {
        return Err(Error::InvalidArgument("trace power needs nu >= 1".into()));
    }
    let u = crate::evolution::evolution_map(graph, conditions, k, Convention::GreensOrder)?.matrix;
    let mut power = u.clone();
    for _ in 1..nu {
        power = &power * &u;
    }
    Ok(power.trace())
}

/// Enumerates all period-`nu` orbits (closed bond walks up to cyclic
/// rotation), with amplitudes evaluated at wavenumber `k`.
pub fn enumerate_orbits(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    nu: usize,
) -> Result<Vec<PeriodicOrbit>> {
    enumerate_orbits_with_guard(graph, conditions, k, nu, DEFAULT_ORBIT_GUARD)
}

pub fn enumerate_orbits_with_guard(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    nu: usize,
    guard: usize,
) -> Result<Vec<PeriodicOrbit>> {
    if nu == 0 {
        return Err(Error::InvalidArgument(
            "orbit enumeration needs a period >= 1".into(),
        ));
    }
    let assembly = assemble(graph, conditions, k, true)?;
    let basis = &assembly.basis;
    let mut orbits = Vec::new();
    let mut walk = Vec::with_capacity(nu);
    let mut visited = 0usize;

    // Walks whose first bond is their minimal bond; canonical representatives
    // are filtered among those on closure.
    fn extend(
        assembly: &Assembly,
        graph: &MetricGraph,
        nu: usize,
        guard: usize,
        walk: &mut Vec<usize>,
        visited: &mut usize,
        orbits: &mut Vec<PeriodicOrbit>,
    ) -> Result<()> {
        let basis = &assembly.basis;
        if walk.len() == nu {
            if basis.bond(*walk.last().unwrap()).head == basis.bond(walk[0]).tail
                && is_minimal_rotation(walk)
            {
                *visited += 1;
                if *visited > guard {
                    return Err(Error::ExplosionGuard {
                        what: "periodic-orbit",
                        limit: guard,
                    });
                }
                orbits.push(build_orbit(assembly, graph, walk));
            }
            return Ok(());
        }
        let last = basis.bond(*walk.last().unwrap());
        let start = walk[0];
        for &next in basis.outgoing(last.head) {
            if next < start {
                continue; // the first bond must stay minimal
            }
            walk.push(next);
            extend(assembly, graph, nu, guard, walk, visited, orbits)?;
            walk.pop();
        }
        Ok(())
    }

    for start in 0..basis.len() {
        walk.push(start);
        extend(
            &assembly,
            graph,
            nu,
            guard,
            &mut walk,
            &mut visited,
            &mut orbits,
        )?;
        walk.pop();
    }
    Ok(orbits)
}

fn is_minimal_rotation(walk: &[usize]) -> bool {
    let nu = walk.len();
    for shift in 1..nu {
        for t in 0..nu {
            let rotated = walk[(t + shift) % nu];
            match rotated.cmp(&walk[t]) {
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Greater => break,
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    true
}

fn build_orbit(assembly: &Assembly, graph: &MetricGraph, walk: &[usize]) -> PeriodicOrbit {
    let basis = &assembly.basis;
    let nu = walk.len();
    let mut length = 0.0;
    let mut amplitude = Complex64::new(1.0, 0.0);
    for t in 0..nu {
        let bond = basis.bond(walk[t]);
        let next = basis.bond(walk[(t + 1) % nu]);
        length += graph.length(bond.edge);
        // Scattering at head(bond): in along `bond`, out along `next`.
        amplitude *= assembly.sigmas[bond.head].edge_entry(next.head, bond.tail);
    }
    // Primitive period = smallest rotation fixing the walk.
    let mut rotations = nu;
    for p in 1..nu {
        if nu % p == 0 && (0..nu).all(|t| walk[(t + p) % nu] == walk[t]) {
            rotations = p;
            break;
        }
    }
    PeriodicOrbit {
        bonds: walk.to_vec(),
        length,
        amplitude,
        rotations,
        repetitions: nu / rotations,
    }
}

/// Counting function, smooth term, and density of states on a k-grid.
#[derive(Debug, Clone)]
pub struct SpectralFunctions {
    pub k: Vec<f64>,
    /// Smooth term Nbar(k); zero when the graph is outside the built-in
    /// Neumann/Kirchhoff class (the oscillatory part is still returned).
    pub n_smooth: Vec<f64>,
    /// Nbar(k) + truncated oscillatory sum.
    pub n_total: Vec<f64>,
    /// d(k), Lorentzian-smoothed with the width used at evaluation.
    pub density: Vec<f64>,
    pub nu_max: usize,
    /// Bond-doubled metric length L = 2 sum_e l_e.
    pub total_length: f64,
    /// Smoothing width applied to `density`.
    pub eta: f64,
}

/// Truncated spectral counting function over a k-grid.
///
/// The built-in smooth term applies when every vertex carries a Neumann or
/// Kirchhoff condition (it counts the k = 0 constant mode); for other
/// conditions `n_smooth` is zero and the caller supplies its own.
pub fn counting_function(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    grid: &[f64],
    nu_max: usize,
) -> Result<SpectralFunctions> {
    evaluate(graph, conditions, grid, nu_max, default_eta(grid))
}

/// Density of states with the grid-adapted default smoothing width.
pub fn density_of_states(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    grid: &[f64],
    nu_max: usize,
) -> Result<SpectralFunctions> {
    evaluate(graph, conditions, grid, nu_max, default_eta(grid))
}

/// Density of states with an explicit Lorentzian width (eta = 0 gives the
/// exact term-wise derivative of the truncated N).
pub fn density_of_states_with_width(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    grid: &[f64],
    nu_max: usize,
    eta: f64,
) -> Result<SpectralFunctions> {
    evaluate(graph, conditions, grid, nu_max, eta)
}

fn default_eta(grid: &[f64]) -> f64 {
    if grid.len() < 2 {
        return 0.05;
    }
    2.0 * (grid[grid.len() - 1] - grid[0]).abs() / (grid.len() - 1) as f64
}

fn evaluate(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    grid: &[f64],
    nu_max: usize,
    eta: f64,
) -> Result<SpectralFunctions> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty k-grid".into()));
    }
    if grid.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::InvalidArgument("grid wavenumbers must be positive".into()));
    }
    if !(eta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothing width must be nonnegative, got {eta}"
        )));
    }
    let total_length = 2.0 * graph.metric_length();
    let neumann_class = conditions.iter().all(|c| {
        matches!(
            c,
            VertexCondition::Neumann | VertexCondition::Kirchhoff
        )
    });
    let k_dependent = conditions.iter().any(|c| !c.is_k_independent());

    let rows: Result<Vec<(f64, f64, f64)>> = grid
        .par_iter()
        .map(|&k| point(graph, conditions, k, nu_max, eta, k_dependent))
        .collect();
    let rows = rows?;

    let mut n_smooth = Vec::with_capacity(grid.len());
    let mut n_total = Vec::with_capacity(grid.len());
    let mut density = Vec::with_capacity(grid.len());
    // The density is the k-derivative of the N(k) actually returned, so its
    // Weyl constant L/(2 pi) appears exactly when the smooth term does.
    let weyl = if neumann_class {
        total_length / (2.0 * PI)
    } else {
        0.0
    };
    for (&k, &(osc, d_osc, _)) in grid.iter().zip(&rows) {
        let smooth = if neumann_class {
            k * total_length / (2.0 * PI) + 0.5
        } else {
            0.0
        };
        n_smooth.push(smooth);
        n_total.push(smooth + osc);
        density.push(weyl + d_osc);
    }
    Ok(SpectralFunctions {
        k: grid.to_vec(),
        n_smooth,
        n_total,
        density,
        nu_max,
        total_length,
        eta,
    })
}

/// Oscillatory parts at one wavenumber: (N_osc, d_osc, unused).
fn point(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    nu_max: usize,
    eta: f64,
    k_dependent: bool,
) -> Result<(f64, f64, f64)> {
    let assembly = assemble(graph, conditions, k, true)?;
    let basis = &assembly.basis;
    let dim = basis.len();
    let lengths: Vec<f64> = basis.bonds().iter().map(|b| graph.length(b.edge)).collect();

    let s = crate::evolution::bond_scattering_from(&assembly);
    let z: Vec<Complex64> = lengths
        .iter()
        .map(|&l| Complex64::new(-eta * l, k * l).exp())
        .collect();
    let u_damped = compose(&s, &z, Convention::GreensOrder);
    let u = if eta == 0.0 {
        u_damped.clone()
    } else {
        let z0: Vec<Complex64> = lengths
            .iter()
            .map(|&l| Complex64::new(0.0, k * l).exp())
            .collect();
        compose(&s, &z0, Convention::GreensOrder)
    };

    // d/dk tr U^nu = nu [ i tr(L U^nu) + tr(D S' U^{nu-1}) ].
    let ds_prime = if k_dependent {
        let mut sp = DMatrix::<Complex64>::zeros(dim, dim);
        for (col, bond_in) in basis.bonds().iter().enumerate() {
            let j = bond_in.head;
            let sigma_prime = sigma_derivative(
                &conditions[j],
                assembly.sigmas[j].neighbors.len(),
                k,
            )?;
            for &row in basis.outgoing(j) {
                let bond_out = basis.bond(row);
                let out_ch = assembly.sigmas[j].channel(bond_out.head);
                let in_ch = assembly.sigmas[j].channel(bond_in.tail);
                sp[(row, col)] = sigma_prime[(out_ch, in_ch)];
            }
        }
        Some(compose(&sp, &z, Convention::GreensOrder))
    } else {
        None
    };

    let mut n_osc = 0.0;
    let mut d_osc = 0.0;
    let mut power = DMatrix::<Complex64>::identity(dim, dim);
    let mut power_damped = DMatrix::<Complex64>::identity(dim, dim);
    for nu in 1..=nu_max {
        power = &power * &u;
        n_osc += power.trace().im / nu as f64;

        let prev_damped = power_damped.clone();
        power_damped = &power_damped * &u_damped;
        let mut trace_l = Complex64::new(0.0, 0.0);
        for b in 0..dim {
            trace_l += Complex64::new(lengths[b], 0.0) * power_damped[(b, b)];
        }
        d_osc += trace_l.re;
        if let Some(dsp) = &ds_prime {
            // tr(D S' U^{nu-1}).
            let mut cross = Complex64::new(0.0, 0.0);
            for r in 0..dim {
                for c in 0..dim {
                    cross += dsp[(r, c)] * prev_damped[(c, r)];
                }
            }
            d_osc += cross.im;
        }
    }
    Ok((n_osc / PI, d_osc / PI, 0.0))
}
