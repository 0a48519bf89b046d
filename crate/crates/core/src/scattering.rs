//! Scattering on open (two-lead) graphs via families of paths.
//!
//! The infinite sum over scattering paths from the entrance lead to the exit
//! lead regroups into one family per directed bond: p_{i->j} collects every
//! path suffix that starts by traversing i -> j and ends in the exit lead.
//! The families satisfy the finite linear system
//!
//! ```text
//! p_{i->j} = z_ij sum_l sigma_j[{j,l}, {i,j}] p_{j->l}
//!            + [j = exit] z_ij sigma_exit[lead, {i,j}],
//! ```
//!
//! masked by adjacency (families exist only on actual edges). Lead vertices
//! scatter with their lead-augmented matrices, restricted to interior
//! channels inside the system so flux can escape; the lead channels feed the
//! source and readout. The transmission amplitude is the lead-weighted sum
//! of the families leaving the entrance, the Green's function is
//! G = m/(i hbar^2 k) T e^{ik(x_i + x_f)}, and reflection is read out from a
//! second source vector built the same way at the entrance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{assemble, propagator_diagonal, Assembly};
use crate::graph::MetricGraph;
use crate::vertex::VertexCondition;

/// Default cap on path-sum work in [`brute_force_transmission`].
pub const DEFAULT_PATH_GUARD: u64 = 10_000_000;

/// hbar and particle mass fixing the energy scale E = (hbar k)^2 / 2m.
///
/// The defaults hbar = 1, m = 1/2 make the Green's-function prefactor
/// m/(i hbar^2 k) equal to 1/(2ik).
#[derive(Debug, Clone, Copy)]
pub struct UnitsConvention {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for UnitsConvention {
    fn default() -> Self {
        UnitsConvention {
            hbar: 1.0,
            mass: 0.5,
        }
    }
}

impl UnitsConvention {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0) || !(mass > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "hbar and mass must be positive, got ({hbar}, {mass})"
            )));
        }
        Ok(UnitsConvention { hbar, mass })
    }

    /// m / (i hbar^2 k).
    pub fn greens_prefactor(&self, k: f64) -> Complex64 {
        Complex64::new(0.0, -self.mass / (self.hbar * self.hbar * k))
    }
}

/// Transmission and reflection amplitudes at one wavenumber, with the solved
/// family vector in the bond basis.
#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub k: f64,
    pub t: Complex64,
    pub r: Complex64,
    pub families: DVector<Complex64>,
}

impl ScatteringResult {
    /// |T|^2 + |R|^2; equals 1 for unitary vertex scattering.
    pub fn flux(&self) -> f64 {
        self.t.norm_sqr() + self.r.norm_sqr()
    }
}

/// The assembled linear system (1 - U_open(k)) p = s for one open graph.
pub struct PathFamilySystem {
    pub k: f64,
    /// 1 - U_open over the bond basis.
    pub matrix: DMatrix<Complex64>,
    /// Source for the transmission families: z_in sigma_exit[lead, {i, exit}]
    /// on bonds into the exit vertex.
    pub source: DVector<Complex64>,
    /// Source for the reflection families, built symmetrically at the entrance.
    pub reflection_source: DVector<Complex64>,
    assembly: Assembly,
    entrance: usize,
    exit: usize,
}

impl PathFamilySystem {
    pub fn entrance(&self) -> usize {
        self.entrance
    }

    pub fn exit(&self) -> usize {
        self.exit
    }

    /// Builds the system. Requires both leads and k > 0.
    pub fn build(
        graph: &MetricGraph,
        conditions: &[VertexCondition],
        k: f64,
    ) -> Result<Self> {
        let leads = graph.leads().ok_or_else(|| {
            Error::InvalidArgument("scattering requires entrance and exit leads".into())
        })?;
        let assembly = assemble(graph, conditions, k, false)?;
        let basis = &assembly.basis;
        let dim = basis.len();
        let z = propagator_diagonal(graph, basis, k);

        // U_open[(i->j), (j->l)] = z_ij sigma_j[{j,l}, {i,j}].
        let mut m = DMatrix::<Complex64>::identity(dim, dim);
        for j in 0..graph.vertex_count() {
            let sigma = &assembly.sigmas[j];
            for &row in basis.incoming(j) {
                let bond_in = basis.bond(row);
                let z_row = z[row];
                for &col in basis.outgoing(j) {
                    let bond_out = basis.bond(col);
                    m[(row, col)] -= z_row * sigma.edge_entry(bond_out.head, bond_in.tail);
                }
            }
        }

        let mut source = DVector::<Complex64>::zeros(dim);
        let exit_sigma = &assembly.sigmas[leads.exit];
        let lead_out = exit_sigma.lead_channel();
        for &row in basis.incoming(leads.exit) {
            let bond = basis.bond(row);
            let ch = exit_sigma.channel(bond.tail);
            source[row] = z[row] * exit_sigma.matrix[(lead_out, ch)];
        }

        let mut reflection_source = DVector::<Complex64>::zeros(dim);
        let ent_sigma = &assembly.sigmas[leads.entrance];
        let lead_back = ent_sigma.lead_channel();
        for &row in basis.incoming(leads.entrance) {
            let bond = basis.bond(row);
            let ch = ent_sigma.channel(bond.tail);
            reflection_source[row] = z[row] * ent_sigma.matrix[(lead_back, ch)];
        }

        Ok(PathFamilySystem {
            k,
            matrix: m,
            source,
            reflection_source,
            assembly,
            entrance: leads.entrance,
            exit: leads.exit,
        })
    }

    /// Solves both family systems and reads out T and R.
    pub fn solve(&self) -> Result<ScatteringResult> {
        let lu = self.matrix.clone().lu();
        let p_t = lu
            .solve(&self.source)
            .ok_or(Error::SingularSystem { k: self.k })?;
        let p_r = lu
            .solve(&self.reflection_source)
            .ok_or(Error::SingularSystem { k: self.k })?;
        for (p, s) in [(&p_t, &self.source), (&p_r, &self.reflection_source)] {
            // A singular system either leaves a residual or, when the source
            // is consistent, pollutes the solution along the kernel with a
            // huge component; both render the readout meaningless.
            let residual = (&self.matrix * p - s).norm();
            if !(residual <= 1e-6 * (1.0 + p.norm())) || !(p.norm() <= 1e10 * (1.0 + s.norm())) {
                return Err(Error::SingularSystem { k: self.k });
            }
        }

        let basis = &self.assembly.basis;
        let sigma = &self.assembly.sigmas[self.entrance];
        let lead = sigma.lead_channel();
        let mut t = Complex64::new(0.0, 0.0);
        let mut r = sigma.matrix[(lead, lead)];
        for &b in basis.outgoing(self.entrance) {
            let bond = basis.bond(b);
            let enter = sigma.matrix[(sigma.channel(bond.head), lead)];
            t += enter * p_t[b];
            r += enter * p_r[b];
        }
        Ok(ScatteringResult {
            k: self.k,
            t,
            r,
            families: p_t,
        })
    }
}

/// Builds and solves the path-family system at one wavenumber.
pub fn solve_families(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
) -> Result<ScatteringResult> {
    PathFamilySystem::build(graph, conditions, k)?.solve()
}

/// The exact scattering Green's function between a point x_i on the entrance
/// lead and x_f on the exit lead (both measured outward from the attachment
/// vertices): G = m/(i hbar^2 k) T e^{ik(x_i + x_f)}.
pub fn greens_function(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    x_i: f64,
    x_f: f64,
    units: UnitsConvention,
) -> Result<Complex64> {
    if x_i < 0.0 || x_f < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lead positions must be nonnegative, got ({x_i}, {x_f})"
        )));
    }
    let result = solve_families(graph, conditions, k)?;
    let phase = Complex64::new(0.0, k * (x_i + x_f)).exp();
    Ok(units.greens_prefactor(k) * result.t * phase)
}

/// Star-graph data extracted for the closed-form amplitudes.
struct StarData {
    /// Augmented center entries: interior reflection, interior transmission,
    /// lead-to-edge transmission.
    r1: Complex64,
    t1: Complex64,
    t_in: Complex64,
    /// Per leaf: return factor r_i, propagation z_i, is_exit.
    leaves: Vec<(Complex64, Complex64, bool)>,
    /// Exit factors: z and sigma_exit[lead, edge].
    z_exit: Complex64,
    t_out: Complex64,
}

fn star_data(graph: &MetricGraph, conditions: &[VertexCondition], k: f64) -> Result<StarData> {
    let leads = graph.leads().ok_or_else(|| {
        Error::InvalidArgument("star oracle requires entrance and exit leads".into())
    })?;
    let topo = graph.topology();
    let center = leads.entrance;
    let exit = leads.exit;
    let n = topo.vertex_count();
    if topo.degree(center) != n - 1 || n < 2 {
        return Err(Error::InvalidArgument(
            "star oracle: the entrance lead must sit on the center of a star".into(),
        ));
    }
    if topo.degree(exit) != 1 {
        return Err(Error::InvalidArgument(
            "star oracle: the exit lead must sit on a leaf".into(),
        ));
    }
    let assembly = assemble(graph, conditions, k, false)?;

    let sigma_c = &assembly.sigmas[center];
    let d = sigma_c.neighbors.len();
    let lead = sigma_c.lead_channel();
    let r1 = sigma_c.matrix[(0, 0)];
    let t1 = if d > 1 {
        sigma_c.matrix[(0, 1)]
    } else {
        Complex64::new(0.0, 0.0)
    };
    let t_in = sigma_c.matrix[(0, lead)];
    // The closed form assumes an exchange-symmetric center.
    let tol = 1e-12;
    for a in 0..d {
        if (sigma_c.matrix[(a, a)] - r1).norm() > tol
            || (sigma_c.matrix[(a, lead)] - t_in).norm() > tol
        {
            return Err(Error::InvalidArgument(
                "star oracle requires an exchange-symmetric center condition".into(),
            ));
        }
        for b in 0..d {
            if a != b && (sigma_c.matrix[(a, b)] - t1).norm() > tol {
                return Err(Error::InvalidArgument(
                    "star oracle requires an exchange-symmetric center condition".into(),
                ));
            }
        }
    }

    let mut leaves = Vec::with_capacity(d);
    let mut z_exit = Complex64::new(0.0, 0.0);
    let mut t_out = Complex64::new(0.0, 0.0);
    for &leaf in &sigma_c.neighbors {
        let edge = topo
            .edge_index(center, leaf)
            .expect("star edge exists");
        let z = Complex64::new(0.0, k * graph.length(edge)).exp();
        let sigma_leaf = &assembly.sigmas[leaf];
        // Reflection back along the edge: the augmented edge-edge entry at the
        // exit leaf, the plain scalar elsewhere.
        let r = sigma_leaf.matrix[(0, 0)];
        if leaf == exit {
            let lead_ch = sigma_leaf.lead_channel();
            z_exit = z;
            t_out = sigma_leaf.matrix[(lead_ch, 0)];
        }
        leaves.push((r, z, leaf == exit));
    }
    Ok(StarData {
        r1,
        t1,
        t_in,
        leaves,
        z_exit,
        t_out,
    })
}

/// Closed-form transmission amplitude of an open star with an
/// exchange-symmetric center: entrance lead at the center, exit lead at one
/// leaf. The numerator carries one factor g_{1i} + r_i t_1 z_{1i}^2 per
/// interior leaf (g_{1i} = 1 - r_1 r_i z_{1i}^2) and the denominator is the
/// secular determinant of the family system.
pub fn star_transmission_oracle(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
) -> Result<Complex64> {
    let data = star_data(graph, conditions, k)?;
    let one = Complex64::new(1.0, 0.0);
    // beta_i = g_{1i} + r_i t_1 z_i^2 = 1 - r_i (r_1 - t_1) z_i^2.
    let betas: Vec<Complex64> = data
        .leaves
        .iter()
        .map(|&(r, z, _)| one - r * (data.r1 - data.t1) * z * z)
        .collect();
    let full: Complex64 = betas.iter().product();
    let mut denominator = full;
    for (i, &(r, z, _)) in data.leaves.iter().enumerate() {
        let others: Complex64 = betas
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != i)
            .map(|(_, b)| b)
            .product();
        denominator -= data.t1 * r * z * z * others;
    }
    let scale = 1.0 + betas.iter().map(|b| b.norm()).fold(0.0, f64::max);
    if denominator.norm() < 1e-12 * scale {
        return Err(Error::OraclePole {
            k,
            magnitude: denominator.norm(),
        });
    }
    let numerator: Complex64 = betas
        .iter()
        .zip(&data.leaves)
        .filter(|&(_, &(_, _, is_exit))| !is_exit)
        .map(|(b, _)| b)
        .product();
    Ok(data.t_in * data.t_out * data.z_exit * numerator / denominator)
}

/// Closed-form star Green's function at x_i = x_f = 0.
pub fn star_gf_oracle(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    units: UnitsConvention,
) -> Result<Complex64> {
    Ok(units.greens_prefactor(k) * star_transmission_oracle(graph, conditions, k)?)
}

/// The three-periodic-orbit form of the closed S_3 secular determinant,
///
/// ```text
/// g = (1 - s_aa r_a z_a^2)(1 - s_bb r_b z_b^2)
///     - s_ab s_ba r_a r_b z_a^2 z_b^2,
/// ```
///
/// with s the closed center scattering matrix (channels in sorted leaf
/// order) and r_a, r_b the leaf reflections. Reduces to the uniform-r/t
/// expression for the named condition kinds; an independent check on
/// det(1 - U^G).
pub fn star_s3_secular_oracle(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
) -> Result<Complex64> {
    let topo = graph.topology();
    if topo.vertex_count() != 3 || topo.edge_count() != 2 {
        return Err(Error::InvalidArgument(
            "the S_3 secular oracle needs a three-vertex star".into(),
        ));
    }
    let center = (0..3)
        .find(|&v| topo.degree(v) == 2)
        .ok_or_else(|| Error::InvalidArgument("no degree-2 center found".into()))?;
    let assembly = assemble(graph, conditions, k, true)?;
    let sigma_c = &assembly.sigmas[center];
    let mut factors = Vec::with_capacity(2);
    for (c, &leaf) in sigma_c.neighbors.iter().enumerate() {
        let edge = topo.edge_index(center, leaf).expect("star edge exists");
        let z = Complex64::new(0.0, k * graph.length(edge)).exp();
        let r_leaf = assembly.sigmas[leaf].matrix[(0, 0)];
        factors.push((sigma_c.matrix[(c, c)], r_leaf, z * z));
    }
    let one = Complex64::new(1.0, 0.0);
    let (s_aa, r_a, z2_a) = factors[0];
    let (s_bb, r_b, z2_b) = factors[1];
    let cross = sigma_c.matrix[(0, 1)] * sigma_c.matrix[(1, 0)];
    Ok((one - s_aa * r_a * z2_a) * (one - s_bb * r_b * z2_b) - cross * r_a * r_b * z2_a * z2_b)
}

/// Truncated direct path sum.
#[derive(Debug, Clone, Copy)]
pub struct BruteForceTransmission {
    /// Partial sum of path amplitudes with total length <= the cutoff.
    pub amplitude: Complex64,
    /// Number of entrance-to-exit paths summed.
    pub paths: u64,
    /// True when the work guard stopped the enumeration early.
    pub truncated: bool,
}

/// Sums every scattering path from the entrance lead to the exit lead with
/// total traversed length at most `max_path_length`.
///
/// An asymptotic oracle for small graphs: the partial sums converge to the
/// family-system amplitude when the sub-unit amplitude products dominate.
/// Zero-amplitude branches are pruned exactly, so transparent vertices do
/// not blow up the walk tree.
pub fn brute_force_transmission(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    max_path_length: f64,
) -> Result<BruteForceTransmission> {
    brute_force_transmission_with_guard(graph, conditions, k, max_path_length, DEFAULT_PATH_GUARD)
}

pub fn brute_force_transmission_with_guard(
    graph: &MetricGraph,
    conditions: &[VertexCondition],
    k: f64,
    max_path_length: f64,
    guard: u64,
) -> Result<BruteForceTransmission> {
    if !max_path_length.is_finite() || max_path_length <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "path-length cutoff must be positive and finite, got {max_path_length}"
        )));
    }
    let leads = graph.leads().ok_or_else(|| {
        Error::InvalidArgument("scattering requires entrance and exit leads".into())
    })?;
    let assembly = assemble(graph, conditions, k, false)?;

    struct Walker<'a> {
        graph: &'a MetricGraph,
        assembly: &'a Assembly,
        exit: usize,
        cutoff: f64,
        guard: u64,
        visits: u64,
        paths: u64,
        truncated: bool,
        total: Complex64,
    }

    impl Walker<'_> {
        /// `tail -> head` has just been traversed; `amp` includes its z factor
        /// and `length` its length.
        fn step(&mut self, tail: usize, head: usize, amp: Complex64, length: f64) {
            if self.truncated {
                return;
            }
            self.visits += 1;
            if self.visits > self.guard {
                self.truncated = true;
                return;
            }
            let sigma = &self.assembly.sigmas[head];
            let ch_in = sigma.channel(tail);
            if head == self.exit {
                self.total += amp * sigma.matrix[(sigma.lead_channel(), ch_in)];
                self.paths += 1;
            }
            let neighbors = sigma.neighbors.clone();
            for &next in &neighbors {
                let scattered = amp * sigma.matrix[(sigma.channel(next), ch_in)];
                if scattered.norm_sqr() == 0.0 {
                    continue;
                }
                let edge = self
                    .graph
                    .topology()
                    .edge_index(head, next)
                    .expect("edge exists");
                let extended = length + self.graph.length(edge);
                if extended > self.cutoff {
                    continue;
                }
                let z = Complex64::new(0.0, self.assembly.k * self.graph.length(edge)).exp();
                self.step(head, next, scattered * z, extended);
            }
        }
    }

    let mut walker = Walker {
        graph,
        assembly: &assembly,
        exit: leads.exit,
        cutoff: max_path_length,
        guard,
        visits: 0,
        paths: 0,
        truncated: false,
        total: Complex64::new(0.0, 0.0),
    };

    let entrance_sigma = &assembly.sigmas[leads.entrance];
    let lead = entrance_sigma.lead_channel();
    for &first in &entrance_sigma.neighbors {
        let amp = entrance_sigma.matrix[(entrance_sigma.channel(first), lead)];
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let edge = graph
            .topology()
            .edge_index(leads.entrance, first)
            .expect("edge exists");
        let len = graph.length(edge);
        if len > max_path_length {
            continue;
        }
        let z = Complex64::new(0.0, k * len).exp();
        walker.step(leads.entrance, first, amp * z, len);
    }

    Ok(BruteForceTransmission {
        amplitude: walker.total,
        paths: walker.paths,
        truncated: walker.truncated,
    })
}
