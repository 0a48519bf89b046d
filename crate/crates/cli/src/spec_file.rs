//! The graph description file: a TOML document with `[graph]`, `[[edges]]`,
//! optional `[[vertices]]`, `[leads]`, and `[units]` sections. Vertex ids are
//! 1-based in the file and converted to the library's 0-based ids here, at
//! the parser boundary; complex matrix entries are written as [re, im]
//! pairs.
//!
//! ```toml
//! [graph]
//! n = 3
//!
//! [[edges]]
//! i = 1
//! j = 2
//! length = 1.0
//!
//! [[edges]]
//! i = 1
//! j = 3
//! length = 0.8
//!
//! [[vertices]]
//! id = 2
//! bc = "dirichlet"        # kirchhoff (default) | dirichlet | neumann | general
//!
//! [leads]
//! entrance = 1
//! exit = 3
//! ```
//!
//! A `general` condition supplies square matrices `A` and `B` of [re, im]
//! pairs whose dimension is the vertex degree, counting the lead channel at
//! a lead vertex; rows and columns are ordered by ascending neighbor id,
//! lead channel last.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use qgraph::{
    DiscreteGraph, GeneralCondition, Leads, MetricGraph, UnitsConvention, VertexCondition,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    graph: GraphSection,
    #[serde(default)]
    edges: Vec<EdgeEntry>,
    #[serde(default)]
    vertices: Vec<VertexEntry>,
    leads: Option<LeadsSection>,
    units: Option<UnitsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    i: usize,
    j: usize,
    length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexEntry {
    id: usize,
    bc: String,
    #[serde(rename = "A")]
    a: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(rename = "B")]
    b: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeadsSection {
    entrance: usize,
    exit: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsSection {
    hbar: Option<f64>,
    mass: Option<f64>,
}

/// A fully validated system ready for the library calls.
#[derive(Debug)]
pub struct ParsedSystem {
    pub graph: MetricGraph,
    pub conditions: Vec<VertexCondition>,
    pub units: UnitsConvention,
}

/// Parses and validates a graph description document.
///
/// `origin` names the file in error messages. Syntax errors carry the TOML
/// line/column; semantic errors name the section and entry.
pub fn parse_system(text: &str, origin: &str) -> Result<ParsedSystem, String> {
    let file: SpecFile =
        toml::from_str(text).map_err(|e| format!("{origin}: {e}"))?;

    let n = file.graph.n;
    if n == 0 {
        return Err(format!("{origin}: [graph] n must be at least 1"));
    }
    if file.edges.is_empty() && n > 1 {
        return Err(format!("{origin}: [[edges]] section is empty"));
    }

    let mut edges = Vec::with_capacity(file.edges.len());
    let mut lengths = Vec::with_capacity(file.edges.len());
    let mut seen = std::collections::HashSet::new();
    for (idx, e) in file.edges.iter().enumerate() {
        let at = format!("{origin}: edges[{idx}] ({{{}, {}}})", e.i, e.j);
        if e.i < 1 || e.i > n || e.j < 1 || e.j > n {
            return Err(format!("{at}: vertex ids must lie in 1..={n}"));
        }
        if e.i == e.j {
            return Err(format!("{at}: self-loops are not allowed"));
        }
        if !(e.length > 0.0) || !e.length.is_finite() {
            return Err(format!("{at}: length must be positive, got {}", e.length));
        }
        let key = (e.i.min(e.j), e.i.max(e.j));
        if !seen.insert(key) {
            return Err(format!("{at}: duplicate edge"));
        }
        edges.push((e.i - 1, e.j - 1));
        lengths.push(e.length);
    }

    // Connectivity is checked here so the message stays 1-based.
    if n > 1 {
        let mut reach = vec![false; n];
        reach[0] = true;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for &(a, b) in &edges {
                let w = if a == v { b } else if b == v { a } else { continue };
                if !reach[w] {
                    reach[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(v) = reach.iter().position(|&r| !r) {
            return Err(format!(
                "{origin}: graph is disconnected: vertex {} is not reachable from vertex 1",
                v + 1
            ));
        }
    }

    let leads = match &file.leads {
        None => None,
        Some(l) => {
            if l.entrance < 1 || l.entrance > n || l.exit < 1 || l.exit > n {
                return Err(format!(
                    "{origin}: [leads] entrance/exit must lie in 1..={n}"
                ));
            }
            if l.entrance == l.exit {
                return Err(format!(
                    "{origin}: [leads] entrance and exit must differ"
                ));
            }
            Some(Leads {
                entrance: l.entrance - 1,
                exit: l.exit - 1,
            })
        }
    };

    let topology = DiscreteGraph::new(n, &edges).map_err(|e| format!("{origin}: {e}"))?;
    let graph =
        MetricGraph::new(topology, lengths, leads).map_err(|e| format!("{origin}: {e}"))?;

    // Vertex conditions: default Kirchhoff, at most one entry per vertex.
    let mut conditions: Vec<Option<VertexCondition>> = vec![None; n];
    for (idx, v) in file.vertices.iter().enumerate() {
        let at = format!("{origin}: vertices[{idx}] (id {})", v.id);
        if v.id < 1 || v.id > n {
            return Err(format!("{at}: id must lie in 1..={n}"));
        }
        if conditions[v.id - 1].is_some() {
            return Err(format!("{at}: vertex already has a condition"));
        }
        let condition = match v.bc.as_str() {
            "dirichlet" => VertexCondition::Dirichlet,
            "neumann" => VertexCondition::Neumann,
            "kirchhoff" => VertexCondition::Kirchhoff,
            "general" => {
                let degree = graph.topology().degree(v.id - 1)
                    + usize::from(graph.has_lead(v.id - 1));
                let a = parse_matrix(v.a.as_ref(), degree, &at, "A")?;
                let b = parse_matrix(v.b.as_ref(), degree, &at, "B")?;
                VertexCondition::General(
                    GeneralCondition::new(a, b).map_err(|e| format!("{at}: {e}"))?,
                )
            }
            other => {
                return Err(format!(
                    "{at}: unknown bc {other:?} (expected dirichlet, neumann, kirchhoff, or general)"
                ))
            }
        };
        conditions[v.id - 1] = Some(condition);
    }
    let conditions: Vec<VertexCondition> = conditions
        .into_iter()
        .map(|c| c.unwrap_or(VertexCondition::Kirchhoff))
        .collect();

    let units = match &file.units {
        None => UnitsConvention::default(),
        Some(u) => UnitsConvention::new(u.hbar.unwrap_or(1.0), u.mass.unwrap_or(0.5))
            .map_err(|e| format!("{origin}: [units] {e}"))?,
    };

    Ok(ParsedSystem {
        graph,
        conditions,
        units,
    })
}

fn parse_matrix(
    rows: Option<&Vec<Vec<[f64; 2]>>>,
    degree: usize,
    at: &str,
    name: &str,
) -> Result<DMatrix<Complex64>, String> {
    let rows = rows.ok_or_else(|| {
        format!("{at}: a general bc requires the matrix {name} ({degree}x{degree} of [re, im] pairs)")
    })?;
    if rows.len() != degree || rows.iter().any(|r| r.len() != degree) {
        return Err(format!(
            "{at}: matrix {name} must be {degree}x{degree} (vertex degree including any lead), \
             got {} rows",
            rows.len()
        ));
    }
    Ok(DMatrix::from_fn(degree, degree, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}
