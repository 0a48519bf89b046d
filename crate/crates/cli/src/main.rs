//! `qg`: spectra, scattering amplitudes, Green's functions, periodic orbits,
//! and trace-formula curves for metric quantum graphs described by TOML
//! files. Results go to stdout (or `--out FILE`) as CSV or a short text
//! report; warnings and notices go to stderr.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 numerical failure,
//! 3 verification failure.

mod spec_file;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::path::PathBuf;
use std::process::ExitCode;

use qgraph::{
    build_bond_scattering, build_propagator, counting_function, enumerate_orbits, evolution_map,
    find_spectrum, greens_function, secular_determinant, sigma_of_k, solve_families, Convention,
    Error as QgError, ScanConfig, VertexCondition,
};
use qgraph::graph::BondBasis;
use qgraph::similarity::{eigen_match, specht_check, SpechtOptions, Verdict};
use spec_file::ParsedSystem;

#[derive(Parser)]
#[command(
    name = "qg",
    version,
    about = "Spectra, scattering, Green's functions, and trace formulas for metric quantum graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the closed-graph spectrum in a k-window (CSV: k, multiplicity).
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
        #[arg(long)]
        samples: usize,
        /// Root refinement tolerance in k.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep transmission and reflection amplitudes over a k-grid
    /// (CSV: k, re_T, im_T, T2, R2, flux).
    Scatter {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated trace-formula curves (CSV: k, N_smooth, N_total, d_smoothed).
    Trace {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
        #[arg(long)]
        samples: usize,
        /// Truncation order of the trace sum.
        #[arg(long)]
        numax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify unitarity, the secular-determinant identity, and the spectral
    /// equivalence of the two evolution maps at one wavenumber.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: f64,
        /// Also run the word-trace similarity check.
        #[arg(long)]
        specht: bool,
        /// Word-length cap for --specht.
        #[arg(long, default_value_t = 12)]
        specht_max_len: usize,
    },
    /// Enumerate periodic orbits up to a period
    /// (CSV: period, length, re_W, im_W, bond_sequence).
    Orbits {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "max-period")]
        max_period: usize,
        /// Wavenumber for the amplitudes; required only for k-dependent
        /// conditions.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The scattering Green's function at one wavenumber and lead positions.
    Greens {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        xi: f64,
        #[arg(long)]
        xf: f64,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
    Verification,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Verification => 3,
        }
    }
}

fn classify(err: QgError) -> Failure {
    match err {
        QgError::InvalidGraph(_) | QgError::InvalidCondition(_) | QgError::InvalidArgument(_) => {
            Failure::Usage(err.to_string())
        }
        QgError::SingularCondition { .. }
        | QgError::SingularSystem { .. }
        | QgError::NotAnEigenvalue { .. }
        | QgError::OraclePole { .. }
        | QgError::ExplosionGuard { .. } => Failure::Numerical(err.to_string()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if let Ok(value) = std::env::var("QG_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid QG_THREADS value {value:?}"),
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Numerical(msg) => eprintln!("numerical failure: {msg}"),
                Failure::Verification => {}
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

fn load(path: &PathBuf) -> Result<ParsedSystem, Failure> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{origin}: {e}")))?;
    spec_file::parse_system(&text, &origin).map_err(Failure::Usage)
}

fn notice_leads_ignored(system: &ParsedSystem) {
    if system.graph.leads().is_some() {
        eprintln!("notice: leads are ignored for closed-graph computations");
    }
}

fn grid(kmin: f64, kmax: f64, samples: usize) -> Result<Vec<f64>, Failure> {
    if !(kmin > 0.0) || !(kmax > kmin) || samples < 2 {
        return Err(Failure::Usage(format!(
            "need 0 < kmin < kmax and samples >= 2, got ({kmin}, {kmax}, {samples})"
        )));
    }
    Ok((0..samples)
        .map(|i| kmin + (kmax - kmin) * i as f64 / (samples - 1) as f64)
        .collect())
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectrum {
            graph,
            kmin,
            kmax,
            samples,
            tol,
            out,
        } => {
            let system = load(&graph)?;
            notice_leads_ignored(&system);
            let mut cfg = ScanConfig::new(kmin, kmax, samples)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            if let Some(tol) = tol {
                cfg.refine_tolerance = tol;
                cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            }
            let points =
                find_spectrum(&system.graph, &system.conditions, &cfg).map_err(classify)?;
            let mut csv = String::from("k,multiplicity\n");
            for p in &points {
                csv.push_str(&format!("{},{}\n", p.k, p.multiplicity));
            }
            emit(out.as_ref(), &csv)
        }

        Command::Scatter {
            graph,
            kmin,
            kmax,
            samples,
            out,
        } => {
            let system = load(&graph)?;
            if system.graph.leads().is_none() {
                return Err(Failure::Usage(
                    "scatter requires a [leads] section with entrance and exit".into(),
                ));
            }
            let ks = grid(kmin, kmax, samples)?;
            let rows: Vec<Option<String>> = ks
                .par_iter()
                .map(|&k| match solve_families(&system.graph, &system.conditions, k) {
                    Ok(res) => Some(format!(
                        "{},{},{},{},{},{}\n",
                        k,
                        res.t.re,
                        res.t.im,
                        res.t.norm_sqr(),
                        res.r.norm_sqr(),
                        res.flux()
                    )),
                    Err(err) => {
                        log::warn!("skipping k = {k}: {err}");
                        None
                    }
                })
                .collect();
            let good: Vec<String> = rows.into_iter().flatten().collect();
            if good.is_empty() {
                return Err(Failure::Numerical(
                    "no sample in the sweep could be solved".into(),
                ));
            }
            let mut csv = String::from("k,re_T,im_T,T2,R2,flux\n");
            for row in good {
                csv.push_str(&row);
            }
            emit(out.as_ref(), &csv)
        }

        Command::Trace {
            graph,
            kmin,
            kmax,
            samples,
            numax,
            out,
        } => {
            let system = load(&graph)?;
            notice_leads_ignored(&system);
            let ks = grid(kmin, kmax, samples)?;
            let all_smooth = system
                .conditions
                .iter()
                .all(|c| matches!(c, VertexCondition::Neumann | VertexCondition::Kirchhoff));
            if !all_smooth {
                eprintln!(
                    "notice: conditions outside the Neumann/Kirchhoff class; \
                     N_smooth is reported as 0 and N_total is the oscillatory part"
                );
            }
            let sf = counting_function(&system.graph, &system.conditions, &ks, numax)
                .map_err(classify)?;
            let mut csv = String::from("k,N_smooth,N_total,d_smoothed\n");
            for i in 0..ks.len() {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    sf.k[i], sf.n_smooth[i], sf.n_total[i], sf.density[i]
                ));
            }
            emit(out.as_ref(), &csv)
        }

        Command::Verify {
            graph,
            k,
            specht,
            specht_max_len,
        } => {
            let system = load(&graph)?;
            notice_leads_ignored(&system);
            if !(k > 0.0) {
                return Err(Failure::Usage(format!("k must be positive, got {k}")));
            }
            run_verify(&system, k, specht, specht_max_len)
        }

        Command::Orbits {
            graph,
            max_period,
            k,
            out,
        } => {
            let system = load(&graph)?;
            notice_leads_ignored(&system);
            let k_dependent = system
                .conditions
                .iter()
                .any(|c| !c.is_k_independent());
            if k_dependent && k.is_none() {
                return Err(Failure::Usage(
                    "k-dependent conditions make the orbit amplitudes depend on k; pass --k".into(),
                ));
            }
            let k_eval = k.unwrap_or(1.0);
            let basis = BondBasis::new(system.graph.topology());
            let mut csv = String::from("period,length,re_W,im_W,bond_sequence\n");
            for period in 1..=max_period {
                let mut orbits =
                    enumerate_orbits(&system.graph, &system.conditions, k_eval, period)
                        .map_err(classify)?;
                orbits.sort_by(|a, b| {
                    a.length
                        .partial_cmp(&b.length)
                        .unwrap()
                        .then_with(|| a.bonds.cmp(&b.bonds))
                });
                for orbit in &orbits {
                    let mut seq = format!("{}", basis.bond(orbit.bonds[0]).tail + 1);
                    for &b in &orbit.bonds {
                        seq.push_str(&format!(">{}", basis.bond(b).head + 1));
                    }
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        period, orbit.length, orbit.amplitude.re, orbit.amplitude.im, seq
                    ));
                }
            }
            emit(out.as_ref(), &csv)
        }

        Command::Greens { graph, k, xi, xf } => {
            let system = load(&graph)?;
            if system.graph.leads().is_none() {
                return Err(Failure::Usage(
                    "greens requires a [leads] section with entrance and exit".into(),
                ));
            }
            let value = greens_function(
                &system.graph,
                &system.conditions,
                k,
                xi,
                xf,
                system.units,
            )
            .map_err(classify)?;
            println!("re_G = {}", value.re);
            println!("im_G = {}", value.im);
            Ok(())
        }
    }
}

fn run_verify(
    system: &ParsedSystem,
    k: f64,
    specht: bool,
    specht_max_len: usize,
) -> Result<(), Failure> {
    const UNITARY_TOL: f64 = 1e-10;
    let graph = &system.graph;
    let conditions = &system.conditions;
    let mut all_pass = true;
    let mut check = |name: String, value: f64, threshold: f64| {
        let ok = value < threshold;
        all_pass &= ok;
        println!(
            "{} {name} = {value:.3e} (threshold {threshold:.1e})",
            if ok { "PASS" } else { "FAIL" }
        );
    };

    for v in 0..graph.vertex_count() {
        let degree = graph.topology().degree(v);
        let sigma = sigma_of_k(&conditions[v], degree, k).map_err(classify)?;
        check(
            format!("sigma[{}] unitarity", v + 1),
            sigma.unitarity_residual(),
            UNITARY_TOL,
        );
    }
    let s = build_bond_scattering(graph, conditions, k, true).map_err(classify)?;
    check("S unitarity".into(), s.unitarity_residual(), UNITARY_TOL);
    let d = build_propagator(graph, k).map_err(classify)?;
    let d_residual = d
        .diagonal()
        .iter()
        .map(|z| (z.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    check("D unitarity".into(), d_residual, UNITARY_TOL);

    let us = evolution_map(graph, conditions, k, Convention::SchrodingerOrder).map_err(classify)?;
    let ug = evolution_map(graph, conditions, k, Convention::GreensOrder).map_err(classify)?;
    check("U_S unitarity".into(), us.unitarity_residual(), UNITARY_TOL);
    check("U_G unitarity".into(), ug.unitarity_residual(), UNITARY_TOL);

    let zs = secular_determinant(graph, conditions, k, Convention::SchrodingerOrder)
        .map_err(classify)?;
    let zg =
        secular_determinant(graph, conditions, k, Convention::GreensOrder).map_err(classify)?;
    check(
        "secular determinant difference".into(),
        (zs - zg).norm() / (1.0 + zs.norm()),
        UNITARY_TOL,
    );

    let eigen = eigen_match(&us.matrix, &ug.matrix, UNITARY_TOL).map_err(classify)?;
    check("eigenvalue match residual".into(), eigen.residual, UNITARY_TOL);
    let degeneracy_ok = eigen.degeneracies_match;
    all_pass &= degeneracy_ok;
    println!(
        "{} degeneracy structure {:?} vs {:?}",
        if degeneracy_ok { "PASS" } else { "FAIL" },
        eigen.clusters_a,
        eigen.clusters_b
    );

    if specht {
        let opts = SpechtOptions {
            max_length: Some(specht_max_len),
            ..Default::default()
        };
        let report = specht_check(&us.matrix, &ug.matrix, &opts).map_err(classify)?;
        let ok = report.verdict == Verdict::Similar;
        all_pass &= ok;
        println!(
            "{} word traces: verdict {} (max diff {:.3e}, {} words to length {}{})",
            if ok { "PASS" } else { "FAIL" },
            report.verdict,
            report.max_trace_difference,
            report.word_traces.len(),
            report.max_length_used,
            if report.exhaustive {
                ", exhaustive"
            } else {
                ", truncated: evidence, not proof"
            }
        );
    }

    if all_pass {
        println!("verdict: all checks passed");
        Ok(())
    } else {
        println!("verdict: verification FAILED");
        Err(Failure::Verification)
    }
}
