use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use slitstone::admissibility::{barrier as build_barrier, barrier_search, profile_admissible, validate_datum, Profile};
use slitstone::expansion::extract_b;
use slitstone::symmetry::{classify_half_space, pair_run, ClassificationReport, PairInstance};
use slitstone::vi_solver::{
    assemble_with, contact_set, default_radii, m_emp, read_solution, solve_psor, solve_with_expansion_refinement,
    write_solution, BoundaryMode, ContactReport, DiscreteSolution,
};
use slitstone::Error;

use crate::config::RunConfig;
use crate::output::to_json;
use crate::CliError;

fn out_dir(flag: Option<PathBuf>, cfg: Option<&RunConfig>) -> Result<PathBuf, CliError> {
    let dir = flag.or_else(|| cfg.map(|c| c.out_dir.clone())).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Writes `text` to `dir/name` and echoes it on stdout.
fn emit(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), text)?;
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    command: &'static str,
    config_hash: String,
    config: &'a RunConfig,
    converged: bool,
    iterations: usize,
    residual: f64,
    omega: f64,
    #[serde(rename = "M_emp")]
    m_emp: f64,
    contact: ContactReport,
    b_history: Vec<Vec<f64>>,
    solution_file: String,
}

fn run_solve(cfg: &RunConfig) -> Result<(DiscreteSolution, Vec<Vec<f64>>), Error> {
    let d = cfg.datum();
    let mesh = cfg.mesh();
    let opts = cfg.psor();
    let single = |mode: BoundaryMode| -> Result<DiscreteSolution, Error> {
        solve_psor(&assemble_with(&d, mesh, mode, cfg.stencil())?, &opts)
    };
    match cfg.boundary_mode.as_str() {
        "exact" => {
            let q = cfg.profile().expect("exact mode has a profile").q();
            let shift = cfg.tau.expect("exact mode has tau");
            Ok((single(BoundaryMode::Exact { profile: q, shift })?, Vec::new()))
        }
        "enriched" => Ok((single(BoundaryMode::Enriched(cfg.b.clone().unwrap_or_default()))?, Vec::new())),
        _ if cfg.rounds == 1 || cfg.stencil() != Default::default() => {
            Ok((single(BoundaryMode::Datum)?, Vec::new()))
        }
        _ => {
            let r = solve_with_expansion_refinement(&d, mesh, cfg.n_terms, cfg.rounds, &opts, &cfg.radii)?;
            Ok((r.solution, r.b_history))
        }
    }
}

pub fn solve(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dir = out_dir(out, Some(&cfg))?;
    let (sol, history, failure) = match run_solve(&cfg) {
        Ok((s, h)) => (s, h, None),
        Err(Error::MaxIterExceeded { iterations, residual, best }) => (
            *best,
            Vec::new(),
            Some(CliError::NotConverged(format!(
                "MaxIterExceeded: {iterations} sweeps, residual {residual:e}"
            ))),
        ),
        Err(e) => return Err(e.into()),
    };
    let path = dir.join("solution.sol");
    let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
    write_solution(&sol, &mut file)?;
    drop(file);
    let summary = SolveSummary {
        command: "solve",
        config_hash: cfg.hash(),
        config: &cfg,
        converged: sol.converged,
        iterations: sol.iterations,
        residual: sol.residual,
        omega: sol.omega,
        m_emp: m_emp(&sol),
        contact: contact_set(&sol),
        b_history: history,
        solution_file: path.display().to_string(),
    };
    emit(&dir, "solve.json", &to_json(&summary))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn load_solution(path: &Path) -> Result<DiscreteSolution, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open solution {}: {e}", path.display())))?;
    read_solution(file).map_err(|e| CliError::Config(format!("solution {}: {e}", path.display())))
}

fn parse_list(field: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("flag `--{field}`: bad number {t:?}")))
        })
        .collect()
}

pub fn expand(
    solution: &Path,
    radii: Option<&str>,
    n: Option<usize>,
    strict: bool,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let sol = load_solution(solution)?;
    let radii = match radii {
        Some(s) => parse_list("radii", s)?,
        None => default_radii(&sol.mesh),
    };
    let n_terms = n.unwrap_or(2 * sol.datum.k() - 2);
    let report = extract_b(&sol, &sol.datum, &radii, n_terms)?;
    let csv = report.to_csv();
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            emit(&dir, "expansion.csv", &csv)?;
        }
        None => print!("{csv}"),
    }
    if strict && !report.consistent {
        return Err(CliError::Strict(format!(
            "radius spread {:e} exceeds threshold {:e}",
            report.max_deviation(),
            report.threshold
        )));
    }
    Ok(())
}

/// Classification fields as emitted in JSON.
#[derive(Serialize)]
struct ClassificationJson {
    half_space: bool,
    endpoint: Option<f64>,
    tau: Option<f64>,
    alpha: Vec<f64>,
    lead: Option<f64>,
    representation_residual: Option<f64>,
    #[serde(rename = "P_coeffs")]
    p_coeffs: Vec<f64>,
    fit_residual: Option<f64>,
    fit_window: Option<(f64, f64)>,
    contact: ContactReport,
    pair: Option<PairJson>,
}

#[derive(Serialize, Clone, Copy)]
struct PairJson {
    defect: f64,
    alpha_mirror_error: f64,
}

impl ClassificationJson {
    fn new(r: &ClassificationReport, pair: Option<PairJson>) -> Self {
        Self {
            half_space: r.half_space,
            endpoint: r.endpoint,
            tau: r.tau,
            alpha: r.alpha.clone(),
            lead: r.lead,
            representation_residual: r.representation_residual,
            p_coeffs: r.p_poly.as_ref().map(|p| p.coeffs.clone()).unwrap_or_default(),
            fit_residual: r.p_poly.as_ref().map(|p| p.fit_residual),
            fit_window: r.p_poly.as_ref().map(|p| p.fit_window),
            contact: r.contact.clone(),
            pair,
        }
    }
}

pub fn classify(solution: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let sol = load_solution(solution)?;
    let report = classify_half_space(&sol)?;
    let json = to_json(&ClassificationJson::new(&report, None));
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            emit(&dir, "classification.json", &json)?;
        }
        None => print!("{json}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct PairOutput<'a> {
    command: &'static str,
    config_hash: String,
    config: &'a RunConfig,
    b_plus: Vec<f64>,
    b_minus: Vec<f64>,
    antisymmetry_defect: f64,
    u: ClassificationJson,
    v: ClassificationJson,
    symmetry_deviation: Option<f64>,
    alpha_mirror_error: f64,
    endpoint_sum: f64,
    misfit: f64,
    pass: bool,
}

pub fn pair(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dir = out_dir(out, Some(&cfg))?;
    let instance = match cfg.boundary_mode.as_str() {
        "exact" => PairInstance::ClosedForm {
            profile: cfg.profile().expect("exact mode has a profile"),
            tau: cfg.tau.expect("exact mode has tau"),
        },
        _ => PairInstance::Datum(cfg.datum()),
    };
    let report = pair_run(&instance, cfg.n_terms, &cfg.pair_options())?;
    let summary = PairJson { defect: report.antisymmetry_defect, alpha_mirror_error: report.alpha_mirror_error };
    let json = to_json(&PairOutput {
        command: "pair",
        config_hash: cfg.hash(),
        config: &cfg,
        b_plus: report.b_plus.clone(),
        b_minus: report.b_minus.clone(),
        antisymmetry_defect: report.antisymmetry_defect,
        u: ClassificationJson::new(&report.u, Some(summary)),
        v: ClassificationJson::new(&report.v, Some(summary)),
        symmetry_deviation: report.symmetry.map(|s| s.deviation),
        alpha_mirror_error: report.alpha_mirror_error,
        endpoint_sum: report.endpoint_sum,
        misfit: report.misfit,
        pass: report.pass,
    });
    emit(&dir, "pair.json", &json)?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Symmetry("pair is not symmetric at the configured tolerances".into()))
    }
}

#[derive(Serialize)]
struct BarrierOutput<'a, T: Serialize> {
    command: &'static str,
    config_hash: String,
    config: &'a RunConfig,
    barrier: T,
}

pub fn barrier(config: &Path, tau: Option<f64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let d = validate_datum(cfg.k, &cfg.a).map_err(|e| CliError::Config(format!("config field `a`: {e}")))?;
    let dir = out_dir(out, Some(&cfg))?;
    let result = match tau.or(cfg.tau) {
        Some(t) => build_barrier(&d, t)?,
        None => barrier_search(&d)?,
    };
    let json = to_json(&BarrierOutput { command: "barrier", config_hash: cfg.hash(), config: &cfg, barrier: &result });
    emit(&dir, "barrier.json", &json)
}

#[derive(Serialize)]
struct AdmissibleOutput<'a> {
    command: &'static str,
    k: usize,
    alpha: &'a [f64],
    admissible: bool,
    zero_margin: bool,
    trace_poly: &'a [f64],
    slit_poly: &'a [f64],
    trace_roots: usize,
    slit_roots: usize,
}

pub fn admissible(alpha: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    let alpha = parse_list("alpha", alpha)?;
    if alpha.len() % 2 != 0 {
        return Err(CliError::Config(format!(
            "flag `--alpha`: {} values given; a profile has 2k - 2 of them",
            alpha.len()
        )));
    }
    let k = alpha.len() / 2 + 1;
    let profile = Profile::new(k, alpha.clone())?;
    let cert = profile_admissible(&profile);
    let json = to_json(&AdmissibleOutput {
        command: "admissible",
        k,
        alpha: &alpha,
        admissible: cert.admissible,
        zero_margin: cert.zero_margin,
        trace_poly: &cert.trace_poly,
        slit_poly: &cert.slit_poly,
        trace_roots: cert.trace.roots,
        slit_roots: cert.slit.roots,
    });
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            emit(&dir, "admissible.json", &json)
        }
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
