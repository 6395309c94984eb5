//! Reproducible experiment runs driven by a JSON configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::{coarsening_ratio, greedy_aggregate, AggregateMap};
use crate::analysis::{
    measure_eta_s, measure_eta_w, measure_kappa_af, measure_perturbation, upscaling_errors, verify_bounds,
    AnalysisReport, SapMode, REPORT_CSV_HEADER,
};
use crate::coarse::{build_coarse_space, CoarseOptions, CoarseSpace, LocalMatrix, Selection};
use crate::error::{Error, Result};
use crate::ingestion::{
    assemble_fem, load_graph_laplacian, read_edge_list_file, DMode, MeshSpec, ProblemKind, ProblemPair,
};
use crate::modification::{build_af, build_modified_p, Method, ModifiedCoarseSpace, PolynomialSpec};
use crate::solvers::{estimate_rho_tg, solve_to_tolerance, write_history_csv, TwoGrid};
use crate::sparse::matrix_market::{read_matrix_market_file, write_matrix_market_file};
use crate::sparse::vector::random_vector;
use crate::sparse::CsrMatrix;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemConfig {
    Fem(MeshSpec),
    Graph { path: PathBuf },
    MatrixMarket { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationConfig {
    pub target_size: usize,
    /// 1 aggregates on the matrix graph, 2 on its square.
    #[serde(default = "one")]
    pub power: u8,
}

fn one() -> u8 {
    1
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            target_size: 6,
            power: 1,
        }
    }
}

/// One method with a list of degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecGroup {
    pub method: Method,
    pub nu: Vec<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub drop_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Measurements {
    pub eta_w: bool,
    pub kappa_af: bool,
    pub eta_s: bool,
    pub eta_s_mode: SapMode,
    pub eta_s_samples: usize,
    pub perturbation: bool,
    pub perturbation_samples: usize,
    pub two_grid: bool,
    pub rho_tg: bool,
    pub rho_iters: usize,
    pub bounds: bool,
    pub bound_samples: usize,
}

impl Default for Measurements {
    fn default() -> Self {
        Self {
            eta_w: true,
            kappa_af: true,
            eta_s: true,
            eta_s_mode: SapMode::Extremal,
            eta_s_samples: 20,
            perturbation: false,
            perturbation_samples: 20,
            two_grid: true,
            rho_tg: false,
            rho_iters: 60,
            bounds: false,
            bound_samples: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsKind {
    /// Assembled load for FEM problems, seeded random otherwise.
    #[default]
    Auto,
    Load,
    Random,
    Ones,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub rtol: f64,
    pub max_iter: usize,
    pub rhs: RhsKind,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            max_iter: 1000,
            rhs: RhsKind::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub d_mode: DMode,
    #[serde(default)]
    pub aggregation: AggregationConfig,
    /// Local eigenvalue threshold; ignored when `coarse_per_aggregate` is set.
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub coarse_per_aggregate: Option<usize>,
    #[serde(default)]
    pub local_matrix: LocalMatrix,
    pub specs: Vec<SpecGroup>,
    #[serde(default)]
    pub measurements: Measurements,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub parallel: bool,
}

fn default_theta() -> f64 {
    0.05
}

fn default_eps_list() -> Vec<f64> {
    vec![1.0, 1e-2, 1e-4]
}

fn default_seed() -> u64 {
    crate::analysis::DEFAULT_SEED
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.specs.is_empty() {
            return bad("at least one spec is required".into());
        }
        if let Some(g) = self.specs.iter().find(|g| g.nu.is_empty()) {
            return bad(format!("spec '{}' has an empty nu list", g.method.name()));
        }
        if self.coarse_per_aggregate.is_none() && !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        if self.aggregation.target_size == 0 {
            return bad("aggregation target_size must be positive".into());
        }
        if !(self.solve.rtol > 0.0 && self.solve.rtol < 1.0) {
            return bad(format!("solve rtol must lie in (0, 1), got {}", self.solve.rtol));
        }
        match &self.problem {
            ProblemConfig::Fem(spec) => spec.validate().map_err(|e| Error::Config(e.to_string()))?,
            ProblemConfig::Graph { path } | ProblemConfig::MatrixMarket { path } => {
                if !path.exists() {
                    return bad(format!("input file {} does not exist", path.display()));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the settings that determine results (output location and
    /// threading excluded), first 16 hex digits.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("out");
            obj.remove("parallel");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// All `(method, nu)` points in configuration order.
    pub fn polynomial_specs(&self) -> Vec<PolynomialSpec> {
        self.specs
            .iter()
            .flat_map(|g| {
                g.nu.iter().map(move |&nu| PolynomialSpec {
                    method: g.method,
                    nu,
                    alpha: g.alpha,
                    beta: g.beta,
                    drop_tol: g.drop_tol,
                })
            })
            .collect()
    }

    fn coarse_options(&self) -> CoarseOptions {
        CoarseOptions {
            selection: match self.coarse_per_aggregate {
                Some(k) => Selection::FixedCount(k),
                None => Selection::Threshold(self.theta),
            },
            local_matrix: self.local_matrix,
        }
    }
}

/// Loaded problem with its right-hand side.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub label: String,
    pub pair: ProblemPair,
    pub rhs: Vec<f64>,
}

fn make_rhs(kind: RhsKind, load: Option<Vec<f64>>, n: usize, seed: u64) -> Result<Vec<f64>> {
    match (kind, load) {
        (RhsKind::Auto | RhsKind::Load, Some(l)) => Ok(l),
        (RhsKind::Load, None) => Err(Error::Config("rhs 'load' is only available for fem problems".into())),
        (RhsKind::Ones, _) => Ok(vec![1.0; n]),
        _ => Ok(random_vector(&mut ChaCha8Rng::seed_from_u64(seed), n)),
    }
}

pub fn load_fixture(cfg: &ExperimentConfig) -> Result<Fixture> {
    match &cfg.problem {
        ProblemConfig::Fem(spec) => fem_fixture(cfg, spec),
        ProblemConfig::Graph { path } => {
            let g = load_graph_laplacian(&read_edge_list_file(path)?, cfg.d_mode)?;
            let rhs = make_rhs(cfg.solve.rhs, None, g.pair.n(), cfg.seed)?;
            Ok(Fixture {
                label: format!("graph:{}", file_name(path)),
                pair: g.pair,
                rhs,
            })
        }
        ProblemConfig::MatrixMarket { path } => {
            let a = read_matrix_market_file(path)?;
            let pair = ProblemPair::new(a, cfg.d_mode, ProblemKind::Matrix)?;
            let rhs = make_rhs(cfg.solve.rhs, None, pair.n(), cfg.seed)?;
            Ok(Fixture {
                label: format!("matrix:{}", file_name(path)),
                pair,
                rhs,
            })
        }
    }
}

fn fem_fixture(cfg: &ExperimentConfig, spec: &MeshSpec) -> Result<Fixture> {
    let fem = assemble_fem(spec, cfg.d_mode)?;
    let n = fem.pair.n();
    let rhs = make_rhs(cfg.solve.rhs, Some(fem.load), n, cfg.seed)?;
    Ok(Fixture {
        label: format!("fem:m={}:eps={:e}", spec.m, spec.eps),
        pair: fem.pair,
        rhs,
    })
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Aggregates, tentative coarse space and `A_f` for one fixture.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub coarse: CoarseSpace,
    pub af: CsrMatrix,
}

pub fn aggregate(cfg: &ExperimentConfig, a: &CsrMatrix) -> Result<AggregateMap> {
    greedy_aggregate(a, cfg.aggregation.target_size, cfg.aggregation.power)
}

pub fn build_hierarchy(cfg: &ExperimentConfig, pair: &ProblemPair, map: &AggregateMap) -> Result<Hierarchy> {
    let coarse = build_coarse_space(&pair.a, &pair.d, map, &cfg.coarse_options())?;
    let af = build_af(&pair.a, &coarse.p_perp)?;
    Ok(Hierarchy { coarse, af })
}

/// Short SHA-256 of an aggregate assignment.
pub fn aggregation_hash(map: &AggregateMap) -> String {
    let mut h = Sha256::new();
    for a in map.assignment() {
        h.update((*a as u64).to_le_bytes());
    }
    hex::encode(h.finalize())[..16].to_string()
}

/// Spec-independent measurements shared by every point of a sweep.
#[derive(Debug, Clone, Copy, Default)]
struct Shared {
    eta_w_global: Option<f64>,
    kappa_af: Option<f64>,
}

fn shared_measurements(cfg: &ExperimentConfig, fx: &Fixture, h: &Hierarchy) -> Result<Shared> {
    let m = &cfg.measurements;
    let needs_eta = m.eta_w || m.bounds;
    let eta_w_global = if needs_eta {
        Some(measure_eta_w(&fx.pair.a, &fx.pair.d, &h.coarse, cfg.seed)?.global)
    } else {
        None
    };
    let kappa_af = if m.kappa_af && h.af.nrows() > 0 {
        Some(measure_kappa_af(&h.af)?.kappa)
    } else {
        None
    };
    Ok(Shared { eta_w_global, kappa_af })
}

struct Point {
    report: AnalysisReport,
    history: Vec<f64>,
    mcs: ModifiedCoarseSpace,
}

fn evaluate(
    cfg: &ExperimentConfig,
    fx: &Fixture,
    h: &Hierarchy,
    shared: Shared,
    spec: &PolynomialSpec,
) -> Result<Point> {
    let (a, d) = (&fx.pair.a, &fx.pair.d);
    let m = &cfg.measurements;
    let mcs = build_modified_p(a, &h.coarse, &h.af, spec)?;
    let n_c = mcs.p_tilde.ncols();
    let mut r = AnalysisReport {
        fixture: fx.label.clone(),
        seed: cfg.seed,
        method: spec.method.name().to_string(),
        nu: spec.nu,
        n: a.nrows(),
        n_c,
        coarsening_ratio: coarsening_ratio(&h.coarse.map, n_c)?,
        nnz_percent: mcs.nnz_percent,
        operator_complexity: mcs.operator_complexity,
        eta_w_local: h.coarse.eta_w_local,
        eta_w_global: shared.eta_w_global.filter(|_| m.eta_w),
        kappa_af: shared.kappa_af,
        ..Default::default()
    };
    let (ea, ed) = upscaling_errors(a, d, &mcs, &fx.rhs)?;
    r.energy_error = Some(ea);
    r.d_error = Some(ed);
    if m.eta_s {
        r.eta_s = Some(measure_eta_s(a, d, &mcs, m.eta_s_samples, m.eta_s_mode, cfg.seed)?);
    }
    if m.perturbation {
        r.perturbation_norm = Some(measure_perturbation(
            a,
            d,
            &h.coarse,
            &h.af,
            spec,
            m.perturbation_samples,
            cfg.seed,
        )?);
    }
    let mut history = Vec::new();
    if m.two_grid || m.rho_tg {
        let tg = TwoGrid::with_coarse_matrix(a, &mcs.p_tilde, mcs.a_c.clone())?;
        if m.two_grid {
            let out = solve_to_tolerance(&tg, &fx.rhs, cfg.solve.rtol, cfg.solve.max_iter)?;
            r.iters = Some(out.iters);
            history = out.history;
        }
        if m.rho_tg {
            let est = estimate_rho_tg(&tg, m.rho_iters, cfg.seed)?;
            r.rho_tg = Some(est.rho);
            r.k_tg = Some(est.k_tg);
        }
    }
    if m.bounds {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xb0);
        let rhs: Vec<Vec<f64>> = (0..m.bound_samples).map(|_| random_vector(&mut rng, a.nrows())).collect();
        let eta = shared.eta_w_global.expect("computed when bounds are requested");
        r.bounds_ok = Some(verify_bounds(a, d, &mcs, eta, &rhs)?.passed());
    }
    Ok(Point { report: r, history, mcs })
}

fn evaluate_all(
    cfg: &ExperimentConfig,
    fx: &Fixture,
    h: &Hierarchy,
    shared: Shared,
    specs: &[PolynomialSpec],
) -> Result<Vec<Point>> {
    if cfg.parallel {
        specs.par_iter().map(|s| evaluate(cfg, fx, h, shared, s)).collect()
    } else {
        specs.iter().map(|s| evaluate(cfg, fx, h, shared, s)).collect()
    }
}

fn first_violation(points: &[Point]) -> Option<Error> {
    points.iter().find_map(|p| {
        p.report
            .check_invariants()
            .err()
            .map(|msg| Error::Invariant(format!("{} nu={}: {msg}", p.report.method, p.report.nu)))
    })
}

/// Output file writer that stamps the library version and config hash.
struct CsvOut {
    path: PathBuf,
    buf: Vec<u8>,
}

impl CsvOut {
    fn new(dir: &Path, name: &str, cfg: &ExperimentConfig, header: &str) -> Self {
        let mut buf = Vec::new();
        writeln!(buf, "# amg-upscale {VERSION} config {} seed {}", cfg.hash(), cfg.seed).expect("vec write");
        writeln!(buf, "{header}").expect("vec write");
        Self {
            path: dir.join(name),
            buf,
        }
    }

    fn finish(self) -> Result<PathBuf> {
        fs::write(&self.path, &self.buf)?;
        Ok(self.path)
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    Ok(cfg.out.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Build,
    SweepNu,
    SweepEps,
    Solve,
    Report,
}

/// Runs `cmd` and returns the files it wrote. Outputs are written before an
/// invariant violation is reported.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    match cmd {
        Command::Build => cmd_build(cfg),
        Command::SweepNu => cmd_sweep_nu(cfg),
        Command::SweepEps => cmd_sweep_eps(cfg),
        Command::Solve => cmd_solve(cfg),
        Command::Report => cmd_report(cfg),
    }
}

fn spec_tag(spec: &PolynomialSpec) -> String {
    format!("{}_{}", spec.method.name(), spec.nu)
}

/// Max-entry deviation of `[P P_perp]^T D [P P_perp]` from the identity.
pub fn orthonormality_error(d: &CsrMatrix, cs: &CoarseSpace) -> Result<f64> {
    let mut worst = 0.0f64;
    for (x, y, same) in [(&cs.p, &cs.p, true), (&cs.p_perp, &cs.p_perp, true), (&cs.p, &cs.p_perp, false)] {
        let g = x.transpose().matmul(&d.matmul(y)?)?;
        let g = if same {
            g.add_scaled(1.0, &CsrMatrix::identity(g.nrows()), -1.0)?
        } else {
            g
        };
        worst = worst.max(g.max_abs());
    }
    Ok(worst)
}

pub fn cmd_build(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let out = prepare_out(cfg)?;
    let fx = load_fixture(cfg)?;
    let map = aggregate(cfg, &fx.pair.a)?;
    let h = build_hierarchy(cfg, &fx.pair, &map)?;
    let mut files = Vec::new();
    for (name, m) in [("A", &fx.pair.a), ("D", &fx.pair.d), ("P", &h.coarse.p), ("P_perp", &h.coarse.p_perp)] {
        let p = out.join(format!("{name}.mtx"));
        write_matrix_market_file(m, &p)?;
        files.push(p);
    }
    let agg_path = out.join("aggregates.csv");
    map.write_csv(fs::File::create(&agg_path)?)?;
    files.push(agg_path);

    let ortho = orthonormality_error(&fx.pair.d, &h.coarse)?;
    let mut csv = CsvOut::new(
        &out,
        "summary.csv",
        cfg,
        "method,nu,n,n_aggregates,n_c,coarsening_ratio,nnz_percent,operator_complexity,eta_w_local,orthonormality_error",
    );
    let specs = cfg.polynomial_specs();
    let built: Vec<ModifiedCoarseSpace> = if cfg.parallel {
        specs.par_iter().map(|s| build_modified_p(&fx.pair.a, &h.coarse, &h.af, s)).collect::<Result<_>>()?
    } else {
        specs.iter().map(|s| build_modified_p(&fx.pair.a, &h.coarse, &h.af, s)).collect::<Result<_>>()?
    };
    let mut records = Vec::new();
    for (spec, mcs) in specs.iter().zip(&built) {
        let tag = spec_tag(spec);
        for (name, m) in [("P_tilde", &mcs.p_tilde), ("A_c", &mcs.a_c)] {
            let p = out.join(format!("{name}_{tag}.mtx"));
            write_matrix_market_file(m, &p)?;
            files.push(p);
        }
        let n_c = mcs.p_tilde.ncols();
        writeln!(
            csv.buf,
            "{},{},{},{},{},{},{},{},{},{}",
            spec.method.name(),
            spec.nu,
            fx.pair.n(),
            map.num_aggregates(),
            n_c,
            num(Some(coarsening_ratio(&map, n_c)?)),
            num(Some(mcs.nnz_percent)),
            num(Some(mcs.operator_complexity)),
            num(Some(h.coarse.eta_w_local)),
            num(Some(ortho)),
        )?;
        records.push(mcs.record());
    }
    files.push(csv.finish()?);

    let summary = serde_json::json!({
        "version": VERSION,
        "config_hash": cfg.hash(),
        "fixture": fx.label,
        "aggregation_hash": aggregation_hash(&map),
        "n": fx.pair.n(),
        "n_aggregates": map.num_aggregates(),
        "n_coarse": h.coarse.n_coarse(),
        "eta_w_local": h.coarse.eta_w_local,
        "orthonormality_error": ortho,
        "specs": records,
        "config": cfg,
    });
    let json_path = out.join("summary.json");
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    files.push(json_path);

    const ORTHO_TOL: f64 = 1e-9;
    if !(ortho <= ORTHO_TOL) {
        return Err(Error::Invariant(format!(
            "[P P_perp] is not D-orthonormal: deviation {ortho:e}"
        )));
    }
    Ok(files)
}

pub fn cmd_sweep_nu(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let out = prepare_out(cfg)?;
    let fx = load_fixture(cfg)?;
    let map = aggregate(cfg, &fx.pair.a)?;
    let h = build_hierarchy(cfg, &fx.pair, &map)?;
    let shared = shared_measurements(cfg, &fx, &h)?;
    let points = evaluate_all(cfg, &fx, &h, shared, &cfg.polynomial_specs())?;
    let mut csv = CsvOut::new(
        &out,
        "sweep_nu.csv",
        cfg,
        "nu,method,eta_s,nnz_percent,operator_complexity,iters,energy_error,perturbation",
    );
    for p in &points {
        let r = &p.report;
        writeln!(
            csv.buf,
            "{},{},{},{},{},{},{},{}",
            r.nu,
            r.method,
            num(r.eta_s),
            num(Some(r.nnz_percent)),
            num(Some(r.operator_complexity)),
            r.iters.map(|i| i.to_string()).unwrap_or_default(),
            num(r.energy_error),
            num(r.perturbation_norm),
        )?;
    }
    let files = vec![csv.finish()?];
    match first_violation(&points) {
        Some(e) => Err(e),
        None => Ok(files),
    }
}

pub fn cmd_sweep_eps(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let ProblemConfig::Fem(base) = &cfg.problem else {
        return Err(Error::Config("sweep-eps needs a fem problem".into()));
    };
    if cfg.eps_list.is_empty() {
        return Err(Error::Config("eps_list is empty".into()));
    }
    let out = prepare_out(cfg)?;
    let mut csv = CsvOut::new(&out, "sweep_eps.csv", cfg, "eps,nu,method,eta_s,n_c,aggregation_hash");
    let specs = cfg.polynomial_specs();
    let mut map: Option<AggregateMap> = None;
    let mut violations = Vec::new();
    for &eps in &cfg.eps_list {
        let spec = MeshSpec { eps, ..base.clone() };
        let fx = fem_fixture(cfg, &spec)?;
        // the pattern does not depend on eps, so one aggregation serves all
        let map = map.get_or_insert(aggregate(cfg, &fx.pair.a)?);
        let h = build_hierarchy(cfg, &fx.pair, map)?;
        let shared = shared_measurements(cfg, &fx, &h)?;
        let points = evaluate_all(cfg, &fx, &h, shared, &specs)?;
        let agg = aggregation_hash(map);
        for p in &points {
            writeln!(
                csv.buf,
                "{},{},{},{},{},{agg}",
                num(Some(eps)),
                p.report.nu,
                p.report.method,
                num(p.report.eta_s),
                p.report.n_c,
            )?;
        }
        violations.extend(first_violation(&points));
    }
    let files = vec![csv.finish()?];
    match violations.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(files),
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let out = prepare_out(cfg)?;
    let fx = load_fixture(cfg)?;
    let map = aggregate(cfg, &fx.pair.a)?;
    let h = build_hierarchy(cfg, &fx.pair, &map)?;
    let mut solve_cfg = cfg.clone();
    solve_cfg.measurements = Measurements {
        eta_w: false,
        kappa_af: false,
        eta_s: false,
        perturbation: false,
        two_grid: true,
        bounds: false,
        ..cfg.measurements
    };
    let points = evaluate_all(&solve_cfg, &fx, &h, Shared::default(), &cfg.polynomial_specs())?;
    let mut files = Vec::new();
    let mut csv = CsvOut::new(
        &out,
        "solve.csv",
        cfg,
        "method,nu,n_c,iters,final_relres,rho_tg,k_tg,energy_error,d_error",
    );
    for p in &points {
        let r = &p.report;
        writeln!(
            csv.buf,
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            r.nu,
            r.n_c,
            r.iters.map(|i| i.to_string()).unwrap_or_default(),
            num(p.history.last().copied()),
            num(r.rho_tg),
            num(r.k_tg),
            num(r.energy_error),
            num(r.d_error),
        )?;
        let path = out.join(format!("history_{}.csv", spec_tag(&p.mcs.spec)));
        write_history_csv(&p.history, fs::File::create(&path)?)?;
        files.push(path);
    }
    files.insert(0, csv.finish()?);
    match first_violation(&points) {
        Some(e) => Err(e),
        None => Ok(files),
    }
}

pub fn cmd_report(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let out = prepare_out(cfg)?;
    let fx = load_fixture(cfg)?;
    let map = aggregate(cfg, &fx.pair.a)?;
    let h = build_hierarchy(cfg, &fx.pair, &map)?;
    let shared = shared_measurements(cfg, &fx, &h)?;
    let points = evaluate_all(cfg, &fx, &h, shared, &cfg.polynomial_specs())?;
    let mut csv = CsvOut::new(&out, "report.csv", cfg, REPORT_CSV_HEADER);
    for p in &points {
        p.report.write_csv_row(&mut csv.buf)?;
    }
    let reports: Vec<&AnalysisReport> = points.iter().map(|p| &p.report).collect();
    let json = serde_json::json!({
        "version": VERSION,
        "config_hash": cfg.hash(),
        "reports": reports,
    });
    let json_path = out.join("report.json");
    fs::write(&json_path, serde_json::to_string_pretty(&json)? + "\n")?;
    let files = vec![csv.finish()?, json_path];
    match first_violation(&points) {
        Some(e) => Err(e),
        None => Ok(files),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::from_json(
            r#"{"problem": {"kind": "fem", "m": 8, "eps": 0.01},
                "aggregation": {"target_size": 4},
                "theta": 0.1,
                "specs": [{"method": "sa", "nu": [0, 1, 2]}]}"#,
        )
        .unwrap();
        cfg.out = out.to_path_buf();
        cfg
    }

    #[test]
    fn defaults_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        assert_eq!(cfg.aggregation.power, 1);
        assert_eq!(cfg.solve.rtol, 1e-6);
        assert!(cfg.validate().is_ok());
        cfg.specs[0].nu.clear();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.specs.clear();
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"problem": {"kind": "fem", "m": 8, "eps": 1}, "specs": [], "bogus": 1}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = small(Path::new("x"));
        let mut b = small(Path::new("y"));
        b.parallel = true;
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn sweep_nu_rows_and_determinism() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let c1 = small(d1.path());
        let mut c2 = small(d2.path());
        c2.parallel = true;
        let f1 = cmd_sweep_nu(&c1).unwrap();
        let f2 = cmd_sweep_nu(&c2).unwrap();
        let t1 = fs::read_to_string(&f1[0]).unwrap();
        assert_eq!(t1, fs::read_to_string(&f2[0]).unwrap());
        assert!(t1.contains(&c1.hash()) && t1.contains(VERSION));
        assert_eq!(t1.lines().count(), 2 + 3);
    }

    #[test]
    fn sweep_eps_needs_fem() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.problem = ProblemConfig::MatrixMarket {
            path: dir.path().join("missing.mtx"),
        };
        assert!(cmd_sweep_eps(&cfg).is_err());
    }

    #[test]
    fn build_writes_hierarchy() {
        let dir = tempfile::tempdir().unwrap();
        let files = cmd_build(&small(dir.path())).unwrap();
        for name in ["A.mtx", "P_perp.mtx", "P_tilde_sa_2.mtx", "summary.csv", "summary.json"] {
            assert!(files.iter().any(|f| f.ends_with(name)), "{name}");
        }
    }
}
