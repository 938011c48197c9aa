mod config;
mod output;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfou::asymptotics::{
    contraction_decay, limiting_covariance, six_region_limit, Pairing, DEFAULT_EXTRAPOLATION_T,
};
use cfou::grid_chaos::{fourth_moment_gap_routes, GridKernel, PhiGram, GAP_ROUTE_TOL};
use cfou::isserlis::{oracle_moments, ISSERLIS_CAP};
use cfou::mc_lab::{run_experiment, ExperimentConfig};
use cfou::ou_sim::{estimate, simulate, ModelParams, Trajectory};
use cfou::randfield::GridSpec;
use cfou::seed::{splitmix64, sub_seed};
use cfou::CfouError;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use config::{parse_list, RunConfig};
use output::{g12, CsvWriter};

#[derive(Parser)]
#[command(name = "cfou", version, about = "Complex fractional OU simulation and drift estimation")]
struct Cli {
    /// Run file with `[model]`, `[grid]`, `[run]`, `[chaos]`, `[asymptotics]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write `t,re_z,im_z`.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drift estimate from a simulated path or a CSV written by `simulate`.
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Read the path from this file instead of simulating it.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limit constants d, σ², c, b and the covariance of √T(γ̂ − γ).
    Asymptotics {
        #[command(flatten)]
        model: ModelArgs,
        /// Also run the six-region extrapolation route.
        #[arg(long)]
        six_region: bool,
        /// Horizons for the six-region extrapolation, comma separated.
        #[arg(long)]
        six_region_t: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo study of the estimator over several horizons.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        dt: Option<f64>,
        /// Horizons, comma separated.
        #[arg(long)]
        t_list: Option<String>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to $CFOU_WORKERS, then 1.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalised contraction norms of the estimator kernels.
    Contractions {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_list: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourth-moment gap of random grid kernels by both routes.
    Chaoscheck {
        #[arg(long)]
        h: Option<f64>,
        /// Grid size of each kernel.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z0_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z0_im: Option<f64>,
}

#[derive(Args)]
struct GridArgs {
    /// Horizon T.
    #[arg(long)]
    t: Option<f64>,
    /// Number of steps; alternative to --dt.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
}

enum Failure {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl From<CfouError> for Failure {
    fn from(e: CfouError) -> Self {
        match e {
            CfouError::Argument(_) | CfouError::Resource(_) => Failure::Usage(e.to_string()),
            CfouError::Numerical { .. } | CfouError::DegeneratePath(_) => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

type Outcome<T = ()> = Result<T, Failure>;

/// Flag value, else config value, else default.
struct Resolver {
    cfg: RunConfig,
}

impl Resolver {
    fn pick<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Outcome<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.cfg.get(key).map_err(Failure::Usage),
        }
    }

    fn or<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Outcome<T> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    fn require<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Outcome<T> {
        let flag_name = key.rsplit('.').next().unwrap().replace('_', "-");
        self.pick(flag, key)?
            .ok_or_else(|| Failure::Usage(format!("missing --{flag_name} (or `{key}` in the config file)")))
    }

    fn list(&self, flag: Option<String>, key: &str, default: &[f64]) -> Outcome<Vec<f64>> {
        match flag {
            Some(s) => parse_list(&s).map_err(Failure::Usage),
            None => Ok(self.cfg.list(key).map_err(Failure::Usage)?.unwrap_or_else(|| default.to_vec())),
        }
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.cfg.raw(key).map(PathBuf::from))
    }

    fn model(&self, m: ModelArgs) -> Outcome<ModelParams> {
        let h = self.require(m.h, "model.h")?;
        let lambda = self.or(m.lambda, "model.lambda", 1.0)?;
        let omega = self.or(m.omega, "model.omega", 0.0)?;
        let a = self.or(m.a, "model.a", 1.0)?;
        let z0 = Complex64::new(self.or(m.z0_re, "model.z0_re", 0.0)?, self.or(m.z0_im, "model.z0_im", 0.0)?);
        Ok(ModelParams::new(lambda, omega, a, h)?.with_z0(z0))
    }

    fn grid(&self, g: GridArgs) -> Outcome<GridSpec> {
        let t = self.require(g.t, "grid.t")?;
        let n = self.pick(g.n, "grid.n")?;
        let dt = self.pick(g.dt, "grid.dt")?;
        match (n, dt) {
            (Some(n), None) => Ok(GridSpec::new(t, n)?),
            (None, Some(dt)) => Ok(GridSpec::with_step(t, dt)?),
            (None, None) => Err(Failure::Usage("one of --n or --dt is required".into())),
            (Some(_), Some(_)) => Err(Failure::Usage("give only one of --n and --dt".into())),
        }
    }

    fn workers(&self, flag: Option<usize>) -> Outcome<usize> {
        if let Some(w) = self.pick(flag, "run.workers")? {
            return Ok(w);
        }
        match std::env::var("CFOU_WORKERS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("CFOU_WORKERS = `{v}` is not a worker count"))),
            Err(_) => Ok(1),
        }
    }
}

fn open_csv(path: &Path, header: &[&str]) -> Outcome<CsvWriter> {
    CsvWriter::create(path, header).map_err(io_err(path))
}

fn cell<T: Display>(v: T) -> String {
    v.to_string()
}

fn cmd_simulate(r: &Resolver, model: ModelArgs, grid: GridArgs, seed: Option<u64>, out: Option<PathBuf>) -> Outcome {
    let params = r.model(model)?;
    params.require_estimation_range()?;
    let grid = r.grid(grid)?;
    let seed = r.or(seed, "run.seed", 0)?;
    let out = r.path(out, "run.out").ok_or_else(|| Failure::Usage("missing --out".into()))?;
    let tr = simulate(params, grid, seed)?;
    let mut w = open_csv(&out, &["t", "re_z", "im_z"])?;
    for (k, z) in tr.z.iter().enumerate() {
        w.row(&[g12(grid.time(k)), g12(z.re), g12(z.im)]).map_err(io_err(&out))?;
    }
    w.finish().map_err(io_err(&out))?;
    println!("wrote {} points (T = {}, n = {}, seed = {seed}) to {}", tr.z.len(), g12(grid.t_max()), grid.n_steps(), out.display());
    Ok(())
}

fn read_path(path: &Path, params: ModelParams) -> Outcome<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |msg: String| Failure::Usage(format!("{}: {msg}", path.display()));
    let mut t = Vec::new();
    let mut z = Vec::new();
    let mut header_seen = false;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "t,re_z,im_z" {
                return Err(bad(format!("expected header t,re_z,im_z, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("line {}: not three numbers", no + 1)))?;
        if f.len() != 3 {
            return Err(bad(format!("line {}: expected 3 fields", no + 1)));
        }
        t.push(f[0]);
        z.push(Complex64::new(f[1], f[2]));
    }
    if z.len() < 2 || t[0] != 0.0 {
        return Err(bad("need at least two points starting at t = 0".into()));
    }
    let n = z.len() - 1;
    let grid = GridSpec::new(t[n], n)?;
    let uniform = t.iter().enumerate().all(|(k, &tk)| (tk - grid.time(k)).abs() <= 1e-9 * grid.t_max());
    if !uniform {
        return Err(bad("time column is not a uniform grid".into()));
    }
    Ok(Trajectory { grid, z, params: params.with_z0(Complex64::new(0.0, 0.0)), seed: 0 })
}

fn cmd_estimate(
    r: &Resolver,
    model: ModelArgs,
    grid: GridArgs,
    seed: Option<u64>,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Outcome {
    let params = r.model(model)?;
    params.require_estimation_range()?;
    let tr = match r.path(input, "run.input") {
        Some(path) => read_path(&path, params)?,
        None => simulate(params, r.grid(grid)?, r.or(seed, "run.seed", 0)?)?,
    };
    let est = estimate(&tr)?;
    let truth = params.gamma();
    println!("T = {}, n = {}", g12(est.t_max), est.n_steps);
    println!("gamma_true          = {} {:+}i", g12(truth.re), g12(truth.im));
    println!("gamma_hat           = {} {:+}i", g12(est.gamma_hat.re), g12(est.gamma_hat.im));
    println!("gamma_hat_pathwise  = {} {:+}i", g12(est.gamma_hat_pathwise.re), g12(est.gamma_hat_pathwise.im));
    println!("wick_correction     = {} {:+}i", g12(est.numerator_correction.re), g12(est.numerator_correction.im));
    if let Some(out) = r.path(out, "run.out") {
        let mut w = open_csv(
            &out,
            &[
                "t_max", "n_steps", "re_gamma_hat", "im_gamma_hat", "re_gamma_hat_pathwise",
                "im_gamma_hat_pathwise", "denom", "re_correction", "im_correction",
            ],
        )?;
        w.row(&[
            g12(est.t_max),
            cell(est.n_steps),
            g12(est.gamma_hat.re),
            g12(est.gamma_hat.im),
            g12(est.gamma_hat_pathwise.re),
            g12(est.gamma_hat_pathwise.im),
            g12(est.denom),
            g12(est.numerator_correction.re),
            g12(est.numerator_correction.im),
        ])
        .map_err(io_err(&out))?;
        w.finish().map_err(io_err(&out))?;
    }
    Ok(())
}

fn cmd_asymptotics(
    r: &Resolver,
    model: ModelArgs,
    six_region: bool,
    six_region_t: Option<String>,
    out: Option<PathBuf>,
) -> Outcome {
    let params = r.model(model)?;
    let lc = limiting_covariance(&params)?;
    let mut rows: Vec<(&str, f64, f64)> = vec![
        ("d", lc.d, lc.d_error),
        ("sigma2", lc.sigma2, lc.sigma2_error),
        ("c", lc.c, lc.cb_error),
        ("b", lc.b, lc.cb_error),
        ("cov_11", lc.cov[0][0], 0.0),
        ("cov_12", lc.cov[0][1], 0.0),
        ("cov_22", lc.cov[1][1], 0.0),
        ("cov_nominal_11", lc.cov_nominal[0][0], 0.0),
        ("cov_nominal_12", lc.cov_nominal[0][1], 0.0),
        ("cov_nominal_22", lc.cov_nominal[1][1], 0.0),
    ];
    let six_region = six_region || r.cfg.get::<bool>("asymptotics.six_region").map_err(Failure::Usage)?.unwrap_or(false);
    if six_region && !params.h.is_brownian() {
        let ts = r.list(six_region_t, "asymptotics.six_region_t", &DEFAULT_EXTRAPOLATION_T)?;
        let s = six_region_limit(&params, Pairing::Modulus, &ts)?;
        let cb = six_region_limit(&params, Pairing::Square, &ts)?;
        rows.push(("sigma2_six_region", s.value.re, s.est_error));
        rows.push(("c_six_region", cb.value.re, cb.est_error));
        rows.push(("b_six_region", cb.value.im, cb.est_error));
    }
    println!(
        "h = {}, lambda = {}, omega = {}, a = {}",
        g12(params.h.value()),
        g12(params.lambda),
        g12(params.omega),
        g12(params.a)
    );
    for (name, v, e) in &rows {
        println!("{name:<18} = {:<20} (error {})", g12(*v), g12(*e));
    }
    println!(
        "cov                = [[{}, {}], [{}, {}]]",
        g12(lc.cov[0][0]),
        g12(lc.cov[0][1]),
        g12(lc.cov[1][0]),
        g12(lc.cov[1][1])
    );
    println!(
        "cov_nominal        = [[{}, {}], [{}, {}]]",
        g12(lc.cov_nominal[0][0]),
        g12(lc.cov_nominal[0][1]),
        g12(lc.cov_nominal[1][0]),
        g12(lc.cov_nominal[1][1])
    );
    if let Some(out) = r.path(out, "run.out") {
        let mut w = open_csv(&out, &["name", "value", "error"])?;
        for (name, v, e) in &rows {
            w.row(&[cell(name), g12(*v), g12(*e)]).map_err(io_err(&out))?;
        }
        w.finish().map_err(io_err(&out))?;
    }
    Ok(())
}

const MC_HEADER: &[&str] = &[
    "t_max", "n_steps", "attempted", "succeeded", "failed", "re_mean_gamma_hat", "im_mean_gamma_hat", "bias",
    "bias_se", "re_mean_gamma_hat_pathwise", "im_mean_gamma_hat_pathwise", "bias_pathwise", "bias_pathwise_se",
    "re_mean_noise_pathwise", "im_mean_noise_pathwise", "noise_pathwise_se", "re_wick_trace", "im_wick_trace",
    "cov_11", "cov_12", "cov_22", "cov_11_se", "cov_12_se", "cov_22_se", "mahalanobis_mean",
];

#[allow(clippy::too_many_arguments)]
fn cmd_mc(
    r: &Resolver,
    model: ModelArgs,
    dt: Option<f64>,
    t_list: Option<String>,
    replicas: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
) -> Outcome {
    let cfg = ExperimentConfig {
        params: r.model(model)?,
        t_list: r.list(t_list, "run.t_list", &[50.0, 100.0, 200.0, 400.0])?,
        dt: r.require(dt, "grid.dt")?,
        replicas: r.or(replicas, "run.replicas", 100)?,
        base_seed: r.or(seed, "run.seed", 0)?,
        workers: r.workers(workers)?,
    };
    let summary = run_experiment(&cfg)?;
    if let Some(p) = summary.predicted_cov {
        println!("predicted cov = [[{}, {}], [{}, {}]]", g12(p[0][0]), g12(p[0][1]), g12(p[1][0]), g12(p[1][1]));
    }
    println!("{:>10} {:>8} {:>14} {:>12} {:>14}", "T", "ok", "bias", "bias_se", "bias_pathwise");
    for row in &summary.rows {
        println!(
            "{:>10} {:>8} {:>14} {:>12} {:>14}",
            g12(row.t_max),
            row.succeeded,
            format!("{:.6e}", row.bias),
            format!("{:.3e}", row.bias_se),
            format!("{:.6e}", row.bias_pathwise)
        );
    }
    if let Some(out) = r.path(out, "run.out") {
        let mut w = open_csv(&out, MC_HEADER)?;
        for row in &summary.rows {
            let c = row.sample_cov;
            let s = row.sample_cov_se;
            w.row(&[
                g12(row.t_max),
                cell(row.n_steps),
                cell(row.attempted),
                cell(row.succeeded),
                cell(row.failed),
                g12(row.mean_gamma_hat.re),
                g12(row.mean_gamma_hat.im),
                g12(row.bias),
                g12(row.bias_se),
                g12(row.mean_gamma_hat_pathwise.re),
                g12(row.mean_gamma_hat_pathwise.im),
                g12(row.bias_pathwise),
                g12(row.bias_pathwise_se),
                g12(row.mean_noise_pathwise.re),
                g12(row.mean_noise_pathwise.im),
                g12(row.noise_pathwise_se),
                g12(row.wick_trace.re),
                g12(row.wick_trace.im),
                g12(c[0][0]),
                g12(c[0][1]),
                g12(c[1][1]),
                g12(s[0][0]),
                g12(s[0][1]),
                g12(s[1][1]),
                row.mahalanobis_mean.map(g12).unwrap_or_default(),
            ])
            .map_err(io_err(&out))?;
        }
        w.finish().map_err(io_err(&out))?;
    }
    Ok(())
}

fn cmd_contractions(
    r: &Resolver,
    model: ModelArgs,
    dt: Option<f64>,
    t_list: Option<String>,
    out: Option<PathBuf>,
) -> Outcome {
    let params = r.model(model)?;
    let ts = r.list(t_list, "run.t_list", &[25.0, 50.0, 100.0, 200.0])?;
    let dt = r.or(dt, "grid.dt", 0.25)?;
    let rows = contraction_decay(&params, &ts, dt)?;
    let header = ["t_max", "n_steps", "psi_psi_01", "psi_psi_10", "psi_h_01", "psi_h_10"];
    println!("{}", header.join("  "));
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                g12(r.t_max),
                cell(r.n_steps),
                g12(r.psi_psi_01),
                g12(r.psi_psi_10),
                g12(r.psi_h_01),
                g12(r.psi_h_10),
            ]
        })
        .collect();
    for c in &cells {
        println!("{}", c.join("  "));
    }
    if let Some(out) = r.path(out, "run.out") {
        let mut w = open_csv(&out, &header)?;
        for c in &cells {
            w.row(c).map_err(io_err(&out))?;
        }
        w.finish().map_err(io_err(&out))?;
    }
    Ok(())
}

fn random_kernel(h: f64, n: usize, seed: u64) -> Outcome<GridKernel> {
    let gram = PhiGram::shared(cfou::randfield::HurstParam::new(h)?, GridSpec::new(1.0, n)?)?;
    let mut state = seed;
    Ok(GridKernel::from_fn(gram, |_, _| {
        let re = uniform(&mut state);
        let im = uniform(&mut state);
        Complex64::new(re, im)
    }))
}

/// Uniform on (−1, 1) from a splitmix counter.
fn uniform(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let bits = splitmix64(*state) >> 11;
    2.0 * (bits as f64 / (1u64 << 53) as f64) - 1.0
}

fn cmd_chaoscheck(
    r: &Resolver,
    h: Option<f64>,
    n: Option<usize>,
    count: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Outcome {
    let h = r.or(h, "model.h", 0.6)?;
    let n = r.or(n, "chaos.n", 8)?;
    let count = r.or(count, "chaos.count", 10)?;
    let seed = r.or(seed, "run.seed", 0)?;
    let header = ["index", "n", "gap_moments", "gap_contractions", "route_residual", "gap_oracle", "oracle_residual"];
    let mut cells = Vec::with_capacity(count);
    let mut worst_route: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for i in 0..count {
        let k = random_kernel(h, n, sub_seed(seed, i as u64))?;
        let routes = fourth_moment_gap_routes(&k, n.max(1))?;
        let res = routes.relative_residual();
        worst_route = worst_route.max(res);
        let (oracle, ores) = if n <= ISSERLIS_CAP {
            let g = oracle_moments(&k)?.gap();
            let e = (routes.from_moments - g).abs().max((routes.from_contractions - g).abs()) / g.abs();
            worst_oracle = worst_oracle.max(e);
            (g12(g), g12(e))
        } else {
            (String::new(), String::new())
        };
        cells.push(vec![
            cell(i),
            cell(n),
            g12(routes.from_moments),
            g12(routes.from_contractions),
            g12(res),
            oracle,
            ores,
        ]);
    }
    println!("{count} kernels, n = {n}, h = {}", g12(h));
    println!("max route residual  = {}", g12(worst_route));
    if n <= ISSERLIS_CAP {
        println!("max oracle residual = {}", g12(worst_oracle));
    }
    if let Some(out) = r.path(out, "run.out") {
        let mut w = open_csv(&out, &header)?;
        for c in &cells {
            w.row(c).map_err(io_err(&out))?;
        }
        w.finish().map_err(io_err(&out))?;
    }
    if worst_route > GAP_ROUTE_TOL || worst_oracle > GAP_ROUTE_TOL {
        return Err(Failure::Numerical(format!(
            "route residual {} or oracle residual {} above {}",
            g12(worst_route),
            g12(worst_oracle),
            g12(GAP_ROUTE_TOL)
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            RunConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let r = Resolver { cfg };
    match cli.command {
        Command::Simulate { model, grid, seed, out } => cmd_simulate(&r, model, grid, seed, out),
        Command::Estimate { model, grid, seed, input, out } => cmd_estimate(&r, model, grid, seed, input, out),
        Command::Asymptotics { model, six_region, six_region_t, out } => {
            cmd_asymptotics(&r, model, six_region, six_region_t, out)
        }
        Command::Mc { model, dt, t_list, replicas, seed, workers, out } => {
            cmd_mc(&r, model, dt, t_list, replicas, seed, workers, out)
        }
        Command::Contractions { model, dt, t_list, out } => cmd_contractions(&r, model, dt, t_list, out),
        Command::Chaoscheck { h, n, count, seed, out } => cmd_chaoscheck(&r, h, n, count, seed, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind, msg) = match f {
                Failure::Usage(m) => (2, "error", m),
                Failure::Io(m) => (3, "io error", m),
                Failure::Numerical(m) => (4, "numerical error", m),
            };
            eprintln!("cfou: {kind}: {msg}");
            ExitCode::from(code)
        }
    }
}
