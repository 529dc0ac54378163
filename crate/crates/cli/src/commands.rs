use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use threshdist::asymptotics::{
    limit_distribution, limit_selection_probability, oracle_limit, uniform_rate, DofBehavior, LimitDistribution,
    RegimeParams, VarianceBehavior,
};
use threshdist::estimators::{
    condition_number, gram_correlations, read_matrix, write_matrix, Design, DesignSpec, DesignVariant,
};
use threshdist::finite_dist::{as_mixture, deletion_probability, MixtureDistribution};
use threshdist::mc_harness::{
    reproduce_figures, run_study_with, EtaRule, Panel, RunOptions, SimConfig, SimResult, StudyEstimator,
    OVERLAY_POINTS,
};
use threshdist::selfcheck::{run_all, SelfcheckOptions};
use threshdist::{ComponentSpec, EstimatorKind, ExtReal, Scaling, VarianceMode};

use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "threshdist",
    version,
    about = "Finite-sample and limiting distributions of thresholding estimators"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CDF, density and atom of a finite-sample law on an x-grid.
    Dist(DistArgs),
    /// Deletion probability, finite-sample or limiting.
    Selprob(SelprobArgs),
    /// CDF grid of a limiting law.
    Limit(LimitArgs),
    /// Uniform convergence rate min(sqrt(n)/xi, 1/(xi eta)).
    Rate(RateArgs),
    /// Generate (or read) a design and report its condition number and xi.
    Design(DesignArgs),
    /// Seeded Monte Carlo study of one estimator.
    Simulate(SimulateArgs),
    /// Write the data behind all simulation panels.
    Reproduce(ReproduceArgs),
    /// Run the invariant suites; fails if any invariant fails.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Known,
    Unknown,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Hard,
    Soft,
    Adaptive,
}

impl From<KindArg> for EstimatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Hard => EstimatorKind::Hard,
            KindArg::Soft => EstimatorKind::Soft,
            KindArg::Adaptive => EstimatorKind::AdaptiveSoft,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    #[value(name = "I", alias = "1")]
    I,
    #[value(name = "II", alias = "2")]
    Ii,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Lasso,
    AdaptiveLasso,
    Hard,
    Soft,
    Adaptive,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct EtaArgs {
    /// Tuning parameter value.
    #[arg(long)]
    eta: Option<f64>,
    /// `default` for n^(-1/2) Phi^-1(0.975), or `power:C:P` for C n^P.
    #[arg(long)]
    eta_rule: Option<String>,
}

#[derive(Debug, Args)]
struct OptionalEtaArgs {
    #[arg(long, conflicts_with = "eta_rule")]
    eta: Option<f64>,
    #[arg(long)]
    eta_rule: Option<String>,
}

fn parse_eta_rule(eta: Option<f64>, rule: Option<&str>) -> Result<EtaRule> {
    if let Some(v) = eta {
        return Ok(EtaRule::Value(v));
    }
    match rule {
        None | Some("default") => Ok(EtaRule::Default),
        Some(r) => {
            let parts: Vec<&str> = r.split(':').collect();
            match parts.as_slice() {
                ["power", c, p] => {
                    let c = c.parse().map_err(|_| usage(format!("bad constant in eta rule {r:?}")))?;
                    let p = p.parse().map_err(|_| usage(format!("bad exponent in eta rule {r:?}")))?;
                    Ok(EtaRule::Power { c, p })
                }
                _ => Err(usage(format!("unknown eta rule {r:?}; expected `default` or `power:C:P`"))),
            }
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = OVERLAY_POINTS)]
    points: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.x_min < self.x_max) {
            return Err(usage("grid needs --points >= 2 and --x-min < --x-max"));
        }
        // Weighted endpoints keep grid points like -5.44 exact to rounding.
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| (self.x_min * (last - i as f64) + self.x_max * i as f64) / last)
            .collect())
    }
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[command(flatten)]
    eta: EtaArgs,
    /// `root-n-over-xi`, `inverse-xi-eta`, or a positive value.
    #[arg(long, default_value = "root-n-over-xi")]
    alpha: String,
    #[arg(long, value_enum, default_value = "known")]
    mode: ModeArg,
    /// Residual degrees of freedom for unknown variance.
    #[arg(long)]
    dof: Option<u32>,
    /// Number of regressors; sets the dof to n - k when --dof is absent.
    #[arg(long)]
    k: Option<u64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn variance_mode(mode: ModeArg, dof: Option<u32>, n: Option<u64>, k: Option<u64>) -> Result<VarianceMode> {
    match mode {
        ModeArg::Known => Ok(VarianceMode::Known),
        ModeArg::Unknown => {
            let m = match (dof, n, k) {
                (Some(m), _, _) => m,
                (None, Some(n), Some(k)) if n > k => u32::try_from(n - k).map_err(|_| usage("n - k too large"))?,
                (None, _, Some(_)) => return Err(usage("unknown variance needs n > k")),
                _ => return Err(usage("unknown variance needs --dof or --k")),
            };
            Ok(VarianceMode::unknown(m)?)
        }
    }
}

fn component_spec(
    n: u64,
    xi: f64,
    theta: f64,
    sigma: f64,
    eta: &EtaArgs,
    alpha: &str,
) -> Result<ComponentSpec> {
    let eta = parse_eta_rule(eta.eta, eta.eta_rule.as_deref())?.eta(n)?;
    let scaling: Scaling = alpha.parse()?;
    Ok(ComponentSpec::new(n, xi, theta, sigma, eta, scaling)?)
}

/// Writes to `--out` or stdout.
fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

// Debug formatting of f64 is the shortest string that parses back exactly.
// Adding 0.0 prints a negative zero as 0.0.
fn num(v: f64) -> String {
    format!("{:?}", v + 0.0)
}

fn write_json(w: &mut dyn Write, v: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Grid rows `(x, cdf, ac_density)`; the atom appears twice, first with the
/// left limit of the CDF, then with its value.
fn mixture_rows(law: &MixtureDistribution, grid: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let a = law.atom_location();
    let mut rows = Vec::with_capacity(grid.len() + 2);
    let mut atom_done = false;
    for &x in grid {
        if !atom_done && x >= a {
            rows.push((a, law.cdf_left(a)?, law.ac_density(a)?));
            rows.push((a, law.cdf(a)?, law.ac_density(a)?));
            atom_done = true;
            if x == a {
                continue;
            }
        }
        rows.push((x, law.cdf(x)?, law.ac_density(x)?));
    }
    if !atom_done {
        rows.push((a, law.cdf_left(a)?, law.ac_density(a)?));
        rows.push((a, law.cdf(a)?, law.ac_density(a)?));
    }
    Ok(rows)
}

fn dist(args: DistArgs) -> Result<()> {
    let spec = component_spec(args.n, args.xi, args.theta, args.sigma, &args.eta, &args.alpha)?;
    let mode = variance_mode(args.mode, args.dof, Some(args.n), args.k)?;
    let law = as_mixture(args.kind.into(), mode, &spec)?;
    let rows = mixture_rows(&law, &args.grid.grid()?)?;
    let (loc, weight) = (law.atom_location(), law.atom_weight());
    let mut w = sink(args.output.out.as_deref())?;
    match args.output.format {
        Format::Csv => {
            writeln!(w, "x,cdf,ac_density,atom_location,atom_weight")?;
            for (x, c, d) in rows {
                writeln!(w, "{},{},{},{},{}", num(x), num(c), num(d), num(loc), num(weight))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let recs: Vec<Value> = rows
                .into_iter()
                .map(|(x, c, d)| json!({"x": x, "cdf": c, "ac_density": d, "atom_location": loc, "atom_weight": weight}))
                .collect();
            write_json(&mut *w, &Value::Array(recs))?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
struct RegimeArgs {
    /// Limit of sqrt(n) eta; `inf` for consistent tuning.
    #[arg(long, allow_hyphen_values = true)]
    e: Option<ExtReal>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<ExtReal>,
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<ExtReal>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<ExtReal>,
    #[arg(long, allow_hyphen_values = true)]
    d: Option<ExtReal>,
    #[arg(long, allow_hyphen_values = true)]
    r_prime: Option<ExtReal>,
    #[arg(long, allow_hyphen_values = true)]
    w: Option<ExtReal>,
}

fn parse_dof_behavior(s: &str) -> Result<DofBehavior> {
    match s {
        "diverging" | "inf" => Ok(DofBehavior::Diverging),
        v => v
            .parse()
            .map(DofBehavior::Fixed)
            .map_err(|_| usage(format!("--dof must be a positive integer or `diverging`, got {v:?}"))),
    }
}

fn regime(args: &RegimeArgs, dof: Option<&str>) -> Result<RegimeParams> {
    let p = RegimeParams {
        e: args.e,
        nu: args.nu,
        zeta: args.zeta,
        r: args.r,
        d: args.d,
        r_prime: args.r_prime,
        w: args.w,
        dof: dof.map(parse_dof_behavior).transpose()?,
    };
    p.validate()?;
    Ok(p)
}

fn behavior(mode: ModeArg) -> VarianceBehavior {
    match mode {
        ModeArg::Known => VarianceBehavior::Known,
        ModeArg::Unknown => VarianceBehavior::Unknown,
    }
}

#[derive(Debug, Args)]
struct SelprobArgs {
    /// Evaluate the limiting probability from regime constants.
    #[arg(long)]
    limit: bool,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[command(flatten)]
    eta: OptionalEtaArgs,
    #[arg(long, value_enum, default_value = "known")]
    mode: ModeArg,
    /// Degrees of freedom; `diverging` is accepted with --limit.
    #[arg(long)]
    dof: Option<String>,
    #[arg(long)]
    k: Option<u64>,
    #[command(flatten)]
    regime: RegimeArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn write_scalar(output: &OutputArgs, name: &str, value: f64) -> Result<()> {
    let mut w = sink(output.out.as_deref())?;
    match output.format {
        Format::Csv => {
            writeln!(w, "{name}")?;
            writeln!(w, "{}", num(value))?;
            w.flush()?;
        }
        Format::Json => {
            let mut m = serde_json::Map::new();
            m.insert(name.to_string(), json!(value));
            write_json(&mut *w, &Value::Object(m))?;
        }
    }
    Ok(())
}

fn selprob(args: SelprobArgs) -> Result<()> {
    let p = if args.limit {
        let params = regime(&args.regime, args.dof.as_deref())?;
        limit_selection_probability(&params, behavior(args.mode))?
    } else {
        let n = args.n.ok_or_else(|| usage("--n is required without --limit"))?;
        let theta = args.theta.ok_or_else(|| usage("--theta is required without --limit"))?;
        let eta = parse_eta_rule(args.eta.eta, args.eta.eta_rule.as_deref())?.eta(n)?;
        let spec = ComponentSpec::new(n, args.xi, theta, args.sigma, eta, Scaling::RootNOverXi)?;
        let dof = args
            .dof
            .as_deref()
            .map(|s| s.parse::<u32>().map_err(|_| usage(format!("--dof must be a positive integer, got {s:?}"))))
            .transpose()?;
        deletion_probability(&spec, variance_mode(args.mode, dof, Some(n), args.k)?)?
    };
    write_scalar(&args.output, "deletion_probability", p)
}

#[derive(Debug, Args)]
struct LimitArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "known")]
    mode: ModeArg,
    /// Fixed degrees of freedom, or `diverging`.
    #[arg(long)]
    dof: Option<String>,
    /// Limit under sqrt(n)/xi scaling with consistent tuning.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    regime: RegimeArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// Grid rows `(x, cdf)`; each atom appears with its left limit first.
fn limit_rows(l: &LimitDistribution, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let atoms = l.atoms()?;
    let mut xs: Vec<(f64, bool)> = grid.iter().map(|&x| (x, false)).collect();
    for &(loc, _) in &atoms {
        xs.push((loc, true));
        xs.push((loc, false));
    }
    // Left-limit entries sort before the value at the same x.
    xs.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    xs.dedup();
    xs.into_iter()
        .map(|(x, left)| {
            let c = l.cdf(x)?;
            Ok((x, if left { c - l.atom_weight_at(x)? } else { c }))
        })
        .collect::<threshdist::Result<Vec<_>>>()
        .map_err(CliError::from)
}

fn limit(args: LimitArgs) -> Result<()> {
    let params = regime(&args.regime, args.dof.as_deref())?;
    let kind: EstimatorKind = args.kind.into();
    let l = if args.oracle {
        oracle_limit(kind, &params)?
    } else {
        limit_distribution(kind, behavior(args.mode), &params)?
    };
    let rows = limit_rows(&l, &args.grid.grid()?)?;
    let mut w = sink(args.output.out.as_deref())?;
    match args.output.format {
        Format::Csv => {
            writeln!(w, "x,cdf")?;
            for (x, c) in rows {
                writeln!(w, "{},{}", num(x), num(c))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let atoms: Vec<Value> = l.atoms()?.into_iter().map(|(x, p)| json!({"location": x, "weight": p})).collect();
            let grid: Vec<Value> = rows.into_iter().map(|(x, c)| json!({"x": x, "cdf": c})).collect();
            let v = json!({
                "distribution": l.to_string(),
                "proper": l.is_proper(),
                "escaped_below": l.escaped_below(),
                "escaped_above": l.escaped_above(),
                "atoms": atoms,
                "grid": grid,
            });
            write_json(&mut *w, &v)?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
struct RateArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long)]
    eta: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn rate(args: RateArgs) -> Result<()> {
    write_scalar(&args.output, "uniform_rate", uniform_rate(args.n, args.xi, args.eta)?)
}

#[derive(Debug, Args)]
struct DesignSpecArgs {
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
}

impl DesignSpecArgs {
    fn spec(&self) -> Result<DesignSpec> {
        let variant = match (self.variant, self.rho, self.c) {
            (Some(VariantArg::I), Some(rho), None) => DesignVariant::I { rho },
            (Some(VariantArg::Ii), None, Some(c)) => DesignVariant::II { c },
            (Some(VariantArg::I), _, _) => return Err(usage("design I takes --rho (and not --c)")),
            (Some(VariantArg::Ii), _, _) => return Err(usage("design II takes --c (and not --rho)")),
            (None, _, _) => return Err(usage("--variant is required")),
        };
        Ok(DesignSpec::new(variant, self.n, self.k)?)
    }
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    spec: DesignSpecArgs,
    /// Read the matrix from a whitespace-separated file instead of generating it.
    #[arg(long, conflicts_with_all = ["variant", "rho", "c"])]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Directory receiving `design.txt` and `metadata.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn design(args: DesignArgs) -> Result<()> {
    let (x, spec) = match &args.input {
        Some(p) => (read_matrix(BufReader::new(fs::File::open(p)?))?, None),
        None => {
            let s = args.spec.spec()?;
            (Design::from_spec(&s)?.x().clone(), Some(s))
        }
    };
    let d = Design::new(x)?;
    let cond = condition_number(d.x());
    let corr = gram_correlations(d.x());
    let corr_rows: Vec<Vec<f64>> = (0..corr.nrows()).map(|i| corr.row(i).iter().copied().collect()).collect();
    let x_rows: Vec<Vec<f64>> = (0..d.n()).map(|i| d.x().row(i).iter().copied().collect()).collect();
    let meta = json!({
        "design": spec,
        "n": d.n(),
        "k": d.k(),
        "condition_number": cond,
        "xi": d.xi().iter().collect::<Vec<_>>(),
        "psi": d.psi().iter().collect::<Vec<_>>(),
        "correlations": corr_rows,
    });
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let mut f = BufWriter::new(fs::File::create(dir.join("design.txt"))?);
        write_matrix(&mut f, d.x())?;
        f.flush()?;
        fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    let mut w = sink(None)?;
    match args.format {
        Format::Csv => {
            writeln!(w, "quantity,row,col,value")?;
            writeln!(w, "condition_number,,,{}", num(cond))?;
            for (i, v) in d.xi().iter().enumerate() {
                writeln!(w, "xi,{},,{}", i + 1, num(*v))?;
            }
            for (i, v) in d.psi().iter().enumerate() {
                writeln!(w, "psi,{},,{}", i + 1, num(*v))?;
            }
            for i in 0..corr.nrows() {
                for j in 0..corr.ncols() {
                    writeln!(w, "correlation,{},{},{}", i + 1, j + 1, num(corr[(i, j)]))?;
                }
            }
            for i in 0..d.n() {
                for j in 0..d.k() {
                    writeln!(w, "x,{},{},{}", i + 1, j + 1, num(d.x()[(i, j)]))?;
                }
            }
            w.flush()?;
        }
        Format::Json => {
            let mut full = meta;
            full["matrix"] = json!(x_rows);
            write_json(&mut *w, &full)?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignSpecArgs,
    /// Comma-separated true coefficients, one per column.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[command(flatten)]
    eta: OptionalEtaArgs,
    #[arg(long, value_enum)]
    estimator: EstimatorArg,
    /// Threshold with the true sigma instead of sigma_hat.
    #[arg(long)]
    infeasible: bool,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, required = true)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the analytic overlays.
    #[arg(long)]
    no_overlay: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Directory receiving `result.json` and `scaled_samples.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn study_estimator(e: EstimatorArg, infeasible: bool) -> Result<StudyEstimator> {
    let kind = match e {
        EstimatorArg::Lasso | EstimatorArg::AdaptiveLasso if infeasible => {
            return Err(usage("--infeasible applies to thresholding estimators only"))
        }
        EstimatorArg::Lasso => return Ok(StudyEstimator::Lasso),
        EstimatorArg::AdaptiveLasso => return Ok(StudyEstimator::AdaptiveLasso),
        EstimatorArg::Hard => EstimatorKind::Hard,
        EstimatorArg::Soft => EstimatorKind::Soft,
        EstimatorArg::Adaptive => EstimatorKind::AdaptiveSoft,
    };
    Ok(StudyEstimator::Threshold {
        kind,
        feasible: !infeasible,
    })
}

fn summary(cfg: &SimConfig, res: &SimResult) -> Value {
    let comps: Vec<Value> = res
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({
                "component": i + 1,
                "theta": cfg.theta[i],
                "xi": res.xi[i],
                "zero_proportion": c.zero_proportion,
                "atom_location": c.atom_location,
                "atom_weight_known": c.overlay.as_ref().map(|o| o.atom_weight_known),
                "atom_weight_unknown": c.overlay.as_ref().map(|o| o.atom_weight_unknown),
                "clipped_low": c.histogram.clipped_low,
                "clipped_high": c.histogram.clipped_high,
            })
        })
        .collect();
    json!({
        "config": cfg,
        "eta": res.eta,
        "condition_number": res.condition_number,
        "reps": res.reps,
        "failures": res.failures,
        "components": comps,
    })
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = SimConfig {
        design: args.design.spec()?,
        theta: args.theta.clone(),
        sigma: args.sigma,
        eta_rule: parse_eta_rule(args.eta.eta, args.eta.eta_rule.as_deref())?,
        estimator: study_estimator(args.estimator, args.infeasible)?,
        reps: args.reps,
        seed: args.seed.expect("clap enforces --seed"),
    };
    let res = run_study_with(
        &cfg,
        RunOptions {
            threads: args.threads,
            skip_overlay: args.no_overlay,
        },
    )?;
    let sum = summary(&cfg, &res);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("result.json"), serde_json::to_string_pretty(&res)? + "\n")?;
        let mut f = BufWriter::new(fs::File::create(dir.join("scaled_samples.csv"))?);
        let k = res.components.len();
        writeln!(f, "{}", (1..=k).map(|i| format!("component{i}")).collect::<Vec<_>>().join(","))?;
        let done = res.components.first().map_or(0, |c| c.scaled_samples.len());
        for r in 0..done {
            let row: Vec<String> = res.components.iter().map(|c| num(c.scaled_samples[r])).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        f.flush()?;
    }
    let mut w = sink(None)?;
    match args.format {
        Format::Csv => {
            writeln!(w, "component,theta,xi,zero_proportion,atom_location,atom_weight_known,atom_weight_unknown")?;
            for (i, c) in res.components.iter().enumerate() {
                let (wk, wu) = c
                    .overlay
                    .as_ref()
                    .map_or((String::new(), String::new()), |o| (num(o.atom_weight_known), num(o.atom_weight_unknown)));
                writeln!(
                    w,
                    "{},{},{},{},{},{wk},{wu}",
                    i + 1,
                    num(cfg.theta[i]),
                    num(res.xi[i]),
                    num(c.zero_proportion),
                    num(c.atom_location)
                )?;
            }
            w.flush()?;
        }
        Format::Json => write_json(&mut *w, &sum)?,
    }
    Ok(())
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, required = true)]
    seed: Option<u64>,
    /// Comma-separated panel numbers (1-12); all when absent.
    #[arg(long, value_delimiter = ',')]
    panels: Vec<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn reproduce(args: ReproduceArgs) -> Result<()> {
    let all = Panel::all();
    let panels: Vec<Panel> = if args.panels.is_empty() {
        all
    } else {
        args.panels
            .iter()
            .map(|&f| {
                all.iter()
                    .find(|p| p.figure == f)
                    .copied()
                    .ok_or_else(|| usage(format!("no panel {f}; panels are 1-{}", all.len())))
            })
            .collect::<Result<_>>()?
    };
    let files = reproduce_figures(&panels, &args.out, args.reps, args.seed.expect("clap enforces --seed"))?;
    let mut w = sink(None)?;
    match args.format {
        Format::Csv => {
            writeln!(w, "file")?;
            for f in &files {
                writeln!(w, "{}", f.display())?;
            }
            w.flush()?;
        }
        Format::Json => {
            let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
            write_json(&mut *w, &json!({ "files": names }))?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, required = true)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn selfcheck(args: SelfcheckArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let opts = SelfcheckOptions {
        reps: args.reps,
        seed: args.seed.expect("clap enforces --seed"),
    };
    let outcomes = run_all(&opts);
    let mut w = sink(None)?;
    match args.format {
        Format::Csv => {
            for c in &outcomes {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(w, "{tag} {}: {} ({})", c.module, c.name, c.detail)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(&mut *w, &serde_json::to_value(&outcomes)?)?,
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::SelfcheckFailed(failed));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dist(a) => dist(a),
        Command::Selprob(a) => selprob(a),
        Command::Limit(a) => limit(a),
        Command::Rate(a) => rate(a),
        Command::Design(a) => design(a),
        Command::Simulate(a) => simulate(a),
        Command::Reproduce(a) => reproduce(a),
        Command::Selfcheck(a) => selfcheck(a),
    }
}
