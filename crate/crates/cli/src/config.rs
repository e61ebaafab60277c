//! Command-line flags, the optional `key = value` config file, and the
//! resolved [`RunConfig`] embedded in every output.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use wba_core::{PrecisionConfig, ThetaVector, WeightVector};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "wba-lab",
    version,
    about = "Weighted best approximations and the diagonal flow on lattices"
)]
pub struct Cli {
    /// Config file of `key = value` lines; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for independent samples.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    BestApprox,
    BestApproxRegular,
    CrossSection,
    FirstReturn,
    Levy,
    BetaDist,
    McMeasure,
    Equidist,
    CuspScaling,
    LatticeMin,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// w-best approximations of theta.
    BestApprox(Opts),
    /// Best approximations for the sup norm.
    BestApproxRegular(Opts),
    /// Visits of the orbit of Lambda_theta to the cross-section.
    CrossSection(Opts),
    /// First-return times and values between visits to B.
    FirstReturn(Opts),
    /// Growth rate of q_n over a random sample of theta.
    Levy(Opts),
    /// Histogram of beta_n over a random sample of theta.
    BetaDist(Opts),
    /// Monte Carlo estimate of the measure of B in the cross-section.
    McMeasure(Opts),
    /// Time averages of an indicator observable along an orbit.
    Equidist(Opts),
    /// Fraction of orbit time outside K_eps as eps shrinks.
    CuspScaling(Opts),
    /// Shortest vectors of a lattice.
    LatticeMin(Opts),
}

impl Command {
    pub fn split(self) -> (CommandKind, Opts) {
        use Command as C;
        use CommandKind as K;
        match self {
            C::BestApprox(o) => (K::BestApprox, o),
            C::BestApproxRegular(o) => (K::BestApproxRegular, o),
            C::CrossSection(o) => (K::CrossSection, o),
            C::FirstReturn(o) => (K::FirstReturn, o),
            C::Levy(o) => (K::Levy, o),
            C::BetaDist(o) => (K::BetaDist, o),
            C::McMeasure(o) => (K::McMeasure, o),
            C::Equidist(o) => (K::Equidist, o),
            C::CuspScaling(o) => (K::CuspScaling, o),
            C::LatticeMin(o) => (K::LatticeMin, o),
        }
    }
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        use CommandKind as K;
        match self {
            K::BestApprox => "best-approx",
            K::BestApproxRegular => "best-approx-regular",
            K::CrossSection => "cross-section",
            K::FirstReturn => "first-return",
            K::Levy => "levy",
            K::BetaDist => "beta-dist",
            K::McMeasure => "mc-measure",
            K::Equidist => "equidist",
            K::CuspScaling => "cusp-scaling",
            K::LatticeMin => "lattice-min",
        }
    }

    fn always_stochastic(self) -> bool {
        use CommandKind as K;
        matches!(self, K::Levy | K::BetaDist | K::McMeasure | K::CuspScaling)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    ChiK,
    ChiC,
}

/// Flags shared by every subcommand. Each may also come from the config
/// file under the same name with `_` in place of `-`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opts {
    /// Dimension of theta.
    #[arg(long)]
    pub d: Option<usize>,
    /// Weights as a comma-separated list of rationals, e.g. `2/3,1/3`.
    #[arg(long)]
    pub w: Option<String>,
    /// Comma-separated coordinates of theta (rationals or decimals).
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest denominator to enumerate.
    #[arg(long)]
    pub q_max: Option<u64>,
    #[arg(long)]
    pub n_records: Option<usize>,
    /// Orbit time budget.
    #[arg(long)]
    pub t_budget: Option<f64>,
    #[arg(long)]
    pub n_samples: Option<u64>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    /// Longest time horizon `T`.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Comma-separated horizons; overrides `--t-max`.
    #[arg(long)]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum)]
    pub observable: Option<ObservableKind>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub z: Option<f64>,
    /// Comma-separated values of eps.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// Lattice basis as columns separated by `;`, entries by `,`.
    #[arg(long)]
    pub basis: Option<String>,
    /// Calibrate the section measure against the d = 1 estimate.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub calibrate: Option<bool>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! fill {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Opts {
    /// Fills unset flags from `other`.
    pub fn or(mut self, other: Opts) -> Opts {
        fill!(
            self, other, d, w, theta, seed, q_max, n_records, t_budget, n_samples, n_theta, t_max, t_grid, dt, bins,
            observable, eps, z, eps_grid, basis, calibrate, output, format
        );
        self
    }
}

/// Reads a config file of `key = value` lines (a TOML subset).
pub fn read_config_file(path: &Path) -> CliResult<Opts> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("invalid config file {}: {e}", path.display())))
}

/// Every budget that any subcommand uses, after defaults.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Budgets {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_records: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_budget: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

/// The fully resolved configuration of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: CommandKind,
    pub d: usize,
    pub weights: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub budgets: Budgets,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub format: Format,
    pub precision: PrecisionConfig,
    #[serde(skip)]
    pub weight_vector: WeightVector,
    #[serde(skip)]
    pub theta_vector: Option<ThetaVector>,
}

fn parse_f64_list(name: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("--{name}: cannot parse {x:?} as a number")))
        })
        .collect()
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(name: &str, v: T) -> CliResult<T> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(CliError::config(format!("--{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Applies defaults and validates `opts` for `kind`.
    pub fn resolve(kind: CommandKind, opts: Opts, precision: PrecisionConfig) -> CliResult<RunConfig> {
        use CommandKind as K;
        let theta_vector = match &opts.theta {
            Some(s) => Some(ThetaVector::parse_list(s).map_err(|e| CliError::config(format!("--theta: {e}")))?),
            None => None,
        };
        let implied_d = opts.d.or(theta_vector.as_ref().map(|t| t.dim()));
        let weight_vector = match (&opts.w, implied_d) {
            (Some(w), _) => WeightVector::parse_list(w).map_err(|e| CliError::config(format!("--w: {e}")))?,
            (None, Some(d)) if d > 0 => WeightVector::equal(d),
            (None, Some(_)) => return Err(CliError::config("--d must be positive")),
            (None, None) => WeightVector::equal(1),
        };
        let d = weight_vector.dim();
        if let Some(dd) = opts.d {
            if dd != d {
                return Err(CliError::config(format!("--d {dd} does not match {d} weights")));
            }
        }
        if let Some(t) = &theta_vector {
            if t.dim() != d {
                return Err(CliError::config(format!(
                    "--theta has {} coordinates, expected {d}",
                    t.dim()
                )));
            }
        }
        let needs_theta = matches!(
            kind,
            K::BestApprox | K::BestApproxRegular | K::CrossSection | K::FirstReturn | K::Equidist
        );
        let sampled = kind.always_stochastic()
            || (needs_theta && theta_vector.is_none())
            || (kind == K::LatticeMin && opts.basis.is_none() && theta_vector.is_none());
        if sampled && opts.seed.is_none() {
            return Err(CliError::config(format!("{} needs --seed", kind.name())));
        }
        let seed = if sampled { opts.seed } else { None };

        let mut b = Budgets::default();
        match kind {
            K::BestApprox | K::BestApproxRegular => {
                b.q_max = Some(positive("q-max", opts.q_max.unwrap_or(1_000_000))?);
                b.n_records = Some(positive("n-records", opts.n_records.unwrap_or(100_000))?);
            }
            K::CrossSection | K::FirstReturn => {
                b.t_budget = Some(positive("t-budget", opts.t_budget.unwrap_or(20.0))?);
            }
            K::Levy => {
                b.n_theta = Some(positive("n-theta", opts.n_theta.unwrap_or(100))?);
                b.n_records = Some(positive("n-records", opts.n_records.unwrap_or(200))?);
            }
            K::BetaDist => {
                b.n_theta = Some(positive("n-theta", opts.n_theta.unwrap_or(100))?);
                b.n_records = Some(positive("n-records", opts.n_records.unwrap_or(200))?);
                b.bins = Some(positive("bins", opts.bins.unwrap_or(50))?);
            }
            K::McMeasure => {
                b.n_samples = Some(positive("n-samples", opts.n_samples.unwrap_or(100_000))?);
            }
            K::Equidist | K::CuspScaling => {
                let grid = match (&opts.t_grid, opts.t_max) {
                    (Some(g), _) => parse_f64_list("t-grid", g)?,
                    (None, Some(t)) => vec![t],
                    (None, None) => vec![100.0, 1000.0],
                };
                if grid.iter().any(|t| !(*t > 0.0)) || grid.windows(2).any(|p| p[1] <= p[0]) {
                    return Err(CliError::config("--t-grid must be positive and increasing"));
                }
                b.t_grid = Some(grid);
                if kind == K::Equidist {
                    let dt = opts.dt.unwrap_or(wba_core::ergodic::DEFAULT_DT);
                    if !(dt > 0.0 && dt <= wba_core::ergodic::MAX_DT) {
                        return Err(CliError::config(format!(
                            "--dt must lie in (0, {}]",
                            wba_core::ergodic::MAX_DT
                        )));
                    }
                    b.dt = Some(dt);
                } else {
                    b.n_theta = Some(positive("n-theta", opts.n_theta.unwrap_or(20))?);
                }
            }
            K::LatticeMin => {}
        }

        let (mut observable, mut eps, mut z, mut eps_grid) = (None, None, None, None);
        if kind == K::Equidist {
            let obs = opts.observable.unwrap_or(ObservableKind::ChiK);
            observable = Some(obs);
            match obs {
                ObservableKind::ChiK => eps = Some(positive("eps", opts.eps.unwrap_or(0.5))?),
                ObservableKind::ChiC => z = Some(opts.z.unwrap_or(0.0)),
            }
        }
        if kind == K::CuspScaling {
            let grid = match &opts.eps_grid {
                Some(g) => parse_f64_list("eps-grid", g)?,
                None => wba_core::ergodic::log_grid(0.05, 0.5, 8),
            };
            if grid.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
                return Err(CliError::config("--eps-grid values must lie in (0, 0.5]"));
            }
            eps_grid = Some(grid);
        }
        let basis = match (&opts.basis, kind) {
            (Some(s), K::LatticeMin) => {
                let cols: Vec<Vec<f64>> = s
                    .split(';')
                    .map(|c| parse_f64_list("basis", c))
                    .collect::<CliResult<_>>()?;
                if cols.len() != d + 1 || cols.iter().any(|c| c.len() != d + 1) {
                    return Err(CliError::config(format!(
                        "--basis must have {} columns of length {}",
                        d + 1,
                        d + 1
                    )));
                }
                Some(cols)
            }
            _ => None,
        };
        let calibrate = (kind == K::McMeasure).then(|| opts.calibrate.unwrap_or(false));

        Ok(RunConfig {
            subcommand: kind,
            d,
            weights: weight_vector.to_strings(),
            theta: theta_vector
                .as_ref()
                .map(|t| (0..t.dim()).map(|i| t.coord(i).to_string()).collect()),
            seed,
            budgets: b,
            observable,
            eps,
            z,
            eps_grid,
            basis,
            calibrate,
            output: opts.output,
            format: opts.format.unwrap_or(Format::Csv),
            precision,
            weight_vector,
            theta_vector,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(f: impl FnOnce(&mut Opts)) -> Opts {
        let mut o = Opts::default();
        f(&mut o);
        o
    }

    #[test]
    fn flags_override_file() {
        let file: Opts = toml::from_str("seed = 3\nw = \"1/2,1/2\"\nn_samples = 10").unwrap();
        let flags = opts(|o| o.seed = Some(9));
        let merged = flags.or(file);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.n_samples, Some(10));
        let cfg = RunConfig::resolve(CommandKind::McMeasure, merged, PrecisionConfig::default()).unwrap();
        assert_eq!(cfg.d, 2);
        assert_eq!(cfg.weights, vec!["1/2", "1/2"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Opts>("sed = 3").is_err());
    }

    #[test]
    fn stochastic_commands_need_a_seed() {
        let r = RunConfig::resolve(CommandKind::McMeasure, Opts::default(), PrecisionConfig::default());
        assert!(matches!(r, Err(CliError::Config { .. })));
        let with_theta = opts(|o| o.theta = Some("2/7".into()));
        assert!(RunConfig::resolve(CommandKind::BestApprox, with_theta, PrecisionConfig::default()).is_ok());
    }

    #[test]
    fn dimension_checks() {
        let o = opts(|o| {
            o.d = Some(2);
            o.w = Some("1".into());
        });
        assert!(RunConfig::resolve(CommandKind::LatticeMin, o, PrecisionConfig::default()).is_err());
        let o = opts(|o| {
            o.theta = Some("1/3,1/5".into());
            o.w = Some("1".into());
        });
        assert!(RunConfig::resolve(CommandKind::BestApprox, o, PrecisionConfig::default()).is_err());
        let o = opts(|o| o.theta = Some("1/3,1/5".into()));
        let cfg = RunConfig::resolve(CommandKind::BestApprox, o, PrecisionConfig::default()).unwrap();
        assert_eq!(cfg.weights, vec!["1/2", "1/2"]);
    }
}
