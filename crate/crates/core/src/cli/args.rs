//! Command-line flags. Every flag command builds the same [`JobSpec`] a job
//! file would contain.

use super::{emit_plot_data, load_job, preset, preset_names, run, Job, JobSpec, McOverrides, OutputFormat, Side, VLaw};
use crate::closedforms::IdentityVariant;
use crate::error::{Error, Result};
use crate::models::LevyModel;
use crate::montecarlo::SupScheme;
use crate::quadrature::QuadConfig;
use crate::supdist::Horizon;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;

#[derive(Debug, Parser)]
#[command(name = "levy-breakdrift", version, about = "Suprema of Lévy processes over broken-line barriers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a job file (`-` reads standard input).
    Run {
        #[arg(long)]
        config: String,
        #[arg(long)]
        output: Option<OutputFormat>,
    },
    /// Density of X(t).
    Density {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "T", alias = "t", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Integral of the density of X(t) over the real line.
    Mass {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "T", alias = "t", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// P(sup_{t<=T} (X(t) - c t) > u); `--horizon` is T.
    Sup {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        c: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[arg(long, value_parser = parse_horizon)]
        horizon: Horizon,
        #[arg(long, value_enum, default_value_t)]
        side: Side,
        #[command(flatten)]
        common: Common,
    },
    /// Supremum over the broken-line barrier u + c1 t (t < T), u + c1 T + c2 (t - T).
    BrokenSup {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        c1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        c2: Vec<f64>,
        #[arg(long = "T", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[arg(long, value_parser = parse_horizon)]
        horizon: Horizon,
        #[arg(long, value_enum, default_value_t)]
        side: Side,
        #[command(flatten)]
        common: Common,
    },
    /// Two-company ruin probabilities.
    Ruin {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        x1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        x2: Vec<f64>,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        delta2: f64,
        #[arg(long, value_parser = parse_horizon)]
        horizon: Horizon,
        #[command(flatten)]
        common: Common,
    },
    /// Laplace transform of the supremum at an exponential break time.
    Laplace {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        c1: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        c2: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
        /// Extra time after the break: none, infinite or exponential (needs --theta).
        #[arg(long, value_enum, default_value_t = VKind::None)]
        v: VKind,
        #[arg(long)]
        theta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the Brownian joint-density integral with its normal-cdf value.
    IdentityCheck {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        c: Vec<f64>,
        #[arg(long = "T", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[arg(long, value_enum)]
        variant: IdentityVariant,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo job from a preset or a job file.
    Mc {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_paths: Option<u64>,
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long, value_enum)]
        scheme: Option<SupScheme>,
        #[arg(long)]
        output: Option<OutputFormat>,
    },
    /// CSV curves for plotting: varying inputs and results only.
    PlotData {
        #[command(flatten)]
        source: Source,
    },
    /// List the bundled presets.
    Presets,
    /// Print a bundled preset job.
    ShowPreset { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Brownian,
    Gamma,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VKind {
    None,
    Infinite,
    Exponential,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Family,
    /// Gamma shape rate.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Stable index in (1, 2).
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl ModelArgs {
    fn build(&self) -> Result<LevyModel> {
        let missing = |name: &str| Error::Job(format!("--model {:?} needs --{name}", self.model).to_lowercase());
        match self.model {
            Family::Brownian => Ok(LevyModel::brownian()),
            Family::Gamma => LevyModel::gamma(self.delta.ok_or_else(|| missing("delta"))?),
            Family::Stable => LevyModel::stable(self.alpha.ok_or_else(|| missing("alpha"))?),
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_enum, default_value_t)]
    pub output: OutputFormat,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
}

impl Common {
    fn quad(&self) -> Option<QuadConfig> {
        if self.abs_tol.is_none() && self.rel_tol.is_none() && self.max_subdivisions.is_none() {
            return None;
        }
        let mut q = QuadConfig::default();
        q.abs_tol = self.abs_tol.unwrap_or(q.abs_tol);
        q.rel_tol = self.rel_tol.unwrap_or(q.rel_tol);
        q.max_subdivisions = self.max_subdivisions.unwrap_or(q.max_subdivisions);
        Some(q)
    }

    fn spec(&self, job: Job) -> JobSpec {
        JobSpec { job, output: self.output, quad: self.quad(), result: None }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub config: Option<String>,
}

impl Source {
    fn load(&self) -> Result<JobSpec> {
        match (&self.preset, &self.config) {
            (Some(name), _) => preset(name),
            (None, Some(path)) => load_job(path),
            (None, None) => Err(Error::Job("give --preset or --config".into())),
        }
    }
}

/// `inf`/`infinite` or a positive number.
pub fn parse_horizon(s: &str) -> std::result::Result<Horizon, String> {
    match s {
        "inf" | "infinite" | "Infinity" => Ok(Horizon::Infinite),
        _ => s.parse::<f64>().map(|s| Horizon::Finite { s }).map_err(|e| format!("horizon `{s}`: {e}")),
    }
}

impl Command {
    /// The job this command describes, or `None` for listing commands.
    pub fn job(&self) -> Result<Option<JobSpec>> {
        let spec = match self {
            Command::Run { config, output } => {
                let mut spec = load_job(config)?;
                if let Some(o) = output {
                    spec.output = *o;
                }
                spec
            }
            Command::Density { model, t, x, common } => common.spec(Job::Density { model: model.build()?, t: t.clone(), x: x.clone() }),
            Command::Mass { model, t, common } => common.spec(Job::Mass { model: model.build()?, t: t.clone() }),
            Command::Sup { model, c, u, horizon, side, common } => {
                common.spec(Job::Sup { model: model.build()?, c: c.clone(), u: u.clone(), horizon: *horizon, side: *side })
            }
            Command::BrokenSup { model, c1, c2, t, u, horizon, side, common } => common.spec(Job::BrokenSup {
                model: model.build()?,
                c1: c1.clone(),
                c2: c2.clone(),
                t: t.clone(),
                u: u.clone(),
                horizon: *horizon,
                side: *side,
            }),
            Command::Ruin { model, x1, x2, p1, p2, delta1, delta2, horizon, common } => common.spec(Job::Ruin {
                model: model.build()?,
                x1: x1.clone(),
                x2: x2.clone(),
                p1: *p1,
                p2: *p2,
                delta1: *delta1,
                delta2: *delta2,
                horizon: *horizon,
            }),
            Command::Laplace { model, c1, c2, lambda, gamma, v, theta, common } => {
                let v = match (v, theta) {
                    (VKind::None, _) => VLaw::None,
                    (VKind::Infinite, _) => VLaw::Infinite,
                    (VKind::Exponential, Some(theta)) => VLaw::Exponential { theta: *theta },
                    (VKind::Exponential, None) => return Err(Error::Job("--v exponential needs --theta".into())),
                };
                common.spec(Job::Laplace {
                    model: model.build()?,
                    c1: c1.clone(),
                    c2: c2.clone(),
                    lambda: lambda.clone(),
                    gamma: gamma.clone(),
                    v,
                })
            }
            Command::IdentityCheck { c, t, u, variant, common } => {
                common.spec(Job::IdentityCheck { c: c.clone(), t: t.clone(), u: u.clone(), variant: *variant })
            }
            Command::Mc { source, seed, n_paths, grid_step, scheme, output } => {
                let mut spec = source.load()?;
                if !matches!(spec.job, Job::Mc { .. }) {
                    return Err(Error::Job("`mc` needs a Monte Carlo job".into()));
                }
                McOverrides { seed: *seed, n_paths: *n_paths, grid_step: *grid_step, scheme: *scheme }.apply(&mut spec)?;
                if let Some(o) = output {
                    spec.output = *o;
                }
                spec
            }
            Command::PlotData { source } => source.load()?,
            Command::Presets | Command::ShowPreset { .. } => return Ok(None),
        };
        Ok(Some(spec))
    }
}

/// Runs the parsed command line. Returns the exit code.
pub fn dispatch(cli: &Cli, out: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Presets => {
            for name in preset_names() {
                let _ = writeln!(out, "{name}");
            }
            return 0;
        }
        Command::ShowPreset { name } => {
            return match super::presets::preset_text(name) {
                Some(text) => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                None => {
                    let _ = writeln!(diag, "error: unknown preset `{name}`");
                    2
                }
            };
        }
        _ => {}
    }
    let spec = match cli.command.job() {
        Ok(Some(spec)) => spec,
        Ok(None) => return 0,
        Err(e) => {
            let _ = writeln!(diag, "error: {e}");
            return e.exit_code();
        }
    };
    match cli.command {
        Command::PlotData { .. } => emit_plot_data(&spec, out, diag),
        _ => run(&spec, out, diag),
    }
}
