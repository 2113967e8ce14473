use std::path::PathBuf;

use bayesdisc::{DensityModel, DirichletMode, InitSpec, PolicyPrior, PriorSpec, SearchConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bayesdisc", version, about = "Bayesian discretization and network learning for mixed data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Discretize continuous columns under a fixed (or empty) structure.
    Discretize(DiscretizeArgs),
    /// Learn structure and discretization together.
    Learn(LearnArgs),
    /// Score a given structure and policy.
    Score(ScoreArgs),
    /// Sample a synthetic dataset from a latent mechanism.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Input {
    /// CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON schema sidecar; column types are inferred when absent.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// K2 hyperparameter per cell.
    #[arg(long, default_value_t = 1.0, conflicts_with = "ess")]
    pub alpha: f64,
    /// Equivalent sample size; selects BDeu.
    #[arg(long)]
    pub ess: Option<f64>,
    /// `uniform` or `poisson:<lambda>`.
    #[arg(long, default_value = "uniform", value_parser = parse_policy_prior)]
    pub policy_prior: PolicyPrior,
    /// `uniform` or `multinomial`.
    #[arg(long, default_value = "uniform", value_parser = parse_density)]
    pub density: DensityModel,
}

impl ModelArgs {
    pub fn prior(&self) -> PriorSpec {
        PriorSpec {
            dirichlet: match self.ess {
                Some(ess) => DirichletMode::BDeu { ess },
                None => DirichletMode::K2 { alpha: self.alpha },
            },
            policy_prior: self.policy_prior,
            density: self.density,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Maximum intervals per variable [default: min(12, N - 1)].
    #[arg(long)]
    pub r_max: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 50)]
    pub max_sweeps: usize,
    /// `eqfreq:<r0>` or `eqwidth:<r0>`.
    #[arg(long, default_value = "eqfreq:3", value_parser = parse_init)]
    pub init: InitSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub max_parents: usize,
    /// Re-discretize after this many accepted edits.
    #[arg(long, default_value_t = 1)]
    pub interleave: usize,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SearchArgs {
    pub fn config(&self, structure_search: bool) -> SearchConfig {
        SearchConfig {
            r_max: self.r_max,
            epsilon: self.epsilon,
            max_sweeps: self.max_sweeps,
            init: self.init.clone(),
            structure_search,
            max_parents: self.max_parents,
            interleave_period: self.interleave,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct DiscretizeArgs {
    #[command(flatten)]
    pub input: Input,
    /// Structure JSON; absent means every variable is discretized alone.
    #[arg(long)]
    pub structure: Option<PathBuf>,
    /// Policy JSON to write. The discretized CSV and manifest go next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub structure: Option<PathBuf>,
    /// Policy JSON; absent means trivial policies for discrete columns and
    /// a single interval for continuous ones.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Write the breakdown here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub mechanism: Option<PathBuf>,
    /// `n,r,max_parents,seed`.
    #[arg(long, value_parser = parse_random)]
    pub random: Option<RandomSpec>,
    /// Number of cases.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSpec {
    pub n: usize,
    pub r: usize,
    pub max_parents: usize,
    pub seed: u64,
}

fn parse_policy_prior(s: &str) -> Result<PolicyPrior, String> {
    match s.split_once(':') {
        None if s == "uniform" => Ok(PolicyPrior::Uniform),
        Some(("poisson", l)) => l
            .parse::<f64>()
            .map(|lambda| PolicyPrior::PoissonOverR { lambda })
            .map_err(|e| format!("bad Poisson rate `{l}`: {e}")),
        _ => Err(format!("expected `uniform` or `poisson:<lambda>`, got `{s}`")),
    }
}

fn parse_density(s: &str) -> Result<DensityModel, String> {
    match s {
        "uniform" => Ok(DensityModel::UniformWithinInterval),
        "multinomial" => Ok(DensityModel::MultinomialAbstraction),
        _ => Err(format!("expected `uniform` or `multinomial`, got `{s}`")),
    }
}

fn parse_init(s: &str) -> Result<InitSpec, String> {
    let (kind, r0) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `eqfreq:<r0>` or `eqwidth:<r0>`, got `{s}`"))?;
    let r0: usize = r0.parse().map_err(|e| format!("bad bin count `{r0}`: {e}"))?;
    match kind {
        "eqfreq" => Ok(InitSpec::EqualFrequency(r0)),
        "eqwidth" => Ok(InitSpec::EqualWidth(r0)),
        _ => Err(format!("unknown initialization `{kind}`")),
    }
}

fn parse_random(s: &str) -> Result<RandomSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected `n,r,max_parents,seed`, got `{s}`"));
    }
    let num = |p: &str| p.parse::<u64>().map_err(|e| format!("bad number `{p}`: {e}"));
    Ok(RandomSpec {
        n: num(parts[0])? as usize,
        r: num(parts[1])? as usize,
        max_parents: num(parts[2])? as usize,
        seed: num(parts[3])?,
    })
}
