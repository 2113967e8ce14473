use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use bayesdisc::dataset::parse_schema_json;
use bayesdisc::generator::{random_mechanism, sample_dataset, Mechanism};
use bayesdisc::io::{breakdown_to_json, policy_from_json, policy_to_json, structure_from_json, structure_to_json, SCHEMA_VERSION};
use bayesdisc::search::{coordinate_ascent, initial_policies};
use bayesdisc::{
    hill_climb_structure, load_dataset, network_score, DagStructure, Dataset, DensityModel, DirichletMode, InitSpec,
    NetworkPolicy, PolicyPrior, PriorSpec, Schema, SearchConfig,
};
use serde_json::{json, Value};

use crate::args::{DiscretizeArgs, Input, LearnArgs, ScoreArgs, SearchArgs, SimulateArgs};

/// Exit code 2: bad input or arguments.
pub const EXIT_INPUT: i32 = 2;
/// Exit code 3: an internal invariant did not hold.
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<bayesdisc::Error> for Failure {
    fn from(e: bayesdisc::Error) -> Self {
        match e {
            bayesdisc::Error::Domain(_) => Failure::internal(e.to_string()),
            other => Failure::input(other.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn open_out(path: &Path) -> Outcome<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Outcome<()> {
    let mut w = open_out(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write_text(path, &text)
}

fn load_input(input: &Input) -> Outcome<Dataset> {
    let schema = match &input.schema {
        Some(p) => Schema::Explicit(parse_schema_json(&read_text(p)?).map_err(|e| {
            Failure::input(format!("invalid schema {}: {e}", p.display()))
        })?),
        None => Schema::Infer,
    };
    let file = File::open(&input.data)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", input.data.display())))?;
    load_dataset(BufReader::new(file), &schema)
        .map_err(|e| Failure::input(format!("{}: {e}", input.data.display())))
}

fn load_structure(path: Option<&PathBuf>, data: &Dataset) -> Outcome<DagStructure> {
    match path {
        Some(p) => structure_from_json(&read_text(p)?, &data.names())
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => Ok(DagStructure::empty(data.n_vars())),
    }
}

fn prior_json(prior: &PriorSpec) -> Value {
    let dirichlet = match prior.dirichlet {
        DirichletMode::K2 { alpha } => json!({ "mode": "k2", "alpha": alpha }),
        DirichletMode::BDeu { ess } => json!({ "mode": "bdeu", "ess": ess }),
    };
    let policy_prior = match prior.policy_prior {
        PolicyPrior::Uniform => json!({ "kind": "uniform" }),
        PolicyPrior::PoissonOverR { lambda } => json!({ "kind": "poisson", "lambda": lambda }),
    };
    let density = match prior.density {
        DensityModel::UniformWithinInterval => "uniform",
        DensityModel::MultinomialAbstraction => "multinomial",
    };
    json!({ "dirichlet": dirichlet, "policy_prior": policy_prior, "density": density })
}

fn config_json(config: &SearchConfig, n_rows: usize, threads: Option<usize>) -> Value {
    let init = match &config.init {
        InitSpec::EqualFrequency(r0) => json!({ "kind": "eqfreq", "r0": r0 }),
        InitSpec::EqualWidth(r0) => json!({ "kind": "eqwidth", "r0": r0 }),
        InitSpec::Given(_) => json!({ "kind": "given" }),
    };
    json!({
        "r_max": config.resolved_r_max(n_rows),
        "epsilon": config.epsilon,
        "max_sweeps": config.max_sweeps,
        "init": init,
        "structure_search": config.structure_search,
        "max_parents": config.max_parents,
        "interleave_period": config.interleave_period,
        "seed": config.seed,
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
    })
}

struct Manifest {
    command: &'static str,
    started: Instant,
    configuration: Value,
    inputs: Value,
    outputs: Vec<(&'static str, PathBuf)>,
    total: Option<f64>,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Manifest {
            command,
            started: Instant::now(),
            configuration: Value::Null,
            inputs: json!({}),
            outputs: Vec::new(),
            total: None,
        }
    }

    fn write(&self, path: &Path) -> Outcome<()> {
        let outputs: serde_json::Map<String, Value> = self
            .outputs
            .iter()
            .map(|(k, p)| (k.to_string(), json!(p.display().to_string())))
            .collect();
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        write_json(
            path,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": self.command,
                "configuration": self.configuration,
                "inputs": self.inputs,
                "outputs": outputs,
                "total_score": self.total,
                "duration_seconds": self.started.elapsed().as_secs_f64(),
                "created_unix": created,
            }),
        )
    }
}

fn input_json(input: &Input) -> Value {
    json!({
        "data": input.data.display().to_string(),
        "schema": input.schema.as_ref().map(|p| p.display().to_string()),
    })
}

fn checked_prior(prior: PriorSpec, data: &Dataset) -> Outcome<PriorSpec> {
    prior.validate(data.n_rows())?;
    Ok(prior)
}

fn checked_config(search: &SearchArgs, structure_search: bool) -> Outcome<SearchConfig> {
    let config = search.config(structure_search);
    config.validate()?;
    Ok(config)
}

/// `p.json` -> `p.<suffix>`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn discretize(args: &DiscretizeArgs) -> Outcome<()> {
    let mut manifest = Manifest::new("discretize");
    let data = load_input(&args.input)?;
    let structure = load_structure(args.structure.as_ref(), &data)?;
    let prior = checked_prior(args.model.prior(), &data)?;
    let config = checked_config(&args.search, false)?;

    let init = initial_policies(&data, &config.init, config.resolved_r_max(data.n_rows()))?;
    let (policies, trace) = coordinate_ascent(&init, &structure, &data, &prior, &config)?;
    if !trace.is_monotone() {
        return Err(Failure::internal("coordinate ascent lowered the score"));
    }
    let total = network_score(&policies, &structure, &data, &prior)?.total;

    let names = data.names();
    write_json(&args.out, &policy_to_json(&policies, &names))?;
    let csv_path = sibling(&args.out, "discretized.csv");
    data.discretize(&policies)?.write_csv(&names, open_out(&csv_path)?)?;

    manifest.configuration = json!({ "prior": prior_json(&prior), "search": config_json(&config, data.n_rows(), args.search.threads) });
    manifest.inputs = input_json(&args.input);
    manifest.inputs["structure"] = json!(args.structure.as_ref().map(|p| p.display().to_string()));
    manifest.outputs = vec![("policy", args.out.clone()), ("discretized", csv_path)];
    manifest.total = Some(total);
    manifest.write(&sibling(&args.out, "manifest.json"))?;
    println!("total score {total}");
    Ok(())
}

pub fn learn(args: &LearnArgs) -> Outcome<()> {
    let mut manifest = Manifest::new("learn");
    let data = load_input(&args.input)?;
    let prior = checked_prior(args.model.prior(), &data)?;
    let config = checked_config(&args.search, true)?;

    let learned = hill_climb_structure(&data, &prior, &config)?;
    if !learned.trace.is_monotone() {
        return Err(Failure::internal("structure search lowered the score"));
    }
    let names = data.names();
    let dir = &args.out_dir;
    let files = [
        ("structure", dir.join("structure.json")),
        ("dot", dir.join("structure.dot")),
        ("policy", dir.join("policy.json")),
        ("trace", dir.join("trace.jsonl")),
        ("breakdown", dir.join("breakdown.json")),
    ];
    write_json(&files[0].1, &structure_to_json(&learned.structure, &names))?;
    write_text(&files[1].1, &learned.structure.to_dot(&names))?;
    write_json(&files[2].1, &policy_to_json(&learned.policies, &names))?;
    write_text(&files[3].1, &learned.trace.to_json_lines())?;
    write_json(&files[4].1, &breakdown_to_json(&learned.breakdown, &names))?;

    manifest.configuration = json!({ "prior": prior_json(&prior), "search": config_json(&config, data.n_rows(), args.search.threads) });
    manifest.inputs = input_json(&args.input);
    manifest.outputs = files.to_vec();
    manifest.total = Some(learned.breakdown.total);
    manifest.write(&dir.join("manifest.json"))?;
    println!(
        "{} edges, total score {}",
        learned.structure.edge_count(),
        learned.breakdown.total
    );
    Ok(())
}

pub fn score(args: &ScoreArgs) -> Outcome<()> {
    let data = load_input(&args.input)?;
    let structure = load_structure(args.structure.as_ref(), &data)?;
    let prior = checked_prior(args.model.prior(), &data)?;
    let policies = match &args.policy {
        Some(p) => policy_from_json(&read_text(p)?, &data).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?,
        None => NetworkPolicy::coarsest(&data),
    };
    let breakdown = network_score(&policies, &structure, &data, &prior)?;
    let doc = breakdown_to_json(&breakdown, &data.names());
    match &args.out {
        Some(p) => write_json(p, &doc),
        None => {
            println!("{}", serde_json::to_string_pretty(&doc).expect("json values serialize"));
            Ok(())
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Outcome<()> {
    let mut manifest = Manifest::new("simulate");
    if args.n == 0 {
        return Err(Failure::input("--n must be at least 1"));
    }
    let mechanism = match (&args.mechanism, &args.random) {
        (Some(p), _) => {
            Mechanism::from_json(&read_text(p)?).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?
        }
        (None, Some(r)) => random_mechanism(r.n, r.max_parents, r.r, r.seed)?,
        (None, None) => return Err(Failure::input("either --mechanism or --random is required")),
    };
    let (data, latent) = sample_dataset(&mechanism, args.n)?;
    let names = data.names();
    let dir = &args.out_dir;
    let files = [
        ("data", dir.join("data.csv")),
        ("latent", dir.join("latent.csv")),
        ("schema", dir.join("schema.json")),
        ("mechanism", dir.join("mechanism.json")),
    ];
    data.write_csv(open_out(&files[0].1)?)?;
    latent.write_csv(&names, open_out(&files[1].1)?)?;
    write_json(&files[2].1, &serde_json::to_value(data.schema_entries()).expect("schema serializes"))?;
    write_json(&files[3].1, &mechanism.to_json())?;

    manifest.configuration = json!({
        "n": args.n,
        "seed": mechanism.seed,
        "random": args.random.map(|r| json!({ "n": r.n, "r": r.r, "max_parents": r.max_parents, "seed": r.seed })),
    });
    manifest.inputs = json!({ "mechanism": args.mechanism.as_ref().map(|p| p.display().to_string()) });
    manifest.outputs = files.to_vec();
    manifest.write(&dir.join("manifest.json"))?;
    println!("{} cases of {} variables", args.n, names.len());
    Ok(())
}
