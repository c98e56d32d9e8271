use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrtrim_core::analyzer;
use mrtrim_core::checker::Tolerance;
use mrtrim_core::corpus;
use mrtrim_core::miner::MinerConfig;
use mrtrim_core::mr::{MrId, MrParams};
use mrtrim_core::pipeline::{self, Pipeline, Target};
use mrtrim_core::report::{self, AnalysisArtifact, Artifact, ExecutionArtifact, TdArtifact, TransformedArtifact};
use mrtrim_core::runner::{self, ExternalSut};
use mrtrim_core::tdgen::{Budget, FuzzConfig, InputType};
use mrtrim_core::Error;

/// Select metamorphic relations from test data and mine the constraints
/// under which they hold.
#[derive(Parser)]
#[command(name = "mrtrim", version, after_help = EXIT_CODES)]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  other failure (I/O, serialization)
  2  configuration error
  3  missing, unreadable or invalid artifact
  4  unknown method or external program that cannot be started";

#[derive(Subcommand)]
enum Command {
    /// Generate random test data.
    Gen {
        #[command(flatten)]
        fuzz: FuzzArgs,
        #[arg(long, short, default_value = "td.json")]
        output: PathBuf,
    },
    /// Apply the metamorphic relations to test data.
    Transform {
        #[arg(long, short, default_value = "td.json")]
        input: PathBuf,
        #[arg(long, short, default_value = "transformed.json")]
        output: PathBuf,
        #[command(flatten)]
        mr: MrArgs,
        /// Seed of the transformation streams; defaults to the data's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Execute methods on source and follow-up inputs.
    Run {
        #[arg(long, short, default_value = "transformed.json")]
        input: PathBuf,
        /// Directory receiving one execution artifact per method.
        #[arg(long, short, default_value = "executions")]
        output: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Attach verdicts to execution artifacts.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Write checked artifacts here instead of in place.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = mrtrim_core::checker::DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Aggregate verdicts into frequencies and classifications.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, short, default_value = "analysis.json")]
        output: PathBuf,
        /// Ground-truth labels, `{"method": {"MR_ADD": 1}}`.
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Mine constraints for the mixed pairs of an analysis.
    Mine {
        analysis: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Defaults to updating the analysis in place.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        miner: MinerArgs,
    },
    /// Run every stage and write all artifacts.
    Pipeline {
        #[command(flatten)]
        fuzz: FuzzArgs,
        #[command(flatten)]
        mr: MrArgs,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = mrtrim_core::checker::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[command(flatten)]
        miner: MinerArgs,
        #[arg(long, short, default_value = "mrtrim-out")]
        output: PathBuf,
        /// Do not print the summary.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Print the classifications and constraints of an analysis.
    Show { analysis: PathBuf },
    /// List the built-in methods.
    Methods,
    /// Answer wire-protocol requests on stdin with a built-in method.
    Serve { method: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Positive integers in [1, 50].
    Rq1,
    /// Integers in [-15, 15], empty lists allowed.
    Rq2,
}

#[derive(Args)]
struct FuzzArgs {
    /// Named configuration; the flags below override its fields.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long, allow_negative_numbers = true)]
    low: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    high: Option<f64>,
    #[arg(long)]
    input_type: Option<InputType>,
    /// Number of data to generate.
    #[arg(long, conflicts_with = "duration")]
    count: Option<u64>,
    /// Generate for this many seconds; not reproducible.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    min_len: Option<u64>,
    #[arg(long)]
    max_len: Option<u64>,
    #[arg(long, env = "MRTRIM_SEED", default_value_t = 0)]
    seed: u64,
}

impl FuzzArgs {
    fn config(&self) -> FuzzConfig {
        let mut c = match self.preset {
            Some(Preset::Rq1) => FuzzConfig::rq1(self.seed),
            Some(Preset::Rq2) => FuzzConfig::rq2(self.seed),
            None => FuzzConfig {
                seed: self.seed,
                ..FuzzConfig::default()
            },
        };
        c.low = self.low.unwrap_or(c.low);
        c.high = self.high.unwrap_or(c.high);
        c.input_type = self.input_type.unwrap_or(c.input_type);
        c.min_len = self.min_len.unwrap_or(c.min_len);
        c.max_len = self.max_len.unwrap_or(c.max_len);
        if let Some(n) = self.count {
            c.budget = Budget::Count(n);
        }
        if let Some(s) = self.duration {
            c.budget = Budget::DurationSecs(s);
        }
        c
    }
}

#[derive(Args)]
struct MrArgs {
    /// Relations to apply, e.g. `ADD,PER`; all six by default.
    #[arg(long, value_delimiter = ',')]
    mrs: Vec<MrId>,
    #[arg(long, allow_negative_numbers = true)]
    add_constant: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mul_factor: Option<f64>,
}

impl MrArgs {
    fn ids(&self) -> Vec<MrId> {
        if self.mrs.is_empty() {
            MrId::ALL.to_vec()
        } else {
            self.mrs.clone()
        }
    }

    fn params(&self) -> MrParams {
        let d = MrParams::default();
        MrParams {
            add_constant: self.add_constant.unwrap_or(d.add_constant),
            mul_factor: self.mul_factor.unwrap_or(d.mul_factor),
        }
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Built-in methods to run, comma separated; all by default.
    #[arg(long, value_delimiter = ',', conflicts_with = "external")]
    methods: Vec<String>,
    /// Program speaking the line-delimited JSON protocol.
    #[arg(long)]
    external: Option<String>,
    /// Argument passed to the external program; repeatable.
    #[arg(long = "external-arg", requires = "external", allow_hyphen_values = true)]
    external_args: Vec<String>,
    /// Method name recorded for the external program.
    #[arg(long, requires = "external")]
    name: Option<String>,
    /// Seconds to wait for each external response.
    #[arg(long, requires = "external")]
    timeout: Option<f64>,
}

impl TargetArgs {
    fn target(&self) -> Result<Target, Error> {
        let Some(program) = &self.external else {
            let methods = if self.methods.is_empty() {
                corpus::list_methods().iter().map(|m| m.name.to_string()).collect()
            } else {
                self.methods.clone()
            };
            runner::resolve_methods(&methods)?;
            return Ok(Target::Builtin(methods));
        };
        let mut sut = ExternalSut::new(program.clone());
        sut.args = self.external_args.clone();
        if let Some(name) = &self.name {
            sut.name = name.clone();
        }
        if let Some(t) = self.timeout {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("timeout must be positive, got {t}")));
            }
            sut.timeout = Duration::from_secs_f64(t);
        }
        Ok(Target::External(sut))
    }
}

#[derive(Args)]
struct MinerArgs {
    #[arg(long, default_value_t = MinerConfig::default().min_precision)]
    min_precision: f64,
    #[arg(long, default_value_t = MinerConfig::default().min_support)]
    min_support: u64,
    /// Thresholds tried per numeric feature; every observed value by default.
    #[arg(long)]
    max_thresholds: Option<usize>,
    /// Rules kept per mixed pair.
    #[arg(long, default_value_t = 3)]
    top_k: usize,
}

impl MinerArgs {
    fn config(&self) -> MinerConfig {
        MinerConfig {
            min_precision: self.min_precision,
            min_support: self.min_support,
            max_thresholds: self.max_thresholds,
        }
    }
}

/// A failure together with its exit code.
struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match &error {
            Error::Config(_) | Error::MissingReport { .. } => 2,
            Error::Parse { .. } | Error::Schema { .. } | Error::SchemaVersion { .. } => 3,
            Error::UnknownMethod(_) | Error::Spawn { .. } => 4,
            _ => 1,
        };
        Failure { code, error }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Read an input artifact; a missing file counts as an artifact error.
fn load<A: Artifact>(path: &Path) -> CliResult<A> {
    report::read(path).map_err(|error| match error {
        Error::Io { .. } => Failure { code: 3, error },
        error => error.into(),
    })
}

fn save<A: Artifact>(artifact: &A, path: &Path) -> CliResult {
    report::write(artifact, path)?;
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn tolerance(t: f64) -> CliResult<Tolerance> {
    Ok(Tolerance::new(t)?)
}

/// Unix seconds, or `SOURCE_DATE_EPOCH` when set.
fn now() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

fn load_gt(path: Option<&PathBuf>) -> CliResult<Option<mrtrim_core::analyzer::GroundTruth>> {
    path.map(|p| report::read_ground_truth(p).map_err(Failure::from)).transpose()
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen { fuzz, output } => {
            let td = pipeline::generate_stage(&fuzz.config())?;
            save(&td, &output)?;
            eprintln!("wrote {} data to {}", td.data.len(), output.display());
            Ok(())
        }
        Command::Transform { input, output, mr, seed } => {
            let td: TdArtifact = load(&input)?;
            let seed = seed.unwrap_or(td.config.seed);
            let t = pipeline::transform_stage(&td, mr.params(), &mr.ids(), seed, &file_name(&input))?;
            save(&t, &output)?;
            eprintln!("wrote {}", output.display());
            Ok(())
        }
        Command::Run { input, output, target } => {
            let t: TransformedArtifact = load(&input)?;
            let source = file_name(&input);
            let execs = match target.target()? {
                Target::Builtin(methods) => pipeline::run_stage(&t, &methods, &source)?,
                Target::External(sut) => vec![pipeline::run_external_stage(&t, &sut, &source)?],
            };
            for e in &execs {
                save(e, &output.join(pipeline::execution_file_name(&e.method)))?;
            }
            eprintln!("wrote {} execution artifacts to {}", execs.len(), output.display());
            Ok(())
        }
        Command::Check { files, output, tolerance: t } => {
            let t = tolerance(t)?;
            for path in &files {
                let mut e: ExecutionArtifact = load(path)?;
                pipeline::check_stage(&mut e, t);
                let dest = output.as_ref().map_or_else(|| path.clone(), |dir| dir.join(file_name(path)));
                save(&e, &dest)?;
            }
            eprintln!("checked {} execution artifacts", files.len());
            Ok(())
        }
        Command::Analyze { files, output, gt } => {
            let execs = files.iter().map(|p| load(p)).collect::<CliResult<Vec<ExecutionArtifact>>>()?;
            let gt = load_gt(gt.as_ref())?;
            let a = pipeline::analyze_stage(&execs, gt.as_ref(), now())?;
            save(&a, &output)?;
            eprintln!("wrote {}", output.display());
            Ok(())
        }
        Command::Mine { analysis, files, output, miner } => {
            let mut a: AnalysisArtifact = load(&analysis)?;
            let execs = files.iter().map(|p| load(p)).collect::<CliResult<Vec<ExecutionArtifact>>>()?;
            pipeline::mine_stage(&mut a, &execs, &miner.config(), miner.top_k)?;
            let dest = output.as_ref().unwrap_or(&analysis);
            save(&a, dest)?;
            eprintln!("wrote {}", dest.display());
            Ok(())
        }
        Command::Pipeline { fuzz, mr, target, tolerance: t, gt, miner, output, quiet } => {
            let mut p = Pipeline::new(fuzz.config());
            p.mr_params = mr.params();
            p.mrs = mr.ids();
            p.target = target.target()?;
            p.tolerance = tolerance(t)?;
            p.miner = miner.config();
            p.top_k = miner.top_k;
            p.ground_truth = load_gt(gt.as_ref())?;
            p.created_at = now();
            let out = p.run()?;
            save(&out.td, &output.join(&p.names.td))?;
            save(&out.transformed, &output.join(&p.names.transformed))?;
            for e in &out.executions {
                save(e, &output.join(pipeline::execution_file_name(&e.method)))?;
            }
            save(&out.analysis, &output.join("analysis.json"))?;
            report::write_json(&out.analysis.manifest, output.join("manifest.json"))?;
            eprintln!("wrote {} artifacts to {}", out.executions.len() + 4, output.display());
            if quiet {
                return Ok(());
            }
            print_out(&summary(&out.analysis))
        }
        Command::Show { analysis } => {
            print_out(&summary(&load::<AnalysisArtifact>(&analysis)?))
        }
        Command::Methods => {
            let mut text = String::new();
            for m in corpus::list_methods() {
                let order = if m.permutation_invariant { "" } else { ", order-sensitive" };
                text.push_str(&format!("{:<26} arity >= {}{order}  {}\n", m.name, m.min_arity, m.domain_note));
            }
            print_out(&text)
        }
        Command::Serve { method } => {
            let method = corpus::resolve(&method)?;
            let stdout = io::stdout();
            runner::serve(method, io::stdin().lock(), BufWriter::new(stdout.lock()))
                .map_err(|e| Failure::from(Error::io("<stdio>", e)))
        }
    }
}

fn summary(a: &AnalysisArtifact) -> String {
    let mut out = analyzer::render_table(&a.report_list());
    for (method, row) in &a.constraints {
        for (mr, rules) in row {
            out.push_str(&format!("\n{method} / {mr}\n"));
            for r in rules {
                out.push_str(&format!(
                    "  {}  (support {}, precision {:.3}, recall {:.3})\n",
                    r.text, r.rule.support, r.rule.precision, r.rule.recall
                ));
            }
        }
    }
    out
}

/// Print to stdout; a closed pipe is not an error.
fn print_out(text: &str) -> CliResult {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e).into()),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .expect("thread pool is configured once");
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error}");
            ExitCode::from(code)
        }
    }
}
