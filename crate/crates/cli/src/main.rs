use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffq_core::ddf::default_ell;
use ffq_core::experiments::{
    bench, factor_count_exhaustive, factor_count_sampled, splitting_degree_exhaustive,
    splitting_degree_sampled, CountPolicy, CountReport, SplittingReport, BENCH_CSV_HEADER,
};
use ffq_core::order::RunRecord;
use ffq_core::{
    ddf, factor, field_new, recursion_audit, Backend, CounterSnapshot, DdfOptions, Error, FieldCtx,
    FiniteField, MeasurementMode, OracleConfig, OrderOracle, OrderStatus, PolyRing, RoundRecord,
};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Factor polynomials over finite fields.
#[derive(Parser, Debug)]
#[command(name = "ffq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Complete factorization into monic irreducibles.
    Factor(PolyArgs),
    /// Distinct-degree factorization of a squarefree monic polynomial.
    Ddf(PolyArgs),
    /// Estimate the order of the Frobenius map modulo a squarefree polynomial.
    Order(OrderArgs),
    /// Sampling experiments.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Instrumented DDF runs on random inputs, as CSV.
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
enum StatsCommand {
    /// Mean and variance of the number of irreducible factors.
    FactorCount(FactorCountArgs),
    /// Distribution of the splitting-field degree of squarefree inputs.
    SplittingDegree(SplittingArgs),
}

#[derive(Args, Debug, Clone)]
struct FieldArgs {
    /// Characteristic.
    #[arg(long)]
    p: BigUint,
    /// Extension degree.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Field modulus in `y`, e.g. `y^2+1`; random irreducible when omitted.
    #[arg(long)]
    h: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct OracleArgs {
    #[arg(long, value_enum, default_value_t = OracleChoice::QuantumSim)]
    oracle: OracleChoice,
    #[arg(long, value_enum, default_value_t = ModeChoice::Auto)]
    mode: ModeChoice,
    #[arg(long, default_value_t = 4)]
    max_attempts: u32,
    /// Bit bound for the order oracle.
    #[arg(long)]
    ell: Option<u32>,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, env = "FFQ_SEED")]
    seed: Option<u64>,
    /// Machine-readable output; requires a seed.
    #[arg(long)]
    json: bool,
    /// Trace records and oracle transcripts as JSON lines on stderr.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct PolyArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Same as `--h`.
    #[arg(long, conflicts_with = "h")]
    modulus: Option<String>,
    #[arg(
        long,
        required_unless_present = "poly_file",
        conflicts_with = "poly_file"
    )]
    poly: Option<String>,
    #[arg(long)]
    poly_file: Option<PathBuf>,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct OrderArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Squarefree monic polynomial defining the Frobenius map.
    #[arg(long, alias = "poly")]
    modulus: String,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct FactorCountArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, conflicts_with = "h")]
    modulus: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Enumerate every monic polynomial instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, value_enum, default_value_t = PolicyChoice::Distinct)]
    policy: PolicyChoice,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SplittingArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, conflicts_with = "h")]
    modulus: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long)]
    exhaustive: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, conflicts_with = "h")]
    modulus: Option<String>,
    /// Degrees, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, env = "FFQ_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OracleChoice {
    QuantumSim,
    Exact,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeChoice {
    ExactDist,
    Idealized,
    Auto,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PolicyChoice {
    Distinct,
    Multiplicity,
}

impl OracleArgs {
    fn config(&self) -> OracleConfig {
        OracleConfig {
            backend: match self.oracle {
                OracleChoice::QuantumSim => Backend::QuantumSim,
                OracleChoice::Exact => Backend::Exact,
            },
            mode: match self.mode {
                ModeChoice::ExactDist => MeasurementMode::ExactDist,
                ModeChoice::Idealized => MeasurementMode::Idealized,
                ModeChoice::Auto => MeasurementMode::Auto,
            },
            max_attempts: self.max_attempts,
        }
    }
}

/// What a successful command writes.
#[derive(Default)]
struct Report {
    stdout: String,
    stderr: Vec<String>,
}

impl Report {
    fn json<T: Serialize>(value: &T) -> Report {
        Report {
            stdout: serde_json::to_string_pretty(value).expect("report serializes") + "\n",
            stderr: Vec::new(),
        }
    }

    fn text(stdout: String) -> Report {
        Report {
            stdout,
            stderr: Vec::new(),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvariantViolation(_)
        | Error::BothZero
        | Error::CapExceeded(_)
        | Error::NotSmooth(..) => 2,
        Error::OracleExhausted => 3,
        _ => 1,
    }
}

fn resolve_seed(out: &OutputArgs) -> Result<u64, Error> {
    match (out.seed, out.json) {
        (Some(s), _) => Ok(s),
        (None, true) => Err(Error::BadInput("--json requires --seed or FFQ_SEED".into())),
        (None, false) => Ok(rand::random()),
    }
}

// The field draw gets its own stream so it never shifts the algorithm's.
fn build_field(args: &FieldArgs, alias: &Option<String>, seed: u64) -> Result<FieldCtx, Error> {
    let h = args.h.as_ref().or(alias.as_ref());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    field_new(&args.p, args.m, h.map(String::as_str), &mut rng)
}

macro_rules! with_ring {
    ($ctx:expr, $ring:ident => $body:expr) => {
        match $ctx {
            FieldCtx::Prime(f) => {
                let $ring = PolyRing::new(f);
                $body
            }
            FieldCtx::Extension(f) => {
                let $ring = PolyRing::new(f);
                $body
            }
        }
    };
}

#[derive(Serialize)]
struct FieldJson {
    p: u64,
    m: usize,
    h: Option<String>,
}

fn field_json<F: FiniteField>(ring: &PolyRing<F>) -> FieldJson {
    let f = ring.field();
    FieldJson {
        p: f.characteristic(),
        m: f.extension_degree(),
        h: (f.extension_degree() > 1).then(|| f.modulus_text()),
    }
}

fn field_name<F: FiniteField>(ring: &PolyRing<F>) -> String {
    let f = ring.field();
    if f.extension_degree() == 1 {
        format!("F_{}", f.characteristic())
    } else {
        format!(
            "F_{}^{} (h = {})",
            f.characteristic(),
            f.extension_degree(),
            f.modulus_text()
        )
    }
}

fn read_poly(args: &PolyArgs) -> Result<String, Error> {
    match (&args.poly, &args.poly_file) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map(|s| s.trim().to_string())
            .map_err(|e| Error::BadInput(format!("{}: {e}", path.display()))),
        (None, None) => Err(Error::BadInput("no input polynomial".into())),
    }
}

fn trace_lines(trace: &[RoundRecord]) -> Vec<String> {
    trace
        .iter()
        .map(|r| serde_json::to_string(r).expect("trace serializes"))
        .collect()
}

fn transcript_lines(runs: &[RunRecord]) -> Vec<String> {
    runs.iter()
        .map(|r| serde_json::to_string(r).expect("transcript serializes"))
        .collect()
}

#[derive(Serialize)]
struct FactorJson {
    field: FieldJson,
    input: String,
    unit: String,
    factors: Vec<FactorEntry>,
    seed: u64,
}

#[derive(Serialize)]
struct FactorEntry {
    poly: String,
    multiplicity: usize,
    degree: usize,
}

fn cmd_factor(args: &PolyArgs) -> Result<Report, Error> {
    let seed = resolve_seed(&args.out)?;
    let text = read_poly(args)?;
    let ctx = build_field(&args.field, &args.modulus, seed)?;
    with_ring!(ctx, ring => run_factor(&ring, &text, args, seed))
}

fn run_factor<F: FiniteField>(
    ring: &PolyRing<F>,
    text: &str,
    args: &PolyArgs,
    seed: u64,
) -> Result<Report, Error> {
    let f = ring.parse(text)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = DdfOptions {
        ell: args.oracle.ell,
        record_polys: false,
    };
    let res = factor(ring, &f, &args.oracle.config(), &opts, &mut rng)?;
    let field = ring.field();
    if args.out.json {
        return Ok(Report::json(&FactorJson {
            field: field_json(ring),
            input: ring.format(&f),
            unit: field.format_elem(&res.unit),
            factors: res
                .factors
                .iter()
                .map(|(g, e)| FactorEntry {
                    poly: ring.format(g),
                    multiplicity: *e,
                    degree: g.deg(),
                })
                .collect(),
            seed,
        }));
    }
    let mut parts: Vec<String> = Vec::new();
    if res.unit != field.one() || res.factors.is_empty() {
        parts.push(format!("[{}]", field.format_elem(&res.unit)));
    }
    for (g, e) in &res.factors {
        let g = format!("({})", ring.format(g));
        parts.push(if *e == 1 { g } else { format!("{g}^{e}") });
    }
    Ok(Report::text(format!(
        "{}: {} = {}\nseed {seed}\n",
        field_name(ring),
        ring.format(&f),
        parts.join(" * ")
    )))
}

#[derive(Serialize)]
struct DdfJson {
    field: FieldJson,
    input: String,
    parts: Vec<DdfPart>,
    depth: usize,
    fallbacks: usize,
    ops: CounterSnapshot,
    seed: u64,
}

#[derive(Serialize)]
struct DdfPart {
    poly: String,
    degree: usize,
    count: usize,
}

fn cmd_ddf(args: &PolyArgs) -> Result<Report, Error> {
    let seed = resolve_seed(&args.out)?;
    let text = read_poly(args)?;
    let ctx = build_field(&args.field, &args.modulus, seed)?;
    with_ring!(ctx, ring => run_ddf(&ring, &text, args, seed))
}

fn run_ddf<F: FiniteField>(
    ring: &PolyRing<F>,
    text: &str,
    args: &PolyArgs,
    seed: u64,
) -> Result<Report, Error> {
    let f = ring.parse(text)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = DdfOptions {
        ell: args.oracle.ell,
        record_polys: args.out.verbose,
    };
    let res = ddf(ring, &f, &args.oracle.config(), &opts, &mut rng)?;
    let depth = recursion_audit(&res.trace);
    let mut report = if args.out.json {
        Report::json(&DdfJson {
            field: field_json(ring),
            input: ring.format(&f),
            parts: res
                .parts
                .iter()
                .map(|(g, k)| DdfPart {
                    poly: ring.format(g),
                    degree: *k,
                    count: g.deg() / k,
                })
                .collect(),
            depth,
            fallbacks: res.fallbacks,
            ops: res.ops,
            seed,
        })
    } else {
        let mut out = format!("{}: {}\n", field_name(ring), ring.format(&f));
        for (g, k) in &res.parts {
            out += &format!("degree {k} ({} factors): {}\n", g.deg() / k, ring.format(g));
        }
        out += &format!(
            "depth {depth}, fallbacks {}, compositions {}\nseed {seed}\n",
            res.fallbacks, res.ops.compositions
        );
        Report::text(out)
    };
    if args.out.verbose {
        report.stderr = trace_lines(&res.trace);
    }
    Ok(report)
}

#[derive(Serialize)]
struct OrderJson {
    field: FieldJson,
    modulus: String,
    ell: u32,
    backend: Backend,
    mode: MeasurementMode,
    order: String,
    attempts: u32,
    transcript: Vec<RunRecord>,
    seed: u64,
}

fn cmd_order(args: &OrderArgs) -> Result<Report, Error> {
    let seed = resolve_seed(&args.out)?;
    let ctx = build_field(&args.field, &None, seed)?;
    with_ring!(ctx, ring => run_order(&ring, args, seed))
}

fn run_order<F: FiniteField>(
    ring: &PolyRing<F>,
    args: &OrderArgs,
    seed: u64,
) -> Result<Report, Error> {
    let f = ring.parse(&args.modulus)?;
    let pi = ring.frobenius(&f, true)?;
    let ell = args.oracle.ell.unwrap_or_else(|| default_ell(f.deg()));
    let cfg = args.oracle.config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let est = cfg.estimate(ring, &pi, ell, &mut rng)?;
    let r = match &est.status {
        OrderStatus::Found(r) => r.clone(),
        OrderStatus::Fail => {
            if args.out.verbose {
                for line in transcript_lines(&est.transcript) {
                    eprintln!("{line}");
                }
            }
            return Err(Error::OracleExhausted);
        }
    };
    let mut report = if args.out.json {
        Report::json(&OrderJson {
            field: field_json(ring),
            modulus: ring.format(&f),
            ell,
            backend: cfg.backend,
            mode: cfg.mode,
            order: r.to_string(),
            attempts: est.attempts,
            transcript: est.transcript.clone(),
            seed,
        })
    } else {
        Report::text(format!(
            "{}: order of Frobenius mod {} is {r} (ell {ell}, {} attempt(s))\nseed {seed}\n",
            field_name(ring),
            ring.format(&f),
            est.attempts
        ))
    };
    if args.out.verbose {
        report.stderr = transcript_lines(&est.transcript);
    }
    Ok(report)
}

#[derive(Serialize)]
struct CountJson {
    field: FieldJson,
    #[serde(flatten)]
    report: CountReport,
    seed: u64,
}

fn cmd_factor_count(args: &FactorCountArgs) -> Result<Report, Error> {
    let seed = resolve_seed(&args.out)?;
    if !args.exhaustive && args.trials < 100 {
        return Err(Error::BadInput("--trials must be at least 100".into()));
    }
    let ctx = build_field(&args.field, &args.modulus, seed)?;
    let policy = match args.policy {
        PolicyChoice::Distinct => CountPolicy::Distinct,
        PolicyChoice::Multiplicity => CountPolicy::Multiplicity,
    };
    let cfg = args.oracle.config();
    with_ring!(ctx, ring => {
        let report = if args.exhaustive {
            factor_count_exhaustive(&ring, args.n, policy, &cfg)?
        } else {
            factor_count_sampled(&ring, args.n, args.trials, seed, policy, &cfg)?
        };
        Ok(if args.out.json {
            Report::json(&CountJson { field: field_json(&ring), report, seed })
        } else {
            Report::text(format!(
                "{} n={} trials={}{}: mean {:.6} variance {:.6} (ln n = {:.6})\nseed {seed}\n",
                field_name(&ring),
                report.n,
                report.trials,
                if report.exhaustive { " (exhaustive)" } else { "" },
                report.mean,
                report.variance,
                (report.n.max(1) as f64).ln()
            ))
        })
    })
}

#[derive(Serialize)]
struct SplittingJson {
    field: FieldJson,
    #[serde(flatten)]
    report: SplittingReport,
    seed: u64,
}

fn cmd_splitting(args: &SplittingArgs) -> Result<Report, Error> {
    let seed = resolve_seed(&args.out)?;
    if args.n == 0 || args.n > 64 {
        return Err(Error::BadInput("--n must be between 1 and 64".into()));
    }
    if !args.exhaustive && args.trials < 100 {
        return Err(Error::BadInput("--trials must be at least 100".into()));
    }
    let ctx = build_field(&args.field, &args.modulus, seed)?;
    with_ring!(ctx, ring => {
        let report = if args.exhaustive {
            splitting_degree_exhaustive(&ring, args.n)?
        } else {
            splitting_degree_sampled(&ring, args.n, args.trials, seed)?
        };
        Ok(if args.out.json {
            Report::json(&SplittingJson { field: field_json(&ring), report, seed })
        } else {
            let mut out = format!(
                "{} n={} samples={}{}: mean ln d {:.4}, center {:.4}, fraction above {:.4} = {:.4}\n",
                field_name(&ring),
                report.n,
                report.trials,
                if report.exhaustive { " (exhaustive)" } else { "" },
                report.mean_ln_d,
                report.center,
                report.threshold,
                report.fraction_exceeding
            );
            let mut hist: Vec<(BigUint, u64)> =
                report.histogram.iter().map(|(d, c)| (d.parse().expect("decimal"), *c)).collect();
            hist.sort();
            for (d, c) in hist {
                out += &format!("d={d}: {c}\n");
            }
            out += &format!("seed {seed}\n");
            Report::text(out)
        })
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<Report, Error> {
    let seed = args.seed.unwrap_or_else(rand::random);
    let ctx = build_field(&args.field, &args.modulus, seed)?;
    let opts = DdfOptions {
        ell: args.oracle.ell,
        record_polys: false,
    };
    let cfg = args.oracle.config();
    let rows = with_ring!(ctx, ring => bench(&ring, &args.n, args.trials, seed, &cfg, &opts)?);
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out += &row.csv();
        out.push('\n');
    }
    Ok(Report {
        stdout: out,
        stderr: vec![format!("seed {seed}")],
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Factor(a) => cmd_factor(a),
        Command::Ddf(a) => cmd_ddf(a),
        Command::Order(a) => cmd_order(a),
        Command::Stats(StatsCommand::FactorCount(a)) => cmd_factor_count(a),
        Command::Stats(StatsCommand::SplittingDegree(a)) => cmd_splitting(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(report) => {
            for line in &report.stderr {
                eprintln!("{line}");
            }
            print!("{}", report.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 1);
        assert_eq!(exit_code(&Error::NotPrime(4u32.into())), 1);
        assert_eq!(exit_code(&Error::NotSquarefree), 1);
        assert_eq!(exit_code(&Error::InvariantViolation("x".into())), 2);
        assert_eq!(exit_code(&Error::OracleExhausted), 3);
    }

    #[test]
    fn cli_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
