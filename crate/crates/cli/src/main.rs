use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use concorr::correlation::{
    chsh_optimize, classify, connected_r_matrix, max_violation_eigen, r_matrix, CubicClassification,
};
use concorr::lhv::{
    build_model, correlator_closed, freedom_of_choice_witness, mc_correlator, HiddenSample,
};
use concorr::measures::{measures_from_params, measures_from_state, negativity};
use concorr::qmat::{normalize, Vec3, C64};
use concorr::scan::{
    classify_bins, fig2_witnesses, read_scan_file, run_scan, write_scan, write_summary,
    write_witnesses, BinSpec, FixMode, ScanConfig, ScanRow, DEFAULT_BIN_WIDTH,
};
use concorr::states::{
    canonical_state, from_amplitudes, CanonicalParams, PairSelector, Reductions, StateVector,
};

#[derive(Parser)]
#[command(
    name = "concorr",
    version,
    about = "Connected-correlation CHSH analysis of three-qubit states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measures, negativity and maximal violations for one state.
    Report(ReportArgs),
    /// Seeded random scan written as CSV.
    Scan(ScanArgs),
    /// Binned summary of a scan.
    Classify(ClassifyArgs),
    /// Pairs in a (γ2, θ) bin whose log-negativity and γ_c disagree in order.
    Fig2(Fig2Args),
    /// Hidden-variable simulation of a two-qubit correlator.
    Lhv(LhvArgs),
}

#[derive(Args)]
struct StateArgs {
    /// Canonical parameters l0,l1,l2,l3,l4,phi (rescaled to unit norm).
    #[arg(
        long,
        value_name = "L0,L1,L2,L3,L4,PHI",
        allow_hyphen_values = true,
        conflicts_with = "amps"
    )]
    state: Option<String>,
    /// Eight amplitudes as 16 interleaved re,im values, |000⟩ first.
    #[arg(long, value_name = "RE,IM,...", allow_hyphen_values = true)]
    amps: Option<String>,
    #[arg(long, default_value = "12")]
    pair: PairSelector,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Random starts for the direct optimizer.
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "12")]
    pair: PairSelector,
    /// Share of draws projected onto the pair's separable set.
    #[arg(long, default_value_t = 0.0)]
    separable_fraction: f64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Scan CSV.
    input: PathBuf,
    #[arg(long, default_value = "g2theta")]
    fix: FixMode,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    g2_width: f64,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    a1_width: f64,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    theta_width: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Fig2Args {
    /// Scan CSV.
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    g2_width: f64,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    theta_width: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LhvArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Direction on the first qubit of the pair.
    #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
    a: String,
    /// Direction on the second qubit of the pair.
    #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
    b: String,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model the full correlation matrix instead of the connected one.
    #[arg(long)]
    quantum: bool,
    #[arg(long)]
    json: bool,
}

fn parse_reals(s: &str, want: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("{what}: expected {want} comma-separated reals"))?;
    if v.len() != want {
        bail!("{what}: expected {want} values, got {}", v.len());
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        bail!("{what}: non-finite value {x}");
    }
    Ok(v)
}

fn parse_direction(s: &str, what: &str) -> Result<Vec3> {
    let v = parse_reals(s, 3, what)?;
    normalize(&[v[0], v[1], v[2]]).with_context(|| format!("{what}: zero vector"))
}

enum Input {
    Canonical(CanonicalParams),
    Amplitudes(StateVector),
}

impl Input {
    fn vector(&self) -> StateVector {
        match self {
            Input::Canonical(p) => canonical_state(p),
            Input::Amplitudes(s) => *s,
        }
    }
}

fn parse_state(args: &StateArgs) -> Result<Input> {
    match (&args.state, &args.amps) {
        (Some(s), None) => {
            let v = parse_reals(s, 6, "--state")?;
            let p = CanonicalParams::normalized([v[0], v[1], v[2], v[3], v[4]], v[5])
                .context("--state")?;
            Ok(Input::Canonical(p))
        }
        (None, Some(s)) => {
            let v = parse_reals(s, 16, "--amps")?;
            let a: [C64; 8] = std::array::from_fn(|i| C64::new(v[2 * i], v[2 * i + 1]));
            Ok(Input::Amplitudes(from_amplitudes(a).context("--amps")?))
        }
        _ => bail!("give the state with --state or --amps"),
    }
}

fn classification_json(c: &CubicClassification, eigen: f64, optimizer: f64) -> Value {
    json!({
        "alpha1": c.alpha1,
        "alpha2": c.alpha2,
        "alpha3": c.alpha3,
        "gamma1": c.gamma1,
        "gamma2": c.gamma2,
        "theta": c.theta,
        "discriminant": c.discriminant,
        "gamma": c.gamma,
        "gamma_eigen": eigen,
        "gamma_optimizer": optimizer,
    })
}

fn print_value(out: &mut impl Write, v: &Value, json: bool) -> Result<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
        return Ok(());
    }
    fn walk(out: &mut impl Write, prefix: &str, v: &Value) -> io::Result<()> {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(out, &key, x)?;
                }
                Ok(())
            }
            _ => writeln!(out, "{prefix:<28} {v}"),
        }
    }
    walk(out, "", v)?;
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let input = parse_state(&args.state)?;
    let pair = args.state.pair;
    let red = Reductions::of(&input.vector());
    let ms = match &input {
        Input::Canonical(p) => measures_from_params(p, pair),
        Input::Amplitudes(_) => measures_from_state(&red, pair)?,
    };
    let rho = red.pair(pair);
    let neg = negativity(rho)?;

    let mut sections = serde_json::Map::new();
    for (name, r) in [
        ("quantum", r_matrix(rho)?),
        ("connected", connected_r_matrix(rho)?),
    ] {
        let c = classify(&r)?;
        let (opt, _) = chsh_optimize(&r, args.restarts, args.seed);
        sections.insert(
            name.into(),
            classification_json(&c, max_violation_eigen(&r)?, opt),
        );
    }
    let report = json!({
        "pair": pair.to_string(),
        "E1": ms.e1,
        "E2": ms.e2,
        "E3": ms.e3,
        "E4": ms.e4,
        "E5": ms.e5,
        "N": neg.negativity,
        "logneg": neg.log_negativity,
        "quantum": sections["quantum"],
        "connected": sections["connected"],
    });
    print_value(&mut io::stdout().lock(), &report, args.json)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let cfg = ScanConfig {
        samples: args.samples,
        seed: args.seed,
        pair: args.pair,
        separable_fraction: args.separable_fraction,
    };
    let records = run_scan(&cfg)?;
    let rows: Vec<ScanRow> = records.iter().map(ScanRow::from).collect();
    let mut out = open_out(&args.out)?;
    write_scan(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

fn read_input(path: &Path) -> Result<Vec<ScanRow>> {
    read_scan_file(path).with_context(|| format!("cannot read scan {}", path.display()))
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let width = match args.fix {
        FixMode::Gamma2Theta => args.g2_width,
        FixMode::Alpha1Theta => args.a1_width,
    };
    let spec = BinSpec::new(args.fix, width, args.theta_width)?;
    let rows = read_input(&args.input)?;
    let mut out = open_out(&args.out)?;
    write_summary(&mut out, &classify_bins(&rows, &spec))?;
    out.flush()?;
    Ok(())
}

fn cmd_fig2(args: &Fig2Args) -> Result<()> {
    let spec = BinSpec::new(FixMode::Gamma2Theta, args.g2_width, args.theta_width)?;
    let rows = read_input(&args.input)?;
    let witnesses = fig2_witnesses(&rows, &spec);
    let total: u64 = witnesses.iter().map(|w| w.pairs).sum();
    eprintln!("{total} witness pairs in {} bins", witnesses.len());
    let mut out = open_out(&args.out)?;
    write_witnesses(&mut out, &witnesses)?;
    out.flush()?;
    Ok(())
}

fn cmd_lhv(args: &LhvArgs) -> Result<()> {
    let input = parse_state(&args.state)?;
    let a = parse_direction(&args.a, "--a")?;
    let b = parse_direction(&args.b, "--b")?;
    let red = Reductions::of(&input.vector());
    let rho = red.pair(args.state.pair);
    let r = if args.quantum {
        r_matrix(rho)?
    } else {
        connected_r_matrix(rho)?
    };
    let model = build_model(&r)?;
    let mc = mc_correlator(&model, &a, &b, args.n, args.seed)?;

    let rotate = |v: &Vec3| [v[1], v[2], v[0]];
    let (a2, b2) = (rotate(&a), rotate(&b));
    let s = HiddenSample::new(0.5)?;
    let witness = freedom_of_choice_witness(
        &model,
        (&model.to_model_basis_a(&a), &model.to_model_basis_b(&b)),
        (&model.to_model_basis_a(&a2), &model.to_model_basis_b(&b2)),
        s,
    );
    let report = json!({
        "matrix": if args.quantum { "quantum" } else { "connected" },
        "q": model.q,
        "closed": correlator_closed(&model, &a, &b),
        "estimate": mc.estimate,
        "stderr": mc.stderr,
        "signed_fraction": mc.signed_fraction,
        "n": args.n,
        "witness": witness,
    });
    print_value(&mut io::stdout().lock(), &report, args.json)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Report(a) => cmd_report(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Fig2(a) => cmd_fig2(a),
        Command::Lhv(a) => cmd_lhv(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
