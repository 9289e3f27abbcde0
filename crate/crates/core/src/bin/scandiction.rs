use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scandiction::experiments::{field_kind, run_experiment, Experiment, ExperimentConfig};
use scandiction::fields::{generate, FieldSpec};
use scandiction::predict::{markov_fit, scandict, MarkovTable};
use scandiction::{DataArray, Loss, ScanKind};

#[derive(Parser)]
#[command(name = "scandiction", version, about = "Scanning and prediction of 2D arrays: experiments and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Base seed; replica i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (CSV for experiments). Standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plain-text `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct Params {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// hamming, squared, absolute or log.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Draws of the algorithm's randomness per array.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimax affine fit of the Bayes envelope by binary entropy.
    /// Columns: loss,alpha,beta,epsilon,argmax,target,tolerance,pass.
    Epsilon(Run),
    /// Shifted-expansion adversary under squared loss (--n, --replicas).
    /// Columns: scan,mean_total_loss,relation,bound,pass.
    Lemma1(Run),
    /// Markov chain raster vs odds-then-evens (--p flip, --n length, --loss).
    /// Columns: scan,rate,analytic,tolerance,pass.
    MarkovExample(Run),
    /// Expected regret of exponential weighting over orientation experts
    /// (--n --m --lambda --replicas --seeds --p --loss --eta).
    /// Columns: array,l_bar,l_min,regret,bound,ratio,max_realized_minus_min,weight_ratio_violations,pass.
    Regret(Run),
    /// Exponential weighting over every 2x2 binary scandictor (--n --replicas --p --loss --eta).
    /// Columns: array,lambda,eta,l_bar,l_alg,l_min,bound,regret_per_site,weight_ratio_violations,pass.
    Theorem3M2(Run),
    /// Tail frequency of the realized loss on a fixed mixing field (--n --m --lambda --seeds --p --loss --eta).
    /// Columns: epsilon,threshold,delta_per_site,freq_over_expected,freq_over_best,tail_bound,pass.
    MixingAs(Run),
    /// Hilbert scan vs finite-state scans with fitted order-k predictors (--n --k --p --loss).
    /// Columns: field,scan,k,rho_hat,hilbert_loss,scan_loss,excess,bound_2eps,fmg_gap,tighter,pass.
    PhVsRaster(Run),
    /// The curve rho/2 - h^-1(rho). Columns: rho,gap.
    FmgCurve(Run),
    /// Affine entropy sandwich and scan-pair differences (--n --k --p --loss).
    /// Columns: kind,field,loss,scan,k,entropy_bits,rho_hat,loss_per_site,residual,bound,pass.
    Sandwich(Run),
    /// Draw a random field and write it as SDGRID.
    Generate(GenerateArgs),
    /// Scan an SDGRID array and report the cumulative loss of a fitted Markov predictor.
    /// Columns: scan,order,loss,total_loss,per_site_loss.
    Scandict(ScandictArgs),
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// iid, markov, markov-1d, shift or mixing.
    #[arg(long, default_value = "iid")]
    field: String,
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Bernoulli parameter or flip probability.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Tile side for the mixing field.
    #[arg(long, default_value_t = 4)]
    m: usize,
}

#[derive(Args)]
struct ScandictArgs {
    #[command(flatten)]
    common: Common,
    /// SDGRID input.
    input: PathBuf,
    /// Scan name, e.g. raster, column, hilbert, serpentine, odds-evens.
    #[arg(long, default_value = "raster")]
    scan: String,
    /// Markov order of the fitted predictor.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value = "hamming")]
    loss: String,
}

fn experiment(kind: Experiment, run: Run) -> Result<bool, String> {
    let mut config = ExperimentConfig::new(kind);
    if let Some(path) = &run.common.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        config.apply_file_text(&text).map_err(|e| e.to_string())?;
    }
    let p = run.params;
    let flags = [
        ("n", p.n.map(|v| v.to_string())),
        ("m", p.m.map(|v| v.to_string())),
        ("k", p.k.map(|v| v.to_string())),
        ("loss", p.loss),
        ("replicas", p.replicas.map(|v| v.to_string())),
        ("seeds", p.seeds.map(|v| v.to_string())),
        ("p", p.p.map(|v| v.to_string())),
        ("lambda", p.lambda.map(|v| v.to_string())),
        ("eta", p.eta.map(|v| v.to_string())),
        ("seed", run.common.seed.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config.set(key, &v).map_err(|e| e.to_string())?;
        }
    }
    if let Some(out) = run.common.out {
        config.out = Some(out);
    }
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    if config.out.is_none() {
        print!("{}", report.to_csv());
    } else {
        eprintln!("{}: {}", kind, if report.passed { "PASS" } else { "FAIL" });
    }
    Ok(report.passed)
}

fn seed_or_config(common: &Common) -> Result<u64, String> {
    let mut seed = 0;
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        for (_, key, value) in
            scandiction::experiments::parse_key_values(&text).map_err(|e| e.to_string())?
        {
            if key == "seed" {
                seed = value.parse().map_err(|_| format!("bad seed `{value}`"))?;
            }
        }
    }
    Ok(common.seed.unwrap_or(seed))
}

fn generate_cmd(args: GenerateArgs) -> Result<bool, String> {
    let seed = seed_or_config(&args.common)?;
    let kind = field_kind(&args.field, args.p, args.m).map_err(|e| e.to_string())?;
    let array = generate(&FieldSpec { kind, seed }, args.n).map_err(|e| e.to_string())?;
    write_out(args.common.out.as_ref(), |w| array.write_sdgrid(w).map_err(|e| e.to_string()))?;
    Ok(true)
}

fn scandict_cmd(args: ScandictArgs) -> Result<bool, String> {
    let file = File::open(&args.input).map_err(|e| format!("{}: {e}", args.input.display()))?;
    let array = DataArray::read_sdgrid(BufReader::new(file)).map_err(|e| e.to_string())?;
    let scan: ScanKind = args.scan.parse().map_err(|e: scandiction::Error| e.to_string())?;
    let loss: Loss = args.loss.parse().map_err(|e: scandiction::Error| e.to_string())?;
    let symbols = array
        .alphabet()
        .size()
        .ok_or("scandict needs a finite alphabet")? as usize;
    let scanner = scan.build(array.rect()).map_err(|e| e.to_string())?;
    let traj = scandiction::scan::scan(&scanner, &array).map_err(|e| e.to_string())?;
    let mut table: MarkovTable =
        markov_fit(&traj.values, symbols, args.k, loss).map_err(|e| e.to_string())?;
    let (total, _) = scandict(&array, &scanner, &mut table, loss).map_err(|e| e.to_string())?;
    let per_site = total / array.len() as f64;
    write_out(args.common.out.as_ref(), |w| {
        writeln!(w, "scan,order,loss,total_loss,per_site_loss")
            .and_then(|_| writeln!(w, "{},{},{},{total},{per_site}", scan.name(), args.k, loss.name()))
            .map_err(|e| e.to_string())
    })?;
    Ok(true)
}

fn write_out(
    path: Option<&PathBuf>,
    body: impl FnOnce(&mut dyn Write) -> Result<(), String>,
) -> Result<(), String> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?);
            body(&mut w)?;
            w.flush().map_err(|e| e.to_string())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Epsilon(r) => experiment(Experiment::Epsilon, r),
        Command::Lemma1(r) => experiment(Experiment::Lemma1, r),
        Command::MarkovExample(r) => experiment(Experiment::MarkovExample, r),
        Command::Regret(r) => experiment(Experiment::Regret, r),
        Command::Theorem3M2(r) => experiment(Experiment::Theorem3M2, r),
        Command::MixingAs(r) => experiment(Experiment::MixingAs, r),
        Command::PhVsRaster(r) => experiment(Experiment::PhVsRaster, r),
        Command::FmgCurve(r) => experiment(Experiment::FmgCurve, r),
        Command::Sandwich(r) => experiment(Experiment::Sandwich, r),
        Command::Generate(a) => generate_cmd(a),
        Command::Scandict(a) => scandict_cmd(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
