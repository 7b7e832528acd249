use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use topomsd::detector::{
    decide, dirac_glrt, hodge_glrt, interpolation_detector, missing_overdet_glrt,
    missing_underdet_glrt, Decision, DetectorReport,
};
use topomsd::harness::{
    spectral_order, summarize, write_roc_csv, write_statistics_csv, ExperimentConfig,
    RegularizerConfig, Workspace,
};
use topomsd::io::{read_complex, read_mask, read_signal, MaskScope};
use topomsd::performance::threshold_for_pfa;
use topomsd::spectral::{
    Decomposition, DiracDecomposition, Flavor, HodgeDecomposition, Part, Parts, DEFAULT_TOL,
};
use topomsd::{Error, RegularizerSpec, SamplingMask, SimplicialComplex};

#[derive(Parser)]
#[command(name = "topomsd", version, about = "Topological subspace detection on simplicial complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a signal into gradient, curl and harmonic parts.
    Decompose(DecomposeArgs),
    /// Run one detector on one signal and print the report.
    Detect(DetectArgs),
    /// Run a Monte-Carlo experiment from a JSON config.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Hodge,
    Dirac,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Hodge,
    Dirac,
    MissingOver,
    MissingUnder,
    Interp,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    complex: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    #[arg(long, value_enum, default_value = "hodge")]
    flavor: FlavorArg,
    /// Simplex order for Hodge decompositions.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Directory for `embedding.csv` and `values.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    complex: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    #[arg(long, value_enum)]
    regime: RegimeArg,
    /// Null subspace, e.g. `g,h`.
    #[arg(long)]
    parts: Parts,
    /// Alternative subspace for the underdetermined statistic.
    #[arg(long, default_value = "g,c,h")]
    h1_parts: Parts,
    /// Flavor for the missing-data regimes.
    #[arg(long, value_enum)]
    flavor: Option<FlavorArg>,
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long)]
    sigma2: f64,
    #[arg(long, conflicts_with = "pfa", required_unless_present = "pfa")]
    gamma: Option<f64>,
    /// Target false-alarm rate; the threshold is derived and echoed.
    #[arg(long)]
    pfa: Option<f64>,
    /// CSV of observed `order,index` pairs.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// JSON regularizer, either weight laws or explicit weights.
    #[arg(long)]
    reg: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RegFile {
    Laws(RegularizerConfig),
    Explicit(RegularizerSpec),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose(a) => decompose(a).map(|_| Decision::H0),
        Command::Detect(a) => detect(a),
        Command::Bench(a) => bench(a).map(|_| Decision::H0),
    };
    match result {
        Ok(Decision::H0) => ExitCode::from(0),
        Ok(Decision::H1) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type Res<T> = Result<T, Error>;

fn flavor_of(arg: FlavorArg, order: usize) -> Flavor {
    match arg {
        FlavorArg::Hodge => Flavor::Hodge(order),
        FlavorArg::Dirac => Flavor::Dirac,
    }
}

fn scope_of(flavor: Flavor) -> MaskScope {
    match flavor {
        Flavor::Hodge(k) => MaskScope::Order(k),
        Flavor::Dirac => MaskScope::Stack,
    }
}

enum AnyDecomposition {
    Hodge(HodgeDecomposition),
    Dirac(DiracDecomposition),
}

impl AnyDecomposition {
    fn compute(cx: &SimplicialComplex, flavor: Flavor) -> Res<Self> {
        Ok(match flavor {
            Flavor::Hodge(k) => Self::Hodge(HodgeDecomposition::compute(cx, k, DEFAULT_TOL)?),
            Flavor::Dirac => Self::Dirac(DiracDecomposition::compute(cx, DEFAULT_TOL)?),
        })
    }

    fn get(&self) -> &dyn Decomposition {
        match self {
            Self::Hodge(d) => d,
            Self::Dirac(d) => d,
        }
    }

    fn write_values(&self, path: &Path) -> Res<()> {
        let w = BufWriter::new(File::create(path)?);
        match self {
            Self::Hodge(d) => d.write_values_csv(w),
            Self::Dirac(d) => d.write_values_csv(w),
        }
    }
}

fn decompose(a: DecomposeArgs) -> Res<()> {
    let cx = read_complex(&a.complex)?;
    let s = read_signal(&cx, &a.signal)?;
    let flavor = flavor_of(a.flavor, a.order);
    let x = scope_of(flavor).extract(&cx, &s);
    let dec = AnyDecomposition::compute(&cx, flavor)?;
    let d = dec.get();
    let fractions = d.energy_fractions(&x)?;
    let dims = d.dims();

    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        let mut wtr = csv::Writer::from_path(dir.join("embedding.csv"))?;
        wtr.write_record(["part", "index", "coefficient"])?;
        for p in Part::ALL {
            for (i, c) in d.part(p).project(&x)?.iter().enumerate() {
                wtr.serialize((p.name(), i, c))?;
            }
        }
        wtr.flush()?;
        dec.write_values(&dir.join("values.csv"))?;
    }

    let out = json!({
        "flavor": flavor,
        "energy": x.iter().map(|v| v * v).sum::<f64>(),
        "dims": { "gradient": dims[0], "curl": dims[1], "harmonic": dims[2] },
        "fractions": { "gradient": fractions[0], "curl": fractions[1], "harmonic": fractions[2] },
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn detect(a: DetectArgs) -> Res<Decision> {
    let cx = read_complex(&a.complex)?;
    let s = read_signal(&cx, &a.signal)?;
    let flavor = match (a.regime, a.flavor) {
        (RegimeArg::Hodge, Some(FlavorArg::Dirac)) | (RegimeArg::Dirac, Some(FlavorArg::Hodge)) => {
            return Err(Error::Config("regime and flavor disagree".into()));
        }
        (RegimeArg::Hodge, _) => Flavor::Hodge(a.order),
        (RegimeArg::Dirac, _) => Flavor::Dirac,
        (_, f) => flavor_of(f.unwrap_or(FlavorArg::Dirac), a.order),
    };
    let scope = scope_of(flavor);
    let x = scope.extract(&cx, &s);
    let mask = match &a.mask {
        Some(p) => read_mask(&cx, scope, p)?,
        None => SamplingMask::identity(x.len()),
    };
    if matches!(a.regime, RegimeArg::Hodge | RegimeArg::Dirac) && !mask.is_identity() {
        return Err(Error::Config(
            "complete-data regimes take no mask; use missing-over".into(),
        ));
    }
    let x_obs = mask.apply(&x)?;
    let dec = AnyDecomposition::compute(&cx, flavor)?;
    let d = dec.get();

    let run = |gamma: f64| -> Res<DetectorReport> {
        match a.regime {
            RegimeArg::Hodge => hodge_glrt(&d.complement(a.parts)?, &x, a.sigma2, gamma),
            RegimeArg::Dirac => dirac_glrt(&d.complement(a.parts)?, &x, a.sigma2, gamma),
            RegimeArg::MissingOver => {
                missing_overdet_glrt(&d.select(a.parts)?, &mask, &x_obs, a.sigma2, gamma)
            }
            RegimeArg::MissingUnder => {
                let b0 = spectral_order(d, a.parts)?;
                let b1 = spectral_order(d, a.h1_parts)?;
                let reg = match &a.reg {
                    Some(p) => match serde_json::from_str::<RegFile>(&fs::read_to_string(p)?)? {
                        RegFile::Laws(l) => l.materialize(b0.rank(), b1.rank()),
                        RegFile::Explicit(r) => r,
                    },
                    None => RegularizerSpec::none(b0.rank(), b1.rank()),
                };
                missing_underdet_glrt(&b0, &b1, &mask, &x_obs, a.sigma2, gamma, &reg)
            }
            RegimeArg::Interp => {
                interpolation_detector(&d.complement(a.parts)?, &mask, &x_obs, a.sigma2, gamma)
            }
        }
    };

    let mut report = run(a.gamma.unwrap_or(f64::INFINITY))?;
    if let Some(p) = a.pfa {
        let gamma = threshold_for_pfa(p, report.dof as f64)?;
        report.threshold = gamma;
        report.decision = decide(report.statistic, gamma);
    }
    let mut out = serde_json::to_value(&report)?;
    if let (Some(p), Value::Object(m)) = (a.pfa, &mut out) {
        m.insert("target_pfa".into(), json!(p));
    }
    let text = serde_json::to_string_pretty(&out)?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), &text)?;
    }
    println!("{text}");
    Ok(report.decision)
}

fn bench(a: BenchArgs) -> Res<()> {
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(&a.config)?)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let ws = Workspace::from_spec(&cfg.topology)?;
    let out = ws.run(&cfg)?;
    let summary = summarize(&cfg, &out)?;
    let text = serde_json::to_string_pretty(&summary)?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        write_statistics_csv(&out, BufWriter::new(File::create(dir.join("statistics.csv"))?))?;
        write_roc_csv(&out.roc()?, BufWriter::new(File::create(dir.join("roc.csv"))?))?;
        fs::write(dir.join("summary.json"), &text)?;
    }
    println!("{text}");
    Ok(())
}
