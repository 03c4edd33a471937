use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use dh_shadow::betti::{
    commutant_dimension, eigenvalue_map, flag_surgery, BettiError, FilteredLocalSystem,
    MultiPermutation,
};
use dh_shadow::hecke::{orbit, HeckeError};
use dh_shadow::kms::LoadError;
use dh_shadow::rh::{betti_shadow, choose_levels, rescaled_residues, RhError};
use dh_shadow::section::{
    local_order, section_csv, trace_path, transitions_json, PathOptions, SectionError,
};
use dh_shadow::suites::{parse_suites, run_suites};
use dh_shadow::twistor::{default_profile, sym_check, weight_table, WeightProfile};
use dh_shadow::walls::{delta_csv, delta_in_region, level_walls, walls_csv, Region, WallError};
use dh_shadow::{flow, Config, HarmonicShadow};

#[derive(Parser)]
#[command(
    name = "dh-shadow",
    version,
    about = "Spectral shadow engine: flows, walls, sections, orbits, Betti data and weight tables"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (JSON); flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving CSV/JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectories of (p, e) along a λ-path, written to flow.csv.
    Flow {
        #[arg(long)]
        input: PathBuf,
        /// Polyline `x0,y0:x1,y1:…`; omitted means an empty grid.
        #[arg(long)]
        path: Option<String>,
        /// Samples per path segment.
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Collision points and level walls in an annulus (delta.csv, walls.csv).
    Walls {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "0.1:3")]
        region: String,
    },
    /// Preferred-section samples along a path (section.csv, transitions.json).
    Section {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        path: String,
    },
    /// Groupoid orbit of the residue tuple at λ (orbit.csv).
    Orbit {
        #[arg(long)]
        input: PathBuf,
        /// λ as `re,im`.
        #[arg(long, default_value = "1,0")]
        lambda: String,
        /// Largest word length explored.
        #[arg(long, default_value_t = 2)]
        length: usize,
    },
    /// Eigenvalues, commutant and flag surgery of a filtered local system, or
    /// the Betti shadow of a harmonic shadow at λ (betti.json).
    Betti {
        #[arg(long)]
        input: PathBuf,
        /// Per-puncture permutations (1-based), e.g. `t:2,1;s:1,2`.
        #[arg(long)]
        sigma: Option<String>,
        /// λ as `re,im`, used with harmonic-shadow input.
        #[arg(long, default_value = "1,0")]
        lambda: String,
    },
    /// Weight tables of the truncated completion algebra (twistor.txt).
    Twistor {
        /// `n0,n1,n2`; without it the rank/puncture hints from --input are used.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run invariant suites; exit 1 on any failure.
    Check {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn hypothesis(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Schema { .. } => Failure::input(e.to_string()),
            LoadError::Hypothesis { .. } => Failure::hypothesis(e.to_string()),
        }
    }
}

impl From<WallError> for Failure {
    fn from(e: WallError) -> Self {
        match e {
            WallError::BadRegion { .. } => Failure::input(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

impl From<HeckeError> for Failure {
    fn from(e: HeckeError) -> Self {
        match e {
            HeckeError::UnknownPuncture(_)
            | HeckeError::IndexOutOfRange { .. }
            | HeckeError::RankMismatch { .. } => Failure::input(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

impl From<RhError> for Failure {
    fn from(e: RhError) -> Self {
        match e {
            RhError::LengthMismatch | RhError::InvalidLevels(_) | RhError::NegativeRadius(_) => {
                Failure::input(e.to_string())
            }
            _ => Failure::numerical(e.to_string()),
        }
    }
}

impl From<SectionError> for Failure {
    fn from(e: SectionError) -> Self {
        match e {
            SectionError::Hecke(h) => h.into(),
            SectionError::Rh(r) => r.into(),
            SectionError::Wall(w) => w.into(),
            SectionError::OrderCondition { .. } => Failure::hypothesis(e.to_string()),
            SectionError::Mismatch | SectionError::NonFinite => Failure::input(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

impl From<BettiError> for Failure {
    fn from(e: BettiError) -> Self {
        match e {
            BettiError::Schema(_)
            | BettiError::FlagDimension(_)
            | BettiError::BadPermutation(_) => Failure::input(e.to_string()),
            BettiError::DomainViolation { .. } => Failure::numerical(e.to_string()),
            _ => Failure::hypothesis(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(common: &Common) -> Result<Config, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = read(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| Failure::input(e.to_string()))?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_shadow(path: &Path, cfg: &Config) -> Result<HarmonicShadow, Failure> {
    Ok(HarmonicShadow::from_json_str(&read(path)?, cfg.tol.eps_eq)?)
}

fn parse_complex(s: &str) -> Result<Complex64, Failure> {
    let bad = || Failure::input(format!("expected `re,im`, got `{s}`"));
    let (re, im) = s.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn parse_path(s: &str) -> Result<Vec<Complex64>, Failure> {
    s.split(':')
        .filter(|p| !p.trim().is_empty())
        .map(parse_complex)
        .collect()
}

fn parse_region(s: &str) -> Result<Region, Failure> {
    let bad = || Failure::input(format!("expected `r_min:r_max`, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok(Region::new(a, b)?)
}

fn parse_profile(s: &str) -> Result<WeightProfile, Failure> {
    let bad = || Failure::input(format!("expected `n0,n1,n2`, got `{s}`"));
    let parts: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [n0, n1, n2] = parts[..] else {
        return Err(bad());
    };
    WeightProfile::new(n0, n1, n2).map_err(|e| Failure::input(e.to_string()))
}

/// Points along the polyline, `samples` per segment with shared endpoints.
fn densify(path: &[Complex64], samples: usize) -> Vec<Complex64> {
    match path {
        [] => Vec::new(),
        [single] => vec![*single],
        _ => {
            let n = samples.max(2);
            let mut out = vec![path[0]];
            for w in path.windows(2) {
                for k in 1..n {
                    let t = k as f64 / (n - 1) as f64;
                    out.push(w[0] + (w[1] - w[0]) * t);
                }
            }
            out
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cfg = load_config(&cli.common)?;
    let out = &cli.common.output_dir;
    let json_out = cli.common.json;
    match cli.command {
        Command::Flow {
            input,
            path,
            samples,
        } => cmd_flow(&cfg, &input, path.as_deref(), samples, out, json_out),
        Command::Walls { input, region } => cmd_walls(&cfg, &input, &region, out, json_out),
        Command::Section { input, path } => cmd_section(&cfg, &input, &path, out, json_out),
        Command::Orbit {
            input,
            lambda,
            length,
        } => cmd_orbit(&cfg, &input, &lambda, length, out, json_out),
        Command::Betti {
            input,
            sigma,
            lambda,
        } => cmd_betti(&cfg, &input, sigma.as_deref(), &lambda, out, json_out),
        Command::Twistor {
            profile,
            degree,
            input,
        } => cmd_twistor(
            &cfg,
            profile.as_deref(),
            degree,
            input.as_deref(),
            out,
            json_out,
        ),
        Command::Check { suite } => cmd_check(&cfg, &suite, out, json_out),
    }
}

fn cmd_flow(
    cfg: &Config,
    input: &Path,
    path: Option<&str>,
    samples: usize,
    out: &Path,
    json_out: bool,
) -> Result<u8, Failure> {
    let shadow = load_shadow(input, cfg)?;
    let points = match path {
        Some(p) => densify(&parse_path(p)?, samples),
        None => Vec::new(),
    };
    let mut csv = String::from("re_lambda,im_lambda,puncture,kms_index,p,re_e,im_e\n");
    let mut rows = Vec::new();
    for lambda in &points {
        for punct in &shadow.punctures {
            for (idx, x) in punct.spectrum.points.iter().enumerate() {
                let f = flow(*x, *lambda);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    lambda.re,
                    lambda.im,
                    punct.label,
                    idx + 1,
                    f.p,
                    f.e.re,
                    f.e.im
                );
                rows.push(json!({
                    "re_lambda": lambda.re, "im_lambda": lambda.im, "puncture": punct.label,
                    "kms_index": idx + 1, "p": f.p, "re_e": f.e.re, "im_e": f.e.im,
                }));
            }
        }
    }
    write(out, "flow.csv", &csv)?;
    if json_out {
        println!("{}", Value::Array(rows));
    } else {
        println!("flow.csv: {} rows", csv.lines().count() - 1);
    }
    Ok(0)
}

fn cmd_walls(
    cfg: &Config,
    input: &Path,
    region: &str,
    out: &Path,
    json_out: bool,
) -> Result<u8, Failure> {
    let shadow = load_shadow(input, cfg)?;
    let region = parse_region(region)?;
    let delta = delta_in_region(&shadow, &region, cfg.tol.eps_root, cfg.tol.eps_eq)?;
    let curves = level_walls(&shadow, &region, cfg.grid_resolution);
    write(out, "delta.csv", &delta_csv(&delta))?;
    write(out, "walls.csv", &walls_csv(&curves))?;
    if json_out {
        let delta_rows: Vec<Value> = delta
            .iter()
            .map(|d| {
                json!({
                    "re": d.lambda.re, "im": d.lambda.im, "puncture": d.witness.puncture,
                    "i": d.witness.i + 1, "j": d.witness.j + 1, "n": d.witness.n,
                })
            })
            .collect();
        let wall_rows: Vec<Value> = curves
            .iter()
            .map(|c| {
                json!({
                    "curve_id": c.id, "puncture": c.puncture, "i": c.i + 1, "j": c.j + 1, "m": c.m,
                    "points": c.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                })
            })
            .collect();
        println!("{}", json!({"delta": delta_rows, "walls": wall_rows}));
    } else {
        println!(
            "delta.csv: {} points; walls.csv: {} curves",
            delta.len(),
            curves.len()
        );
    }
    Ok(0)
}

fn cmd_section(
    cfg: &Config,
    input: &Path,
    path: &str,
    out: &Path,
    json_out: bool,
) -> Result<u8, Failure> {
    let shadow = load_shadow(input, cfg)?;
    let path = parse_path(path)?;
    let opts = PathOptions {
        anchor: cfg.window_anchor,
        eps: cfg.tol.eps_eq,
        eps_root: cfg.tol.eps_root,
        ..PathOptions::default()
    };
    let trace = trace_path(&shadow, &path, &opts)?;
    let transitions = transitions_json(&trace.transitions);
    write(out, "section.csv", &section_csv(&trace.samples))?;
    write(
        out,
        "transitions.json",
        &serde_json::to_string_pretty(&transitions).expect("serializable"),
    )?;
    if json_out {
        println!(
            "{}",
            json!({
                "samples": trace.samples.len(),
                "transitions": transitions,
                "holonomy": trace.holonomy.to_json(),
                "max_monodromy_gap": trace.max_monodromy_gap,
            })
        );
    } else {
        println!(
            "section.csv: {} samples; transitions.json: {} transitions; max monodromy gap {:.2e}",
            trace.samples.len(),
            trace.transitions.len(),
            trace.max_monodromy_gap
        );
    }
    Ok(0)
}

fn cmd_orbit(
    cfg: &Config,
    input: &Path,
    lambda: &str,
    length: usize,
    out: &Path,
    json_out: bool,
) -> Result<u8, Failure> {
    let shadow = load_shadow(input, cfg)?;
    let lambda = parse_complex(lambda)?;
    let start = local_order(&shadow, lambda, cfg.window_anchor, cfg.tol.eps_eq)?.residue_shadow();
    let entries = orbit(&start, length, cfg.tol.eps_eq);
    let mut csv = String::from("entry_id,word,degree_offset,puncture,slot,re_theta,im_theta\n");
    let mut rows = Vec::new();
    for (id, e) in entries.iter().enumerate() {
        for (label, theta) in e.shadow.labels.iter().zip(&e.shadow.theta) {
            for (slot, t) in theta.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{id},{},{},{label},{},{},{}",
                    e.word,
                    e.shadow.degree_offset,
                    slot + 1,
                    t.re,
                    t.im
                );
            }
        }
        rows.push(json!({
            "entry_id": id,
            "word": e.word.to_string(),
            "normal_form": e.witness.to_json(),
            "degree_offset": e.shadow.degree_offset,
            "theta": e.shadow.theta.iter().map(|v| v.iter().map(|t| [t.re, t.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }));
    }
    write(out, "orbit.csv", &csv)?;
    if json_out {
        println!("{}", Value::Array(rows));
    } else {
        println!(
            "orbit.csv: {} shadows within word length {length}",
            entries.len()
        );
    }
    Ok(0)
}

fn parse_sigma(s: &str, labels: &[String], rank: usize) -> Result<MultiPermutation, Failure> {
    let mut m = MultiPermutation::identity(labels.len(), rank);
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (label, perm) = part
            .split_once(':')
            .ok_or_else(|| Failure::input(format!("expected `label:i,j,…`, got `{part}`")))?;
        let idx = labels
            .iter()
            .position(|l| l == label.trim())
            .ok_or_else(|| Failure::input(format!("unknown puncture `{}`", label.trim())))?;
        let perm: Vec<usize> = perm
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<usize>()
                    .ok()
                    .and_then(|v| v.checked_sub(1))
                    .ok_or_else(|| Failure::input(format!("bad permutation entry `{x}`")))
            })
            .collect::<Result<_, _>>()?;
        m.perms[idx] = perm;
    }
    if !m.is_valid(rank) {
        return Err(Failure::input(format!(
            "`{s}` is not a permutation of 1..{rank} per puncture"
        )));
    }
    Ok(m)
}

fn cmd_betti(
    cfg: &Config,
    input: &Path,
    sigma: Option<&str>,
    lambda: &str,
    out: &Path,
    json_out: bool,
) -> Result<u8, Failure> {
    let text = read(input)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("line {}: {e}", e.line())))?;
    let is_shadow = value["punctures"]
        .as_array()
        .and_then(|p| p.first())
        .is_some_and(|p| p.get("spectrum").is_some());
    let report = if is_shadow {
        let shadow = HarmonicShadow::from_json_str(&text, cfg.tol.eps_eq)?;
        let lambda = parse_complex(lambda)?;
        let s = local_order(&shadow, lambda, cfg.window_anchor, cfg.tol.eps_eq)?.residue_shadow();
        let levels = choose_levels(&rescaled_residues(&s)?, 0.0)?;
        let b = betti_shadow(&s, &levels)?;
        json!({"lambda": [lambda.re, lambda.im], "betti_shadow": b.to_json()})
    } else {
        let l = FilteredLocalSystem::from_json_str(&text, &cfg.tol)?;
        let eigen = eigenvalue_map(&l, cfg.tol.eps_eq)?;
        let dim = commutant_dimension(&l, 1e-8);
        let mut eigenvalues = serde_json::Map::new();
        for (label, vals) in eigen.labels.iter().zip(&eigen.values) {
            eigenvalues.insert(
                label.clone(),
                json!(vals.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>()),
            );
        }
        let mut report = json!({
            "rank": l.rank,
            "eigenvalues": eigenvalues,
            "commutant_dimension": dim,
            "irreducible_with_flags": dim == 1,
            "surface_residual": l.surface_residual(),
        });
        if let Some(sigma) = sigma {
            let sigma = parse_sigma(sigma, &l.labels, l.rank)?;
            report["surgered"] = flag_surgery(&sigma, &l, cfg.tol.eps_eq)?.to_json();
        }
        report
    };
    let pretty = serde_json::to_string_pretty(&report).expect("serializable");
    write(out, "betti.json", &pretty)?;
    if json_out {
        println!("{report}");
    } else {
        println!("{pretty}");
    }
    Ok(0)
}

fn cmd_twistor(
    cfg: &Config,
    profile: Option<&str>,
    degree: u32,
    input: Option<&Path>,
    out: &Path,
    json_out: bool,
) -> Result<u8, Failure> {
    let profile = match (profile, input) {
        (Some(p), _) => parse_profile(p)?,
        (None, Some(path)) => {
            let shadow = load_shadow(path, cfg)?;
            let (p, warning) =
                default_profile(shadow.rank as u32, shadow.punctures.len() as u32, 0);
            eprintln!("warning: {warning}");
            WeightProfile::new(p.n0, p.n1, p.n2).map_err(|e| Failure::input(e.to_string()))?
        }
        (None, None) => return Err(Failure::input("twistor needs --profile or --input")),
    };
    let mut text = String::new();
    let mut tables = Vec::new();
    let mut all_pass = true;
    for d in 0..=degree {
        let table = weight_table(&profile, d);
        let check = sym_check(&profile, d);
        all_pass &= check.pass;
        let _ = writeln!(
            text,
            "degree {d}  (n0,n1,n2) = ({},{},{})  total {}  sym {}",
            profile.n0,
            profile.n1,
            profile.n2,
            table.total(),
            if check.pass { "ok" } else { "MISMATCH" }
        );
        let _ = writeln!(text, "{:>6}  {:>12}", "k", "dim");
        for (k, n) in &table.entries {
            let _ = writeln!(text, "{k:>6}  {n:>12}");
        }
        text.push('\n');
        tables.push(json!({
            "degree": d,
            "entries": table.entries.iter().map(|(k, n)| json!({"k": k, "dim": n.to_string()})).collect::<Vec<_>>(),
            "sym_check": check.pass,
        }));
    }
    write(out, "twistor.txt", &text)?;
    if json_out {
        println!("{}", json!({"profile": profile, "tables": tables}));
    } else {
        print!("{text}");
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_check(cfg: &Config, suite: &str, out: &Path, json_out: bool) -> Result<u8, Failure> {
    let suites = parse_suites(suite).map_err(Failure::input)?;
    let report = run_suites(&suites, cfg);
    let json = serde_json::to_string_pretty(&report.to_json()).expect("serializable");
    if !report.pass() {
        write(out, "check_failures.json", &json)?;
    }
    if json_out {
        println!("{json}");
    } else {
        print!("{}", report.to_text());
    }
    Ok(if report.pass() { 0 } else { 1 })
}
