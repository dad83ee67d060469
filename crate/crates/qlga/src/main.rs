//! `qlga` command line: validate the model algebra, run lattice evolutions,
//! measure dispersion relations, and evolve many-body states.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use qlga::config::{format_complex, parse_complex, resolve_threads, RunConfig};
use qlga::continuum::verify_reference;
use qlga::error::{QlgaError, Result};
use qlga::many_body::{FockLayout, ManyBodyState, PairPotentialU, SiteCollisionT};
use qlga::{
    check_unitarity_identities, dispersion_sweep_with_potential, effective_operator,
    write_dispersion_csv, write_snapshot_csv, CollisionMatrix, ModelParams, Stepper,
};

#[derive(Parser)]
#[command(name = "qlga", version, about = "Unitary lattice-gas model of the Schroedinger equation")]
struct Cli {
    /// Cap worker threads (default: QLGA_THREADS env var, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the model algebra: unitarity identities, mass extraction,
    /// reference-matrix comparisons; exit 0 iff every residual is below tol
    Verify(VerifyArgs),
    /// Evolve a single-particle field, writing CSV snapshots
    Run(RunArgs),
    /// Plane-wave dispersion sweep, writing a CSV of measured frequencies
    Dispersion(DispersionArgs),
    /// Evolve a second-quantized occupation-number state
    ManyBody(ManyBodyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// spatial dimension
    #[arg(long, short = 'd')]
    d: usize,
    /// collision angle theta, with mu = exp(i theta)
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// collision eigenvalue mu as a complex literal, e.g. 0.6+0.8i
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// residual tolerance for the pass/fail verdict
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML configuration file; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short = 'd')]
    dim: Option<usize>,
    /// per-axis lattice extents, comma separated
    #[arg(long, value_delimiter = ',')]
    extents: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    /// none | const:<V0> | expr:<formula in x0..> | file:<path>
    #[arg(long)]
    potential: Option<String>,
    /// plane:<l..> | gaussian:<c..>;<w>[;<k..>] | delta:<x..>[;<ch>] | file:<path>
    #[arg(long)]
    init: Option<String>,
    /// snapshot path prefix; files are written as <prefix>_tau<step>.csv
    #[arg(long)]
    output: Option<String>,
    /// snapshot stride in steps; 0 writes only first and last
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DispersionArgs {
    #[arg(long, short = 'd', default_value_t = 2)]
    d: usize,
    /// lattice sides, comma separated
    #[arg(long = "N", alias = "n", value_delimiter = ',', default_value = "128")]
    n: Vec<usize>,
    /// scale list, either `1..6` or `1,2,5`; each scale s runs l = (3s, s, ...)
    #[arg(long, default_value = "1..6")]
    l: String,
    /// explicit single l-vector, comma separated (overrides --l)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lvec: Option<Vec<i64>>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 16)]
    epochs: usize,
    /// steps between overlap samples
    #[arg(long, default_value_t = 4)]
    cadence: u64,
    /// none | const:<V0> | expr:<formula> | file:<path>
    #[arg(long, default_value = "none")]
    potential: String,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ManyBodyArgs {
    /// TOML configuration file; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    extents: Option<Vec<usize>>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    particles: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    /// pair potential: none | const:<V0>
    #[arg(long)]
    potential: Option<String>,
    /// initial occupation pattern, e.g. `|(0,1),(0,0)>` (default: particles
    /// spread over channel 0 of evenly spaced sites)
    #[arg(long)]
    init: Option<String>,
    /// density CSV output path
    #[arg(long)]
    output: Option<String>,
}

fn exit_code(e: &QlgaError) -> ExitCode {
    match e {
        QlgaError::InvalidParams(_)
        | QlgaError::InvalidField(_)
        | QlgaError::Aliasing { .. }
        | QlgaError::MemoryBudget { .. }
        | QlgaError::DegenerateEigenvalues(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = resolve_threads(cli.threads) {
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
        #[cfg(not(feature = "parallel"))]
        let _ = t;
    }
    let result = match cli.cmd {
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Dispersion(a) => cmd_dispersion(a),
        Cmd::ManyBody(a) => cmd_many_body(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn pick_mu(mu: &Option<String>, theta: Option<f64>, default_theta: bool) -> Result<Complex64> {
    match (mu, theta) {
        (Some(_), Some(_)) => Err(QlgaError::InvalidParams(
            "give either --mu or --theta, not both".into(),
        )),
        (Some(text), None) => parse_complex(text),
        (None, Some(t)) => Ok(Complex64::from_polar(1.0, t)),
        (None, None) if default_theta => Ok(Complex64::new(0.0, -1.0)),
        (None, None) => Err(QlgaError::InvalidParams("one of --mu or --theta is required".into())),
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let mu = pick_mu(&a.mu, a.theta, false)?;
    if (mu - Complex64::new(1.0, 0.0)).norm() < 1e-12 {
        return Err(QlgaError::InvalidParams("mass undefined at mu = 1".into()));
    }
    let params = ModelParams::new(a.d, mu, 1.0)?;
    println!("dim: {}", a.d);
    println!("mu: {}", format_complex(mu));
    println!("theta: {:.16e}", params.theta());
    println!("mass: {:.16e}", params.mass());

    let mut worst: f64 = 0.0;
    let mut report = |name: &str, value: f64| {
        println!("{name}: {value:.16e}");
        worst = worst.max(value);
    };

    let cm = CollisionMatrix::build(&params);
    let n = params.channels();
    let mut unitary_dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dot: Complex64 = (0..n)
                .map(|k| cm.s()[(i, k)] * cm.s()[(j, k)].conj())
                .sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            unitary_dev = unitary_dev.max((dot - expect).norm());
        }
    }
    report("collision_unitarity_residual", unitary_dev);

    let identities = check_unitarity_identities(a.d, mu);
    report("identity_row_norm_residual", identities.row_norm_residual);
    report("identity_orthogonality_residual", identities.orthogonality_residual);

    let op = effective_operator(&params)?;
    report(
        "mass_residual",
        (op.mass_extracted - params.mass()).abs() / params.mass().abs().max(1.0),
    );
    println!("mass_extracted: {:.16e}", op.mass_extracted);

    if a.d == 2 || a.d == 3 {
        let gold = verify_reference(a.d, mu)?;
        report("reference_matrix_dev_s", gold.max_dev_s);
        report("reference_matrix_dev_b", gold.max_dev_b);
        report("reference_matrix_dev_g", gold.max_dev_g);
    }

    let pass = worst < a.tol;
    println!("worst_residual: {worst:.16e}");
    println!("result: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn merge_run_config(
    config: Option<&PathBuf>,
    apply: impl FnOnce(&mut RunConfig),
) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let cfg = merge_run_config(a.config.as_ref(), |cfg| {
        if let Some(d) = a.dim {
            cfg.dim = d;
        }
        if let Some(e) = a.extents {
            cfg.extents = e;
        }
        if let Some(mu) = a.mu {
            cfg.mu = Some(mu);
            cfg.theta = None;
        }
        if let Some(t) = a.theta {
            cfg.theta = Some(t);
            cfg.mu = None;
        }
        if let Some(s) = a.steps {
            cfg.steps = s;
        }
        if let Some(p) = a.potential {
            cfg.potential = p;
        }
        if let Some(i) = a.init {
            cfg.init = i;
        }
        if let Some(o) = a.output {
            cfg.output = Some(o);
        }
        if let Some(s) = a.snapshot_every {
            cfg.snapshot_every = s;
        }
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
    })?;

    let params = cfg.params()?;
    let potential = cfg.build_potential()?;
    let mut field = cfg.build_field()?;
    let mut stepper = Stepper::new(&params, &cfg.extents, potential.as_ref())?;

    let snapshot = |field: &qlga::WaveField| -> Result<()> {
        if let Some(prefix) = &cfg.output {
            let path = format!("{prefix}_tau{:08}.csv", field.tau());
            let mut w = BufWriter::new(File::create(&path)?);
            write_snapshot_csv(field, &mut w)?;
            println!("snapshot: {path}");
        }
        Ok(())
    };

    let norm_initial = field.norm_sq();
    snapshot(&field)?;
    for step in 1..=cfg.steps {
        stepper.step(&mut field)?;
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            snapshot(&field)?;
        }
    }
    if cfg.steps > 0 && (cfg.snapshot_every == 0 || cfg.steps % cfg.snapshot_every != 0) {
        snapshot(&field)?;
    }
    let norm_final = field.norm_sq();
    println!("steps: {}", cfg.steps);
    println!("norm_initial: {norm_initial:.16e}");
    println!("norm_final: {norm_final:.16e}");
    println!("norm_drift: {:.16e}", (norm_final - norm_initial).abs());
    Ok(ExitCode::SUCCESS)
}

fn parse_scales(text: &str) -> Result<Vec<i64>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|_| QlgaError::InvalidParams(format!("bad scale range {text:?}")))?;
        let hi: i64 = hi
            .trim()
            .parse()
            .map_err(|_| QlgaError::InvalidParams(format!("bad scale range {text:?}")))?;
        Ok((lo..=hi).collect())
    } else {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<i64>()
                    .map_err(|_| QlgaError::InvalidParams(format!("bad scale {s:?}")))
            })
            .collect()
    }
}

fn cmd_dispersion(a: DispersionArgs) -> Result<ExitCode> {
    let mu = pick_mu(&a.mu, a.theta, true)?;
    let lvecs: Vec<Vec<i64>> = match &a.lvec {
        Some(l) => {
            if l.len() != a.d {
                return Err(QlgaError::InvalidParams(format!(
                    "--lvec has {} components for d = {}",
                    l.len(),
                    a.d
                )));
            }
            vec![l.clone()]
        }
        None => parse_scales(&a.l)?
            .into_iter()
            .map(|s| {
                // the reference sweep direction: l = (3s, s, s, ...)
                let mut v = vec![s; a.d];
                v[0] = 3 * s;
                v
            })
            .collect(),
    };
    let runs: Vec<(usize, Vec<i64>)> = a
        .n
        .iter()
        .flat_map(|&n| lvecs.iter().map(move |l| (n, l.clone())))
        .collect();

    let records = dispersion_sweep_with_potential(a.d, mu, &runs, a.epochs, a.cadence, &a.potential)?;

    match &a.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_dispersion_csv(&records, &mut w)?;
            println!("csv: {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            write_dispersion_csv(&records, &mut out)?;
            out.flush()?;
        }
    }
    if let Some(best) = records
        .iter()
        .filter(|r| !r.flagged && r.omega_pred != 0.0)
        .min_by(|x, y| x.k_mag.total_cmp(&y.k_mag))
    {
        println!(
            "smallest_k_relative_error: {:.16e}",
            best.relative_error()
        );
    }
    for r in records.iter().filter(|r| r.flagged) {
        eprintln!("warning: overlap decayed for N = {}, l = {:?}; record flagged", r.n, r.l);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_many_body(a: ManyBodyArgs) -> Result<ExitCode> {
    let cfg = merge_run_config(a.config.as_ref(), |cfg| {
        if let Some(d) = a.dim {
            cfg.dim = d;
        }
        if let Some(e) = a.extents {
            cfg.dim = e.len();
            cfg.extents = e;
        }
        if let Some(p) = a.particles {
            cfg.particles = Some(p);
        }
        if let Some(mu) = a.mu {
            cfg.mu = Some(mu);
            cfg.theta = None;
        }
        if let Some(t) = a.theta {
            cfg.theta = Some(t);
            cfg.mu = None;
        }
        if let Some(s) = a.steps {
            cfg.steps = s;
        }
        if let Some(p) = a.potential {
            cfg.potential = p;
        }
        if let Some(i) = a.init {
            cfg.init = i;
        }
        if let Some(o) = a.output {
            cfg.output = Some(o);
        }
    })?;

    let params = cfg.params()?;
    let layout = FockLayout::cartesian(&cfg.extents)?;
    let cm = CollisionMatrix::build(&params);
    let t = SiteCollisionT::from_single_particle(cm.s())?;

    let pair = match cfg.potential.trim() {
        "none" | "" => None,
        spec => match spec.strip_prefix("const:") {
            Some(v) => {
                let v0: f64 = v.trim().parse().map_err(|_| {
                    QlgaError::InvalidParams(format!("bad pair potential {spec:?}"))
                })?;
                Some(PairPotentialU::constant(&cfg.extents, params.epsilon(), v0)?)
            }
            None => {
                return Err(QlgaError::InvalidParams(format!(
                    "many-body potential must be none or const:<V0>, got {spec:?}"
                )))
            }
        },
    };

    let mut state = if cfg.init.starts_with('|') {
        let pattern = layout.parse_pattern(&cfg.init)?;
        ManyBodyState::basis_state(layout.clone(), pattern)?
    } else {
        // spread `particles` over channel 0 of evenly spaced sites
        let particles = cfg.particles.unwrap_or(1) as usize;
        let nsites = layout.nsites();
        if particles > nsites {
            return Err(QlgaError::InvalidParams(format!(
                "{particles} particles on {nsites} sites"
            )));
        }
        let mut pattern = 0u64;
        for p in 0..particles {
            pattern |= 1 << layout.bit(p * nsites / particles.max(1), 0);
        }
        ManyBodyState::basis_state(layout.clone(), pattern)?
    };

    let norm_initial = state.norm_sq();
    for _ in 0..cfg.steps {
        state.qlga_step(&t, pair.as_ref())?;
    }
    let norm_final = state.norm_sq();
    if let Some(path) = &cfg.output {
        let mut w = BufWriter::new(File::create(path)?);
        state.write_density_csv(&mut w)?;
        println!("csv: {path}");
    }
    println!("steps: {}", cfg.steps);
    println!("particles: {:.16e}", state.particle_number());
    println!("norm_initial: {norm_initial:.16e}");
    println!("norm_final: {norm_final:.16e}");
    println!("norm_drift: {:.16e}", (norm_final - norm_initial).abs());
    Ok(ExitCode::SUCCESS)
}
