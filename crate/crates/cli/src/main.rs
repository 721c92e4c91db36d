//! Command-line front end for the Degasperis-Procesi multipeakon toolkit.
//!
//! Exit codes: 0 success (integration completed), 2 integration stopped
//! near a collision, 3 integration stopped at the mass cap, 64 malformed
//! input, 1 any other failure.

mod portraitfile;
mod statefile;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use dp_peakon::classify::{classify, portrait, verify_sign_count, write_portrait_csv, Asymptotics,
    CollisionPattern, HalfPlane, PortraitSpec, Signature};
use dp_peakon::closedform::{CfOptions, ClosedForm3};
use dp_peakon::dynamics::{integrate, write_trajectory_csv, IntegrateOptions, StopReason};
use dp_peakon::events::{first_collision, Direction};
use dp_peakon::polycalc::DEFAULT_CLUSTER_TOL;
use dp_peakon::sampling::{all_signatures, env_seed, random_state, rng_from_seed};
use dp_peakon::spectral::spectrum;
use dp_peakon::verify::{identity_corpus_options, run_checks, VerifyReport};
use dp_peakon::Error;

use statefile::StateFile;

const EXIT_OK: i32 = 0;
const EXIT_FAILURE: i32 = 1;
const EXIT_NEAR_COLLISION: i32 = 2;
const EXIT_MASS_CAP: i32 = 3;
const EXIT_BAD_INPUT: i32 = 64;

/// Degasperis-Procesi multipeakon dynamics, spectra, and collisions.
#[derive(Parser)]
#[command(name = "dp-peakon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the peakon equations and write a trajectory CSV.
    Simulate {
        /// JSON state file {"x": [...], "m": [...], "t": 0}.
        state_file: PathBuf,
        /// Absolute end time; the state file's t field is the start.
        #[arg(long = "t-end", allow_hyphen_values = true)]
        t_end: f64,
        /// Family parameter: 3 is Degasperis-Procesi, 2 is Camassa-Holm.
        #[arg(long, default_value_t = 3.0)]
        b: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Relative step tolerance (absolute is 100x smaller).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print eigenvalues, residues, and invariants of a state.
    Spectrum {
        state_file: PathBuf,
        /// Emit one machine-readable JSON object instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Report the first collision in each requested time direction.
    Collide {
        state_file: PathBuf,
        #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
        direction: DirectionArg,
        /// Emit one JSON line per direction (an event object or null).
        #[arg(long)]
        json: bool,
    },
    /// Sweep a mass grid and write the eigenvalue portrait CSV.
    Portrait {
        /// Use the built-in 75x75 reference sweep.
        #[arg(long)]
        default: bool,
        /// JSON sweep specification (mutually exclusive with --default).
        #[arg(long, conflicts_with = "default")]
        spec: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity-check suite on a state or on random samples.
    Verify {
        /// Check this state instead of random samples.
        state_file: Option<PathBuf>,
        /// States per sign pattern (default 3); seeded by DP_PEAKON_SEED.
        #[arg(long, conflicts_with = "state_file")]
        random: Option<usize>,
        /// Restrict random sampling to one sign pattern, e.g. ++- or -+-.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "state_file")]
        signature: Option<String>,
        /// Also write the text report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Look up the sign-pattern classification of a three-peakon state.
    Classify { state_file: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Both,
    Forward,
    Backward,
}

fn main() {
    // Die from SIGPIPE like any Unix filter when the reader closes the pipe
    // early (spectrum ... | head); the Rust default turns it into a panic
    // mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_BAD_INPUT,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli.command {
        Command::Simulate {
            state_file,
            t_end,
            b,
            out,
            tol,
        } => cmd_simulate(&state_file, t_end, b, out.as_deref(), tol),
        Command::Spectrum { state_file, json } => cmd_spectrum(&state_file, json),
        Command::Collide {
            state_file,
            direction,
            json,
        } => cmd_collide(&state_file, direction, json),
        Command::Portrait { default, spec, out } => cmd_portrait(default, spec.as_deref(), out.as_deref()),
        Command::Verify {
            state_file,
            random,
            signature,
            report,
        } => cmd_verify(state_file.as_deref(), random, signature.as_deref(), report.as_deref()),
        Command::Classify { state_file } => cmd_classify(&state_file),
    };
    std::process::exit(code);
}

fn read_state(path: &Path) -> Result<StateFile, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        EXIT_BAD_INPUT
    })?;
    statefile::parse(&text).map_err(|msg| {
        eprintln!("{}: {msg}", path.display());
        EXIT_BAD_INPUT
    })
}

fn read_three_peakon_state(path: &Path) -> Result<StateFile, i32> {
    let sf = read_state(path)?;
    if sf.state.n() != 3 {
        eprintln!(
            "{}: this command needs exactly three peakons, got {}",
            path.display(),
            sf.state.n()
        );
        return Err(EXIT_BAD_INPUT);
    }
    Ok(sf)
}

fn write_output(out: Option<&Path>, content: &[u8]) -> i32 {
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, content) {
                eprintln!("{}: {e}", path.display());
                return EXIT_FAILURE;
            }
            EXIT_OK
        }
        None => {
            let mut stdout = std::io::stdout();
            if stdout.write_all(content).and_then(|_| stdout.flush()).is_err() {
                return EXIT_FAILURE;
            }
            EXIT_OK
        }
    }
}

fn cmd_simulate(path: &Path, t_end: f64, b: f64, out: Option<&Path>, tol: Option<f64>) -> i32 {
    let sf = match read_state(path) {
        Ok(sf) => sf,
        Err(code) => return code,
    };
    if !t_end.is_finite() {
        eprintln!("--t-end must be finite");
        return EXIT_BAD_INPUT;
    }
    let mut opts = IntegrateOptions {
        b,
        ..IntegrateOptions::default()
    };
    if let Some(tol) = tol {
        if !(tol.is_finite() && tol > 0.0) {
            eprintln!("--tol must be a positive number");
            return EXIT_BAD_INPUT;
        }
        opts.rel_tol = tol;
        opts.abs_tol = tol * 1e-2;
    }
    let mut traj = match integrate(&sf.state, t_end - sf.t, &opts) {
        Ok(traj) => traj,
        Err(e) => {
            eprintln!("integration failed: {e}");
            return EXIT_FAILURE;
        }
    };
    for t in &mut traj.t {
        *t += sf.t;
    }
    let mut csv = Vec::new();
    if write_trajectory_csv(&traj, &mut csv).is_err() {
        return EXIT_FAILURE;
    }
    let code = write_output(out, &csv);
    if code != EXIT_OK {
        return code;
    }
    match traj.stop {
        StopReason::Completed => {
            eprintln!("completed at t = {}", traj.final_time());
            EXIT_OK
        }
        StopReason::NearCollision => {
            eprintln!("stopped near a collision at t = {}", traj.final_time());
            EXIT_NEAR_COLLISION
        }
        StopReason::MassCap => {
            eprintln!("stopped at the mass cap at t = {}", traj.final_time());
            EXIT_MASS_CAP
        }
    }
}

fn fmt_complex(v: dp_peakon::Complex64) -> String {
    format!("{:.16e} {} {:.16e}i", v.re, if v.im < 0.0 { "-" } else { "+" }, v.im.abs())
}

fn cmd_spectrum(path: &Path, json: bool) -> i32 {
    let sf = match read_state(path) {
        Ok(sf) => sf,
        Err(code) => return code,
    };
    let data = match spectrum(&sf.state, DEFAULT_CLUSTER_TOL) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("spectrum failed: {e}");
            return EXIT_FAILURE;
        }
    };
    let inv = dp_peakon::dynamics::invariants(&sf.state);

    // Present eigenvalues ascending by (re, im) together with their
    // residue expansions.
    let mut order: Vec<usize> = (0..data.residues.len()).collect();
    order.sort_by(|&a, &b| {
        let pa = data.residues[a].pole;
        let pb = data.residues[b].pole;
        (pa.re, pa.im).partial_cmp(&(pb.re, pb.im)).unwrap()
    });

    if json {
        let mut parts = Vec::new();
        for &i in &order {
            let r = &data.residues[i];
            let ar = &data.adjoint_residues[i];
            let coeffs = |c: &[dp_peakon::Complex64]| {
                c.iter()
                    .map(|v| format!("[{:.16e},{:.16e}]", v.re, v.im))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            parts.push(format!(
                "{{\"re\":{:.16e},\"im\":{:.16e},\"multiplicity\":{},\"b\":[{}],\"b_adjoint\":[{}]}}",
                r.pole.re,
                r.pole.im,
                r.coeffs.len(),
                coeffs(&r.coeffs),
                coeffs(&ar.coeffs)
            ));
        }
        println!(
            "{{\"eigenvalues\":[{}],\"m1\":{:.16e},\"m2\":{:.16e},\"m3\":{:.16e},\"m_plus\":{:.16e},\"m_minus\":{:.16e}}}",
            parts.join(","),
            inv[0],
            inv[1],
            inv[2],
            data.m_plus,
            data.m_minus
        );
        return EXIT_OK;
    }

    print!("state: {}", statefile::canonical(&sf));
    println!("n = {} peakons", sf.state.n());
    println!("M1 = {:.16e}", inv[0]);
    println!("M2 = {:.16e}", inv[1]);
    println!("M3 = {:.16e}", inv[2]);
    println!("M+ = {:.16e}", data.m_plus);
    println!("M- = {:.16e}", data.m_minus);
    for &i in &order {
        let r = &data.residues[i];
        let ar = &data.adjoint_residues[i];
        println!(
            "lambda = {} (multiplicity {})",
            fmt_complex(r.pole),
            r.coeffs.len()
        );
        for (k, c) in r.coeffs.iter().enumerate() {
            println!("  b({}) = {}", k + 1, fmt_complex(*c));
        }
        for (k, c) in ar.coeffs.iter().enumerate() {
            println!("  b~({}) = {}", k + 1, fmt_complex(*c));
        }
    }
    EXIT_OK
}

fn cmd_collide(path: &Path, direction: DirectionArg, json: bool) -> i32 {
    let sf = match read_three_peakon_state(path) {
        Ok(sf) => sf,
        Err(code) => return code,
    };
    let opts = CfOptions::default();
    let cf = match ClosedForm3::new(&sf.state, &opts) {
        Ok(cf) => cf,
        Err(e) => {
            eprintln!("closed form failed: {e}");
            return EXIT_FAILURE;
        }
    };
    let directions: &[Direction] = match direction {
        DirectionArg::Both => &[Direction::Forward, Direction::Backward],
        DirectionArg::Forward => &[Direction::Forward],
        DirectionArg::Backward => &[Direction::Backward],
    };
    for &dir in directions {
        match first_collision(&cf, dir, opts.horizon) {
            Ok(Some(mut ev)) => {
                ev.t_c += sf.t;
                if json {
                    println!("{}", ev.to_json());
                } else {
                    println!(
                        "{}: pair ({},{}) collides at t = {:.16e}, x = {:.16e}, amplitude = {:.16e}, shock = {:.16e}{}",
                        dir,
                        ev.pair[0],
                        ev.pair[1],
                        ev.t_c,
                        ev.x_c,
                        ev.amplitude,
                        ev.shock,
                        if ev.simultaneous { " (simultaneous)" } else { "" }
                    );
                }
            }
            Ok(None) => {
                if json {
                    println!("null");
                } else {
                    println!("{dir}: no collision");
                }
            }
            Err(e) => {
                eprintln!("collision scan failed: {e}");
                return EXIT_FAILURE;
            }
        }
    }
    EXIT_OK
}

fn cmd_portrait(default: bool, spec_path: Option<&Path>, out: Option<&Path>) -> i32 {
    let spec = match (default, spec_path) {
        (true, None) => PortraitSpec::default(),
        (false, Some(path)) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    return EXIT_BAD_INPUT;
                }
            };
            match portraitfile::parse(&text) {
                Ok(spec) => spec,
                Err(msg) => {
                    eprintln!("{}: {msg}", path.display());
                    return EXIT_BAD_INPUT;
                }
            }
        }
        _ => {
            eprintln!("portrait needs exactly one of --default or --spec");
            return EXIT_BAD_INPUT;
        }
    };
    let records = match portrait(&spec, DEFAULT_CLUSTER_TOL) {
        Ok(r) => r,
        Err(e @ Error::InvalidGrid(_)) => {
            eprintln!("invalid grid: {e}");
            return EXIT_BAD_INPUT;
        }
        Err(e) => {
            eprintln!("portrait failed: {e}");
            return EXIT_FAILURE;
        }
    };
    let mut csv = Vec::new();
    if write_portrait_csv(&records, &mut csv).is_err() {
        return EXIT_FAILURE;
    }
    let code = write_output(out, &csv);
    if code == EXIT_OK {
        eprintln!("{} grid points", records.len());
    }
    code
}

fn parse_signature(text: &str) -> Result<Signature, i32> {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() == 3 && chars.iter().all(|&c| c == '+' || c == '-') {
        let mut signs = [0i8; 3];
        for (s, &c) in signs.iter_mut().zip(&chars) {
            *s = if c == '+' { 1 } else { -1 };
        }
        return Ok(Signature(signs));
    }
    eprintln!("--signature must be three of +/-, e.g. ++- or -+-");
    Err(EXIT_BAD_INPUT)
}

fn cmd_verify(
    state_path: Option<&Path>,
    random: Option<usize>,
    signature: Option<&str>,
    report_path: Option<&Path>,
) -> i32 {
    let seed = env_seed();
    let report = if let Some(path) = state_path {
        let sf = match read_three_peakon_state(path) {
            Ok(sf) => sf,
            Err(code) => return code,
        };
        let corpus = vec![sf.state];
        let checks = run_checks(&corpus, &corpus, seed);
        VerifyReport {
            seed,
            states: 1,
            checks,
        }
    } else {
        let per_signature = random.unwrap_or(3).max(1);
        let signatures: Vec<Signature> = match signature {
            Some(text) => match parse_signature(text) {
                Ok(sig) => vec![sig],
                Err(code) => return code,
            },
            None => all_signatures().to_vec(),
        };
        let opts = identity_corpus_options();
        let capped_opts = dp_peakon::sampling::SampleOptions {
            max_rate_spread: Some(3.0),
            ..identity_corpus_options()
        };
        let mut rng = rng_from_seed(seed);
        let mut corpus = Vec::new();
        let mut capped = Vec::new();
        for &sig in &signatures {
            for _ in 0..per_signature {
                match random_state(sig, &opts, &mut rng) {
                    Ok(s) => corpus.push(s),
                    Err(e) => {
                        eprintln!("sampling failed: {e}");
                        return EXIT_FAILURE;
                    }
                }
            }
            match random_state(sig, &capped_opts, &mut rng) {
                Ok(s) => capped.push(s),
                Err(e) => {
                    eprintln!("sampling failed: {e}");
                    return EXIT_FAILURE;
                }
            }
        }
        let states = corpus.len();
        let checks = run_checks(&corpus, &capped, seed);
        VerifyReport {
            seed,
            states,
            checks,
        }
    };

    let mut text = Vec::new();
    if report.write_text(&mut text).is_err() {
        return EXIT_FAILURE;
    }
    let mut stdout = std::io::stdout();
    if stdout.write_all(&text).and_then(|_| stdout.flush()).is_err() {
        return EXIT_FAILURE;
    }
    if let Some(path) = report_path {
        if let Err(e) = fs::write(path, &text) {
            eprintln!("{}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn cmd_classify(path: &Path) -> i32 {
    let sf = match read_three_peakon_state(path) {
        Ok(sf) => sf,
        Err(code) => return code,
    };
    let signature = match Signature::of_state(&sf.state) {
        Ok(sig) => sig,
        Err(e) => {
            eprintln!("classification failed: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let class = classify(signature);
    println!("signature {signature}");
    println!("eigenvalues with positive real part: {}", class.n_plus);
    match (class.always_real_simple, class.complex_pair_side) {
        (true, _) => println!("spectrum: always real and simple"),
        (false, Some(HalfPlane::Positive)) => {
            println!("spectrum: a conjugate pair may appear in the right half plane")
        }
        (false, Some(HalfPlane::Negative)) => {
            println!("spectrum: a conjugate pair may appear in the left half plane")
        }
        (false, None) => println!("spectrum: may leave the real line"),
    }
    match class.asymptotics {
        Asymptotics::FreeBothWays => println!("asymptotics: free in both time directions"),
        Asymptotics::FreeBackwardOnly => println!("asymptotics: free backward only"),
        Asymptotics::FreeForwardOnly => println!("asymptotics: free forward only"),
        Asymptotics::Confined => println!("asymptotics: confined (collisions in both directions)"),
    }
    match class.collisions {
        CollisionPattern::None => println!("collisions: none"),
        CollisionPattern::Forward(p) => println!("collisions: forward pair ({},{})", p[0], p[1]),
        CollisionPattern::Backward(p) => println!("collisions: backward pair ({},{})", p[0], p[1]),
        CollisionPattern::Both { forward, backward } => println!(
            "collisions: forward pair ({},{}), backward pair ({},{})",
            forward[0], forward[1], backward[0], backward[1]
        ),
    }
    match verify_sign_count(&sf.state, DEFAULT_CLUSTER_TOL) {
        Ok(report) => {
            println!(
                "sign-count check: observed {}, expected {}{}",
                report.observed,
                report.expected,
                if report.matches { ", ok" } else { ", MISMATCH" }
            );
            if report.numerically_imaginary {
                println!("warning: an eigenvalue sits numerically on the imaginary axis");
            }
            if report.matches {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err(e) => {
            eprintln!("sign-count check failed: {e}");
            EXIT_FAILURE
        }
    }
}
