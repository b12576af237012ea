//! `cgg`: batch front end for the convex grabbing game workbench.
//!
//! Every `<cake>` argument is either a `.cake` file or a construction spec
//! such as `moon:6`. A file `x.cake` may carry construction metadata in the
//! sidecar `x.ann`, which `construct` writes and careful greedy needs.
//!
//! Exit status: 0 on success, 1 on domain errors, 2 on usage errors.

use std::fmt::Write as _;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use convex_grab::cake::sample_cake;
use convex_grab::conjectures::{
    check, search_no_reveal_counterexample, CheckOptions, Conjecture, EXHAUSTIVE_LIMIT,
};
use convex_grab::constructions::{
    validate_annotated, Annotation, ConstructionSpec, DEFAULT_SCALE,
};
use convex_grab::engine::{replay, scores, simulate, GameState};
use convex_grab::solver::ratio_scan;
use convex_grab::tactics::resolve_tactic;
use convex_grab::{BigInt, Cake, Coord, Gameplay, Rational64, Solver, Weight};
use convex_grab_service::{ServiceConfig, DEFAULT_MAX_SESSIONS, DEFAULT_SOLVER_CAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The solver refuses larger cakes unless `--cap` says otherwise.
const DEFAULT_CAP: usize = 24;

#[derive(Parser)]
#[command(name = "cgg", version, about = "Exact workbench for the convex grabbing game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print M(C), Bob's gain under optimal play.
    Solve {
        cake: String,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Print the optimal moves at a position.
    Moves {
        cake: String,
        /// Comma-separated move prefix, refereed before solving.
        #[arg(long, value_delimiter = ',')]
        play: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Play a full game between two tactics.
    Simulate {
        cake: String,
        #[arg(long)]
        alice: String,
        #[arg(long)]
        bob: String,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Build a named construction, validate it and write it out.
    Construct {
        spec: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SCALE)]
        scale: u64,
    },
    /// Check general position and, if metadata is present, the construction.
    Validate { cake: String },
    /// Check one of the greedy-type conjectures on every examined state.
    Check {
        #[arg(value_enum)]
        conjecture: ConjectureArg,
        cake: String,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 21)]
        max_cherries: usize,
    },
    /// Random search for counterexamples.
    Search {
        #[arg(value_enum)]
        target: SearchTarget,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Write the witness cake here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exploratory scan for large M(C)/R(C).
    Scan {
        #[arg(value_enum)]
        target: ScanTarget,
        /// `random:<n>` or `random:<n>:<reds>` for random cakes, or a
        /// construction spec.
        #[arg(long)]
        gen: String,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Referee a recorded gameplay and print the scores.
    Replay { cake: String, gameplay: PathBuf },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SOLVER_CAP)]
        solver_cap: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_SESSIONS)]
        max_sessions: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ConjectureArg {
    Greedy,
    Strong,
    Noreveal,
}

impl From<ConjectureArg> for Conjecture {
    fn from(c: ConjectureArg) -> Self {
        match c {
            ConjectureArg::Greedy => Conjecture::Greedy,
            ConjectureArg::Strong => Conjecture::StrongGreedy,
            ConjectureArg::Noreveal => Conjecture::NoReveal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchTarget {
    Noreveal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanTarget {
    Gamma,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("ann")
}

/// Reads a cake file (plus its sidecar) or builds a construction spec.
fn load(arg: &str) -> Result<(Cake, Option<Annotation>)> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Ok(spec) = arg.parse::<ConstructionSpec>() {
            return Ok(spec.build(DEFAULT_SCALE)?);
        }
    }
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {arg}"))?;
    let cake = Cake::parse(&text).with_context(|| format!("{arg}"))?;
    let ann_path = sidecar(path);
    let ann = if ann_path.exists() {
        let text = fs::read_to_string(&ann_path)
            .with_context(|| format!("cannot read {}", ann_path.display()))?;
        Some(Annotation::parse(&text).with_context(|| format!("{}", ann_path.display()))?)
    } else {
        None
    };
    Ok((cake, ann))
}

fn within_cap(cake: &Cake, cap: usize) -> Result<()> {
    if cake.len() > cap {
        bail!(
            "cake has {} cherries, above the solver cap of {cap} (raise it with --cap)",
            cake.len()
        );
    }
    Ok(())
}

fn ids(mask: convex_grab::SubsetMask) -> String {
    mask.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<String> {
    let mut out = String::new();
    match cli.command {
        Command::Solve { cake, cap } => {
            let (cake, _) = load(&cake)?;
            within_cap(&cake, cap)?;
            writeln!(out, "{}", Solver::new(cake.board().clone()).minimax())?;
        }
        Command::Moves { cake, play, cap } => {
            let (cake, _) = load(&cake)?;
            within_cap(&cake, cap)?;
            let board = cake.board();
            let states = replay(board, &Gameplay::new(play))?;
            let state = *states.last().expect("replay keeps the opening");
            if state.is_over() {
                bail!("the game is over");
            }
            let record = Solver::new(board.clone()).record(&state)?;
            writeln!(out, "mover {}", state.mover())?;
            writeln!(out, "value {}", record.value)?;
            writeln!(out, "optimal {}", ids(record.optimal_moves))?;
        }
        Command::Simulate {
            cake,
            alice,
            bob,
            cap,
        } => {
            let (cake, ann) = load(&cake)?;
            let sun = ann.as_ref().and_then(|a| a.sun());
            if alice == "optimal" || bob == "optimal" {
                within_cap(&cake, cap)?;
            }
            let board = cake.board();
            let a = resolve_tactic::<Weight>(&alice, board, sun)?;
            let b = resolve_tactic::<Weight>(&bob, board, sun)?;
            let q = simulate(board, a.as_ref(), b.as_ref())?;
            let (sa, sb) = scores(board, &q)?;
            write!(out, "gameplay {}", q.serialize())?;
            writeln!(out, "alice {sa}")?;
            writeln!(out, "bob {sb}")?;
        }
        Command::Construct {
            spec,
            output,
            scale,
        } => {
            let spec: ConstructionSpec = spec.parse()?;
            let (cake, ann) = spec.build::<Coord, Weight>(scale)?;
            if let Some(ann) = &ann {
                let report = validate_annotated(&cake, ann);
                if let Some(first) = report.first_failure() {
                    bail!("{spec} failed validation: {first}");
                }
                out.push_str(&report.to_string());
            }
            fs::write(&output, cake.serialize())
                .with_context(|| format!("cannot write {}", output.display()))?;
            let ann_path = sidecar(&output);
            if let Some(ann) = &ann {
                fs::write(&ann_path, ann.to_text())
                    .with_context(|| format!("cannot write {}", ann_path.display()))?;
            } else if ann_path.exists() {
                fs::remove_file(&ann_path)?;
            }
            writeln!(out, "wrote {spec} ({} cherries)", cake.len())?;
        }
        Command::Validate { cake } => {
            let (cake, ann) = load(&cake)?;
            writeln!(out, "general position: ok ({} cherries)", cake.len())?;
            if let Some(ann) = ann {
                let report = validate_annotated(&cake, &ann);
                out.push_str(&report.to_string());
                if !report.is_ok() {
                    print!("{out}");
                    bail!("construction checks failed");
                }
            }
        }
        Command::Check {
            conjecture,
            cake,
            samples,
            seed,
            max_cherries,
        } => {
            let (cake, _) = load(&cake)?;
            let opts = CheckOptions {
                max_cherries,
                samples,
                seed,
            };
            if cake.len() > EXHAUSTIVE_LIMIT {
                eprintln!(
                    "note: {} cherries, sampling {samples} playouts instead of every state",
                    cake.len()
                );
            }
            let report = check(cake.board().clone(), conjecture.into(), &opts)?;
            out.push_str(&report.to_text());
        }
        Command::Search {
            target: SearchTarget::Noreveal,
            seed,
            budget,
            output,
        } => {
            let Some(w) = search_no_reveal_counterexample::<Coord, Weight>(seed, budget) else {
                bail!("no counterexample within {budget} candidates");
            };
            writeln!(out, "candidate {}", w.attempt)?;
            writeln!(out, "non-revealing move {}", w.non_revealing)?;
            writeln!(out, "optimal move {}", w.best_move)?;
            writeln!(out, "alice after non-revealing move {}", w.alice_non_revealing())?;
            writeln!(out, "alice optimal {}", w.alice_optimal())?;
            writeln!(out, "bob reply {}", w.bob_reply)?;
            writeln!(out, "M after reply {}", w.after_reply)?;
            match output {
                Some(path) => fs::write(&path, w.cake.serialize())
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => out.push_str(&w.cake.serialize()),
            }
        }
        Command::Scan {
            target: ScanTarget::Gamma,
            gen,
            budget,
            seed,
            output,
        } => {
            let cakes = generator(&gen, seed)?;
            let Some(best) = ratio_scan(cakes, budget, |c: &Cake| c.board().clone()) else {
                bail!("no cake with a red cherry within the budget");
            };
            writeln!(out, "ratio {}", best.minimax / best.reds)?;
            writeln!(out, "minimax {}", best.minimax)?;
            writeln!(out, "reds {}", best.reds)?;
            match output {
                Some(path) => fs::write(&path, best.cake.serialize())
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => out.push_str(&best.cake.serialize()),
            }
        }
        Command::Replay { cake, gameplay } => {
            let (cake, _) = load(&cake)?;
            let text = fs::read_to_string(&gameplay)
                .with_context(|| format!("cannot read {}", gameplay.display()))?;
            let q = Gameplay::parse(&text).map_err(|e| anyhow!("{}: {e}", gameplay.display()))?;
            let board = cake.board();
            let states = replay(board, &q)?;
            for (state, &id) in states.iter().zip(&q.moves) {
                let color = if board.is_red(id) { "red" } else { "green" };
                writeln!(out, "{} takes {id} ({color})", state.mover())?;
            }
            let (sa, sb) = scores(board, &q)?;
            writeln!(out, "alice {sa}")?;
            writeln!(out, "bob {sb}")?;
            let last: &GameState<'_, Weight> = states.last().expect("opening");
            if !last.is_over() {
                writeln!(out, "unfinished, {} cherries remain", last.remaining().len())?;
            }
        }
        Command::Serve {
            addr,
            static_dir,
            solver_cap,
            max_sessions,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
                .init();
            let config = ServiceConfig {
                solver_cap,
                max_sessions,
                static_dir,
            };
            tokio::runtime::Runtime::new()?
                .block_on(convex_grab_service::serve(addr, config))
                .with_context(|| format!("serving on {addr}"))?;
        }
    }
    Ok(out)
}

/// Cakes for `scan gamma`: seeded random cakes or one construction.
fn generator(spec: &str, seed: u64) -> Result<Box<dyn Iterator<Item = Cake>>> {
    if let Some(rest) = spec.strip_prefix("random:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let n: usize = parts[0]
            .parse()
            .map_err(|_| anyhow!("bad cherry count in {spec:?}"))?;
        let reds: Option<usize> = match parts.get(1) {
            Some(r) => Some(r.parse().map_err(|_| anyhow!("bad red count in {spec:?}"))?),
            None => None,
        };
        if parts.len() > 2 || n == 0 || n > DEFAULT_CAP || reds.is_some_and(|r| r > n) {
            bail!("bad generator {spec:?}; expected random:<n>[:<reds>] with 1 <= n <= {DEFAULT_CAP}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(Box::new(std::iter::from_fn(move || {
            let r = reds.unwrap_or_else(|| rng.gen_range(1..=n));
            Some(sample_cake::<BigInt, Rational64, _>(&mut rng, n, r, 1000))
        })));
    }
    let spec: ConstructionSpec = spec.parse()?;
    let (cake, _) = spec.build(DEFAULT_SCALE)?;
    Ok(Box::new(std::iter::once(cake)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
