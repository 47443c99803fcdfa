//! `nonlocal`: command-line access to the nonlocal-core library.
//!
//! Exit status: 0 on success, 2 when a budget cut the result short, 1 on
//! other errors, 3 on bad usage, 4 on malformed input, 5 when a budget makes
//! a computation impossible.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nonlocal_core::angle::{
    boyer_strategy_search, floor_strategy_trial, floor_strategy_value, profile_csv, schmidt_reduce,
    semi_trivial_value, uag_conditional_profile, SnapOptions,
};
use nonlocal_core::game::{
    classical_value_with, game_from_value, game_to_json, report_to_json, xor_parallel_repetition, RepetitionMode,
    SearchOptions,
};
use nonlocal_core::gowers::{
    cs_complexity, function_from_json, gowers_norm_with, line_game, linear_forms_bias, modified_magic_square_tau,
    parallel_repetition_bound, polynomial_to_json, predicate_from_json, strategy_from_witness, von_neumann_check,
    witness_search, CsComplexity,
};
use nonlocal_core::hypnorm::{build_ht, extract_classical_strategy, hypergraph_norm_with, tensor_from_json, verify_ht_properties};
use nonlocal_core::quantum::{sample_winning_probability, schmidt_spec_from_json, strategy_from_json, winning_probability};
use nonlocal_core::rational::to_f64;
use nonlocal_core::ugsdp::{
    diagnostics, perturbation_study, round, solution_from_json, solution_to_json, solve_sdp, study_csv,
    unique_game_from_json, unique_game_to_json, SdpOptions,
};
use nonlocal_core::Error;

use output::{Artifact, Destination};

const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Parser, Debug)]
#[command(name = "nonlocal", version, about = "Classical and entangled values of multiplayer nonlocal games")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,

    /// Output file, or `csv` / `json` to pick a format on stdout.
    /// A file ending in `.csv` is written as CSV.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct BudgetArg {
    /// Largest number of strategies or terms to evaluate.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = parse_budget)]
    budget: u128,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact classical value and bias of a MOD-m game by exhaustive search.
    Classical {
        #[arg(long)]
        game: PathBuf,
        /// Include an optimal deterministic strategy.
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Exact value of the semi-trivial strategy for the uniform angle game,
    /// one CSV row per number of players.
    UagTable {
        #[arg(long, value_delimiter = ',', default_value = "2")]
        m: Vec<u32>,
        /// Player counts: `2..9` (inclusive), `3` or `2,4,6`.
        #[arg(long, default_value = "2..9")]
        t: String,
    },
    /// Exact classical values of Boyer games (t, D, m) for D = 1..=d-max;
    /// the minimum bounds the uniform angle game from above.
    BoyerSearch {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        d_max: u32,
        #[arg(long, default_value_t = 1)]
        d_min: u32,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Conditional target probabilities of the uniform angle game given the
    /// last player's input, at grid midpoints (CSV).
    UagProfile {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Reduces a game with a perfect Schmidt-state strategy to an angle game.
    SchmidtReduce {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        /// Snap tolerance for angles.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Largest expected number of questions per player; angles snap to
        /// denominators at most m * d-max.
        #[arg(long, default_value_t = 64)]
        d_max: u64,
    },
    /// Winning probability of a quantum strategy, exactly and optionally by sampling.
    Qeval {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        /// Also sample this many rounds (needs --seed).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Hypergraph norm of a free XOR game tensor against H(t).
    Hypnorm {
        #[arg(long)]
        tensor: PathBuf,
        /// Number of parts of H(t); must equal the number of players.
        #[arg(long)]
        t: Option<usize>,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Builds H(t) and checks its structural properties.
    Ht {
        #[arg(long)]
        t: usize,
    },
    /// Classical strategy for a free XOR game extracted from its hypergraph norm.
    Extract {
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Gowers uniformity norm U^s of a function on a finite abelian group.
    Gowers {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        s: u32,
        /// Also search for the best-correlating polynomial phase of degree < s.
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Line games over F_p^n: classical bias, the uniformity-norm bound,
    /// polynomial witness strategies and the parallel repetition bound.
    Linegame(LineGameArgs),
    /// Unique-game vector relaxation: solve, round and perturbation study.
    #[command(subcommand)]
    Ugsdp(UgsdpCommand),
    /// Monte Carlo estimate of the floor strategy for the uniform angle game
    /// against its exact value.
    FloorTrial {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct LineGameArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    n: usize,
    /// Number of players.
    #[arg(long)]
    t: usize,
    /// Predicate file; defaults to the modified Magic Square predicate on F_3^2.
    #[arg(long)]
    tau: Option<PathBuf>,
    #[arg(value_enum)]
    action: LineAction,
    /// Repetitions for `parrep`.
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long)]
    seed: Option<u64>,
    /// Rounding samples for `witness`.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[command(flatten)]
    budget: BudgetArg,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum LineAction {
    /// Classical bias.
    Bias,
    /// Bias against the uniformity norm of the predicate.
    Vonneumann,
    /// Polynomial witness, split across players and rounded.
    Witness,
    /// Bound on the value of the k-fold repetition.
    Parrep,
}

#[derive(Subcommand, Debug)]
enum UgsdpCommand {
    /// Solves the vector relaxation of a unique game.
    Solve {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        /// Drop the nonnegativity constraint on cross inner products.
        #[arg(long)]
        signed: bool,
    },
    /// Rounds a vector solution to labels.
    Round {
        /// Solution file as written by `ugsdp solve`.
        #[arg(long)]
        sol: PathBuf,
        /// Game file, when the solution file does not embed one.
        #[arg(long)]
        game: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also report per-pair loss diagnostics over this many thresholds.
        #[arg(long)]
        diagnostics: Option<usize>,
    },
    /// Rounding loss on perturbed planted solutions (CSV).
    Study {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        seeds: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_budget(s: &str) -> Result<u128, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if !(v >= 1.0) || v > 1e36 {
        return Err("budget must be a positive number".into());
    }
    Ok(v as u128)
}

/// CLI failure with its exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Budget(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Usage(_) => 3,
            Failure::Input(_) => 4,
            Failure::Budget(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::Input(m) => format!("malformed input: {m}"),
            Failure::Budget(m) => format!("budget violation: {m}"),
            Failure::Other(m) => format!("error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Json(_) => Failure::Input(e.to_string()),
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

type Outcome = Result<Artifact, Failure>;

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn need_seed(seed: Option<u64>) -> Result<u64, Failure> {
    seed.ok_or_else(|| Failure::Usage("this subcommand is randomized and needs --seed".into()))
}

fn parse_range(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("bad range {s:?}; expected a..b, n or a,b,c"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn classical(game: &Path, witness: bool, budget: u128) -> Outcome {
    let g = game_from_value(&read_json(game)?)?;
    let report = classical_value_with(&g, &SearchOptions { budget })?;
    let mut v = json!({ "omega": report.omega.to_string(), "beta": report.beta.to_string() });
    if witness {
        v["witness"] = report_to_json(&g, &report)["witness"].clone();
    }
    Ok(Artifact::json(v))
}

fn uag_table(ms: &[u32], ts: &str) -> Outcome {
    let ts = parse_range(ts)?;
    let mut rows = Vec::new();
    let mut csv = String::from("t,m,lower,upper,exact\n");
    for &m in ms {
        for &t in &ts {
            let v = semi_trivial_value(t, m)?;
            let exact = v.exact().is_some();
            csv.push_str(&format!("{t},{m},{},{},{exact}\n", v.lower, v.upper));
            rows.push(json!({ "t": t, "m": m, "lower": v.lower.to_string(), "upper": v.upper.to_string(), "exact": exact }));
        }
    }
    Ok(Artifact::csv(json!(rows), csv))
}

fn boyer_search(t: usize, m: u32, d_min: u32, d_max: u32, budget: u128) -> Outcome {
    if d_min == 0 || d_min > d_max {
        return Err(Failure::Usage("need 1 <= d-min <= d-max".into()));
    }
    let r = boyer_strategy_search(t, m, d_min..=d_max, budget)?;
    let mut csv = String::from("d,value\n");
    for (d, v) in &r.values {
        csv.push_str(&format!("{d},{v}\n"));
    }
    let v = json!({
        "t": t,
        "m": m,
        "values": r.values.iter().map(|(d, v)| json!({ "d": d, "value": v.to_string() })).collect::<Vec<_>>(),
        "completed": r.completed(),
        "skipped": r.skipped,
        "min": r.min().map(|(d, v)| json!({ "d": d, "value": v.to_string() })),
    });
    Ok(Artifact::json_with_csv(v, csv).partial(r.is_partial()))
}

fn uag_profile(t: usize, m: u32, grid: usize) -> Outcome {
    let rows = uag_conditional_profile(t, m, grid)?;
    let v: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "x": r.x.to_string(),
                "probabilities": r.probabilities.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "argmax": r.argmax,
            })
        })
        .collect();
    Ok(Artifact::csv(json!(v), profile_csv(&rows)))
}

fn schmidt(game: &Path, strategy: &Path, tol: f64, d_max: u64) -> Outcome {
    let g = game_from_value(&read_json(game)?)?;
    let spec = schmidt_spec_from_json(&read_json(strategy)?)?;
    let angle = schmidt_reduce(&g, &spec, &SnapOptions { tol, d_max })?;
    let angles: Vec<Vec<String>> =
        angle.angles().iter().map(|a| a.iter().map(ToString::to_string).collect()).collect();
    Ok(Artifact::json(json!({ "game": game_to_json(angle.game()), "angles": angles })))
}

fn qeval(game: &Path, strategy: &Path, samples: Option<usize>, seed: Option<u64>) -> Outcome {
    let g = game_from_value(&read_json(game)?)?;
    let s = strategy_from_json(&read_json(strategy)?)?;
    let mut v = json!({ "winning_probability": winning_probability(&g, &s)? });
    if let Some(n) = samples {
        let (mean, se) = sample_winning_probability(&g, &s, need_seed(seed)?, n)?;
        v["sampled"] = json!({ "samples": n, "mean": mean, "stderr": se });
    }
    Ok(Artifact::json(v))
}

fn hypnorm(tensor: &Path, t: Option<usize>, budget: u128) -> Outcome {
    let tensor = tensor_from_json(&read_json(tensor)?)?;
    let t = t.unwrap_or(tensor.players());
    let h = build_ht(t)?;
    let n = hypergraph_norm_with(&tensor, &h, budget)?;
    Ok(Artifact::json(json!({
        "t": t,
        "edges": h.edges.len(),
        "expectation": n.expectation,
        "expectation_exact": n.expectation_exact.map(|r| r.to_string()),
        "norm": n.norm,
    })))
}

fn ht(t: usize) -> Outcome {
    let h = build_ht(t)?;
    let r = verify_ht_properties(&h);
    let v = json!({
        "t": t,
        "parts": h.parts,
        "edges": h.edges,
        "partite": r.partite,
        "two_regular": r.two_regular,
        "disjoint_neighbours": r.disjoint_neighbours,
        "violations": r.violations,
    });
    if r.all_hold() {
        Ok(Artifact::json(v))
    } else {
        Err(Failure::Other(format!("H({t}) fails its property checks: {}", r.violations.join("; "))))
    }
}

fn extract(tensor: &Path, budget: u128) -> Outcome {
    let tensor = tensor_from_json(&read_json(tensor)?)?;
    let h = build_ht(tensor.players())?;
    let norm = hypergraph_norm_with(&tensor, &h, budget)?.norm;
    let s = extract_classical_strategy(&tensor, budget)?;
    Ok(Artifact::json(json!({
        "answers": s.answers,
        "bias": s.bias.to_string(),
        "norm": norm,
        "guarantee": norm.powi(1 << tensor.players()),
    })))
}

fn gowers(function: &Path, s: u32, witness: bool, budget: u128) -> Outcome {
    let f = function_from_json(&read_json(function)?)?;
    let norm = gowers_norm_with(&f, s, budget)?;
    let mut v = json!({ "s": s, "norm": norm });
    let mut partial = false;
    if witness {
        if s == 0 {
            return Err(Failure::Usage("--witness needs s >= 1".into()));
        }
        let w = witness_search(&f, s - 1, budget)?;
        partial = !w.complete;
        v["witness"] = json!({
            "poly": polynomial_to_json(&w.poly),
            "display": w.poly.to_string(),
            "correlation": w.correlation,
            "complete": w.complete,
        });
    }
    Ok(Artifact::json(v).partial(partial))
}

fn linegame(a: &LineGameArgs) -> Outcome {
    let tau = match &a.tau {
        Some(path) => predicate_from_json(&read_json(path)?)?,
        None if a.p == 3 && a.n == 2 => modified_magic_square_tau(),
        None => return Err(Failure::Usage("--tau is required unless p = 3 and n = 2".into())),
    };
    let game = line_game(a.t, a.p, a.n, tau)?;
    let budget = a.budget.budget;
    match a.action {
        LineAction::Bias => {
            let b = linear_forms_bias(&game, budget)?;
            let v = json!({ "bias": b.bias.to_string(), "exact": b.exact, "strategies": b.strategies });
            Ok(Artifact::json(v).partial(!b.exact))
        }
        LineAction::Vonneumann => {
            let r = von_neumann_check(&game, budget)?;
            let v = json!({
                "beta": r.beta.to_string(),
                "exact": r.exact,
                "complexity": r.s,
                "u_norm": r.u_norm,
                "holds": r.holds,
            });
            Ok(Artifact::json(v).partial(!r.exact))
        }
        LineAction::Witness => {
            let seed = need_seed(a.seed)?;
            let s = match cs_complexity(game.system(), 4) {
                CsComplexity::Finite(s) => s as u32,
                CsComplexity::Unbounded(_) => return Err(Failure::Other("system complexity above 4".into())),
            };
            let w = witness_search(&game.sign_function(), s, budget)?;
            let ws = strategy_from_witness(&game, &w.poly, seed, a.samples)?;
            let r = &ws.rounding;
            let v = json!({
                "poly": polynomial_to_json(&w.poly),
                "display": w.poly.to_string(),
                "search_correlation": w.correlation,
                "complete": w.complete,
                "split": ws.split.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "correlation": ws.correlation,
                "best_bias": r.best_bias.to_string(),
                "strategies": r.strategies,
                "mean_bias": r.mean_bias,
                "mean_bias_se": r.mean_bias_se,
                "complex_bias": [r.complex_bias.re, r.complex_bias.im],
                "estimate": [r.estimate.re, r.estimate.im],
                "estimate_se": [r.estimate_se.0, r.estimate_se.1],
            });
            Ok(Artifact::json(v).partial(!w.complete))
        }
        LineAction::Parrep => {
            let bound = parallel_repetition_bound(&game, a.k)?;
            let mut v = json!({ "k": a.k, "bound": bound });
            // exact repeated value when the game is an XOR game in disguise
            if let Some((xor, scale)) = game.to_mod_game()? {
                if scale == nonlocal_core::rational::int(1) {
                    let rep = xor_parallel_repetition(&xor, a.k as usize, RepetitionMode::And)?;
                    match classical_value_with(&rep, &SearchOptions { budget }) {
                        Ok(r) => {
                            v["omega"] = json!(r.omega.to_string());
                            v["holds"] = json!(to_f64(&r.omega) <= bound + 1e-9);
                        }
                        Err(Error::BudgetExceeded { .. }) => return Ok(Artifact::json(v).partial(true)),
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            Ok(Artifact::json(v))
        }
    }
}

fn ugsdp(cmd: &UgsdpCommand) -> Outcome {
    match cmd {
        UgsdpCommand::Solve { game, tol, max_iter, signed } => {
            if !(*tol > 0.0) {
                return Err(Failure::Usage("--tol must be positive".into()));
            }
            let g = unique_game_from_json(&read_json(game)?)?;
            let opts = SdpOptions { tol: *tol, max_iter: *max_iter, nonnegative: !signed, ..SdpOptions::default() };
            let r = solve_sdp(&g, &opts)?;
            let mut v = solution_to_json(&r.solution);
            v["game"] = unique_game_to_json(&g);
            v["converged"] = json!(r.converged);
            v["iterations"] = json!(r.iterations);
            Ok(Artifact::json(v))
        }
        UgsdpCommand::Round { sol, game, seed, diagnostics: r_samples } => {
            let seed = need_seed(*seed)?;
            let sv = read_json(sol)?;
            let gv = match game {
                Some(path) => read_json(path)?,
                None => sv
                    .get("game")
                    .cloned()
                    .ok_or_else(|| Failure::Usage("solution has no embedded game; pass --game".into()))?,
            };
            let g = unique_game_from_json(&gv)?;
            let s = solution_from_json(&g, &sv)?;
            let r = round(&s, &g, seed)?;
            let mut v = json!({
                "labels_x": g.xs().iter().zip(&r.a).map(|(x, a)| json!({ "x": x, "label": a })).collect::<Vec<_>>(),
                "labels_y": g.ys().iter().zip(&r.b).map(|(y, b)| json!({ "y": y, "label": b })).collect::<Vec<_>>(),
                "value": r.win.to_string(),
                "r": r.r,
                "objective": s.objective,
            });
            if let Some(n) = r_samples {
                let d = diagnostics(&s, &g, seed, *n)?;
                v["pairs"] = d
                    .pairs
                    .iter()
                    .map(|p| {
                        json!({
                            "x": g.xs()[p.x], "y": g.ys()[p.y], "eps": p.eps,
                            "m_c_mean": p.m_c_mean, "m_c_se": p.m_c_se, "m_c_bound": p.m_c_bound(),
                            "avg_eps_mean": p.avg_eps_mean, "avg_eps_se": p.avg_eps_se, "avg_eps_bound": p.avg_eps_bound(),
                            "within_bounds": p.within_bounds(3.0),
                        })
                    })
                    .collect();
            }
            Ok(Artifact::json(v))
        }
        UgsdpCommand::Study { k, eps, seeds, seed } => {
            let seed = need_seed(*seed)?;
            let r = perturbation_study(*k, eps, *seeds, seed)?;
            let rows: Vec<Value> = r
                .rows
                .iter()
                .map(|row| json!({ "eps": row.eps, "mean_loss": row.mean_loss, "stderr": row.stderr, "scale": row.scale }))
                .collect();
            Ok(Artifact::csv(json!({ "k": r.k, "rows": rows, "constant": r.constant }), study_csv(&r)))
        }
    }
}

fn floor_trial(t: usize, m: u32, samples: usize, seed: Option<u64>) -> Outcome {
    let (mean, se) = floor_strategy_trial(t, m, need_seed(seed)?, samples)?;
    let exact = floor_strategy_value(t, m);
    let z = if se > 0.0 { (mean - to_f64(&exact)) / se } else { 0.0 };
    Ok(Artifact::json(json!({
        "t": t, "m": m, "samples": samples, "mean": mean, "stderr": se,
        "exact": exact.to_string(), "z": z,
    })))
}

fn dispatch(cmd: &Command) -> Outcome {
    match cmd {
        Command::Classical { game, witness, budget } => classical(game, *witness, budget.budget),
        Command::UagTable { m, t } => uag_table(m, t),
        Command::BoyerSearch { t, m, d_max, d_min, budget } => boyer_search(*t, *m, *d_min, *d_max, budget.budget),
        Command::UagProfile { t, m, grid } => uag_profile(*t, *m, *grid),
        Command::SchmidtReduce { game, strategy, tol, d_max } => schmidt(game, strategy, *tol, *d_max),
        Command::Qeval { game, strategy, samples, seed } => qeval(game, strategy, *samples, *seed),
        Command::Hypnorm { tensor, t, budget } => hypnorm(tensor, *t, budget.budget),
        Command::Ht { t } => ht(*t),
        Command::Extract { tensor, budget } => extract(tensor, budget.budget),
        Command::Gowers { function, s, witness, budget } => gowers(function, *s, *witness, budget.budget),
        Command::Linegame(a) => linegame(a),
        Command::Ugsdp(c) => ugsdp(c),
        Command::FloorTrial { t, m, samples, seed } => floor_trial(*t, *m, *samples, *seed),
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w as usize)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    let dest = Destination::parse(cli.output.as_deref());
    let artifact = dispatch(&cli.command)?;
    artifact.write(&dest)?;
    Ok(artifact.is_partial)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("partial result: the budget cut the computation short");
            ExitCode::from(2)
        }
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}
