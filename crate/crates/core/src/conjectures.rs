//! Per-state checkers for the greedy-move, strong greedy-move and
//! no-reveal-move conjectures, and a randomized counterexample search.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Display};
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cake::{sample_cake, Board, Cake, SubsetMask, WeightScalar};
use crate::engine::{GameState, Player};
use crate::geom::CoordScalar;
use crate::ordertype::{canonical_key, CANONICAL_KEY_LIMIT};
use crate::solver::{Solver, SolverError};

/// Cakes up to this size are checked on every reachable state.
pub const EXHAUSTIVE_LIMIT: usize = 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConjectureError {
    #[error("cake has {0} cherries, above the checker cap of {1}")]
    TooLarge(usize, usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("unknown conjecture {0:?}; expected greedy, strong or noreveal")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Conjecture {
    Greedy,
    StrongGreedy,
    NoReveal,
}

impl Display for Conjecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conjecture::Greedy => "greedy",
            Conjecture::StrongGreedy => "strong",
            Conjecture::NoReveal => "noreveal",
        })
    }
}

impl FromStr for Conjecture {
    type Err = ConjectureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Conjecture::Greedy),
            "strong" => Ok(Conjecture::StrongGreedy),
            "noreveal" => Ok(Conjecture::NoReveal),
            other => Err(ConjectureError::Unknown(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub max_cherries: usize,
    /// Playouts used to sample states of cakes above [`EXHAUSTIVE_LIMIT`].
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            max_cherries: 21,
            samples: 256,
            seed: 0,
        }
    }
}

/// The verdict at one state where the conjecture applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVerdict<W> {
    pub state: SubsetMask,
    pub mover: Player,
    pub holds: bool,
    pub value: W,
    pub optimal: SubsetMask,
    /// The moves the conjecture talks about: extremal reds, or `N`.
    pub candidates: SubsetMask,
    /// Every legal move with the value it leads to.
    pub move_values: Vec<(usize, W)>,
}

impl<W: WeightScalar> StateVerdict<W> {
    fn values_text(&self) -> String {
        let moves: Vec<String> = self
            .move_values
            .iter()
            .map(|(m, v)| format!("{m}:{v}"))
            .collect();
        format!(
            "value={} optimal={} candidates={} moves={}",
            self.value,
            self.optimal,
            self.candidates,
            moves.join(",")
        )
    }
}

impl<W: WeightScalar> Display for StateVerdict<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.state,
            self.mover,
            if self.holds { "holds" } else { "fails" },
            self.values_text()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjectureReport<W> {
    pub conjecture: Conjecture,
    /// Whether every reachable state was examined.
    pub exhaustive: bool,
    pub states_examined: usize,
    /// Verdicts at the examined states where the conjecture applies.
    pub verdicts: Vec<StateVerdict<W>>,
}

impl<W: WeightScalar> ConjectureReport<W> {
    pub fn holds(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn holds_for(&self, mover: Player) -> bool {
        self.verdicts
            .iter()
            .filter(|v| v.mover == mover)
            .all(|v| v.holds)
    }

    /// The first failing verdict; states are examined largest first.
    pub fn first_failure(&self) -> Option<&StateVerdict<W>> {
        self.verdicts.iter().find(|v| !v.holds)
    }

    fn summary_of<'a>(&self, mut vs: impl Iterator<Item = &'a StateVerdict<W>>) -> String
    where
        W: 'a,
    {
        match vs.find(|v| !v.holds) {
            None => "HOLDS".into(),
            Some(v) => format!("FAILS {} {}", v.state, v.values_text()),
        }
    }

    /// `HOLDS` or `FAILS <state> <values>`.
    pub fn summary(&self) -> String {
        self.summary_of(self.verdicts.iter())
    }

    /// One line per verdict, a summary per mover, then the overall summary.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# {} conjecture, {} states examined ({}), {} applicable\n",
            self.conjecture,
            self.states_examined,
            if self.exhaustive { "exhaustive" } else { "sampled" },
            self.verdicts.len()
        );
        for v in &self.verdicts {
            out.push_str(&format!("{v}\n"));
        }
        for mover in [Player::Alice, Player::Bob] {
            let s = self.summary_of(self.verdicts.iter().filter(|v| v.mover == mover));
            out.push_str(&format!("# {mover}: {s}\n"));
        }
        out.push_str(&self.summary());
        out.push('\n');
        out
    }
}

/// Every state reachable by legal play from the full cake, largest first.
/// The empty state is left out.
pub fn reachable_states<W: WeightScalar>(board: &Board<W>) -> Vec<SubsetMask> {
    let mut out = Vec::new();
    let mut layer: BTreeSet<u64> = BTreeSet::from([board.full().0]);
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for &bits in &layer {
            let mask = SubsetMask(bits);
            out.push(mask);
            for m in board.extremal(mask).iter() {
                let child = mask.without(m);
                if !child.is_empty() {
                    next.insert(child.0);
                }
            }
        }
        layer = next;
    }
    out
}

/// States visited by `samples` seeded uniform playouts, largest first.
pub fn sampled_states<W: WeightScalar>(board: &Board<W>, samples: usize, seed: u64) -> Vec<SubsetMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..samples {
        let mut mask = board.full();
        while !mask.is_empty() {
            if seen.insert(mask.0) {
                out.push(mask);
            }
            let ex = board.extremal(mask).to_vec();
            mask = mask.without(ex[rng.gen_range(0..ex.len())]);
        }
    }
    out.sort_by_key(|m| (std::cmp::Reverse(m.len()), m.0));
    out
}

/// Non-revealing moves at `mask`: extremal cherries whose removal leaves no
/// extremal red.
pub fn non_revealing<W: WeightScalar>(board: &Board<W>, mask: SubsetMask) -> SubsetMask {
    let ex = board.extremal(mask);
    SubsetMask::from_ids(ex.iter().filter(|&c| {
        let child = mask.without(c);
        board.extremal(child).intersect(board.red()).is_empty()
    }))
}

/// Remaining reds outside the convex hull of the remaining greens.
pub fn exterior_reds<W: WeightScalar>(board: &Board<W>, mask: SubsetMask) -> SubsetMask {
    let greens = mask.intersect(board.green());
    SubsetMask::from_ids(
        mask.intersect(board.red())
            .iter()
            .filter(|&r| !board.in_hull(r, greens)),
    )
}

fn verdict<W: WeightScalar>(
    solver: &Solver<W>,
    conjecture: Conjecture,
    mask: SubsetMask,
) -> Result<Option<StateVerdict<W>>, SolverError> {
    let board = solver.board();
    let ex_red = board.extremal(mask).intersect(board.red());
    let candidates = match conjecture {
        Conjecture::Greedy | Conjecture::StrongGreedy => {
            if ex_red.is_empty() {
                return Ok(None);
            }
            ex_red
        }
        Conjecture::NoReveal => {
            if !ex_red.is_empty() {
                return Ok(None);
            }
            let n = non_revealing(board, mask);
            if n.is_empty() {
                return Ok(None);
            }
            n
        }
    };
    let state = GameState::at_unchecked(board, mask, solver.mover(mask));
    let move_values = solver.move_values(&state)?;
    let record = solver.record(&state)?;
    let holds = match conjecture {
        Conjecture::Greedy | Conjecture::NoReveal => {
            !record.optimal_moves.intersect(candidates).is_empty()
        }
        Conjecture::StrongGreedy => candidates.is_subset_of(record.optimal_moves),
    };
    Ok(Some(StateVerdict {
        state: mask,
        mover: state.mover(),
        holds,
        value: record.value,
        optimal: record.optimal_moves,
        candidates,
        move_values,
    }))
}

/// The states a checker examines: all reachable ones for small cakes,
/// sampled playouts otherwise.
pub fn states_to_check<W: WeightScalar>(board: &Board<W>, opts: &CheckOptions) -> (Vec<SubsetMask>, bool) {
    if board.len() <= EXHAUSTIVE_LIMIT {
        (reachable_states(board), true)
    } else {
        (sampled_states(board, opts.samples, opts.seed), false)
    }
}

/// Runs one checker over a board, reusing `solver` for all states.
pub fn check_with<W: WeightScalar>(
    solver: &Solver<W>,
    conjecture: Conjecture,
    opts: &CheckOptions,
) -> Result<ConjectureReport<W>, ConjectureError> {
    let board = solver.board();
    if board.len() > opts.max_cherries {
        return Err(ConjectureError::TooLarge(board.len(), opts.max_cherries));
    }
    let (states, exhaustive) = states_to_check(board, opts);
    let verdicts: Result<Vec<Option<StateVerdict<W>>>, SolverError> = states
        .par_iter()
        .map(|&m| verdict(solver, conjecture, m))
        .collect();
    Ok(ConjectureReport {
        conjecture,
        exhaustive,
        states_examined: states.len(),
        verdicts: verdicts?.into_iter().flatten().collect(),
    })
}

pub fn check<W: WeightScalar>(
    board: Arc<Board<W>>,
    conjecture: Conjecture,
    opts: &CheckOptions,
) -> Result<ConjectureReport<W>, ConjectureError> {
    check_with(&Solver::new(board), conjecture, opts)
}

pub fn check_greedy_move<W: WeightScalar>(board: Arc<Board<W>>) -> Result<ConjectureReport<W>, ConjectureError> {
    check(board, Conjecture::Greedy, &CheckOptions::default())
}

pub fn check_strong_greedy<W: WeightScalar>(board: Arc<Board<W>>) -> Result<ConjectureReport<W>, ConjectureError> {
    check(board, Conjecture::StrongGreedy, &CheckOptions::default())
}

pub fn check_no_reveal<W: WeightScalar>(board: Arc<Board<W>>) -> Result<ConjectureReport<W>, ConjectureError> {
    check(board, Conjecture::NoReveal, &CheckOptions::default())
}

/// Re-derives a verdict's move values with a fresh solver, playing each move
/// through the referee. True iff every value matches.
pub fn recertify<W: WeightScalar>(board: Arc<Board<W>>, v: &StateVerdict<W>) -> bool {
    let solver = Solver::for_state(
        board.clone(),
        &GameState::at_unchecked(&board, v.state, v.mover),
    );
    let state = GameState::at_unchecked(&board, v.state, v.mover);
    let Ok(legal) = state.legal_moves() else {
        return false;
    };
    if SubsetMask::from_ids(v.move_values.iter().map(|(m, _)| *m)) != legal {
        return false;
    }
    v.move_values.iter().all(|(m, claimed)| {
        let Ok(next) = state.apply_move(*m) else {
            return false;
        };
        let Ok(child) = solver.value(next.remaining()) else {
            return false;
        };
        let got = match v.mover {
            Player::Alice => child,
            Player::Bob => board.weight(*m).clone() + child,
        };
        got == *claimed
    })
}

/// Per-cake consistency of the checkers: if the greedy-move checker holds on
/// every reachable state, so must the strong checker, and strong must imply
/// greedy pointwise. Returns a description of the first inconsistency.
pub fn implication_consistent<W: WeightScalar>(board: Arc<Board<W>>) -> Result<Option<String>, ConjectureError> {
    let solver = Solver::new(board);
    let opts = CheckOptions {
        max_cherries: EXHAUSTIVE_LIMIT,
        ..CheckOptions::default()
    };
    let greedy = check_with(&solver, Conjecture::Greedy, &opts)?;
    let strong = check_with(&solver, Conjecture::StrongGreedy, &opts)?;
    if greedy.verdicts.len() != strong.verdicts.len() {
        return Ok(Some("greedy and strong apply at different states".into()));
    }
    for (g, s) in greedy.verdicts.iter().zip(&strong.verdicts) {
        if g.state != s.state {
            return Ok(Some("verdicts are misaligned".into()));
        }
        if s.holds && !g.holds {
            return Ok(Some(format!("strong holds but greedy fails at {}", s.state)));
        }
    }
    if greedy.holds() && !strong.holds() {
        let f = strong.first_failure().expect("some failure");
        return Ok(Some(format!("greedy holds everywhere but strong fails at {f}")));
    }
    Ok(None)
}

/// Random cakes with `min_n..=max_n` cherries and every red count, with
/// order-equivalent duplicates removed via canonical keys.
pub fn small_cake_family<T: CoordScalar, W: WeightScalar>(
    seed: u64,
    per_size: usize,
    min_n: usize,
    max_n: usize,
) -> Vec<Cake<T, W>> {
    assert!(max_n <= CANONICAL_KEY_LIMIT);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys = HashSet::new();
    let mut out = Vec::new();
    for n in min_n..=max_n {
        for i in 0..per_size {
            let reds = i % (n + 1);
            let cake: Cake<T, W> = sample_cake(&mut rng, n, reds, 40);
            if keys.insert(canonical_key(&cake).expect("small cake")) {
                out.push(cake);
            }
        }
    }
    out
}

/// A certified no-reveal counterexample at the root.
#[derive(Debug, Clone)]
pub struct NoRevealWitness<T, W> {
    pub cake: Cake<T, W>,
    /// Index of the accepted candidate within the search.
    pub attempt: usize,
    /// The unique non-revealing first move.
    pub non_revealing: usize,
    /// Total weight of the cake.
    pub total: W,
    /// M(C): Bob's gain under optimal play.
    pub minimax: W,
    /// Bob's gain after Alice plays the non-revealing move.
    pub after_non_revealing: W,
    /// An optimal first move for Alice.
    pub best_move: usize,
    /// Bob's optimal reply to the non-revealing move.
    pub bob_reply: usize,
    /// M of the cake after the non-revealing move and Bob's reply.
    pub after_reply: W,
}

impl<T, W: WeightScalar> NoRevealWitness<T, W> {
    /// Alice's total when she starts with the non-revealing move.
    pub fn alice_non_revealing(&self) -> W {
        self.total.clone() - self.after_non_revealing.clone()
    }

    /// Alice's optimal total.
    pub fn alice_optimal(&self) -> W {
        self.total.clone() - self.minimax.clone()
    }
}

/// Searches `budget` random cakes (10 cherries, 4 red, coordinates in
/// `[0, 1000]^2`) for a root with no extremal red and a unique
/// non-revealing move that is strictly worse for Alice than her optimum.
/// Deterministic in `seed`; candidates are checked in parallel and the
/// lowest successful index wins.
pub fn search_no_reveal_counterexample<T: CoordScalar, W: WeightScalar>(
    seed: u64,
    budget: usize,
) -> Option<NoRevealWitness<T, W>> {
    (0..budget).into_par_iter().find_map_first(|attempt| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let cake: Cake<T, W> = sample_cake(&mut rng, 10, 4, 1000);
        let board = cake.board().clone();
        let full = board.full();
        if !board.extremal(full).intersect(board.red()).is_empty() {
            return None;
        }
        let n = non_revealing(&board, full);
        if n.len() != 1 {
            return None;
        }
        let c = n.first()?;
        let solver = Solver::new(board.clone());
        let start = GameState::new_game(&board);
        let record = solver.record(&start).ok()?;
        let after_c = solver.value(full.without(c)).ok()?;
        if after_c <= record.value {
            return None;
        }
        let reply_state = start.apply_move(c).ok()?;
        let reply = solver.record(&reply_state).ok()?;
        let bob_reply = reply.optimal_moves.first()?;
        let after_reply = solver.value(full.without(c).without(bob_reply)).ok()?;
        Some(NoRevealWitness {
            total: board.total_weight(full),
            minimax: record.value,
            after_non_revealing: after_c,
            best_move: record.optimal_moves.first()?,
            non_revealing: c,
            bob_reply,
            after_reply,
            attempt,
            cake,
        })
    })
}
