//! Exact game values by memoized search over subset masks.
//!
//! Values are Bob's gain from the given state to the end of the game. On
//! Alice's turn the value is the minimum over her moves, on Bob's turn the
//! maximum of `W(m) + value(child)`.

use std::ops::Mul;
use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::cake::{Board, CakeError, SubsetMask, WeightScalar};
use crate::engine::{consult, EngineError, GameState, Player, Tactic, TacticError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("state {state} has {mover} to move but the solver expects {expected}")]
    ParityMismatch {
        state: SubsetMask,
        mover: Player,
        expected: Player,
    },
    #[error("the state is empty")]
    EmptyState,
    #[error(transparent)]
    Cake(#[from] CakeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invariant violated: {0}")]
    Visitor(String),
}

/// A value together with every first move that achieves it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimaxRecord<W> {
    pub value: W,
    pub optimal_moves: SubsetMask,
}

/// Minimax over one board. The memo key is the mask alone; the mover at a
/// mask is Alice iff its popcount has the solver's parity.
#[derive(Debug)]
pub struct Solver<W> {
    board: Arc<Board<W>>,
    alice_parity: usize,
    memo: DashMap<u64, W>,
}

impl<W: WeightScalar> Solver<W> {
    /// Alice moves at the full cake.
    pub fn new(board: Arc<Board<W>>) -> Self {
        let parity = board.len() % 2;
        Self::with_alice_parity(board, parity)
    }

    pub fn with_alice_parity(board: Arc<Board<W>>, alice_parity: usize) -> Self {
        Solver {
            board,
            alice_parity: alice_parity % 2,
            memo: DashMap::new(),
        }
    }

    /// A solver whose parity convention matches `state`.
    pub fn for_state(board: Arc<Board<W>>, state: &GameState<'_, W>) -> Self {
        let len = state.remaining().len();
        let parity = match state.mover() {
            Player::Alice => len % 2,
            Player::Bob => (len + 1) % 2,
        };
        Self::with_alice_parity(board, parity)
    }

    pub fn board(&self) -> &Arc<Board<W>> {
        &self.board
    }

    pub fn mover(&self, mask: SubsetMask) -> Player {
        if mask.len() % 2 == self.alice_parity {
            Player::Alice
        } else {
            Player::Bob
        }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// M(C): the value of the full cake.
    pub fn minimax(&self) -> W {
        self.value_parallel(self.board.full())
    }

    /// Value at `mask` with the parity-derived mover.
    pub fn value(&self, mask: SubsetMask) -> Result<W, SolverError> {
        self.board.check_mask(mask)?;
        Ok(self.value_parallel(mask))
    }

    fn value_parallel(&self, mask: SubsetMask) -> W {
        if let Some(v) = self.memo.get(&mask.0) {
            return v.clone();
        }
        if mask.is_empty() {
            return W::zero();
        }
        let moves = self.board.extremal(mask).to_vec();
        let outcomes: Vec<W> = moves
            .par_iter()
            .map(|&m| self.outcome(mask, m))
            .collect();
        let v = self.best(mask, outcomes.into_iter());
        self.memo.insert(mask.0, v.clone());
        v
    }

    fn value_serial(&self, mask: SubsetMask) -> W {
        if mask.is_empty() {
            return W::zero();
        }
        if let Some(v) = self.memo.get(&mask.0) {
            return v.clone();
        }
        let outcomes = self
            .board
            .extremal(mask)
            .iter()
            .map(|m| self.outcome(mask, m))
            .collect::<Vec<_>>();
        let v = self.best(mask, outcomes.into_iter());
        self.memo.insert(mask.0, v.clone());
        v
    }

    /// The value reached by playing `m` at `mask`, from the mover's ledger:
    /// the child's value, plus `W(m)` when Bob moves.
    fn outcome(&self, mask: SubsetMask, m: usize) -> W {
        let child = self.value_serial(mask.without(m));
        match self.mover(mask) {
            Player::Alice => child,
            Player::Bob => self.board.weight(m).clone() + child,
        }
    }

    fn best(&self, mask: SubsetMask, outcomes: impl Iterator<Item = W>) -> W {
        let v = match self.mover(mask) {
            Player::Alice => outcomes.min(),
            Player::Bob => outcomes.max(),
        };
        v.expect("nonempty states have moves")
    }

    /// Every legal move with the value it leads to.
    pub fn move_values(&self, state: &GameState<'_, W>) -> Result<Vec<(usize, W)>, SolverError> {
        self.check_state(state)?;
        let mask = state.remaining();
        let moves = self.board.extremal(mask).to_vec();
        Ok(moves
            .par_iter()
            .map(|&m| (m, self.outcome(mask, m)))
            .collect())
    }

    /// The value at `state` and the set of moves achieving it.
    pub fn record(&self, state: &GameState<'_, W>) -> Result<MinimaxRecord<W>, SolverError> {
        let values = self.move_values(state)?;
        let value = self.best(state.remaining(), values.iter().map(|(_, v)| v.clone()));
        let optimal_moves =
            SubsetMask::from_ids(values.iter().filter(|(_, v)| *v == value).map(|(m, _)| *m));
        Ok(MinimaxRecord {
            value,
            optimal_moves,
        })
    }

    pub fn record_at(&self, mask: SubsetMask) -> Result<MinimaxRecord<W>, SolverError> {
        self.board.check_mask(mask)?;
        let state = GameState::at_unchecked(&self.board, mask, self.mover(mask));
        self.record(&state)
    }

    fn check_state(&self, state: &GameState<'_, W>) -> Result<(), SolverError> {
        self.board.check_mask(state.remaining())?;
        if state.is_over() {
            return Err(SolverError::EmptyState);
        }
        let expected = self.mover(state.remaining());
        if state.mover() != expected {
            return Err(SolverError::ParityMismatch {
                state: state.remaining(),
                mover: state.mover(),
                expected,
            });
        }
        Ok(())
    }
}

/// Memo-free minimax, used as an oracle for the solver.
pub fn brute_force<W: WeightScalar>(board: &Board<W>, mask: SubsetMask, mover: Player) -> W {
    if mask.is_empty() {
        return W::zero();
    }
    let outcomes = board.extremal(mask).iter().map(|m| {
        let child = brute_force(board, mask.without(m), mover.other());
        match mover {
            Player::Alice => child,
            Player::Bob => board.weight(m).clone() + child,
        }
    });
    match mover {
        Player::Alice => outcomes.min(),
        Player::Bob => outcomes.max(),
    }
    .expect("nonempty")
}

/// Called on every distinct Alice-turn state reached during a fixed-Bob search.
pub type Visitor<'v, W> = dyn Fn(&GameState<'_, W>) -> Result<(), String> + Send + Sync + 'v;

/// Bob's worst score over all Alice strategies when Bob plays `bob` from
/// `start`. Alice branches, Bob's reply is forced and refereed.
pub fn guarantee_with_fixed_bob<W: WeightScalar>(
    start: &GameState<'_, W>,
    bob: &dyn Tactic<W>,
    visitor: Option<&Visitor<'_, W>>,
) -> Result<W, SolverError> {
    let search = FixedBob {
        bob,
        visitor,
        memo: DashMap::new(),
    };
    match start.mover() {
        Player::Alice => search.alice(start, true),
        Player::Bob => search.bob(start),
    }
}

struct FixedBob<'t, 'v, W> {
    bob: &'t dyn Tactic<W>,
    visitor: Option<&'t Visitor<'v, W>>,
    memo: DashMap<u64, W>,
}

impl<W: WeightScalar> FixedBob<'_, '_, W> {
    fn alice(&self, state: &GameState<'_, W>, parallel: bool) -> Result<W, SolverError> {
        if state.is_over() {
            return Ok(W::zero());
        }
        if let Some(v) = self.memo.get(&state.remaining().0) {
            return Ok(v.clone());
        }
        if let Some(visit) = self.visitor {
            visit(state).map_err(SolverError::Visitor)?;
        }
        let moves = state.legal_moves()?.to_vec();
        let branch = |&m: &usize| -> Result<W, SolverError> {
            let next = state.apply_move(m)?;
            self.bob(&next)
        };
        let values: Result<Vec<W>, SolverError> = if parallel {
            moves.par_iter().map(branch).collect()
        } else {
            moves.iter().map(branch).collect()
        };
        let v = values?.into_iter().min().expect("nonempty");
        self.memo.insert(state.remaining().0, v.clone());
        Ok(v)
    }

    fn bob(&self, state: &GameState<'_, W>) -> Result<W, SolverError> {
        if state.is_over() {
            return Ok(W::zero());
        }
        let m = consult(self.bob, state)?;
        let next = state.apply_move(m)?;
        Ok(state.board().weight(m).clone() + self.alice(&next, false)?)
    }
}

/// Plays a lowest-id optimal move. Shares one memo across the whole game.
#[derive(Debug)]
pub struct OptimalTactic<W> {
    solver: Solver<W>,
}

impl<W: WeightScalar> OptimalTactic<W> {
    pub fn new(board: Arc<Board<W>>) -> Self {
        OptimalTactic {
            solver: Solver::new(board),
        }
    }
}

impl<W: WeightScalar> Tactic<W> for OptimalTactic<W> {
    fn name(&self) -> String {
        "optimal".into()
    }

    fn choose(&self, state: &GameState<'_, W>) -> Result<usize, TacticError> {
        if state.is_over() {
            return Err(TacticError::EmptyState);
        }
        let record = self.solver.record(state).map_err(|e| TacticError::Failed {
            tactic: "optimal".into(),
            message: e.to_string(),
        })?;
        record.optimal_moves.first().ok_or(TacticError::EmptyState)
    }
}

/// Best `M(C) / R(C)` found by [`ratio_scan`].
#[derive(Debug, Clone)]
pub struct RatioWitness<C, W> {
    pub cake: C,
    pub minimax: W,
    pub reds: W,
}

/// Solves up to `budget` generated cakes and keeps the one maximizing
/// `M(C) / R(C)`, where `R(C)` is the total weight. Cakes with `R(C) = 0`
/// are skipped.
pub fn ratio_scan<C, W, I>(
    generator: I,
    budget: usize,
    board_of: impl Fn(&C) -> Arc<Board<W>>,
) -> Option<RatioWitness<C, W>>
where
    W: WeightScalar + Mul<Output = W>,
    I: IntoIterator<Item = C>,
{
    let mut best: Option<RatioWitness<C, W>> = None;
    for cake in generator.into_iter().take(budget) {
        let board = board_of(&cake);
        let reds = board.total_weight(board.full());
        if reds.is_zero() {
            continue;
        }
        let minimax = Solver::new(board).minimax();
        let better = best.as_ref().map_or(true, |b| {
            minimax.clone() * b.reds.clone() > b.minimax.clone() * reds.clone()
        });
        if better {
            best = Some(RatioWitness {
                cake,
                minimax,
                reds,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cake::{sample_cake, Cake};
    use crate::constructions::{build_moon, build_sun, parity_flip, DEFAULT_SCALE};
    use crate::tactics::{CarefulGreedy, LowestId, RandomTactic, SimpleGreedy};
    use num_bigint::BigInt;
    use num_rational::Rational64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type C = Cake<BigInt, Rational64>;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn moon(n: usize) -> C {
        build_moon(n, DEFAULT_SCALE).unwrap().0
    }

    #[test]
    fn single_red_is_worth_nothing_to_bob() {
        let cake = C::from_coords(&[(0, 0, true)]).unwrap();
        assert_eq!(Solver::new(cake.board().clone()).minimax(), r(0));
    }

    #[test]
    fn moon_values() {
        assert_eq!(Solver::new(moon(2).board().clone()).minimax(), r(1));
        assert_eq!(Solver::new(moon(6).board().clone()).minimax(), r(5));
    }

    #[test]
    fn three_cherries_one_red() {
        let cake = C::from_coords(&[(0, 0, false), (10, 1, true), (3, 9, false)]).unwrap();
        let solver = Solver::new(cake.board().clone());
        let rec = solver.record(&GameState::new_game(cake.board())).unwrap();
        assert_eq!(rec.value, r(0));
        assert_eq!(rec.optimal_moves, SubsetMask::from_ids([1]));
    }

    #[test]
    fn all_green_every_move_optimal() {
        let cake = C::from_coords(&[(0, 0, false), (10, 1, false), (3, 9, false), (4, 4, false)])
            .unwrap();
        let solver = Solver::new(cake.board().clone());
        let s = GameState::new_game(cake.board());
        let rec = solver.record(&s).unwrap();
        assert_eq!(rec.value, r(0));
        assert_eq!(rec.optimal_moves, s.legal_moves().unwrap());
    }

    #[test]
    fn moon_bob_answers_with_revealed_red() {
        for n in 2..=5 {
            let (cake, ann) = build_moon::<BigInt, Rational64>(n, DEFAULT_SCALE).unwrap();
            let solver = Solver::new(cake.board().clone());
            for &g in &ann.greens {
                let s = GameState::new_game(cake.board()).apply_move(g).unwrap();
                let revealed = s.legal_moves().unwrap().intersect(cake.board().red());
                let rec = solver.record(&s).unwrap();
                assert!(!rec.optimal_moves.intersect(revealed).is_empty());
            }
        }
    }

    #[test]
    fn parity_mismatch_is_reported() {
        let m = moon(3);
        let solver = Solver::new(m.board().clone());
        let s = GameState::at_unchecked(m.board(), m.full(), Player::Bob);
        assert!(matches!(solver.record(&s), Err(SolverError::ParityMismatch { .. })));
        let other = Solver::for_state(m.board().clone(), &s);
        assert!(other.record(&s).is_ok());
    }

    #[test]
    fn simple_greedy_on_moons() {
        for n in 2..=5 {
            let m = moon(n);
            let g = guarantee_with_fixed_bob(&GameState::new_game(m.board()), &SimpleGreedy, None)
                .unwrap();
            assert_eq!(g, r(n as i64 - 1));
        }
    }

    #[test]
    fn all_green_guarantee_is_zero() {
        let cake = C::from_coords(&[(0, 0, false), (10, 1, false), (3, 9, false), (4, 4, false)])
            .unwrap();
        let g = guarantee_with_fixed_bob(&GameState::new_game(cake.board()), &LowestId, None);
        assert_eq!(g.unwrap(), r(0));
    }

    #[test]
    fn careful_greedy_on_sun_three() {
        let (cake, ann) = build_sun::<BigInt, Rational64>(3, DEFAULT_SCALE).unwrap();
        let cg = CarefulGreedy::new(ann);
        let g = guarantee_with_fixed_bob(&GameState::new_game(cake.board()), &cg, None).unwrap();
        assert!(g >= r(4));
        assert!(g <= Solver::new(cake.board().clone()).minimax());
    }

    #[test]
    fn visitor_errors_stop_the_search() {
        let m = moon(3);
        let visit = |s: &GameState<'_, Rational64>| {
            if s.remaining().len() < 4 {
                Err(format!("reached {}", s.remaining()))
            } else {
                Ok(())
            }
        };
        let res = guarantee_with_fixed_bob(&GameState::new_game(m.board()), &SimpleGreedy, Some(&visit));
        assert!(matches!(res, Err(SolverError::Visitor(_))));
    }

    #[test]
    fn ratio_scan_examples() {
        let sun3 = build_sun::<BigInt, Rational64>(3, DEFAULT_SCALE).unwrap().0;
        let best = ratio_scan(vec![sun3], 1, |c: &C| c.board().clone()).unwrap();
        assert!(best.minimax * r(3) >= best.reds * r(2));
        let flipped: Vec<C> = (2..=4).map(|n| parity_flip(&moon(n))).collect();
        let best = ratio_scan(flipped, 3, |c: &C| c.board().clone()).unwrap();
        assert_eq!(best.minimax, r(0));
        assert!(ratio_scan(Vec::<C>::new(), 0, |c: &C| c.board().clone()).is_none());
    }

    fn random_cake(seed: u64, n: usize) -> C {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reds = (seed as usize) % (n + 1);
        sample_cake(&mut rng, n, reds, 60)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solver_matches_brute_force(seed in any::<u64>(), n in 1usize..=7) {
            let cake = random_cake(seed, n);
            let solver = Solver::new(cake.board().clone());
            prop_assert_eq!(solver.minimax(), brute_force(cake.board(), cake.full(), Player::Alice));
        }

        #[test]
        fn value_bounds_and_fixed_bob(seed in any::<u64>(), n in 1usize..=9) {
            let cake = random_cake(seed, n);
            let m = Solver::new(cake.board().clone()).minimax();
            prop_assert!(m >= r(0));
            prop_assert!(m <= r(cake.red_count(cake.full()).unwrap() as i64));
            let start = GameState::new_game(cake.board());
            for bob in [&SimpleGreedy as &dyn Tactic<Rational64>, &RandomTactic::new(seed)] {
                prop_assert!(guarantee_with_fixed_bob(&start, bob, None).unwrap() <= m.clone());
            }
        }

        #[test]
        fn optimal_moves_reproduce_value(seed in any::<u64>(), n in 2usize..=9) {
            let cake = random_cake(seed, n);
            let board = cake.board();
            let solver = Solver::new(board.clone());
            let s = GameState::new_game(board);
            let rec = solver.record(&s).unwrap();
            for m in rec.optimal_moves.iter() {
                let child = solver.value(s.remaining().without(m)).unwrap();
                prop_assert_eq!(child, rec.value.clone());
                let next = s.apply_move(m).unwrap();
                let crec = solver.record(&next).unwrap();
                for b in crec.optimal_moves.iter() {
                    let grand = solver.value(next.remaining().without(b)).unwrap();
                    prop_assert_eq!(board.weight(b).clone() + grand, crec.value.clone());
                }
            }
        }

        #[test]
        fn optimal_tactic_realizes_minimax(seed in any::<u64>(), n in 1usize..=9) {
            let cake = random_cake(seed, n);
            let board = cake.board();
            let m = Solver::new(board.clone()).minimax();
            let opt = OptimalTactic::new(board.clone());
            let rnd = RandomTactic::new(seed);
            let bob = |a: &dyn Tactic<Rational64>, b: &dyn Tactic<Rational64>| {
                crate::engine::scores(board, &crate::engine::simulate(board, a, b).unwrap()).unwrap().1
            };
            prop_assert_eq!(bob(&opt, &opt), m.clone());
            prop_assert!(bob(&opt, &rnd) <= m.clone());
            prop_assert!(bob(&rnd, &opt) >= m);
        }
    }
}
