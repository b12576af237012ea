//! Move policies and the sun-specific state instrumentation.
//!
//! Wherever a policy may pick "any" cherry from a set, it takes the lowest id.

use std::fmt::{self, Display};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cake::{Board, Cake, SubsetMask, WeightScalar};
use crate::engine::{EngineError, GameState, Player, Tactic, TacticError};
use crate::geom::{CoordScalar, HalfPlane, Point, Side};
use crate::solver::OptimalTactic;

/// Takes the lowest-id extremal cherry.
#[derive(Debug, Clone, Copy, Default)]
pub struct LowestId;

impl<W: WeightScalar> Tactic<W> for LowestId {
    fn name(&self) -> String {
        "lowest-id".into()
    }

    fn choose(&self, state: &GameState<'_, W>) -> Result<usize, TacticError> {
        let ex = state.legal_moves().map_err(|_| TacticError::EmptyState)?;
        Ok(ex.first().expect("nonempty states have extremal cherries"))
    }
}

/// Takes an extremal red if there is one, otherwise any extremal cherry.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleGreedy;

impl<W: WeightScalar> Tactic<W> for SimpleGreedy {
    fn name(&self) -> String {
        "simple-greedy".into()
    }

    fn choose(&self, state: &GameState<'_, W>) -> Result<usize, TacticError> {
        let ex = state.legal_moves().map_err(|_| TacticError::EmptyState)?;
        let reds = ex.intersect(state.board().red());
        Ok(reds.first().or_else(|| ex.first()).expect("nonempty"))
    }
}

/// Uniform choice among legal moves. The draw depends only on the seed and
/// the position, so the policy is deterministic.
#[derive(Debug, Clone, Copy)]
pub struct RandomTactic {
    seed: u64,
}

impl RandomTactic {
    pub fn new(seed: u64) -> Self {
        RandomTactic { seed }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl<W: WeightScalar> Tactic<W> for RandomTactic {
    fn name(&self) -> String {
        format!("random:{}", self.seed)
    }

    fn choose(&self, state: &GameState<'_, W>) -> Result<usize, TacticError> {
        let ex = state.legal_moves().map_err(|_| TacticError::EmptyState)?;
        let mut rng =
            ChaCha8Rng::seed_from_u64(splitmix(self.seed ^ splitmix(state.remaining().bits())));
        let pick = rng.gen_range(0..ex.len());
        Ok(ex.iter().nth(pick).expect("in range"))
    }
}

/// Beam structure of a sun: the center and `k` beams of four ids each,
/// listed outermost first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SunAnnotation {
    pub k: usize,
    pub center: usize,
    pub beams: Vec<[usize; 4]>,
}

impl SunAnnotation {
    pub fn beam_mask(&self, beam: usize) -> SubsetMask {
        SubsetMask::from_ids(self.beams[beam])
    }

    /// Checks the weight pattern and that beams plus center partition `0..n`.
    pub fn check<W: WeightScalar>(&self, board: &Board<W>) -> Result<(), String> {
        if self.k < 3 || self.k % 2 == 0 {
            return Err(format!("k = {} must be odd and at least 3", self.k));
        }
        if self.beams.len() != self.k {
            return Err(format!("expected {} beams, found {}", self.k, self.beams.len()));
        }
        let n = board.len();
        let mut seen = vec![false; n];
        for &id in self.beams.iter().flatten().chain(std::iter::once(&self.center)) {
            if id >= n || seen[id] {
                return Err(format!("id {id} is out of range or repeated"));
            }
            seen[id] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err("beams and center do not cover the cake".into());
        }
        if !board.weight(self.center).is_zero() {
            return Err("the center must be green".into());
        }
        for (b, beam) in self.beams.iter().enumerate() {
            let pattern: Vec<bool> = beam.iter().map(|&i| board.is_red(i)).collect();
            let greens_ok = board.weight(beam[0]).is_zero() && board.weight(beam[2]).is_zero();
            if pattern != [false, true, false, true] || !greens_ok {
                return Err(format!("beam {b} is not [green, red, green, red]"));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("sun {}\ncenter {}\n", self.k, self.center);
        for beam in &self.beams {
            out.push_str(&format!("beam {} {} {} {}\n", beam[0], beam[1], beam[2], beam[3]));
        }
        out
    }
}

/// Remaining cherries of one beam, split by color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamStatus {
    pub reds: SubsetMask,
    pub greens: SubsetMask,
}

pub fn beam_status<W: WeightScalar>(
    board: &Board<W>,
    remaining: SubsetMask,
    ann: &SunAnnotation,
    beam: usize,
) -> BeamStatus {
    let on = ann.beam_mask(beam).intersect(remaining);
    BeamStatus {
        reds: on.intersect(board.red()),
        greens: on.intersect(board.green()),
    }
}

/// The beam-based tactic for suns; refuses to improvise when it runs out of
/// instructions.
#[derive(Debug, Clone)]
pub struct CarefulGreedy {
    ann: SunAnnotation,
}

impl CarefulGreedy {
    pub fn new(ann: SunAnnotation) -> Self {
        CarefulGreedy { ann }
    }

    pub fn annotation(&self) -> &SunAnnotation {
        &self.ann
    }
}

impl<W: WeightScalar> Tactic<W> for CarefulGreedy {
    fn name(&self) -> String {
        "careful-greedy".into()
    }

    fn choose(&self, state: &GameState<'_, W>) -> Result<usize, TacticError> {
        let board = state.board();
        let remaining = state.remaining();
        let ex = state.legal_moves().map_err(|_| TacticError::EmptyState)?;
        let ex_red = ex.intersect(board.red());
        let beams = 0..self.ann.k;

        if !ex_red.is_empty() {
            let on_beam = |b: usize| ex_red.intersect(self.ann.beam_mask(b));
            // An extremal red whose beam still hides a red.
            let hiding = beams.clone().fold(SubsetMask::EMPTY, |acc, b| {
                let reds = beam_status(board, remaining, &self.ann, b).reds;
                if !on_beam(b).is_empty() && !reds.minus(ex).is_empty() {
                    acc.union(on_beam(b))
                } else {
                    acc
                }
            });
            if let Some(id) = hiding.first() {
                return Ok(id);
            }
            let single = beams.fold(SubsetMask::EMPTY, |acc, b| {
                if on_beam(b).len() == 1 {
                    acc.union(on_beam(b))
                } else {
                    acc
                }
            });
            return Ok(single.first().or_else(|| ex_red.first()).expect("nonempty"));
        }

        let green_only = beams.fold(SubsetMask::EMPTY, |acc, b| {
            let status = beam_status(board, remaining, &self.ann, b);
            if status.reds.is_empty() && !status.greens.is_empty() {
                acc.union(status.greens.intersect(ex))
            } else {
                acc
            }
        });
        green_only
            .first()
            .ok_or(TacticError::CarefulGreedyFail(remaining))
    }
}

/// Exactly two reds remain on the beam and exactly one of them is extremal.
pub fn is_semi_exposed<W: WeightScalar>(
    state: &GameState<'_, W>,
    ann: &SunAnnotation,
    beam: usize,
) -> bool {
    let reds = beam_status(state.board(), state.remaining(), ann, beam).reds;
    if reds.len() != 2 {
        return false;
    }
    let ex = state.board().extremal(state.remaining());
    reds.intersect(ex).len() == 1
}

/// `(Sle, Tot)`: beams with exactly one, and with at least one, red in `set`.
pub fn sle_tot<W: WeightScalar>(
    board: &Board<W>,
    set: SubsetMask,
    ann: &SunAnnotation,
) -> (usize, usize) {
    (0..ann.k).fold((0, 0), |(sle, tot), b| {
        match beam_status(board, set, ann, b).reds.len() {
            0 => (sle, tot),
            1 => (sle + 1, tot + 1),
            _ => (sle, tot + 1),
        }
    })
}

/// The closed half-plane bounded by the line from `center` through `through`.
/// Each is a subset of the cherries; both sides include the line itself.
pub fn halfplane_sets<W: WeightScalar>(
    board: &Board<W>,
    center: usize,
    through: usize,
) -> (SubsetMask, SubsetMask) {
    let on_line = SubsetMask::from_ids([center, through]);
    let right = board.clockwise_of(center, through);
    let left = board.full().minus(right).minus(on_line);
    (left.union(on_line), right.union(on_line))
}

/// Whether some closed half-plane bounded by a line through `center` holds
/// all of `remaining`. If one exists, one can be rotated until its boundary
/// meets a remaining cherry, so only those lines are tried. Returns the
/// cherry the witness line passes through (or `None` inside `Some` when no
/// cherry other than the center remains) and the side.
pub fn bounding_line<W: WeightScalar>(
    board: &Board<W>,
    remaining: SubsetMask,
    center: usize,
) -> Option<(Option<usize>, Side)> {
    let others = remaining.without(center);
    if others.is_empty() {
        return Some((None, Side::LeftClosed));
    }
    others.iter().find_map(|c| {
        let (left, right) = halfplane_sets(board, center, c);
        if others.is_subset_of(left) {
            Some((Some(c), Side::LeftClosed))
        } else if others.is_subset_of(right) {
            Some((Some(c), Side::RightClosed))
        } else {
            None
        }
    })
}

/// A witness half-plane through the center holding every remaining cherry.
pub fn has_bounding_halfplane<T: CoordScalar, W: WeightScalar>(
    cake: &Cake<T, W>,
    remaining: SubsetMask,
    ann: &SunAnnotation,
) -> Option<HalfPlane<T>> {
    let (through, side) = bounding_line(cake.board(), remaining, ann.center)?;
    let anchor = cake.point(ann.center).clone();
    match through {
        Some(c) => HalfPlane::through(&anchor, cake.point(c), side),
        None => HalfPlane::new(anchor, Point::from_i64(1, 0), side),
    }
}

/// Largest `Tot(U ∩ set)` over closed half-planes `U` bounded by lines through
/// the center. The set in such a half-plane only changes when the boundary
/// sweeps over a cherry, and at that moment it contains both neighbouring
/// sets, so lines through the center and a cherry cover every case.
pub fn max_tot_over_halfplanes<W: WeightScalar>(
    board: &Board<W>,
    set: SubsetMask,
    ann: &SunAnnotation,
) -> usize {
    let mut best = 0;
    for c in board.full().without(ann.center).iter() {
        let (left, right) = halfplane_sets(board, ann.center, c);
        for side in [left, right] {
            best = best.max(sle_tot(board, side.intersect(set), ann).1);
        }
    }
    best
}

/// Which sun invariant a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LemmaKind {
    /// Before a bounding half-plane exists the center must not be extremal.
    CenterExtremal,
    /// Before a bounding half-plane exists each beam is full, empty, or
    /// exactly its two innermost cherries.
    BeamShape,
    /// No beam is semi-exposed on Alice's turn.
    SemiExposed,
    /// `R = 2 Tot - Sle` at the first Alice turn with a bounding half-plane.
    Identity,
}

impl Display for LemmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaKind::CenterExtremal => "center-extremal",
            LemmaKind::BeamShape => "beam-shape",
            LemmaKind::SemiExposed => "semi-exposed",
            LemmaKind::Identity => "identity",
        })
    }
}

/// A violated sun invariant observed at some Alice-turn state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaViolation {
    pub state: SubsetMask,
    pub kind: LemmaKind,
    pub what: String,
}

impl Display for LemmaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} at state {}", self.kind, self.what, self.state)
    }
}

/// What a checked sun game looked like.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SunTrace {
    pub alice_turns: usize,
    /// Number of Alice turns before a bounding half-plane existed.
    pub first_phase_turns: usize,
    /// `(R, Sle, Tot)` at the first Alice turn with a bounding half-plane.
    pub first_bounded: Option<(usize, usize, usize)>,
    pub violations: Vec<LemmaViolation>,
}

/// Invariants at one Alice-turn state, plus whether a bounding half-plane
/// exists there.
pub fn alice_turn_violations<W: WeightScalar>(
    state: &GameState<'_, W>,
    ann: &SunAnnotation,
) -> (bool, Vec<LemmaViolation>) {
    let board = state.board();
    let remaining = state.remaining();
    let mut out = Vec::new();
    let mut fail = |kind, what: String| {
        out.push(LemmaViolation {
            state: remaining,
            kind,
            what,
        })
    };
    for b in 0..ann.k {
        if is_semi_exposed(state, ann, b) {
            fail(LemmaKind::SemiExposed, format!("beam {b} is semi-exposed"));
        }
    }
    let bounded = bounding_line(board, remaining, ann.center).is_some();
    if !bounded {
        if board.extremal(remaining).contains(ann.center) {
            fail(LemmaKind::CenterExtremal, "center is extremal".into());
        }
        for (b, beam) in ann.beams.iter().enumerate() {
            let left = ann.beam_mask(b).intersect(remaining);
            let innermost = SubsetMask::from_ids([beam[2], beam[3]]);
            if !(left.is_empty() || left == ann.beam_mask(b) || left == innermost) {
                fail(LemmaKind::BeamShape, format!("beam {b} is cut down to {left}"));
            }
        }
    }
    (bounded, out)
}

/// Like [`alice_turn_violations`], failing on the first violation.
pub fn check_alice_turn<W: WeightScalar>(
    state: &GameState<'_, W>,
    ann: &SunAnnotation,
) -> Result<bool, LemmaViolation> {
    let (bounded, mut v) = alice_turn_violations(state, ann);
    if v.is_empty() {
        Ok(bounded)
    } else {
        Err(v.swap_remove(0))
    }
}

/// Replays a gameplay on an annotated sun, collecting every invariant
/// violation at Alice's turns, including the identity `R = 2 Tot - Sle` at
/// the first bounded Alice turn. Illegal moves are an error.
pub fn check_sun_gameplay<W: WeightScalar>(
    board: &Board<W>,
    ann: &SunAnnotation,
    moves: &[usize],
) -> Result<SunTrace, EngineError> {
    let mut trace = SunTrace::default();
    let mut state = GameState::new_game(board);
    let mut idx = 0;
    loop {
        if state.mover() == Player::Alice && !state.is_over() {
            trace.alice_turns += 1;
            let (bounded, violations) = alice_turn_violations(&state, ann);
            trace.violations.extend(violations);
            if !bounded {
                trace.first_phase_turns += 1;
            } else if trace.first_bounded.is_none() {
                let r = board.reds_in(state.remaining());
                let (sle, tot) = sle_tot(board, state.remaining(), ann);
                if r + sle != 2 * tot {
                    trace.violations.push(LemmaViolation {
                        state: state.remaining(),
                        kind: LemmaKind::Identity,
                        what: format!("R = {r}, Sle = {sle}, Tot = {tot}"),
                    });
                }
                trace.first_bounded = Some((r, sle, tot));
            }
        }
        let Some(&m) = moves.get(idx) else { break };
        state = state.apply_move(m)?;
        idx += 1;
    }
    Ok(trace)
}

/// Resolves a tactic name: `simple-greedy`, `careful-greedy`, `lowest-id`
/// or `random:<seed>`.
pub fn tactic_by_name<W: WeightScalar>(
    name: &str,
    sun: Option<&SunAnnotation>,
) -> Result<Box<dyn Tactic<W>>, TacticError> {
    match name {
        "simple-greedy" => Ok(Box::new(SimpleGreedy)),
        "lowest-id" => Ok(Box::new(LowestId)),
        "careful-greedy" => sun
            .map(|a| Box::new(CarefulGreedy::new(a.clone())) as Box<dyn Tactic<W>>)
            .ok_or_else(|| TacticError::MissingAnnotation(name.into())),
        other => other
            .strip_prefix("random:")
            .and_then(|s| s.parse::<u64>().ok())
            .map(|seed| Box::new(RandomTactic::new(seed)) as Box<dyn Tactic<W>>)
            .ok_or_else(|| TacticError::Unknown(other.into())),
    }
}

/// Like [`tactic_by_name`], but also accepts `optimal`, which needs the board.
pub fn resolve_tactic<W: WeightScalar>(
    name: &str,
    board: &Arc<Board<W>>,
    sun: Option<&SunAnnotation>,
) -> Result<Box<dyn Tactic<W>>, TacticError> {
    if name == "optimal" {
        return Ok(Box::new(OptimalTactic::new(board.clone())));
    }
    tactic_by_name(name, sun)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cake::Cake;
    use crate::constructions::{build_moon, build_sun, DEFAULT_SCALE};
    use crate::engine::simulate;
    use crate::geom::in_closed_halfplane;
    use num_bigint::BigInt;
    use num_rational::Rational64;

    type C = Cake<BigInt, Rational64>;

    fn sun(k: usize) -> (C, SunAnnotation) {
        build_sun(k, DEFAULT_SCALE).unwrap()
    }

    #[test]
    fn simple_greedy_tie_breaks() {
        let cake = C::from_coords(&[
            (0, 0, false),
            (10, 0, true),
            (10, 10, true),
            (0, 10, false),
            (5, 4, true),
        ])
        .unwrap();
        let s = GameState::new_game(cake.board());
        assert_eq!(SimpleGreedy.choose(&s).unwrap(), 1);
        let green = C::from_coords(&[(0, 0, false), (10, 0, false), (3, 9, false), (4, 3, true)])
            .unwrap();
        let s = GameState::new_game(green.board());
        assert_eq!(SimpleGreedy.choose(&s).unwrap(), 0);
    }

    #[test]
    fn simple_greedy_takes_revealed_moon_red() {
        let (moon, ann) = build_moon::<BigInt, Rational64>(5, DEFAULT_SCALE).unwrap();
        for &g in &ann.greens {
            let s = GameState::new_game(moon.board()).apply_move(g).unwrap();
            let pick = SimpleGreedy.choose(&s).unwrap();
            assert!(moon.board().is_red(pick));
            assert!(s.legal_moves().unwrap().intersect(moon.board().red()) == SubsetMask::from_ids([pick]));
        }
    }

    #[test]
    fn random_tactic_is_deterministic() {
        let (cake, _) = sun(3);
        let a = simulate(cake.board(), &RandomTactic::new(5), &RandomTactic::new(6)).unwrap();
        let b = simulate(cake.board(), &RandomTactic::new(5), &RandomTactic::new(6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn careful_greedy_answers_revealed_red() {
        let (cake, ann) = sun(3);
        let cg = CarefulGreedy::new(ann.clone());
        for beam in &ann.beams {
            let s = GameState::new_game(cake.board()).apply_move(beam[0]).unwrap();
            assert_eq!(cg.choose(&s).unwrap(), beam[1]);
        }
    }

    #[test]
    fn careful_greedy_branches() {
        let (cake, ann) = sun(3);
        let board = cake.board();
        let cg = CarefulGreedy::new(ann.clone());
        // Strip every other beam and the center: beam 0's outer red is then
        // extremal while its inner red is hidden behind the outer green pair.
        let mut rest = ann.beam_mask(0).without(ann.beams[0][0]);
        let s = GameState::at_unchecked(board, rest, Player::Bob);
        let ex = s.legal_moves().unwrap();
        let hidden = !ex.contains(ann.beams[0][3]);
        if hidden {
            assert!(is_semi_exposed(&s, &ann, 0));
            assert_eq!(cg.choose(&s).unwrap(), ann.beams[0][1]);
        }
        // Branch four: only green beams remain.
        rest = SubsetMask::from_ids([ann.beams[1][0], ann.beams[1][2], ann.beams[2][2], ann.center]);
        let s = GameState::at_unchecked(board, rest, Player::Bob);
        let pick = cg.choose(&s).unwrap();
        let expected = s
            .legal_moves()
            .unwrap()
            .intersect(ann.beam_mask(1).union(ann.beam_mask(2)))
            .first()
            .unwrap();
        assert_eq!(pick, expected);
        // Nothing but the center: FAIL.
        let s = GameState::at_unchecked(board, SubsetMask::from_ids([ann.center]), Player::Bob);
        assert_eq!(
            cg.choose(&s),
            Err(TacticError::CarefulGreedyFail(SubsetMask::from_ids([ann.center])))
        );
    }

    #[test]
    fn semi_exposed_examples() {
        let (cake, ann) = sun(3);
        let board = cake.board();
        let full = GameState::new_game(board);
        for b in 0..3 {
            assert!(!is_semi_exposed(&full, &ann, b));
        }
        let no_reds = board.full().minus(SubsetMask::from_ids([ann.beams[0][1], ann.beams[0][3]]));
        let s = GameState::at_unchecked(board, no_reds, Player::Alice);
        assert!(!is_semi_exposed(&s, &ann, 0));
        // Outer green gone: outer red extremal, inner red hidden.
        let s = GameState::at_unchecked(board, board.full().without(ann.beams[0][0]), Player::Bob);
        assert!(is_semi_exposed(&s, &ann, 0));
        assert!(!is_semi_exposed(&s, &ann, 1));
    }

    #[test]
    fn sle_tot_examples() {
        let (cake, ann) = sun(5);
        let board = cake.board();
        assert_eq!(sle_tot(board, board.full(), &ann), (0, 5));
        let minus_beam = board.full().minus(ann.beam_mask(2));
        assert_eq!(sle_tot(board, minus_beam, &ann), (0, 4));
        let inner_only = board.full().minus(SubsetMask::from_ids([ann.beams[1][0], ann.beams[1][1]]));
        assert_eq!(sle_tot(board, inner_only, &ann), (1, 5));
    }

    #[test]
    fn bounding_halfplane_examples() {
        let (cake, ann) = sun(5);
        let board = cake.board();
        assert!(has_bounding_halfplane(&cake, board.full(), &ann).is_none());
        let single = SubsetMask::from_ids([ann.beams[3][1]]);
        assert!(has_bounding_halfplane(&cake, single, &ann).is_some());
        // Remove two adjacent beams' worth of one side: beams 0, 1 and 2 gone.
        let rest = board
            .full()
            .minus(ann.beam_mask(0))
            .minus(ann.beam_mask(1))
            .minus(ann.beam_mask(2));
        let h = has_bounding_halfplane(&cake, rest, &ann).expect("witness");
        for id in rest.iter() {
            assert!(in_closed_halfplane(&h, cake.point(id)));
        }
        // Brute force over every line through the center and a cherry, both sides.
        let brute = board.full().without(ann.center).iter().any(|c| {
            [Side::LeftClosed, Side::RightClosed].iter().any(|&side| {
                let h = HalfPlane::through(cake.point(ann.center), cake.point(c), side).unwrap();
                rest.iter().all(|id| in_closed_halfplane(&h, cake.point(id)))
            })
        });
        assert!(brute);
    }

    #[test]
    fn halfplane_tot_bound_on_suns() {
        for k in [3, 5, 7] {
            let (cake, ann) = sun(k);
            assert!(max_tot_over_halfplanes(cake.board(), cake.board().full(), &ann) <= (k + 1) / 2);
        }
    }

    #[test]
    fn names() {
        let (_, ann) = sun(3);
        for name in ["simple-greedy", "lowest-id", "random:42"] {
            let t = tactic_by_name::<Rational64>(name, None).unwrap();
            assert_eq!(t.name(), name);
        }
        assert!(tactic_by_name::<Rational64>("careful-greedy", None).is_err());
        assert!(tactic_by_name::<Rational64>("careful-greedy", Some(&ann)).is_ok());
        assert!(matches!(
            tactic_by_name::<Rational64>("random:x", None),
            Err(TacticError::Unknown(_))
        ));
    }
}
