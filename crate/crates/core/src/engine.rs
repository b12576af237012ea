//! Game mechanics: legal moves, the referee, score accounting and replay.

use std::fmt::{self, Display};
use std::str::FromStr;

use thiserror::Error;

use crate::cake::{Board, SubsetMask, WeightScalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Alice,
    Bob,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::Alice => Player::Bob,
            Player::Bob => Player::Alice,
        }
    }
}

impl Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Alice => "alice",
            Player::Bob => "bob",
        })
    }
}

impl FromStr for Player {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "alice" => Ok(Player::Alice),
            "bob" => Ok(Player::Bob),
            other => Err(format!("unknown player {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IllegalReason {
    OutOfRange,
    AlreadyTaken,
    NotExtremal,
}

impl Display for IllegalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IllegalReason::OutOfRange => "no such cherry",
            IllegalReason::AlreadyTaken => "already taken",
            IllegalReason::NotExtremal => "not extremal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TacticError {
    #[error("careful greedy reached FAIL at state {0}")]
    CarefulGreedyFail(SubsetMask),
    #[error("tactic asked to move in a finished game")]
    EmptyState,
    #[error("unknown tactic {0:?}")]
    Unknown(String),
    #[error("tactic {0:?} needs construction metadata that was not supplied")]
    MissingAnnotation(String),
    #[error("tactic {tactic} failed: {message}")]
    Failed { tactic: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("no cherries remain")]
    EmptyState,
    #[error("illegal move {id}: {reason}")]
    IllegalMove { id: usize, reason: IllegalReason },
    #[error("move #{index} of the gameplay is illegal: {cause}")]
    IllegalGameplay { index: usize, cause: Box<EngineError> },
    #[error("tactic {tactic} chose illegal move {id} at state {state}")]
    TacticIllegalMove {
        tactic: String,
        state: SubsetMask,
        id: usize,
    },
    #[error(transparent)]
    Tactic(#[from] TacticError),
    #[error("mover {mover} contradicts the turn parity of state {state}")]
    ParityMismatch { state: SubsetMask, mover: Player },
}

/// Remaining cherries plus the player to move.
#[derive(Debug, Clone, Copy)]
pub struct GameState<'b, W> {
    board: &'b Board<W>,
    remaining: SubsetMask,
    mover: Player,
}

impl<W> PartialEq for GameState<'_, W> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.board, other.board)
            && self.remaining == other.remaining
            && self.mover == other.mover
    }
}

impl<'b, W: WeightScalar> GameState<'b, W> {
    /// The opening position: everything remains, Alice to move.
    pub fn new_game(board: &'b Board<W>) -> Self {
        GameState {
            board,
            remaining: board.full(),
            mover: Player::Alice,
        }
    }

    /// An arbitrary mid-game position. The mover must match the parity of a
    /// game that started from the full cake with Alice.
    pub fn at(
        board: &'b Board<W>,
        remaining: SubsetMask,
        mover: Player,
    ) -> Result<Self, EngineError> {
        if !remaining.is_subset_of(board.full()) {
            let id = remaining.minus(board.full()).first().unwrap_or(0);
            return Err(EngineError::IllegalMove {
                id,
                reason: IllegalReason::OutOfRange,
            });
        }
        let state = GameState {
            board,
            remaining,
            mover,
        };
        if !state.follows_standard_parity() {
            return Err(EngineError::ParityMismatch {
                state: remaining,
                mover,
            });
        }
        Ok(state)
    }

    /// Same as [`GameState::at`] without the parity check.
    pub fn at_unchecked(board: &'b Board<W>, remaining: SubsetMask, mover: Player) -> Self {
        GameState {
            board,
            remaining,
            mover,
        }
    }

    pub fn follows_standard_parity(&self) -> bool {
        let taken = self.board.len() - self.remaining.len();
        (taken % 2 == 0) == (self.mover == Player::Alice)
    }

    pub fn board(&self) -> &'b Board<W> {
        self.board
    }

    pub fn remaining(&self) -> SubsetMask {
        self.remaining
    }

    pub fn mover(&self) -> Player {
        self.mover
    }

    pub fn is_over(&self) -> bool {
        self.remaining.is_empty()
    }

    /// Ex(C) of the remaining cherries.
    pub fn legal_moves(&self) -> Result<SubsetMask, EngineError> {
        if self.remaining.is_empty() {
            return Err(EngineError::EmptyState);
        }
        Ok(self.board.extremal(self.remaining))
    }

    pub fn check_move(&self, id: usize) -> Result<(), EngineError> {
        let reason = if id >= self.board.len() {
            IllegalReason::OutOfRange
        } else if !self.remaining.contains(id) {
            IllegalReason::AlreadyTaken
        } else if !self.board.is_extremal(id, self.remaining) {
            IllegalReason::NotExtremal
        } else {
            return Ok(());
        };
        Err(EngineError::IllegalMove { id, reason })
    }

    /// The referee: applies `id` only if it is a legal move.
    pub fn apply_move(&self, id: usize) -> Result<Self, EngineError> {
        self.check_move(id)?;
        Ok(GameState {
            board: self.board,
            remaining: self.remaining.without(id),
            mover: self.mover.other(),
        })
    }
}

/// The sequence of taken cherry ids, Alice first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Gameplay {
    pub moves: Vec<usize>,
}

impl Gameplay {
    pub fn new(moves: Vec<usize>) -> Self {
        Gameplay { moves }
    }

    /// Whitespace-separated ids.
    pub fn parse(text: &str) -> Result<Self, String> {
        text.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| format!("bad cherry id {t:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Gameplay::new)
    }

    pub fn serialize(&self) -> String {
        let ids: Vec<String> = self.moves.iter().map(|m| m.to_string()).collect();
        format!("{}\n", ids.join(" "))
    }
}

/// Replays `q` from the full cake through the referee, returning every
/// state from the opening to the last position.
pub fn replay<'b, W: WeightScalar>(
    board: &'b Board<W>,
    q: &Gameplay,
) -> Result<Vec<GameState<'b, W>>, EngineError> {
    let mut states = vec![GameState::new_game(board)];
    for (index, &id) in q.moves.iter().enumerate() {
        let next = states[index]
            .apply_move(id)
            .map_err(|e| EngineError::IllegalGameplay {
                index,
                cause: Box::new(e),
            })?;
        states.push(next);
    }
    Ok(states)
}

/// `(A(q), B(q))`: weights taken at odd and even positions.
pub fn scores<W: WeightScalar>(board: &Board<W>, q: &Gameplay) -> Result<(W, W), EngineError> {
    replay(board, q)?;
    let mut alice = W::zero();
    let mut bob = W::zero();
    for (i, &id) in q.moves.iter().enumerate() {
        if i % 2 == 0 {
            alice = alice + board.weight(id).clone();
        } else {
            bob = bob + board.weight(id).clone();
        }
    }
    Ok((alice, bob))
}

/// A deterministic move policy for one player.
pub trait Tactic<W: WeightScalar>: Send + Sync {
    fn name(&self) -> String;

    fn choose(&self, state: &GameState<'_, W>) -> Result<usize, TacticError>;
}

/// Asks `tactic` for a move at `state` and polices the answer.
pub fn consult<W: WeightScalar>(
    tactic: &dyn Tactic<W>,
    state: &GameState<'_, W>,
) -> Result<usize, EngineError> {
    let id = tactic.choose(state)?;
    state
        .check_move(id)
        .map_err(|_| EngineError::TacticIllegalMove {
            tactic: tactic.name(),
            state: state.remaining(),
            id,
        })?;
    Ok(id)
}

/// Plays the whole game with the two tactics, every move refereed.
pub fn simulate<W: WeightScalar>(
    board: &Board<W>,
    alice: &dyn Tactic<W>,
    bob: &dyn Tactic<W>,
) -> Result<Gameplay, EngineError> {
    let mut state = GameState::new_game(board);
    let mut moves = Vec::with_capacity(board.len());
    while !state.is_over() {
        let tactic = match state.mover() {
            Player::Alice => alice,
            Player::Bob => bob,
        };
        let id = consult(tactic, &state)?;
        moves.push(id);
        state = state.apply_move(id)?;
    }
    Ok(Gameplay::new(moves))
}
