//! Exact-arithmetic workbench for the convex grabbing game.
//!
//! A cake is a finite weighted point set in general position. Players
//! alternately remove a cherry on the convex hull of what remains; Alice
//! moves first, red cherries weigh one and green ones zero.
//!
//! Everything is generic over the coordinate scalar ([`geom::CoordScalar`])
//! and the weight scalar ([`cake::WeightScalar`]); the aliases below fix the
//! defaults used by the command line tool and the service.

pub mod cake;
pub mod conjectures;
pub mod constructions;
pub mod engine;
pub mod geom;
pub mod ordertype;
pub mod solver;
pub mod tactics;

pub use num_bigint::BigInt;
pub use num_rational::Rational64;

/// Default coordinate scalar.
pub type Coord = BigInt;
/// Default weight scalar.
pub type Weight = Rational64;

pub type Point = geom::Point<Coord>;
pub type Cake = cake::Cake<Coord, Weight>;
pub type Board = cake::Board<Weight>;
pub type Solver = solver::Solver<Weight>;
pub type GameState<'b> = engine::GameState<'b, Weight>;
pub type Tactic = dyn engine::Tactic<Weight>;

pub use cake::SubsetMask;
pub use engine::{Gameplay, Player};
