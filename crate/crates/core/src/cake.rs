//! Weighted point sets, subset masks and the on-disk `.cake` format.
//!
//! A [`Cake`] is validated once at construction. At that point every
//! orientation sign is computed exactly and packed into a [`Board`], which is
//! all the game layers ever consult.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::ops::{Add, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::geom::{orient_raw, CoordScalar, Point};

/// Largest supported cake; subsets fit in one machine word.
pub const MAX_CHERRIES: usize = 63;

/// A nonnegative exact weight.
pub trait WeightScalar:
    Clone
    + Ord
    + Hash
    + Debug
    + Display
    + FromStr
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Send
    + Sync
    + 'static
{
}

impl<W> WeightScalar for W where
    W: Clone
        + Ord
        + Hash
        + Debug
        + Display
        + FromStr
        + Zero
        + One
        + Add<Output = W>
        + Sub<Output = W>
        + Send
        + Sync
        + 'static
{
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CakeError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cake is not in general position: {0}")]
    Validation(ValidationReport),
    #[error("cake has {0} cherries; at most {MAX_CHERRIES} are supported")]
    TooLarge(usize),
    #[error("cherry {0} has a negative weight")]
    NegativeWeight(usize),
    #[error("mask {mask:#x} refers to cherries beyond the cake size {n}")]
    MaskOutOfRange { mask: u64, n: usize },
}

/// A set of cherry ids of one cake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubsetMask(pub u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_CHERRIES);
        SubsetMask((1u64 << n) - 1)
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        SubsetMask(ids.into_iter().fold(0u64, |m, i| m | (1u64 << i)))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, id: usize) -> bool {
        id < 64 && self.0 >> id & 1 == 1
    }

    pub fn with(self, id: usize) -> Self {
        SubsetMask(self.0 | (1u64 << id))
    }

    pub fn without(self, id: usize) -> Self {
        SubsetMask(self.0 & !(1u64 << id))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersect(self, other: Self) -> Self {
        SubsetMask(self.0 & other.0)
    }

    pub fn minus(self, other: Self) -> Self {
        SubsetMask(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Lowest id in the set.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Every general-position violation of a point list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub duplicates: Vec<(usize, usize)>,
    pub collinear: Vec<(usize, usize, usize)>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.duplicates.is_empty() && self.collinear.is_empty()
    }
}

impl Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let mut parts = Vec::new();
        for (i, j) in &self.duplicates {
            parts.push(format!("duplicate {{{i},{j}}}"));
        }
        for (i, j, k) in &self.collinear {
            parts.push(format!("collinear {{{i},{j},{k}}}"));
        }
        write!(f, "{}", parts.join("; "))
    }
}

/// Lists every coincident pair and every collinear triple of distinct points.
pub fn validate_points<T: CoordScalar>(points: &[Point<T>]) -> ValidationReport {
    let n = points.len();
    let mut report = ValidationReport::default();
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i] == points[j] {
                report.duplicates.push((i, j));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i] == points[j] {
                continue;
            }
            for k in (j + 1)..n {
                if points[k] == points[i] || points[k] == points[j] {
                    continue;
                }
                if orient_raw(&points[i], &points[j], &points[k]) == Ordering::Equal {
                    report.collinear.push((i, j, k));
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cherry<T, W> {
    pub id: usize,
    pub point: Point<T>,
    pub weight: W,
}

/// Weights plus the full orientation table of a cake, packed as bitmasks.
///
/// `cw[i * n + j]` holds every `k` for which `(i, j, k)` turns clockwise. The
/// game only ever depends on this data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Board<W> {
    n: usize,
    weights: Vec<W>,
    red: SubsetMask,
    green: SubsetMask,
    cw: Vec<u64>,
}

impl<W: WeightScalar> Board<W> {
    /// Builds the table; the points must already be in general position.
    pub fn from_points<T: CoordScalar>(points: &[Point<T>], weights: Vec<W>) -> Self {
        let n = points.len();
        assert!(n <= MAX_CHERRIES && weights.len() == n);
        let mut cw = vec![0u64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let ccw = orient_raw(&points[i], &points[j], &points[k]) == Ordering::Greater;
                    // Even permutations of (i, j, k) share the sign, odd ones flip it.
                    let even = [(i, j, k), (j, k, i), (k, i, j)];
                    let odd = [(j, i, k), (i, k, j), (k, j, i)];
                    for &(a, b, c) in if ccw { &odd } else { &even } {
                        cw[a * n + b] |= 1u64 << c;
                    }
                }
            }
        }
        Self::from_parts(n, weights, cw)
    }

    fn from_parts(n: usize, weights: Vec<W>, cw: Vec<u64>) -> Self {
        let red = SubsetMask::from_ids((0..n).filter(|&i| weights[i].is_one()));
        let green = SubsetMask::from_ids((0..n).filter(|&i| weights[i].is_zero()));
        Board {
            n,
            weights,
            red,
            green,
            cw,
        }
    }

    /// Same order type with every label permuted: cherry `i` becomes `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut weights = vec![W::zero(); n];
        for i in 0..n {
            weights[perm[i]] = self.weights[i].clone();
        }
        let mut cw = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mapped = SubsetMask(self.cw[i * n + j]).iter().map(|k| perm[k]);
                cw[perm[i] * n + perm[j]] = SubsetMask::from_ids(mapped).0;
            }
        }
        Self::from_parts(n, weights, cw)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weight(&self, id: usize) -> &W {
        &self.weights[id]
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    pub fn full(&self) -> SubsetMask {
        SubsetMask::full(self.n)
    }

    /// Cherries of weight exactly one.
    pub fn red(&self) -> SubsetMask {
        self.red
    }

    /// Cherries of weight exactly zero.
    pub fn green(&self) -> SubsetMask {
        self.green
    }

    pub fn is_red(&self, id: usize) -> bool {
        self.red.contains(id)
    }

    pub fn is_binary(&self) -> bool {
        self.red.union(self.green) == self.full()
    }

    pub fn check_mask(&self, mask: SubsetMask) -> Result<(), CakeError> {
        if mask.is_subset_of(self.full()) {
            Ok(())
        } else {
            Err(CakeError::MaskOutOfRange {
                mask: mask.0,
                n: self.n,
            })
        }
    }

    /// Orientation sign of three distinct ids.
    pub fn sign(&self, i: usize, j: usize, k: usize) -> i8 {
        debug_assert!(i != j && j != k && i != k);
        if self.cw[i * self.n + j] >> k & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// Ids `k` with `(i, j, k)` clockwise.
    pub fn clockwise_of(&self, i: usize, j: usize) -> SubsetMask {
        SubsetMask(self.cw[i * self.n + j])
    }

    /// Whether `id` is a hull vertex of `set` (which must contain it).
    ///
    /// A hull vertex has a successor `j` on the hull with nothing of `set`
    /// clockwise of the directed edge `(id, j)`.
    pub fn is_extremal(&self, id: usize, set: SubsetMask) -> bool {
        debug_assert!(set.contains(id));
        let rest = set.without(id);
        if rest.len() <= 1 {
            return true;
        }
        let row = &self.cw[id * self.n..(id + 1) * self.n];
        rest.iter().any(|j| rest.0 & row[j] == 0)
    }

    /// Ex(set): hull vertices of the cherries in `set`.
    pub fn extremal(&self, set: SubsetMask) -> SubsetMask {
        if set.len() <= 3 {
            return set;
        }
        SubsetMask::from_ids(set.iter().filter(|&i| self.is_extremal(i, set)))
    }

    /// Whether cherry `id` lies in Conv(`set`); `id` must not be in `set`.
    pub fn in_hull(&self, id: usize, set: SubsetMask) -> bool {
        debug_assert!(!set.contains(id));
        set.len() >= 3 && !self.is_extremal(id, set.with(id))
    }

    pub fn reds_in(&self, set: SubsetMask) -> usize {
        set.intersect(self.red).len()
    }

    pub fn greens_in(&self, set: SubsetMask) -> usize {
        set.intersect(self.green).len()
    }

    pub fn total_weight(&self, set: SubsetMask) -> W {
        set.iter()
            .fold(W::zero(), |acc, i| acc + self.weights[i].clone())
    }
}

/// A validated weighted point set in general position.
#[derive(Debug, Clone)]
pub struct Cake<T, W> {
    cherries: Vec<Cherry<T, W>>,
    board: Arc<Board<W>>,
}

impl<T: CoordScalar, W: WeightScalar> PartialEq for Cake<T, W> {
    fn eq(&self, other: &Self) -> bool {
        self.cherries == other.cherries
    }
}

impl<T: CoordScalar, W: WeightScalar> Eq for Cake<T, W> {}

impl<T: CoordScalar, W: WeightScalar> Cake<T, W> {
    pub fn new(entries: Vec<(Point<T>, W)>) -> Result<Self, CakeError> {
        let n = entries.len();
        if n > MAX_CHERRIES {
            return Err(CakeError::TooLarge(n));
        }
        if let Some(i) = entries.iter().position(|(_, w)| *w < W::zero()) {
            return Err(CakeError::NegativeWeight(i));
        }
        let points: Vec<Point<T>> = entries.iter().map(|(p, _)| p.clone()).collect();
        let report = validate_points(&points);
        if !report.is_ok() {
            return Err(CakeError::Validation(report));
        }
        let weights: Vec<W> = entries.iter().map(|(_, w)| w.clone()).collect();
        let board = Arc::new(Board::from_points(&points, weights));
        let cherries = entries
            .into_iter()
            .enumerate()
            .map(|(id, (point, weight))| Cherry { id, point, weight })
            .collect();
        Ok(Cake { cherries, board })
    }

    /// Convenience for tests and constructions: `(x, y, red)` triples.
    pub fn from_coords(coords: &[(i64, i64, bool)]) -> Result<Self, CakeError> {
        Cake::new(
            coords
                .iter()
                .map(|&(x, y, red)| {
                    (
                        Point::from_i64(x, y),
                        if red { W::one() } else { W::zero() },
                    )
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.cherries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cherries.is_empty()
    }

    pub fn cherries(&self) -> &[Cherry<T, W>] {
        &self.cherries
    }

    pub fn point(&self, id: usize) -> &Point<T> {
        &self.cherries[id].point
    }

    pub fn points(&self) -> Vec<Point<T>> {
        self.cherries.iter().map(|c| c.point.clone()).collect()
    }

    pub fn board(&self) -> &Arc<Board<W>> {
        &self.board
    }

    pub fn full(&self) -> SubsetMask {
        SubsetMask::full(self.len())
    }

    pub fn red_count(&self, mask: SubsetMask) -> Result<usize, CakeError> {
        self.board.check_mask(mask)?;
        Ok(self.board.reds_in(mask))
    }

    pub fn green_count(&self, mask: SubsetMask) -> Result<usize, CakeError> {
        self.board.check_mask(mask)?;
        Ok(self.board.greens_in(mask))
    }

    /// A new cake with the given cherries appended.
    pub fn extended(&self, extra: Vec<(Point<T>, W)>) -> Result<Self, CakeError> {
        let mut entries: Vec<(Point<T>, W)> = self
            .cherries
            .iter()
            .map(|c| (c.point.clone(), c.weight.clone()))
            .collect();
        entries.extend(extra);
        Cake::new(entries)
    }

    /// The sub-cake on `mask`, relabeled `0..` in increasing id order.
    pub fn restricted(&self, mask: SubsetMask) -> Self {
        let entries = mask
            .iter()
            .map(|i| (self.cherries[i].point.clone(), self.cherries[i].weight.clone()))
            .collect();
        Cake::new(entries).expect("subsets of a valid cake are valid")
    }

    /// Text in the `.cake` format: the count, then `x y w` per line.
    pub fn serialize(&self) -> String {
        let mut out = format!("{}\n", self.len());
        for c in &self.cherries {
            out.push_str(&format!("{} {} {}\n", c.point.x, c.point.y, c.weight));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CakeError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (first_no, first) = lines.next().ok_or(CakeError::Syntax {
            line: 1,
            message: "empty input".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|_| CakeError::Syntax {
            line: first_no + 1,
            message: format!("expected cherry count, found {:?}", first.trim()),
        })?;
        let mut entries = Vec::with_capacity(n);
        for (no, line) in lines {
            let line_no = no + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(CakeError::Syntax {
                    line: line_no,
                    message: format!("expected `x y w`, found {} fields", fields.len()),
                });
            }
            let coord = |s: &str| {
                s.parse::<T>().map_err(|_| CakeError::Syntax {
                    line: line_no,
                    message: format!("bad coordinate {s:?}"),
                })
            };
            let x = coord(fields[0])?;
            let y = coord(fields[1])?;
            let w = fields[2].parse::<W>().map_err(|_| CakeError::Syntax {
                line: line_no,
                message: format!("bad weight {:?}", fields[2]),
            })?;
            entries.push((Point::new(x, y), w));
        }
        if entries.len() != n {
            return Err(CakeError::Syntax {
                line: text.lines().count(),
                message: format!("header says {n} cherries, found {}", entries.len()),
            });
        }
        Cake::new(entries)
    }
}

/// A random cake in general position: integer coordinates uniform in
/// `[0, bound]^2`, the first `reds` cherries red, the rest green.
pub fn sample_cake<T: CoordScalar, W: WeightScalar, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    reds: usize,
    bound: i64,
) -> Cake<T, W> {
    assert!(reds <= n && n <= MAX_CHERRIES);
    let mut points: Vec<Point<T>> = Vec::with_capacity(n);
    while points.len() < n {
        let candidate = Point::from_i64(rng.gen_range(0..=bound), rng.gen_range(0..=bound));
        let clash = points.iter().any(|p| *p == candidate)
            || points.iter().enumerate().any(|(a, p)| {
                points[a + 1..]
                    .iter()
                    .any(|q| orient_raw(p, q, &candidate) == Ordering::Equal)
            });
        if !clash {
            points.push(candidate);
        }
    }
    let entries = points
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p, if i < reds { W::one() } else { W::zero() }))
        .collect();
    Cake::new(entries).expect("sampled in general position")
}
