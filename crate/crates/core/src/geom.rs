//! Exact integer geometric predicates.
//!
//! This is the only module that looks at coordinates. Everything above it
//! (the game engine, the solver, the tactics) works on orientation signs
//! precomputed from here, so the coordinate scalar only has to support an
//! exact sign of a 2x2 determinant.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, Signed, ToPrimitive};
use thiserror::Error;

/// Errors raised by the predicates when general position is violated.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("points {0}, {1}, {2} are collinear")]
    CollinearTriple(usize, usize, usize),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
}

/// A signed integer type usable as a coordinate.
///
/// Implementors must decide the sign of `ax * by - ay * bx` exactly, widening
/// internally if the products can overflow.
pub trait CoordScalar:
    Clone + Ord + Hash + Debug + Display + FromStr + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn cross_sign(ax: &Self, ay: &Self, bx: &Self, by: &Self) -> Ordering;
}

macro_rules! widening_cross {
    ($($t:ty),*) => {$(
        impl CoordScalar for $t {
            fn cross_sign(ax: &Self, ay: &Self, bx: &Self, by: &Self) -> Ordering {
                let lhs = *ax as i128 * *by as i128;
                let rhs = *ay as i128 * *bx as i128;
                lhs.cmp(&rhs)
            }
        }
    )*};
}

widening_cross!(i8, i16, i32, i64);

impl CoordScalar for i128 {
    fn cross_sign(ax: &Self, ay: &Self, bx: &Self, by: &Self) -> Ordering {
        match (ax.checked_mul(*by), ay.checked_mul(*bx)) {
            (Some(l), Some(r)) => l.cmp(&r),
            _ => {
                let l = BigInt::from(*ax) * BigInt::from(*by);
                let r = BigInt::from(*ay) * BigInt::from(*bx);
                l.cmp(&r)
            }
        }
    }
}

impl CoordScalar for BigInt {
    fn cross_sign(ax: &Self, ay: &Self, bx: &Self, by: &Self) -> Ordering {
        (ax * by).cmp(&(ay * bx))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: CoordScalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn from_i64(x: i64, y: i64) -> Self {
        Point {
            x: T::from_i64(x).expect("coordinate out of range for scalar"),
            y: T::from_i64(y).expect("coordinate out of range for scalar"),
        }
    }
}

impl<T: Display> Display for Point<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Sign of a non-degenerate triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::CounterClockwise => 1,
            Orientation::Clockwise => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Orientation::CounterClockwise => Orientation::Clockwise,
            Orientation::Clockwise => Orientation::CounterClockwise,
        }
    }
}

/// Sign of det(q - p, r - p) without any rounding. `Equal` means collinear.
pub fn orient_raw<T: CoordScalar>(p: &Point<T>, q: &Point<T>, r: &Point<T>) -> Ordering {
    let ax = q.x.clone() - p.x.clone();
    let ay = q.y.clone() - p.y.clone();
    let bx = r.x.clone() - p.x.clone();
    let by = r.y.clone() - p.y.clone();
    T::cross_sign(&ax, &ay, &bx, &by)
}

/// Orientation of `(p, q, r)`; fails on coincident or collinear input.
pub fn orientation<T: CoordScalar>(
    p: &Point<T>,
    q: &Point<T>,
    r: &Point<T>,
) -> Result<Orientation, GeomError> {
    if p == q {
        return Err(GeomError::DuplicatePoint(0, 1));
    }
    if p == r {
        return Err(GeomError::DuplicatePoint(0, 2));
    }
    if q == r {
        return Err(GeomError::DuplicatePoint(1, 2));
    }
    match orient_raw(p, q, r) {
        Ordering::Greater => Ok(Orientation::CounterClockwise),
        Ordering::Less => Ok(Orientation::Clockwise),
        Ordering::Equal => Err(GeomError::CollinearTriple(0, 1, 2)),
    }
}

/// Whether `p` lies inside triangle `xyz`, decided purely from the four
/// orientation tests `xyz = xyp = xpz = pyz`.
pub fn point_in_triangle<T: CoordScalar>(
    x: &Point<T>,
    y: &Point<T>,
    z: &Point<T>,
    p: &Point<T>,
) -> Result<bool, GeomError> {
    let pts = [x, y, z, p];
    for i in 0..4 {
        for j in (i + 1)..4 {
            if pts[i] == pts[j] {
                return Err(GeomError::DuplicatePoint(i, j));
            }
        }
    }
    let relabel = |e: GeomError, a: usize, b: usize, c: usize| match e {
        GeomError::CollinearTriple(..) => GeomError::CollinearTriple(a, b, c),
        other => other,
    };
    let xyz = orientation(x, y, z).map_err(|e| relabel(e, 0, 1, 2))?;
    let xyp = orientation(x, y, p).map_err(|e| relabel(e, 0, 1, 3))?;
    let xpz = orientation(x, p, z).map_err(|e| relabel(e, 0, 3, 2))?;
    let pyz = orientation(p, y, z).map_err(|e| relabel(e, 3, 1, 2))?;
    Ok(xyz == xyp && xyz == xpz && xyz == pyz)
}

/// Checks pairwise distinctness and the absence of collinear triples.
pub fn check_general_position<T: CoordScalar>(points: &[Point<T>]) -> Result<(), GeomError> {
    let n = points.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i] == points[j] {
                return Err(GeomError::DuplicatePoint(i, j));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if orient_raw(&points[i], &points[j], &points[k]) == Ordering::Equal {
                    return Err(GeomError::CollinearTriple(i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// Extremal points by definition: an index is extremal iff it is not inside
/// any triangle spanned by three other points. O(n^4); the reference.
pub fn extremal_set_by_triangles<T: CoordScalar>(
    points: &[Point<T>],
) -> Result<Vec<usize>, GeomError> {
    check_general_position(points)?;
    let n = points.len();
    let mut out = Vec::new();
    for c in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != c).collect();
        let mut inside = false;
        'search: for (a, &x) in others.iter().enumerate() {
            for (b, &y) in others.iter().enumerate().skip(a + 1) {
                for &z in others.iter().skip(b + 1) {
                    if point_in_triangle(&points[x], &points[y], &points[z], &points[c])? {
                        inside = true;
                        break 'search;
                    }
                }
            }
        }
        if !inside {
            out.push(c);
        }
    }
    Ok(out)
}

/// Convex hull vertices via Andrew's monotone chain, returned sorted by index.
pub fn extremal_set<T: CoordScalar>(points: &[Point<T>]) -> Result<Vec<usize>, GeomError> {
    check_general_position(points)?;
    let n = points.len();
    if n <= 3 {
        return Ok((0..n).collect());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].cmp(&points[b]));

    let mut hull: Vec<usize> = Vec::with_capacity(2 * n);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if orient_raw(&points[a], &points[b], &points[i]) == Ordering::Greater {
                    break;
                }
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull.sort_unstable();
    hull.dedup();
    Ok(hull)
}

/// Which side of a directed line is kept, boundary included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    LeftClosed,
    RightClosed,
}

/// A closed half-plane bounded by the line through `anchor` along `direction`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfPlane<T> {
    pub anchor: Point<T>,
    pub direction: Point<T>,
    pub side: Side,
}

impl<T: CoordScalar> HalfPlane<T> {
    pub fn new(anchor: Point<T>, direction: Point<T>, side: Side) -> Option<Self> {
        if direction.x.is_zero() && direction.y.is_zero() {
            return None;
        }
        Some(HalfPlane {
            anchor,
            direction,
            side,
        })
    }

    /// Half-plane whose boundary passes through `from` and `to`.
    pub fn through(from: &Point<T>, to: &Point<T>, side: Side) -> Option<Self> {
        let direction = Point::new(to.x.clone() - from.x.clone(), to.y.clone() - from.y.clone());
        HalfPlane::new(from.clone(), direction, side)
    }
}

pub fn in_closed_halfplane<T: CoordScalar>(h: &HalfPlane<T>, p: &Point<T>) -> bool {
    let bx = p.x.clone() - h.anchor.x.clone();
    let by = p.y.clone() - h.anchor.y.clone();
    let s = T::cross_sign(&h.direction.x, &h.direction.y, &bx, &by);
    match h.side {
        Side::LeftClosed => s != Ordering::Less,
        Side::RightClosed => s != Ordering::Greater,
    }
}
