//! Order types of weighted cakes.
//!
//! Two cakes are order-equivalent when a weight-preserving bijection maps
//! every triple orientation to the same sign, up to one global sign flip.
//! Equivalence is decided by backtracking search, never by realizing a
//! canonical point set.

use thiserror::Error;

use crate::cake::{Board, Cake, WeightScalar};
use crate::geom::CoordScalar;

/// Largest cake accepted by [`canonical_key`].
pub const CANONICAL_KEY_LIMIT: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderTypeError {
    #[error("canonical keys are limited to {CANONICAL_KEY_LIMIT} cherries, got {0}")]
    TooLarge(usize),
}

/// Weights plus the orientation of every increasing index triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderSignature<W> {
    pub n: usize,
    pub weights: Vec<W>,
    /// Signs of `(i, j, k)` for `i < j < k`, lexicographic order.
    pub triple_signs: Vec<i8>,
}

impl<W> OrderSignature<W> {
    pub fn sign(&self, i: usize, j: usize, k: usize) -> i8 {
        assert!(i < j && j < k && k < self.n);
        // Triples before (i, ., .), then before (i, j, .), then the offset of k.
        let n = self.n;
        let choose3 = |m: usize| m * m.saturating_sub(1) * m.saturating_sub(2) / 6;
        let choose2 = |m: usize| m * m.saturating_sub(1) / 2;
        let before_i = choose3(n) - choose3(n - i);
        let before_j = choose2(n - i - 1) - choose2(n - j);
        self.triple_signs[before_i + before_j + (k - j - 1)]
    }
}

pub fn signature<T: CoordScalar, W: WeightScalar>(cake: &Cake<T, W>) -> OrderSignature<W> {
    board_signature(cake.board())
}

pub fn board_signature<W: WeightScalar>(board: &Board<W>) -> OrderSignature<W> {
    let n = board.len();
    let mut triple_signs = Vec::with_capacity(n * n * n / 6);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                triple_signs.push(board.sign(i, j, k));
            }
        }
    }
    OrderSignature {
        n,
        weights: board.weights().to_vec(),
        triple_signs,
    }
}

/// An order-preserving bijection: cherry `i` maps to `mapping[i]`, and every
/// orientation is multiplied by `sigma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bijection {
    pub mapping: Vec<usize>,
    pub sigma: i8,
}

impl Bijection {
    pub fn inverse(&self) -> Bijection {
        let mut mapping = vec![0; self.mapping.len()];
        for (i, &t) in self.mapping.iter().enumerate() {
            mapping[t] = i;
        }
        Bijection {
            mapping,
            sigma: self.sigma,
        }
    }

    /// `other` after `self`.
    pub fn then(&self, other: &Bijection) -> Bijection {
        Bijection {
            mapping: self.mapping.iter().map(|&t| other.mapping[t]).collect(),
            sigma: self.sigma * other.sigma,
        }
    }

    /// Checks the defining property exhaustively.
    pub fn is_order_preserving<W: WeightScalar>(&self, from: &Board<W>, to: &Board<W>) -> bool {
        let n = from.len();
        if to.len() != n || self.mapping.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &t in &self.mapping {
            if t >= n || seen[t] {
                return false;
            }
            seen[t] = true;
        }
        if (0..n).any(|i| from.weight(i) != to.weight(self.mapping[i])) {
            return false;
        }
        let m = &self.mapping;
        (0..n).all(|i| {
            ((i + 1)..n).all(|j| {
                ((j + 1)..n).all(|k| to.sign(m[i], m[j], m[k]) == self.sigma * from.sign(i, j, k))
            })
        })
    }
}

pub fn order_equivalent<T: CoordScalar, W: WeightScalar>(
    p: &Cake<T, W>,
    q: &Cake<T, W>,
) -> Option<Bijection> {
    boards_equivalent(p.board(), q.board())
}

/// Number of `k` with `(i, j, k)` counterclockwise.
fn ccw_count<W: WeightScalar>(b: &Board<W>, i: usize, j: usize) -> usize {
    b.len() - 2 - b.clockwise_of(i, j).len()
}

struct Matcher<'a, W> {
    p: &'a Board<W>,
    q: &'a Board<W>,
    sigma: i8,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
    mapping: Vec<usize>,
    used: Vec<bool>,
}

impl<W: WeightScalar> Matcher<'_, W> {
    fn flip(&self, c: usize) -> usize {
        if self.sigma > 0 {
            c
        } else {
            self.p.len() - 2 - c
        }
    }

    fn fits(&self, depth: usize, s: usize, t: usize) -> bool {
        for (x, &a) in self.order[..depth].iter().enumerate() {
            let ta = self.mapping[a];
            if ccw_count(self.q, ta, t) != self.flip(ccw_count(self.p, a, s)) {
                return false;
            }
            for &b in &self.order[x + 1..depth] {
                let tb = self.mapping[b];
                if self.q.sign(ta, tb, t) != self.sigma * self.p.sign(a, b, s) {
                    return false;
                }
            }
        }
        true
    }

    fn search(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let s = self.order[depth];
        for idx in 0..self.candidates[s].len() {
            let t = self.candidates[s][idx];
            if self.used[t] || !self.fits(depth, s, t) {
                continue;
            }
            self.used[t] = true;
            self.mapping[s] = t;
            if self.search(depth + 1) {
                return true;
            }
            self.used[t] = false;
        }
        false
    }
}

/// Searches for an order-preserving bijection `p -> q`, trying `sigma = +1`
/// first. Points are paired only when their weight and their sorted profile
/// of counterclockwise counts agree, which both relabeling and the sign flip
/// leave invariant.
pub fn boards_equivalent<W: WeightScalar>(p: &Board<W>, q: &Board<W>) -> Option<Bijection> {
    let n = p.len();
    if q.len() != n {
        return None;
    }
    let mut pw: Vec<&W> = p.weights().iter().collect();
    let mut qw: Vec<&W> = q.weights().iter().collect();
    pw.sort();
    qw.sort();
    if pw != qw {
        return None;
    }
    let profile = |b: &Board<W>, i: usize, flip: bool| {
        let mut counts: Vec<usize> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let c = ccw_count(b, i, j);
                if flip {
                    n - 2 - c
                } else {
                    c
                }
            })
            .collect();
        counts.sort_unstable();
        counts
    };
    let q_profiles: Vec<Vec<usize>> = (0..n).map(|t| profile(q, t, false)).collect();
    for sigma in [1i8, -1] {
        let candidates: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                let ps = profile(p, s, sigma < 0);
                (0..n)
                    .filter(|&t| p.weight(s) == q.weight(t) && q_profiles[t] == ps)
                    .collect()
            })
            .collect();
        if candidates.iter().any(|c| c.is_empty()) {
            continue;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&s| (candidates[s].len(), s));
        let mut m = Matcher {
            p,
            q,
            sigma,
            order,
            candidates,
            mapping: vec![usize::MAX; n],
            used: vec![false; n],
        };
        if m.search(0) {
            return Some(Bijection {
                mapping: m.mapping,
                sigma,
            });
        }
    }
    None
}

/// A byte string equal for two cakes iff they are order-equivalent.
///
/// The key is the sorted weight list followed by the lexicographically least
/// colex-ordered sign string over every relabeling that lists weights in
/// sorted order, under both global signs. Found by branch and bound.
pub fn canonical_key<T: CoordScalar, W: WeightScalar>(
    cake: &Cake<T, W>,
) -> Result<Vec<u8>, OrderTypeError> {
    board_canonical_key(cake.board())
}

pub fn board_canonical_key<W: WeightScalar>(board: &Board<W>) -> Result<Vec<u8>, OrderTypeError> {
    let n = board.len();
    if n > CANONICAL_KEY_LIMIT {
        return Err(OrderTypeError::TooLarge(n));
    }
    let mut weights: Vec<W> = board.weights().to_vec();
    weights.sort();
    let mut best: Option<Vec<u8>> = None;
    for sigma in [1i8, -1] {
        let mut search = KeySearch {
            board,
            weights: &weights,
            sigma,
            order: Vec::with_capacity(n),
            used: vec![false; n],
            signs: Vec::new(),
            best: &mut best,
        };
        search.run();
    }
    let header: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
    let mut key = format!("{n};{};", header.join(",")).into_bytes();
    key.extend(best.unwrap_or_default());
    Ok(key)
}

struct KeySearch<'a, W> {
    board: &'a Board<W>,
    weights: &'a [W],
    sigma: i8,
    order: Vec<usize>,
    used: Vec<bool>,
    signs: Vec<u8>,
    best: &'a mut Option<Vec<u8>>,
}

impl<W: WeightScalar> KeySearch<'_, W> {
    fn run(&mut self) {
        let m = self.order.len();
        let n = self.board.len();
        if m == n {
            if self.best.as_ref().map_or(true, |b| self.signs < *b) {
                *self.best = Some(self.signs.clone());
            }
            return;
        }
        for cand in 0..n {
            if self.used[cand] || *self.board.weight(cand) != self.weights[m] {
                continue;
            }
            let mark = self.signs.len();
            for j in 1..m {
                for i in 0..j {
                    let s = self.sigma * self.board.sign(self.order[i], self.order[j], cand);
                    self.signs.push(u8::from(s > 0));
                }
            }
            let worse = self
                .best
                .as_ref()
                .is_some_and(|b| self.signs.as_slice() > &b[..self.signs.len()]);
            if !worse {
                self.used[cand] = true;
                self.order.push(cand);
                self.run();
                self.order.pop();
                self.used[cand] = false;
            }
            self.signs.truncate(mark);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cake::sample_cake;
    use crate::geom::Point;
    use num_bigint::BigInt;
    use num_rational::Rational64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Cake<BigInt, Rational64>;

    fn map_cake(cake: &C, f: impl Fn(i64, i64) -> (i64, i64), perm: &[usize]) -> C {
        let mut entries = vec![None; cake.len()];
        for c in cake.cherries() {
            let (x, y) = f(
                i64::try_from(&c.point.x).unwrap(),
                i64::try_from(&c.point.y).unwrap(),
            );
            entries[perm[c.id]] = Some((Point::from_i64(x, y), c.weight));
        }
        C::new(entries.into_iter().map(Option::unwrap).collect()).unwrap()
    }

    fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            p.swap(i, rng.gen_range(0..=i));
        }
        p
    }

    #[test]
    fn triangle_signature() {
        let c = C::from_coords(&[(0, 0, true), (1, 0, false), (0, 1, false)]).unwrap();
        let sig = signature(&c);
        assert_eq!(sig.triple_signs, vec![1]);
        assert_eq!(sig.weights, vec![1.into(), 0.into(), 0.into()]);
        let mirrored = C::from_coords(&[(0, 0, true), (-1, 0, false), (0, 1, false)]).unwrap();
        assert_eq!(signature(&mirrored).triple_signs, vec![-1]);
    }

    #[test]
    fn signature_indexing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c: C = sample_cake(&mut rng, 8, 3, 500);
        let sig = signature(&c);
        assert_eq!(sig.triple_signs.len(), 56);
        for i in 0..8 {
            for j in (i + 1)..8 {
                for k in (j + 1)..8 {
                    assert_eq!(sig.sign(i, j, k), c.board().sign(i, j, k));
                }
            }
        }
    }

    #[test]
    fn rigid_motions_and_mirrors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c: C = sample_cake(&mut rng, 9, 4, 300);
        let ident: Vec<usize> = (0..9).collect();
        let moved = map_cake(&c, |x, y| (-y * 3 + 17, x * 3 - 5), &ident);
        let b = order_equivalent(&c, &moved).unwrap();
        assert_eq!(b.sigma, 1);
        assert!(b.is_order_preserving(c.board(), moved.board()));
        let mirror = map_cake(&c, |x, y| (-x, y), &random_perm(&mut rng, 9));
        let b = order_equivalent(&c, &mirror).unwrap();
        assert_eq!(b.sigma, -1);
        assert!(b.is_order_preserving(c.board(), mirror.board()));
    }

    #[test]
    fn weight_mismatch_is_not_equivalent() {
        let a = C::from_coords(&[(0, 0, true), (1, 0, false), (0, 1, false)]).unwrap();
        let b = C::from_coords(&[(0, 0, true), (1, 0, true), (0, 1, false)]).unwrap();
        assert!(order_equivalent(&a, &b).is_none());
        assert_ne!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
        let c4 = C::from_coords(&[(0, 0, true), (1, 0, false), (0, 1, false), (5, 5, false)])
            .unwrap();
        assert!(order_equivalent(&a, &c4).is_none());
    }

    #[test]
    fn convex_vs_nonconvex_quadrilateral() {
        let square = C::from_coords(&[(0, 0, false), (4, 0, false), (4, 4, false), (0, 4, false)])
            .unwrap();
        let dart = C::from_coords(&[(0, 0, false), (4, 0, false), (1, 1, false), (0, 4, false)])
            .unwrap();
        assert!(order_equivalent(&square, &dart).is_none());
        assert_ne!(canonical_key(&square).unwrap(), canonical_key(&dart).unwrap());
    }

    #[test]
    fn canonical_key_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c: C = sample_cake(&mut rng, 10, 4, 300);
        assert_eq!(canonical_key(&c), Err(OrderTypeError::TooLarge(10)));
        let c: C = sample_cake(&mut rng, 9, 9, 300);
        let mirror = map_cake(&c, |x, y| (y, x), &random_perm(&mut rng, 9));
        assert_eq!(canonical_key(&c).unwrap(), canonical_key(&mirror).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn equivalence_axioms(seed in any::<u64>(), n in 3usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: C = sample_cake(&mut rng, n, n / 2, 50);
            let id: Vec<usize> = (0..n).collect();
            let b = map_cake(&a, |x, y| (2 * x - y, x + y), &random_perm(&mut rng, n));
            let c = map_cake(&b, |x, y| (y, x), &random_perm(&mut rng, n));
            let refl = order_equivalent(&a, &a).unwrap();
            prop_assert_eq!(refl.sigma, 1);
            prop_assert!(refl.is_order_preserving(a.board(), a.board()));
            let identity = Bijection { mapping: id, sigma: 1 };
            prop_assert!(identity.is_order_preserving(a.board(), a.board()));
            let ab = order_equivalent(&a, &b).unwrap();
            let ba = order_equivalent(&b, &a).unwrap();
            prop_assert_eq!(ab.sigma, ba.sigma);
            prop_assert!(ab.inverse().is_order_preserving(b.board(), a.board()));
            let bc = order_equivalent(&b, &c).unwrap();
            prop_assert!(ab.then(&bc).is_order_preserving(a.board(), c.board()));
            prop_assert!(order_equivalent(&a, &c).is_some());
            // Independent random cakes: the search agrees with key equality.
            let d: C = sample_cake(&mut rng, n, n / 2, 50);
            prop_assert_eq!(
                order_equivalent(&a, &d).is_some(),
                canonical_key(&a).unwrap() == canonical_key(&d).unwrap()
            );
            prop_assert_eq!(canonical_key(&a).unwrap(), canonical_key(&c).unwrap());
        }

        #[test]
        fn extremal_sets_commute_with_bijection(seed in any::<u64>(), n in 4usize..10, sub in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: C = sample_cake(&mut rng, n, n / 2, 200);
            let b = map_cake(&a, |x, y| (-3 * x + y, 2 * x + 5 * y), &random_perm(&mut rng, n));
            let pi = order_equivalent(&a, &b).unwrap();
            let set = crate::cake::SubsetMask(sub & a.full().0);
            let image = crate::cake::SubsetMask::from_ids(set.iter().map(|i| pi.mapping[i]));
            let ex_a = a.board().extremal(set);
            let ex_b = b.board().extremal(image);
            prop_assert_eq!(ex_b, crate::cake::SubsetMask::from_ids(ex_a.iter().map(|i| pi.mapping[i])));
        }
    }
}
