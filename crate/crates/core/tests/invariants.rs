use convex_grab::cake::sample_cake;
use convex_grab::conjectures::implication_consistent;
use convex_grab::engine::{replay, scores};
use convex_grab::geom::extremal_set_by_triangles;
use convex_grab::{Cake, Gameplay, SubsetMask};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_cake(seed: u64, n: usize) -> Cake {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_cake(&mut rng, n, (seed as usize) % (n + 1), 40)
}

/// Extremal ids of `mask` by the O(n^4) triangle definition.
fn oracle_extremal(cake: &Cake, mask: SubsetMask) -> Vec<usize> {
    let ids = mask.to_vec();
    let points: Vec<_> = ids.iter().map(|&i| cake.point(i).clone()).collect();
    extremal_set_by_triangles(&points)
        .unwrap()
        .into_iter()
        .map(|k| ids[k])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn referee_accepts_exactly_extremal_sequences(
        seed in any::<u64>(),
        n in 1usize..=9,
        raw in prop::collection::vec((any::<bool>(), 0usize..12), 0..10),
    ) {
        let cake = random_cake(seed, n);
        // Mostly legal picks, with an occasional arbitrary id.
        let mut picks = Vec::new();
        let mut m = cake.full();
        for (arbitrary, k) in raw {
            let ex = if m.is_empty() { Vec::new() } else { oracle_extremal(&cake, m) };
            let id = if arbitrary && k % 3 == 0 || ex.is_empty() { k } else { ex[k % ex.len()] };
            m = m.without(id);
            picks.push(id);
        }
        let q = Gameplay::new(picks.clone());
        let mut remaining = cake.full();
        let mut legal_prefix = 0;
        for &id in &picks {
            if !remaining.contains(id) || !oracle_extremal(&cake, remaining).contains(&id) {
                break;
            }
            remaining = remaining.without(id);
            legal_prefix += 1;
        }
        match replay(cake.board(), &q) {
            Ok(states) => {
                prop_assert_eq!(legal_prefix, picks.len());
                prop_assert_eq!(states.last().unwrap().remaining(), remaining);
                let (a, b) = scores(cake.board(), &q).unwrap();
                let taken = cake.full().minus(remaining);
                prop_assert_eq!(a + b, cake.board().total_weight(taken));
            }
            Err(_) => prop_assert!(legal_prefix < picks.len()),
        }
    }

    #[test]
    fn checkers_are_mutually_consistent(seed in any::<u64>(), n in 1usize..=7) {
        let cake = random_cake(seed, n);
        prop_assert_eq!(implication_consistent(cake.board().clone()).unwrap(), None);
    }
}
