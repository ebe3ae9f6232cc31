use std::collections::HashSet;

use gnt_core::multiindex::{enumerate_i, enumerate_i_capped, enumerate_up_to, multinomial};
use gnt_core::{IndexMatrix, MultiIndex};
use num_bigint::BigUint;
use proptest::prelude::*;

fn u(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

#[test]
fn music_operators() {
    assert_eq!(u(&[0, 0]).sharp(0), u(&[1, 0]));
    assert_eq!(u(&[2, 1]).flat(1).unwrap(), u(&[2, 0]));
    assert_eq!(u(&[3, 5]).sharp(0).flat(0).unwrap(), u(&[3, 5]));
    assert!(u(&[0, 1]).flat(0).is_err());
    assert_eq!(u(&[0, 1]).try_flat(0), None);
}

#[test]
fn different_q_never_equal() {
    assert_ne!(MultiIndex::zero(1), MultiIndex::zero(2));
}

#[test]
fn index_matrices_small() {
    let one = enumerate_i(2, 1).unwrap();
    let want: HashSet<_> = [
        IndexMatrix::from_rows(&[vec![1], vec![0]]).unwrap(),
        IndexMatrix::from_rows(&[vec![0], vec![1]]).unwrap(),
    ]
    .into_iter()
    .collect();
    assert_eq!(one.into_iter().collect::<HashSet<_>>(), want);

    let empty = enumerate_i(5, 0).unwrap();
    assert_eq!(empty.len(), 1);
    assert_eq!(empty[0].columns(), 0);
    assert!(empty[0].weight().is_zero());
}

/// Every {0,1} q×s matrix, filtered by the membership predicates written out here.
fn brute_force_i(q: usize, s: usize) -> HashSet<IndexMatrix> {
    let cells = q * s;
    (0u32..(1 << cells))
        .filter_map(|bits| {
            let rows: Vec<Vec<u32>> = (0..q)
                .map(|a| (0..s).map(|l| (bits >> (a * s + l)) & 1).collect())
                .collect();
            let norm: u32 = rows.iter().flatten().sum();
            let one_each = (0..s).all(|l| rows.iter().filter(|r| r[l] == 1).count() == 1);
            (norm as usize == s && one_each).then(|| IndexMatrix::from_rows(&rows).unwrap())
        })
        .collect()
}

#[test]
fn index_matrices_match_brute_force() {
    let got: HashSet<_> = enumerate_i(3, 2).unwrap().into_iter().collect();
    assert_eq!(got.len(), 9);
    assert_eq!(got, brute_force_i(3, 2));
    for (q, s) in [(1, 3), (2, 3), (4, 2)] {
        let got: HashSet<_> = enumerate_i(q, s).unwrap().into_iter().collect();
        assert_eq!(got, brute_force_i(q, s), "q={q} s={s}");
    }
}

#[test]
fn enumeration_cap() {
    assert!(enumerate_i(2, 13).is_err());
    assert_eq!(enumerate_i_capped(1, 13, 13).unwrap().len(), 1);
}

/// Pascal-style recursion: C(r; u) = Σ_α C(r-1; α♭u).
fn multinomial_pascal(u: &MultiIndex) -> BigUint {
    if u.is_zero() {
        return BigUint::from(1u32);
    }
    (0..u.q())
        .filter_map(|a| u.try_flat(a))
        .map(|v| multinomial_pascal(&v))
        .sum()
}

#[test]
fn multinomials() {
    assert_eq!(multinomial(2, &u(&[1, 1])).unwrap(), BigUint::from(2u32));
    assert_eq!(multinomial(4, &u(&[2, 2])).unwrap(), BigUint::from(6u32));
    let m = multinomial(6, &u(&[2, 2, 2])).unwrap();
    assert_eq!(m, BigUint::from(90u32));
    assert_eq!(m, multinomial_pascal(&u(&[2, 2, 2])));
    assert!(multinomial(3, &u(&[1, 1])).is_err());
}

#[test]
fn graded_enumeration_is_sorted_and_complete() {
    let all = enumerate_up_to(3, 4);
    // C(q + n, n) indices of length ≤ n
    assert_eq!(all.len(), 35);
    assert!(all.windows(2).all(|w| w[0].length() <= w[1].length()));
    assert_eq!(all.iter().collect::<HashSet<_>>().len(), all.len());
}

proptest! {
    #[test]
    fn counts_and_membership(q in 1usize..=4, s in 0usize..=5) {
        let all = enumerate_i(q, s).unwrap();
        prop_assert_eq!(all.len(), q.pow(s as u32));
        for i in &all {
            prop_assert!(i.entries_binary());
            prop_assert_eq!(i.norm(), s);
            prop_assert!(i.one_per_column());
        }
        prop_assert_eq!(all.iter().collect::<HashSet<_>>().len(), all.len());
    }

    #[test]
    fn prepending_partitions(q in 1usize..=4, s in 0usize..=4) {
        let next: HashSet<_> = enumerate_i(q, s + 1).unwrap().into_iter().collect();
        let base = enumerate_i(q, s).unwrap();
        let mut union = HashSet::new();
        for beta in 0..q {
            for i in &base {
                // disjoint: nothing is produced twice across all β
                prop_assert!(union.insert(i.prepend(beta)));
            }
        }
        prop_assert_eq!(union, next);
    }

    #[test]
    fn flats_commute(v in proptest::collection::vec(0u32..4, 1..5), a in 0usize..4, b in 0usize..4) {
        let q = v.len();
        let (a, b) = (a % q, b % q);
        let x = MultiIndex::new(v);
        if let (Some(ab), Some(ba)) = (
            x.try_flat(b).and_then(|y| y.try_flat(a)),
            x.try_flat(a).and_then(|y| y.try_flat(b)),
        ) {
            prop_assert_eq!(ab, ba);
        }
        prop_assert_eq!(x.sharp(a).flat(a).unwrap(), x.clone());
        prop_assert_eq!(x.sharp(a).sharp(b), x.sharp(b).sharp(a));
    }
}
