//! Transfer-matrix count of the rank-N product example, checked against enumeration.
//!
//! A reduced word in `g1..gN` maps to `F_2` by `g1 -> a1`, `g2 -> a2` and the other
//! generators to the identity. Its first displacement is the distance of a walk on
//! the 4-regular tree whose steps may cancel. The state is the current distance `k`
//! and the kind of the last letter.

use std::collections::BTreeMap;

use slopegrowth::action::tally;
use slopegrowth::{presets, Dedup};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Last {
    Start,
    Stay,
    Away,
    Toward,
}

/// Successor counts `(away, toward, stay)` from distance `k` after a letter of kind `last`.
fn moves(k: usize, last: Last, stay_letters: u64) -> (u64, u64, u64) {
    let stay = if last == Last::Stay { stay_letters - 1 } else { stay_letters };
    let (away, toward) = match (last, k) {
        (Last::Away, _) => (3, 0),
        (Last::Toward, 0) => (3, 0),
        (Last::Toward, _) => (2, 1),
        (_, 0) => (4, 0),
        _ => (3, 1),
    };
    (away, toward, stay)
}

/// `out[l][k]`: reduced words of length `l` with first displacement `k`.
fn distribution(n_rank: usize, l_max: usize) -> Vec<Vec<u128>> {
    let stay_letters = 2 * (n_rank as u64 - 2);
    let mut state: BTreeMap<(usize, Last), u128> = BTreeMap::from([((0, Last::Start), 1)]);
    let mut out = vec![vec![1]];
    for _ in 0..l_max {
        let mut next = BTreeMap::new();
        for (&(k, last), &c) in &state {
            let (away, toward, stay) = moves(k, last, stay_letters);
            *next.entry((k, Last::Stay)).or_insert(0) += c * stay as u128;
            *next.entry((k + 1, Last::Away)).or_insert(0) += c * away as u128;
            if toward > 0 {
                *next.entry((k - 1, Last::Toward)).or_insert(0) += c * toward as u128;
            }
        }
        state = next;
        let mut row = vec![0u128; out.len() + 1];
        for (&(k, _), &c) in &state {
            row[k] += c;
        }
        out.push(row);
    }
    out
}

/// Log ratio of the `k = 0` column between lengths `l - 1` and `l`, renormalising each step.
fn kernel_rate(n_rank: usize, l: usize) -> f64 {
    let stay_letters = 2.0 * (n_rank as f64 - 2.0);
    let mut state: BTreeMap<(usize, Last), f64> = BTreeMap::from([((0, Last::Start), 1.0)]);
    let mut rate = 0.0;
    for _ in 0..l {
        let mut next = BTreeMap::new();
        for (&(k, last), &c) in &state {
            let (away, toward, _) = moves(k, last, stay_letters as u64);
            let stay = if last == Last::Stay { stay_letters - 1.0 } else { stay_letters };
            *next.entry((k, Last::Stay)).or_insert(0.0) += c * stay;
            *next.entry((k + 1, Last::Away)).or_insert(0.0) += c * away as f64;
            if toward > 0 {
                *next.entry((k - 1, Last::Toward)).or_insert(0.0) += c * toward as f64;
            }
        }
        let kernel: f64 = next.iter().filter(|((k, _), _)| *k == 0).map(|(_, c)| c).sum();
        rate = kernel.ln();
        state = next.into_iter().map(|(key, c)| (key, c / kernel)).collect();
    }
    rate
}

fn check_against_enumeration(n_rank: usize, l_max: u32) {
    let spec = presets::example51(n_rank).unwrap();
    let dist = distribution(n_rank, l_max as usize);
    for (l, row) in dist.iter().enumerate() {
        let total: u128 = row.iter().sum();
        let expected = if l == 0 { 1 } else { 2 * n_rank as u128 * (2 * n_rank as u128 - 1).pow(l as u32 - 1) };
        assert_eq!(total, expected, "length {l}");
    }
    let t = tally(&spec, l_max, Dedup::Off, 2).unwrap();
    let mut seen = 0u128;
    for (d, c) in t.entries() {
        // the second projection is injective on reduced words, so d2 is the word length
        let row = &dist[d.d2 as usize];
        assert_eq!(row.get(d.d1 as usize).copied().unwrap_or(0), c as u128, "class ({}, {})", d.d1, d.d2);
        seen += c as u128;
    }
    // the tally leaves out the identity
    assert_eq!(seen + 1, dist.iter().flatten().sum::<u128>());
}

#[test]
fn rank4_distribution_matches_enumeration() {
    check_against_enumeration(4, 8);
}

#[test]
fn rank5_distribution_matches_enumeration() {
    check_against_enumeration(5, 6);
}

#[test]
fn rank4_kernel_prefix() {
    let dist = distribution(4, 9);
    let kernel: Vec<u128> = dist[1..].iter().map(|r| r[0]).collect();
    assert_eq!(kernel, [4, 12, 52, 284, 1540, 8268, 45364, 254300, 1443076]);
}

#[test]
fn rank4_vertical_kernel_grows_faster_than_log3() {
    // words with trivial first image grow like the cogrowth of F_2 inside F_4, not like F_2
    let rate = kernel_rate(4, 400);
    assert!(rate > 3f64.ln() + 0.6, "{rate}");
    assert!((rate - 1.85).abs() < 0.02, "{rate}");
}

#[test]
fn vertical_slope_column_is_the_kernel() {
    let spec = presets::example51(4).unwrap();
    let s = slopegrowth::spectrum::compute_spectrum(&spec, 8, Default::default(), Dedup::Off, 2, None).unwrap();
    let series = s.slope_series(1e-9, std::f64::consts::FRAC_PI_2).unwrap();
    let dist = distribution(4, 8);
    // d1 = 0 puts the element in annulus d2 + 1
    for (i, &c) in series.iter().enumerate() {
        assert_eq!(c as u128, if i == 0 { 0 } else { dist[i][0] }, "annulus {}", i + 1);
    }
}
