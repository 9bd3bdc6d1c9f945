mod common;

use std::collections::{HashMap, HashSet};

use common::{rng, Zipf};
use foldstat::run_parallel;
use foldstat::sketch::{CountMinFold, CountMinState, FmFold, FmState};
use rand::Rng;

#[test]
fn rows_sum_to_total() {
    let mut r = rng(1);
    let mut s = CountMinState::with_error(0.01, 0.01, 3).unwrap();
    for _ in 0..1000 {
        let item = r.random::<u64>().to_le_bytes();
        s.update(&item, r.random_range(1..4)).unwrap();
    }
    for row in 0..s.depth() {
        assert_eq!(s.row(row).iter().sum::<u64>(), s.total());
    }
}

#[test]
fn never_underestimates_and_is_monotone() {
    let zipf = Zipf::new(2000, 1.1);
    let mut r = rng(2);
    let mut s = CountMinState::with_error(0.05, 0.05, 9).unwrap();
    let mut exact: HashMap<usize, u64> = HashMap::new();
    let mut last: HashMap<usize, u64> = HashMap::new();
    for step in 0..20_000 {
        let k = zipf.sample(&mut r);
        s.update(k.to_string().as_bytes(), 1).unwrap();
        *exact.entry(k).or_default() += 1;
        if step % 997 == 0 {
            for (&item, &count) in &exact {
                let e = s.estimate(item.to_string().as_bytes());
                assert!(e >= count);
                assert!(e >= *last.get(&item).unwrap_or(&0));
                last.insert(item, e);
            }
        }
    }
}

#[test]
fn exact_when_no_row_collides() {
    let mut s = CountMinState::new(64, 3, 17).unwrap();
    let items: Vec<String> = (0..40).map(|i| format!("key{i}")).collect();
    for (i, item) in items.iter().enumerate() {
        s.update(item.as_bytes(), i as u64 + 1).unwrap();
    }
    let mut audited = 0;
    for (i, item) in items.iter().enumerate() {
        let alone = (0..s.depth()).any(|r| {
            let c = s.column(r, item.as_bytes());
            items
                .iter()
                .filter(|other| *other != item)
                .all(|other| s.column(r, other.as_bytes()) != c)
        });
        if alone {
            assert_eq!(s.estimate(item.as_bytes()), i as u64 + 1);
            audited += 1;
        }
    }
    assert!(audited > 20);
}

#[test]
fn split_stream_merge_equals_single_stream() {
    let mut r = rng(3);
    let items: Vec<String> = (0..5000).map(|_| r.random_range(0..800u32).to_string()).collect();
    let cm = CountMinFold {
        width: 272,
        depth: 5,
        seed: 1,
    };
    let whole = run_parallel(&cm, items.as_slice(), 1).unwrap();
    let (a, b) = items.split_at(1234);
    let merged = run_parallel(&cm, a, 1).unwrap().merge(&run_parallel(&cm, b, 1).unwrap()).unwrap();
    assert_eq!(merged, whole);
}

#[test]
fn fm_single_item_many_times() {
    let mut estimates: Vec<f64> = (0..50)
        .map(|seed| {
            let mut s = FmState::new(64, seed).unwrap();
            for _ in 0..10_000 {
                s.update(b"same");
            }
            s.estimate()
        })
        .collect();
    estimates.sort_by(f64::total_cmp);
    let median = estimates[25];
    assert!((0.5..=2.0).contains(&median), "{median}");
}

#[test]
fn fm_relative_error_at_twenty_thousand() {
    let n = 20_000;
    let items: Vec<String> = (0..n).map(|i| format!("distinct-{i}")).collect();
    let mut errors: Vec<f64> = (0..21)
        .map(|seed| {
            let s = run_parallel(&FmFold { num_bitmaps: 64, seed }, items.as_slice(), 2).unwrap();
            (s.estimate() - n as f64).abs() / n as f64
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    assert!(errors[10] <= 0.2, "median relative error {}", errors[10]);
}

#[test]
fn fm_estimate_grows_with_distinct_count() {
    let mut s = FmState::new(64, 4).unwrap();
    let mut seen = HashSet::new();
    let mut checkpoints = Vec::new();
    for i in 0..50_000u32 {
        s.update(&i.to_le_bytes());
        seen.insert(i);
        if (i + 1) % 10_000 == 0 {
            checkpoints.push(s.estimate());
        }
    }
    assert!(checkpoints.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(seen.len(), 50_000);
}
