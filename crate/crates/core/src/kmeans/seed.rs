//! Initial centroid selection.
//!
//! Both methods work on the distinct points of the dataset in a canonical
//! (lexicographic) order and draw with keys hashed from point content and
//! the seed, so the chosen points do not depend on row order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::Centroids;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hash::{derive_seed, hash_reals, unit_open};
use crate::linalg::squared_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seeding {
    /// D²-weighted sequential sampling.
    KMeansPP,
    /// `k` distinct points, uniformly.
    Random,
}

impl std::str::FromStr for Seeding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeanspp" => Ok(Seeding::KMeansPP),
            "random" => Ok(Seeding::Random),
            other => Err(Error::Argument(format!(
                "unknown seeding {other:?}, expected kmeanspp or random"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Seeds {
    pub centroids: Centroids,
    /// Fewer than `k` distinct points existed, so some centroids repeat.
    pub duplicated: bool,
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x + 0.0).total_cmp(&(y + 0.0)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Distinct rows in lexicographic order, as (representative row, multiplicity).
fn distinct_points(data: &Dataset) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..data.n_rows()).collect();
    order.sort_by(|&a, &b| lexicographic(data.feature_row(a), data.feature_row(b)));
    let mut out: Vec<(usize, usize)> = Vec::new();
    for i in order {
        match out.last_mut() {
            Some((rep, count)) if lexicographic(data.feature_row(*rep), data.feature_row(i)).is_eq() => {
                *count += 1
            }
            _ => out.push((i, 1)),
        }
    }
    out
}

pub fn seed_centroids(data: &Dataset, k: usize, method: Seeding, rng_seed: u64) -> Result<Seeds> {
    let n = data.n_rows();
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Argument(format!("k = {k} exceeds the number of rows ({n})")));
    }
    let distinct = distinct_points(data);
    let point = |i: usize| data.feature_row(distinct[i].0);
    let draw_key = |i: usize, draw: u64| unit_open(hash_reals(point(i), derive_seed(rng_seed, draw)));

    let mut chosen: Vec<usize> = match method {
        Seeding::Random => {
            let mut keyed: Vec<(f64, usize)> = (0..distinct.len()).map(|i| (draw_key(i, 0), i)).collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().take(k).map(|(_, i)| i).collect()
        }
        Seeding::KMeansPP => {
            let first = (0..distinct.len())
                .min_by(|&a, &b| draw_key(a, 0).total_cmp(&draw_key(b, 0)))
                .expect("dataset is non-empty");
            let mut chosen = vec![first];
            let mut nearest: Vec<f64> = (0..distinct.len())
                .map(|i| squared_distance(point(i), point(first)))
                .collect();
            for draw in 1..k as u64 {
                // exponential race: the smallest -ln(u) / weight wins with
                // probability proportional to weight
                let mut best: Option<(f64, usize)> = None;
                for (i, &d2) in nearest.iter().enumerate() {
                    if d2 <= 0.0 {
                        continue;
                    }
                    let weight = d2 * distinct[i].1 as f64;
                    let key = -draw_key(i, draw).ln() / weight;
                    if best.is_none_or(|(b, _)| key < b) {
                        best = Some((key, i));
                    }
                }
                let Some((_, next)) = best else { break };
                chosen.push(next);
                for (i, d2) in nearest.iter_mut().enumerate() {
                    *d2 = d2.min(squared_distance(point(i), point(next)));
                }
            }
            chosen
        }
    };

    let duplicated = chosen.len() < k;
    let unique = chosen.len();
    for i in 0..k - unique {
        chosen.push(chosen[i % unique]);
    }
    let columns: Vec<Vec<f64>> = chosen.iter().map(|&i| point(i).to_vec()).collect();
    Ok(Seeds {
        centroids: Centroids::from_points(&columns)?,
        duplicated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 4) as f64, (i / 4) as f64]).collect();
        Dataset::from_rows(&rows, None).unwrap()
    }

    fn sorted_points(c: &Centroids) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = (0..c.k()).map(|j| c.centroid(j).to_vec()).collect();
        pts.sort_by(|a, b| lexicographic(a, b));
        pts
    }

    #[test]
    fn k_equals_n_picks_every_point() {
        let data = grid();
        for method in [Seeding::Random, Seeding::KMeansPP] {
            let seeds = seed_centroids(&data, 12, method, 5).unwrap();
            assert!(!seeds.duplicated);
            let mut expect: Vec<Vec<f64>> = (0..12).map(|i| data.feature_row(i).to_vec()).collect();
            expect.sort_by(|a, b| lexicographic(a, b));
            assert_eq!(sorted_points(&seeds.centroids), expect);
        }
    }

    #[test]
    fn deterministic_and_order_independent() {
        let data = grid();
        let reversed = data.permuted(&(0..12).rev().collect::<Vec<_>>()).unwrap();
        for method in [Seeding::Random, Seeding::KMeansPP] {
            let a = seed_centroids(&data, 4, method, 11).unwrap().centroids;
            let b = seed_centroids(&data, 4, method, 11).unwrap().centroids;
            let c = seed_centroids(&reversed, 4, method, 11).unwrap().centroids;
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn duplicates_fall_back_with_flag() {
        let data = Dataset::from_rows(&[vec![1.0], vec![1.0], vec![2.0]], None).unwrap();
        for method in [Seeding::Random, Seeding::KMeansPP] {
            let seeds = seed_centroids(&data, 3, method, 0).unwrap();
            assert!(seeds.duplicated);
            assert_eq!(seeds.centroids.k(), 3);
        }
    }

    #[test]
    fn invalid_k() {
        let data = grid();
        assert!(matches!(seed_centroids(&data, 0, Seeding::Random, 0), Err(Error::Argument(_))));
        assert!(matches!(seed_centroids(&data, 13, Seeding::KMeansPP, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn parses_names() {
        assert_eq!("kmeanspp".parse::<Seeding>().unwrap(), Seeding::KMeansPP);
        assert_eq!("random".parse::<Seeding>().unwrap(), Seeding::Random);
        assert!("lloyd".parse::<Seeding>().is_err());
    }
}
