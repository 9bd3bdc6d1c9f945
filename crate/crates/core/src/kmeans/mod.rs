//! Lloyd's k-means.
//!
//! The centroids are inter-iteration state: each pass reads them but never
//! writes them. A pass folds every row into per-centroid sums and counts
//! (the intra-iteration state), and the driver repositions each centroid to
//! the mean of its points. Each row's previous assignment is passed in, so a
//! pass computes exactly one nearest-centroid search per row and counts
//! reassignments on the way.

mod seed;

pub use seed::{seed_centroids, Seeding, Seeds};

use serde::{Deserialize, Serialize};

use crate::data::{DataRow, Dataset};
use crate::driver::{iterate, Footprint, IterationLedger, LedgerConfig};
use crate::error::{Error, Result};
use crate::fold::{run_parallel, FoldSpec};
use crate::linalg::{closest_column, Matrix};

/// Marks a row with no previous assignment.
pub const UNASSIGNED: u32 = u32::MAX;

/// `k` centroids in `d` dimensions, stored as the columns of a `d x k` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroids {
    positions: Matrix,
}

impl Centroids {
    pub fn new(positions: Matrix) -> Result<Self> {
        if positions.cols() == 0 {
            return Err(Error::Argument("need at least one centroid".into()));
        }
        if positions.cols() >= UNASSIGNED as usize {
            return Err(Error::Argument("too many centroids".into()));
        }
        if positions.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("centroid coordinates must be finite".into()));
        }
        Ok(Self { positions })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        Self::new(Matrix::from_columns(d, points)?)
    }

    pub fn k(&self) -> usize {
        self.positions.cols()
    }

    pub fn d(&self) -> usize {
        self.positions.rows()
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        self.positions.col(j)
    }

    pub fn positions(&self) -> &Matrix {
        &self.positions
    }

    /// Nearest centroid and its squared distance; ties go to the lowest index.
    pub fn closest(&self, point: &[f64]) -> Result<(usize, f64)> {
        closest_column(&self.positions, point)
    }
}

/// A row kept as a reseeding candidate for empty clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct FarPoint {
    pub distance: f64,
    pub row: usize,
    pub coords: Vec<f64>,
}

impl FarPoint {
    fn precedes(&self, other: &FarPoint) -> bool {
        self.distance > other.distance || (self.distance == other.distance && self.row < other.row)
    }
}

/// Accumulators written during one assignment pass.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansIntraState {
    pub sums: Matrix,
    pub counts: Vec<u64>,
    pub reassigned: u64,
    pub objective_accum: f64,
    /// Assignments of the rows absorbed so far, in row order.
    pub assignments: Vec<u32>,
    /// The rows farthest from their centroid, best first, at most `k - 1`.
    pub farthest: Vec<FarPoint>,
}

impl KMeansIntraState {
    pub fn new(k: usize, d: usize) -> Self {
        Self {
            sums: Matrix::zeros(d, k),
            counts: vec![0; k],
            reassigned: 0,
            objective_accum: 0.0,
            assignments: Vec::new(),
            farthest: Vec::new(),
        }
    }

    pub fn num_rows(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn offer_far(&mut self, candidate: FarPoint) {
        let capacity = self.counts.len() - 1;
        if capacity == 0 {
            return;
        }
        if self.farthest.len() == capacity && !candidate.precedes(self.farthest.last().unwrap()) {
            return;
        }
        let at = self.farthest.partition_point(|p| p.precedes(&candidate));
        self.farthest.insert(at, candidate);
        self.farthest.truncate(capacity);
    }

    /// Combines with the state of the rows that follow this one.
    pub fn merge(mut self, other: Self) -> Result<Self> {
        if self.counts.len() != other.counts.len() || self.sums.rows() != other.sums.rows() {
            return Err(Error::Merge("k-means states of different shape".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for j in 0..self.counts.len() {
            for (a, b) in self.sums.col_mut(j).iter_mut().zip(other.sums.col(j)) {
                *a += b;
            }
        }
        self.reassigned += other.reassigned;
        self.objective_accum += other.objective_accum;
        self.assignments.extend_from_slice(&other.assignments);
        for p in other.farthest {
            self.offer_far(p);
        }
        Ok(self)
    }
}

/// Assigns one point to its nearest centroid. Only `intra` changes.
pub fn kmeans_transition(
    intra: &mut KMeansIntraState,
    inter: &Centroids,
    row: usize,
    point: &[f64],
    prev_assignment: u32,
) -> Result<usize> {
    let (j, distance) = inter.closest(point)?;
    for (acc, x) in intra.sums.col_mut(j).iter_mut().zip(point) {
        *acc += x;
    }
    intra.counts[j] += 1;
    intra.objective_accum += distance;
    if j as u32 != prev_assignment {
        intra.reassigned += 1;
    }
    intra.assignments.push(j as u32);
    if intra.counts.len() > 1 {
        intra.offer_far(FarPoint {
            distance,
            row,
            coords: point.to_vec(),
        });
    }
    Ok(j)
}

#[derive(Debug, Clone)]
pub struct Reposition {
    pub centroids: Centroids,
    pub frac_reassigned: f64,
    /// Objective of the assignment pass, i.e. under the old centroids.
    pub objective: f64,
    /// Empty clusters moved onto far points.
    pub reseeded: usize,
}

/// Moves every centroid to the mean of its points. An empty cluster takes
/// the farthest remaining point (largest squared distance to its own
/// centroid, lowest row first).
pub fn kmeans_final(intra: &KMeansIntraState, inter: &Centroids) -> Result<Reposition> {
    let n = intra.num_rows();
    if n == 0 {
        return Err(Error::EmptyInput("k-means pass over zero rows"));
    }
    let mut positions = Matrix::zeros(inter.d(), inter.k());
    let mut far = intra.farthest.iter();
    let mut reseeded = 0;
    for j in 0..inter.k() {
        let dst = positions.col_mut(j);
        if intra.counts[j] > 0 {
            let count = intra.counts[j] as f64;
            for (p, s) in dst.iter_mut().zip(intra.sums.col(j)) {
                *p = s / count;
            }
        } else if let Some(p) = far.next() {
            dst.copy_from_slice(&p.coords);
            reseeded += 1;
        } else {
            dst.copy_from_slice(inter.centroid(j));
        }
    }
    Ok(Reposition {
        centroids: Centroids::new(positions)?,
        frac_reassigned: intra.reassigned as f64 / n as f64,
        objective: intra.objective_accum,
        reseeded,
    })
}

/// One assignment pass as a fold over dataset rows.
#[derive(Debug, Clone, Copy)]
pub struct KMeansPass<'a> {
    pub centroids: &'a Centroids,
    /// Previous assignment per row, [`UNASSIGNED`] if none; empty means none for all.
    pub previous: &'a [u32],
}

impl FoldSpec<Dataset> for KMeansPass<'_> {
    type State = KMeansIntraState;
    type Output = (Reposition, Vec<u32>);

    fn identity(&self) -> KMeansIntraState {
        KMeansIntraState::new(self.centroids.k(), self.centroids.d())
    }

    fn transition(&self, state: &mut KMeansIntraState, row: DataRow<'_>) -> Result<()> {
        let prev = self.previous.get(row.index).copied().unwrap_or(UNASSIGNED);
        kmeans_transition(state, self.centroids, row.index, row.features, prev).map(|_| ())
    }

    fn merge(&self, left: KMeansIntraState, right: KMeansIntraState) -> Result<KMeansIntraState> {
        left.merge(right)
    }

    fn finalize(&self, state: KMeansIntraState) -> Result<(Reposition, Vec<u32>)> {
        let reposition = kmeans_final(&state, self.centroids)?;
        Ok((reposition, state.assignments))
    }
}

/// Inter-iteration state recorded in the ledger after each pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansIterate {
    pub centroids: Centroids,
    /// Objective of the pass, measured against the centroids it started from.
    pub objective: f64,
    pub frac_reassigned: f64,
    /// Whether repositioning changed any coordinate.
    pub moved: bool,
    pub reseeded: usize,
}

impl Footprint for KMeansIterate {
    fn footprint_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.centroids.k() * self.centroids.d() * std::mem::size_of::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub k: usize,
    pub seeding: Seeding,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once at most this fraction of rows changed cluster in a pass.
    pub reassign_tol: f64,
    pub workers: usize,
    pub ledger: LedgerConfig,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            seeding: Seeding::KMeansPP,
            seed: 0,
            max_iter: 100,
            reassign_tol: 0.0,
            workers: 1,
            ledger: LedgerConfig::default(),
        }
    }
}

#[derive(Debug)]
pub struct KMeansResult {
    pub centroids: Centroids,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the nearest final centroid.
    pub objective: f64,
    pub iterations: usize,
    pub frac_reassigned_final: f64,
    pub converged: bool,
    /// Seeding ran out of distinct points and repeated some.
    pub duplicate_seeds: bool,
    pub ledger: IterationLedger<KMeansIterate>,
}

/// Runs Lloyd's algorithm with centroids from `init`.
pub fn kmeans_from(data: &Dataset, init: Centroids, config: &KMeansConfig) -> Result<KMeansResult> {
    if !(0.0..1.0).contains(&config.reassign_tol) {
        return Err(Error::Argument("reassign_tol must lie in [0, 1)".into()));
    }
    if data.n_rows() == 0 {
        return Err(Error::EmptyInput("k-means over zero rows"));
    }
    if init.d() != data.n_features() {
        return Err(Error::dim(data.n_features(), init.d()));
    }
    let mut assignments: Vec<u32> = Vec::new();
    let start = KMeansIterate {
        centroids: init,
        objective: f64::INFINITY,
        frac_reassigned: 1.0,
        moved: true,
        reseeded: 0,
    };
    let tol = config.reassign_tol;
    let outcome = iterate(
        data,
        config.workers,
        start,
        config.max_iter,
        config.ledger.clone(),
        |current: &KMeansIterate, data: &Dataset, workers| {
            let pass = KMeansPass {
                centroids: &current.centroids,
                previous: &assignments,
            };
            let (reposition, next_assignments) = run_parallel(&pass, data, workers)?;
            assignments = next_assignments;
            let moved = reposition.centroids != current.centroids;
            let objective = reposition.objective;
            Ok((
                KMeansIterate {
                    centroids: reposition.centroids,
                    objective,
                    frac_reassigned: reposition.frac_reassigned,
                    moved,
                    reseeded: reposition.reseeded,
                },
                objective,
            ))
        },
        |ledger| {
            ledger
                .last_state()
                .is_some_and(|s| s.frac_reassigned <= tol || !s.moved)
        },
    )?;

    let last = outcome.state;
    let objective = if last.moved {
        // the last pass assigned against the centroids before the move
        let pass = KMeansPass {
            centroids: &last.centroids,
            previous: &assignments,
        };
        let (reposition, final_assignments) = run_parallel(&pass, data, config.workers)?;
        assignments = final_assignments;
        reposition.objective
    } else {
        last.objective
    };
    Ok(KMeansResult {
        centroids: last.centroids,
        assignments: assignments.into_iter().map(|a| a as usize).collect(),
        objective,
        iterations: outcome.ledger.len(),
        frac_reassigned_final: last.frac_reassigned,
        converged: outcome.converged,
        duplicate_seeds: false,
        ledger: outcome.ledger,
    })
}

/// Seeds, then runs Lloyd's algorithm.
pub fn kmeans_fit(data: &Dataset, config: &KMeansConfig) -> Result<KMeansResult> {
    let seeds = seed_centroids(data, config.k, config.seeding, config.seed)?;
    let mut result = kmeans_from(data, seeds.centroids, config)?;
    result.duplicate_seeds = seeds.duplicated;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_centroids() -> Centroids {
        Centroids::from_points(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap()
    }

    #[test]
    fn stable_point_keeps_counter() {
        let c = two_centroids();
        let mut s = KMeansIntraState::new(2, 2);
        assert_eq!(kmeans_transition(&mut s, &c, 0, &[0.0, 0.0], 0).unwrap(), 0);
        assert_eq!(s.counts, vec![1, 0]);
        assert_eq!(s.reassigned, 0);
        assert_eq!(s.objective_accum, 0.0);
    }

    #[test]
    fn moved_point_counts_reassignment() {
        let c = two_centroids();
        let mut s = KMeansIntraState::new(2, 2);
        assert_eq!(kmeans_transition(&mut s, &c, 0, &[9.0, 1.0], 0).unwrap(), 1);
        assert_eq!(s.reassigned, 1);
        assert_eq!(s.objective_accum, 2.0);
    }

    #[test]
    fn six_points_hand_partition() {
        let c = two_centroids();
        let pts = [[0.0, 1.0], [1.0, 0.0], [-1.0, 0.0], [9.0, 0.0], [11.0, 2.0], [10.0, -2.0]];
        let mut s = KMeansIntraState::new(2, 2);
        for (i, p) in pts.iter().enumerate() {
            kmeans_transition(&mut s, &c, i, p, UNASSIGNED).unwrap();
        }
        assert_eq!(s.counts, vec![3, 3]);
        assert_eq!(s.sums.col(0), &[0.0, 1.0]);
        assert_eq!(s.sums.col(1), &[30.0, 0.0]);
        assert_eq!(s.reassigned, 6);
        let r = kmeans_final(&s, &c).unwrap();
        assert_eq!(r.centroids.centroid(0), &[0.0, 1.0 / 3.0]);
        assert_eq!(r.centroids.centroid(1), &[10.0, 0.0]);
        assert_eq!(r.frac_reassigned, 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = KMeansIntraState::new(2, 2);
        assert!(matches!(
            kmeans_transition(&mut s, &two_centroids(), 0, &[1.0], 0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]], None).unwrap();
        let r = kmeans_fit(&data, &KMeansConfig::new(1)).unwrap();
        assert_eq!(r.centroids.centroid(0), &[3.0, 3.0]);
        assert!(r.converged);
    }

    #[test]
    fn k_distinct_points_converge_in_one_pass() {
        let data = Dataset::from_rows(&[vec![0.0], vec![5.0], vec![9.0]], None).unwrap();
        let mut config = KMeansConfig::new(3);
        config.seeding = Seeding::Random;
        let r = kmeans_fit(&data, &config).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.objective, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn empty_cluster_takes_farthest_point() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![4.0]], None).unwrap();
        // centroid 1 is far from everything and starts empty
        let init = Centroids::from_points(&[vec![0.0], vec![100.0]]).unwrap();
        let pass = KMeansPass {
            centroids: &init,
            previous: &[],
        };
        let (r, assignments) = run_parallel(&pass, &data, 1).unwrap();
        assert_eq!(assignments, vec![0, 0, 0]);
        assert_eq!(r.reseeded, 1);
        assert_eq!(r.centroids.centroid(1), &[4.0]);
        assert_eq!(r.centroids.centroid(0), &[5.0 / 3.0]);
    }

    #[test]
    fn far_point_ties_prefer_lower_row() {
        let data = Dataset::from_rows(&[vec![-2.0], vec![2.0], vec![0.0]], None).unwrap();
        let init = Centroids::from_points(&[vec![0.0], vec![50.0], vec![60.0]]).unwrap();
        let pass = KMeansPass {
            centroids: &init,
            previous: &[],
        };
        for workers in 1..=3 {
            let (r, _) = run_parallel(&pass, &data, workers).unwrap();
            assert_eq!(r.centroids.centroid(1), &[-2.0]);
            assert_eq!(r.centroids.centroid(2), &[2.0]);
        }
    }

    #[test]
    fn final_assignments_match_final_centroids() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.37).sin() * 3.0, (t * 0.73).cos() * 2.0]
            })
            .collect();
        let data = Dataset::from_rows(&rows, None).unwrap();
        let mut config = KMeansConfig::new(4);
        config.max_iter = 2;
        let r = kmeans_fit(&data, &config).unwrap();
        let mut objective = 0.0;
        for (i, &a) in r.assignments.iter().enumerate() {
            let (j, dist) = r.centroids.closest(data.feature_row(i)).unwrap();
            assert_eq!(a, j);
            objective += dist;
        }
        assert!((objective - r.objective).abs() <= 1e-12 * objective.max(1.0));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0]], None).unwrap();
        let mut config = KMeansConfig::new(1);
        config.reassign_tol = 1.0;
        assert!(matches!(kmeans_fit(&data, &config), Err(Error::Argument(_))));
    }
}
