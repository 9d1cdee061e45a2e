//! Fuzzy c-means by alternating membership and center updates.
//!
//! Memberships are stored points × clusters, so row `j` holds the
//! membership of point `j` in every cluster and sums to one.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FcmConfig {
    pub clusters: usize,
    /// Fuzzifier `q > 1`.
    pub fuzzifier: f64,
    /// Stop once the largest membership change is at most this.
    pub threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self {
            clusters: 2,
            fuzzifier: 2.0,
            threshold: 1e-5,
            max_iterations: 100,
            seed: 0,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::Config(format!(
                "fuzzy c-means needs at least 2 clusters, got {}",
                self.clusters
            )));
        }
        if !(self.fuzzifier > 1.0 && self.fuzzifier.is_finite()) {
            return Err(Error::Config(format!(
                "fuzzifier must be a finite value > 1, got {}",
                self.fuzzifier
            )));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config(format!(
                "convergence threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max-iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    /// points × clusters
    pub membership: Array2<f64>,
    /// clusters × dimensions
    pub centers: Array2<f64>,
    /// Objective after each iteration.
    pub objective_trace: Vec<f64>,
    /// Largest absolute membership change at each iteration.
    pub delta_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Snapshot passed to an observer after every iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    pub iteration: usize,
    pub objective: f64,
    pub max_delta: f64,
    pub membership: &'a Array2<f64>,
    pub centers: &'a Array2<f64>,
}

impl IterationState<'_> {
    /// `iteration<TAB>objective<TAB>max-delta-mu`
    pub fn diagnostic_line(&self) -> String {
        format!("{}\t{}\t{}", self.iteration, self.objective, self.max_delta)
    }
}

pub fn fcm_run(data: ArrayView2<f64>, config: &FcmConfig) -> Result<FcmResult> {
    fcm_run_observed(data, config, |_| {})
}

/// Runs the solver, calling `observer` after every iteration.
pub fn fcm_run_observed(
    data: ArrayView2<f64>,
    config: &FcmConfig,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<FcmResult> {
    config.validate()?;
    let (n, d) = data.dim();
    let c = config.clusters;
    if n <= c {
        return Err(Error::Numerical(format!(
            "fuzzy c-means needs more points than clusters ({n} points, {c} clusters)"
        )));
    }
    if d == 0 {
        return Err(Error::Numerical("data has no dimensions".into()));
    }
    if let Some(((j, _), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite value in data row {j}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut membership = random_membership(n, c, &mut rng);
    let q = config.fuzzifier;
    let mut objective_trace = Vec::new();
    let mut delta_trace = Vec::new();
    let mut centers = Array2::zeros((c, d));
    let mut converged = false;

    for iteration in 1..=config.max_iterations {
        centers = centers_guarded(data, membership.view(), q, &mut rng);
        let next = update_memberships(data, centers.view(), q);
        let j_q = objective(data, next.view(), centers.view(), q);
        let max_delta = next
            .iter()
            .zip(membership.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        membership = next;
        objective_trace.push(j_q);
        delta_trace.push(max_delta);
        observer(&IterationState {
            iteration,
            objective: j_q,
            max_delta,
            membership: &membership,
            centers: &centers,
        });
        if max_delta <= config.threshold {
            converged = true;
            break;
        }
    }

    Ok(FcmResult {
        iterations: objective_trace.len(),
        membership,
        centers,
        objective_trace,
        delta_trace,
        converged,
    })
}

fn random_membership(n: usize, c: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut mu = Array2::zeros((n, c));
    for mut row in mu.rows_mut() {
        row.mapv_inplace(|_| rng.random::<f64>() + f64::MIN_POSITIVE);
        let s = row.sum();
        row /= s;
    }
    mu
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Membership of one point given its squared distances to every center.
/// Points sitting on one or more centers are split evenly among them.
fn point_membership(sq_dist: &[f64], q: f64) -> Vec<f64> {
    let zeros = sq_dist.iter().filter(|&&s| s == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        return sq_dist
            .iter()
            .map(|&s| if s == 0.0 { share } else { 0.0 })
            .collect();
    }
    // (DIS_k / DIS_l)^(2/(q-1)) = exp(w_l - w_k) with w = -ln(DIS²)/(q-1),
    // evaluated as a softmax to avoid overflow when q is close to 1.
    let w: Vec<f64> = sq_dist.iter().map(|&s| -s.ln() / (q - 1.0)).collect();
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Membership update: `μ_kj = 1 / Σ_l (DIS_kj / DIS_lj)^(2/(q-1))`.
pub fn update_memberships(data: ArrayView2<f64>, centers: ArrayView2<f64>, q: f64) -> Array2<f64> {
    let n = data.nrows();
    let c = centers.nrows();
    let rows = par::map_range(n, |j| {
        let x = data.row(j);
        let sq: Vec<f64> = centers
            .rows()
            .into_iter()
            .map(|v| squared_distance(x, v))
            .collect();
        point_membership(&sq, q)
    });
    Array2::from_shape_vec((n, c), rows.into_iter().flatten().collect())
        .expect("one membership per point and cluster")
}

/// Center update: each center is the `μ^q`-weighted mean of all points.
pub fn update_centers(data: ArrayView2<f64>, membership: ArrayView2<f64>, q: f64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    centers_guarded(data, membership, q, &mut rng)
}

fn centers_guarded(
    data: ArrayView2<f64>,
    membership: ArrayView2<f64>,
    q: f64,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    let (n, d) = data.dim();
    let c = membership.ncols();
    // One cluster per task, points summed in index order, so the result
    // does not depend on the number of threads.
    let sums = par::map_range(c, |k| {
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        for j in 0..n {
            let w = membership[[j, k]].powf(q);
            if w == 0.0 {
                continue;
            }
            den += w;
            for (acc, &x) in num.iter_mut().zip(data.row(j)) {
                *acc += w * x;
            }
        }
        (num, den)
    });
    let mut centers = Array2::zeros((c, d));
    for (k, (num, den)) in sums.into_iter().enumerate() {
        let mut row = centers.row_mut(k);
        if den > 0.0 {
            for (dst, v) in row.iter_mut().zip(num) {
                *dst = v / den;
            }
        } else {
            let pick = rng.random_range(0..n);
            log::warn!(
                "cluster {k} lost all membership mass; reseeding its center at point {pick}"
            );
            row.assign(&data.row(pick));
        }
    }
    centers
}

/// Objective `J_q = Σ_k Σ_j μ_kj^q · DIS_kj²`.
pub fn objective(
    data: ArrayView2<f64>,
    membership: ArrayView2<f64>,
    centers: ArrayView2<f64>,
    q: f64,
) -> f64 {
    let per_point = par::map_range(data.nrows(), |j| {
        let x = data.row(j);
        centers
            .rows()
            .into_iter()
            .enumerate()
            .map(|(k, v)| membership[[j, k]].powf(q) * squared_distance(x, v))
            .sum::<f64>()
    });
    per_point.into_iter().sum()
}

/// Per-cluster membership mass `Σ_j μ_kj`.
pub fn cluster_mass(membership: ArrayView2<f64>) -> Vec<f64> {
    membership.sum_axis(Axis(0)).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    /// Direct evaluation of the membership formula with explicit ratios.
    fn membership_oracle(x: &[f64], centers: &[Vec<f64>], q: f64) -> Vec<f64> {
        let dist: Vec<f64> = centers
            .iter()
            .map(|v| {
                x.iter()
                    .zip(v)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        (0..centers.len())
            .map(|k| {
                let s: f64 = (0..centers.len())
                    .map(|l| (dist[k] / dist[l]).powf(2.0 / (q - 1.0)))
                    .sum();
                1.0 / s
            })
            .collect()
    }

    #[test]
    fn membership_examples() {
        let mu = point_membership(&[1.0, 4.0], 2.0);
        assert!((mu[0] - 0.8).abs() < 1e-15 && (mu[1] - 0.2).abs() < 1e-15);
        assert_eq!(point_membership(&[0.0, 2.0, 5.0], 2.0), [1.0, 0.0, 0.0]);
        assert_eq!(point_membership(&[3.0; 4], 2.0), [0.25; 4]);
        assert_eq!(point_membership(&[0.0, 1.0, 0.0], 2.0), [0.5, 0.0, 0.5]);
    }

    #[test]
    fn center_examples() {
        let data = array![[0.0, 0.0], [2.0, 0.0], [10.0, 4.0]];
        let hard = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let v = update_centers(data.view(), hard.view(), 2.0);
        assert_eq!(v, array![[1.0, 0.0], [10.0, 4.0]]);

        let uniform = Array2::from_elem((3, 2), 0.5);
        let v = update_centers(data.view(), uniform.view(), 2.0);
        assert!((v[[0, 0]] - 4.0).abs() < 1e-12 && (v[[1, 1]] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_is_reseeded_at_a_point() {
        let data = array![[0.0], [5.0], [9.0]];
        let mu = array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]];
        let v = update_centers(data.view(), mu.view(), 2.0);
        assert!(data.column(0).iter().any(|&x| x == v[[1, 0]]));
    }

    #[test]
    fn objective_examples() {
        let data = array![[1.0, 2.0], [3.0, 3.0]];
        let mu = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(objective(data.view(), mu.view(), data.view(), 2.0), 0.0);

        let one = array![[1.0], [0.0]];
        let v = array![[0.0], [0.0]];
        let mu = array![[1.0, 0.0], [0.5, 0.5]];
        assert_eq!(objective(one.view(), mu.view(), v.view(), 2.0), 1.0);

        let data = array![[1.0, -2.0], [0.5, 3.0], [2.0, 2.0]];
        let v = array![[0.0, 0.0], [1.0, 1.0]];
        let mu = array![[0.3, 0.7], [0.6, 0.4], [0.1, 0.9]];
        let j1 = objective(data.view(), mu.view(), v.view(), 2.0);
        let j2 = objective((&data * 2.0).view(), mu.view(), (&v * 2.0).view(), 2.0);
        assert!((j2 - 4.0 * j1).abs() < 1e-12);
    }

    #[test]
    fn two_points_two_clusters() {
        let data = array![[0.0], [10.0]];
        let err = fcm_run(data.view(), &FcmConfig::default()).unwrap_err();
        assert!(err.to_string().contains("more points than clusters"));

        let data = array![[0.0], [10.0], [0.1]];
        let res = fcm_run(data.view(), &FcmConfig::default()).unwrap();
        let mut centers: Vec<f64> = res.centers.column(0).to_vec();
        centers.sort_by(f64::total_cmp);
        assert!((centers[0] - 0.05).abs() < 0.01, "{centers:?}");
        assert!((centers[1] - 10.0).abs() < 0.01, "{centers:?}");
        assert!(res.converged);
        for j in 0..3 {
            let best = res.membership.row(j).iter().copied().fold(0.0, f64::max);
            assert!(best > 0.99);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let data = array![[0.0], [f64::NAN], [1.0]];
        assert!(fcm_run(data.view(), &FcmConfig::default()).is_err());
        let data = array![[0.0], [1.0], [2.0]];
        let bad_q = FcmConfig {
            fuzzifier: 1.0,
            ..FcmConfig::default()
        };
        assert!(fcm_run(data.view(), &bad_q).is_err());
        let one = FcmConfig {
            clusters: 1,
            ..FcmConfig::default()
        };
        assert!(fcm_run(data.view(), &one).is_err());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let data = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 13) % 11) as f64);
        let cfg = FcmConfig {
            clusters: 4,
            seed: 99,
            ..FcmConfig::default()
        };
        assert_eq!(
            fcm_run(data.view(), &cfg).unwrap(),
            fcm_run(data.view(), &cfg).unwrap()
        );
    }

    #[test]
    fn diagnostics_stream_has_one_line_per_iteration() {
        let data = Array2::from_shape_fn((12, 2), |(i, j)| (i as f64) * (j as f64 + 1.0));
        let mut lines = Vec::new();
        let res = fcm_run_observed(
            data.view(),
            &FcmConfig {
                clusters: 3,
                ..FcmConfig::default()
            },
            |s| lines.push(s.diagnostic_line()),
        )
        .unwrap();
        assert_eq!(lines.len(), res.iterations);
        assert_eq!(lines[0].split('\t').count(), 3);
        assert!(lines[0].starts_with("1\t"));
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
        (1usize..=10, 2usize..=3, 1usize..=2, 1.1f64..4.0).prop_flat_map(|(n, c, d, q)| {
            (
                prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
                prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), c),
                Just(q),
            )
        })
    }

    fn to_array(rows: &[Vec<f64>]) -> Array2<f64> {
        Array2::from_shape_fn((rows.len(), rows[0].len()), |(i, j)| rows[i][j])
    }

    proptest! {
        #[test]
        fn memberships_match_direct_formula((points, centers, q) in instance()) {
            let mu = update_memberships(to_array(&points).view(), to_array(&centers).view(), q);
            for (j, x) in points.iter().enumerate() {
                let expected = membership_oracle(x, &centers, q);
                for k in 0..centers.len() {
                    prop_assert!((mu[[j, k]] - expected[k]).abs() <= 1e-12);
                }
                let s: f64 = mu.row(j).sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
            }
        }
    }
}
