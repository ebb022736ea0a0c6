//! Autocorrelation clustering and copilot group formation.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::io::write_rows;
use crate::netgen::Scenario;

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_TOL: f64 = 1e-9;

/// Number of clusters `ceil(T_max / slot_duration)`, at least one.
///
/// A relative slack of 1e-9 absorbs rounding in ratios that are integers in
/// exact arithmetic.
pub fn cluster_count(t_max: f64, slot_duration: f64) -> usize {
    let ratio = t_max / slot_duration;
    ((ratio - 1e-9 * ratio.abs().max(1.0)).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    /// Ascending, pairwise distinct.
    pub centroids: Vec<f64>,
    /// Index into `centroids` for each input value.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn num_clusters(&self) -> usize {
        self.centroids.len()
    }
}

fn nearest(centroids: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, c) in centroids.iter().enumerate() {
        if (v - c).abs() < (v - centroids[best]).abs() {
            best = i;
        }
    }
    best
}

fn seed_plus_plus<R: Rng + ?Sized>(values: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let mut centroids = vec![values[rng.random_range(0..values.len())]];
    while centroids.len() < k {
        let d2: Vec<f64> = values
            .iter()
            .map(|&v| centroids.iter().map(|c| (v - c).powi(2)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = values.len() - 1;
        for (i, w) in d2.iter().enumerate() {
            if *w > 0.0 && target < *w {
                pick = i;
                break;
            }
            target -= w;
        }
        // rounding can leave `pick` on a zero-weight point
        if d2[pick] == 0.0 {
            pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
        }
        centroids.push(values[pick]);
    }
    centroids
}

/// One-dimensional Lloyd k-means with k-means++ seeding.
///
/// Duplicate centroids are merged and empty clusters dropped, so the result
/// may hold fewer than `k` clusters.
pub fn kmeans_1d<R: Rng + ?Sized>(
    values: &[f64],
    k: usize,
    rng: &mut R,
    max_iters: usize,
) -> Result<ClusterModel> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 || max_iters == 0 {
        return Err(Error::InvalidConfig("k-means needs k >= 1 and max_iters >= 1".into()));
    }
    let mut centroids = seed_plus_plus(values, k, rng);
    let mut assignment = vec![0; values.len()];
    let mut objective_trace = Vec::new();

    for _ in 0..max_iters {
        let mut sse = 0.0;
        for (a, &v) in assignment.iter_mut().zip(values) {
            *a = nearest(&centroids, v);
            sse += (v - centroids[*a]).powi(2);
        }
        objective_trace.push(sse);

        let mut sums = vec![0.0; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (&a, &v) in assignment.iter().zip(values) {
            sums[a] += v;
            counts[a] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..centroids.len() {
            if counts[j] > 0 {
                let next = sums[j] / counts[j] as f64;
                shift = shift.max((next - centroids[j]).abs());
                centroids[j] = next;
            }
        }
        if shift < KMEANS_TOL {
            break;
        }
    }

    // keep occupied clusters, sort ascending, merge coincident centres
    let mut occupied: Vec<f64> = (0..centroids.len())
        .filter(|&j| assignment.contains(&j))
        .map(|j| centroids[j])
        .collect();
    occupied.sort_by(f64::total_cmp);
    occupied.dedup_by(|a, b| (*a - *b).abs() <= KMEANS_TOL);
    let assignment = values.iter().map(|&v| nearest(&occupied, v)).collect();
    Ok(ClusterModel {
        centroids: occupied,
        assignment,
        objective_trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopilotGroup {
    /// `members[c]` is the user index inside cell `c`.
    pub members: Vec<usize>,
    /// CSI age in slots.
    pub delay: u32,
    pub rho_min: f64,
    pub rho_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopilotGroups {
    pub groups: Vec<CopilotGroup>,
}

impl CopilotGroups {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn delays(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.delay).collect()
    }

    pub fn set_delays(&mut self, delays: &[u32]) -> Result<()> {
        if delays.len() != self.groups.len() {
            return Err(Error::InvalidConfig(format!(
                "{} delays for {} groups",
                delays.len(),
                self.groups.len()
            )));
        }
        for (g, &d) in self.groups.iter_mut().zip(delays) {
            g.delay = d;
        }
        Ok(())
    }

    /// One row per member: `group,cell,user,rho,d_g`.
    pub fn write_csv(&self, scenario: &Scenario, path: &Path) -> Result<()> {
        let rows = self.groups.iter().enumerate().flat_map(|(g, group)| {
            group.members.iter().enumerate().map(move |(c, &u)| {
                vec![
                    g.to_string(),
                    c.to_string(),
                    u.to_string(),
                    scenario.serving_rho(c, u).to_string(),
                    group.delay.to_string(),
                ]
            })
        });
        write_rows(path, &["group", "cell", "user", "rho", "d_g"], rows)
    }
}

/// Smallest and largest serving autocorrelation among `members`.
pub fn group_extrema(members: &[usize], scenario: &Scenario) -> (f64, f64) {
    members
        .iter()
        .enumerate()
        .map(|(c, &u)| scenario.serving_rho(c, u))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Serving autocorrelations in cell-major order, the layout `kmeans_1d`
/// expects when its model is passed to [`form_copilot_groups`].
pub fn serving_rho_values(scenario: &Scenario) -> Vec<f64> {
    (0..scenario.num_cells())
        .flat_map(|c| (0..scenario.users_per_cell()).map(move |u| scenario.serving_rho(c, u)))
        .collect()
}

fn by_rho_desc(scenario: &Scenario, cell: usize, users: &mut [usize]) {
    users.sort_by(|&a, &b| {
        scenario
            .serving_rho(cell, b)
            .total_cmp(&scenario.serving_rho(cell, a))
            .then(a.cmp(&b))
    });
}

/// Builds `K` groups of one user per cell.
///
/// Inside each cluster the users of every cell are ranked by serving
/// autocorrelation (descending, lower user index first on ties) and matched
/// rank by rank, as many groups as the sparsest cell allows. Users left over
/// are ranked the same way per cell and matched across clusters, so they
/// pair with neighbours of similar autocorrelation.
///
/// `model.assignment` must be indexed as produced by [`serving_rho_values`].
/// Groups start with zero delay.
pub fn form_copilot_groups(scenario: &Scenario, model: &ClusterModel) -> Result<CopilotGroups> {
    let cells = scenario.num_cells();
    let k = scenario.users_per_cell();
    if model.assignment.len() != cells * k {
        return Err(Error::InvalidConfig(format!(
            "cluster assignment covers {} users, scenario has {}",
            model.assignment.len(),
            cells * k
        )));
    }
    let mut member_lists: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut leftovers: Vec<Vec<usize>> = vec![Vec::new(); cells];

    for q in 0..model.num_clusters() {
        let mut per_cell: Vec<Vec<usize>> = (0..cells)
            .map(|c| {
                let mut users: Vec<usize> =
                    (0..k).filter(|&u| model.assignment[c * k + u] == q).collect();
                by_rho_desc(scenario, c, &mut users);
                users
            })
            .collect();
        let full = per_cell.iter().map(Vec::len).min().unwrap_or(0);
        for r in 0..full {
            member_lists.push(per_cell.iter().map(|users| users[r]).collect());
        }
        for (c, users) in per_cell.iter_mut().enumerate() {
            leftovers[c].extend(users.drain(full..));
        }
    }
    for (c, users) in leftovers.iter_mut().enumerate() {
        by_rho_desc(scenario, c, users);
    }
    let remaining = leftovers.first().map_or(0, Vec::len);
    for r in 0..remaining {
        member_lists.push(leftovers.iter().map(|users| users[r]).collect());
    }

    let groups = member_lists
        .into_iter()
        .map(|members| {
            let (rho_min, rho_max) = group_extrema(&members, scenario);
            CopilotGroup {
                members,
                delay: 0,
                rho_min,
                rho_max,
            }
        })
        .collect();
    Ok(CopilotGroups { groups })
}

/// Clusters the scenario's users into `num_clusters` classes and forms
/// copilot groups from them.
pub fn group_scenario<R: Rng + ?Sized>(
    scenario: &Scenario,
    num_clusters: usize,
    rng: &mut R,
) -> Result<CopilotGroups> {
    if scenario.users_per_cell() == 0 {
        return Ok(CopilotGroups { groups: Vec::new() });
    }
    let model = kmeans_1d(&serving_rho_values(scenario), num_clusters, rng, KMEANS_MAX_ITERS)?;
    form_copilot_groups(scenario, &model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{generate_scenario, LinkTensor, ScenarioConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Scenario whose only meaningful content is the serving rho table.
    fn with_rhos(rhos: &[Vec<f64>]) -> Scenario {
        let cells = rhos.len();
        let k = rhos[0].len();
        let config = ScenarioConfig {
            num_cells: cells,
            users_per_cell: k,
            ..ScenarioConfig::default()
        };
        let mut rho = LinkTensor::zeros(cells, k);
        for (c, row) in rhos.iter().enumerate() {
            for (u, &r) in row.iter().enumerate() {
                rho.set(c, c, u, r);
            }
        }
        Scenario {
            config,
            bs_positions: Vec::new(),
            user_positions: Vec::new(),
            beta: LinkTensor::zeros(cells, k),
            rho,
            angle: LinkTensor::zeros(cells, k),
            velocity: Vec::new(),
        }
    }

    fn sse(values: &[f64], labels: &[usize], k: usize) -> f64 {
        (0..k)
            .map(|j| {
                let members: Vec<f64> =
                    values.iter().zip(labels).filter(|(_, &l)| l == j).map(|(v, _)| *v).collect();
                if members.is_empty() {
                    return 0.0;
                }
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                members.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            })
            .sum()
    }

    /// Best SSE over all contiguous splits of the sorted values.
    fn optimal_partition_sse(values: &[f64], k: usize) -> f64 {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut best = f64::INFINITY;
        let mut cuts = vec![0usize; k - 1];
        fn rec(
            sorted: &[f64],
            cuts: &mut Vec<usize>,
            depth: usize,
            start: usize,
            best: &mut f64,
        ) {
            let n = sorted.len();
            if depth == cuts.len() {
                let mut labels = vec![0; n];
                for (i, l) in labels.iter_mut().enumerate() {
                    *l = cuts.iter().filter(|&&c| i >= c).count();
                }
                *best = best.min(sse(sorted, &labels, cuts.len() + 1));
                return;
            }
            for c in start + 1..n {
                cuts[depth] = c;
                rec(sorted, cuts, depth + 1, c, best);
            }
        }
        if k == 1 {
            return sse(&sorted, &vec![0; n], 1);
        }
        rec(&sorted, &mut cuts, 0, 0, &mut best);
        best
    }

    #[test]
    fn cluster_count_examples() {
        assert_eq!(cluster_count(600.0, 200.0), 3);
        assert_eq!(cluster_count(201.0, 200.0), 2);
        assert_eq!(cluster_count(3e-3, 1e-3), 3);
        assert_eq!(cluster_count(0.1 + 0.2, 0.1), 3);
        assert_eq!(cluster_count(1e-6, 1.0), 1);
    }

    #[test]
    fn kmeans_separated_pairs() {
        let values = [0.1, 0.11, 0.9, 0.91];
        let m = kmeans_1d(&values, 2, &mut rng(1), 100).unwrap();
        assert_eq!(m.assignment, vec![0, 0, 1, 1]);
        assert!((m.centroids[0] - 0.105).abs() < 1e-12);
        assert!((m.centroids[1] - 0.905).abs() < 1e-12);
        let got = sse(&values, &m.assignment, 2);
        assert!((got - optimal_partition_sse(&values, 2)).abs() < 1e-15);
    }

    #[test]
    fn kmeans_degenerate_inputs() {
        let m = kmeans_1d(&[0.4; 9], 3, &mut rng(2), 100).unwrap();
        assert_eq!(m.centroids.len(), 1);
        assert!((m.centroids[0] - 0.4).abs() < 1e-15);
        assert!(m.assignment.iter().all(|&a| a == 0));

        let values = [0.2, 0.5, 0.9, 0.3];
        let m = kmeans_1d(&values, 1, &mut rng(3), 100).unwrap();
        assert!((m.centroids[0] - 0.475).abs() < 1e-12);

        assert!(matches!(kmeans_1d(&[], 2, &mut rng(4), 100), Err(Error::EmptyInput)));
    }

    #[test]
    fn kmeans_matches_partition_oracle_on_separated_clusters() {
        let mut r = rng(5);
        for trial in 0..30 {
            let k = 1 + trial % 3;
            let mut values = Vec::new();
            for j in 0..k {
                let centre = 0.2 + 0.3 * j as f64;
                for _ in 0..(2 + trial % 3) {
                    values.push(centre + r.random_range(-0.02..0.02));
                }
            }
            let m = kmeans_1d(&values, k, &mut rng(trial as u64), 100).unwrap();
            let got = sse(&values, &m.assignment, m.num_clusters());
            assert!((got - optimal_partition_sse(&values, k)).abs() < 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn kmeans_deterministic() {
        let values: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 50.0).collect();
        let a = kmeans_1d(&values, 4, &mut rng(9), 100).unwrap();
        let b = kmeans_1d(&values, 4, &mut rng(9), 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_cell_groups_are_singletons() {
        let s = with_rhos(&[vec![0.9, 0.5, 0.7]]);
        let m = kmeans_1d(&serving_rho_values(&s), 2, &mut rng(0), 100).unwrap();
        let g = form_copilot_groups(&s, &m).unwrap();
        assert_eq!(g.len(), 3);
        for group in &g.groups {
            assert_eq!(group.members.len(), 1);
            assert_eq!(group.rho_min, group.rho_max);
        }
    }

    #[test]
    fn rank_matching_example() {
        let s = with_rhos(&[vec![0.9, 0.5], vec![0.5, 0.9]]);
        let m = kmeans_1d(&serving_rho_values(&s), 1, &mut rng(0), 100).unwrap();
        let g = form_copilot_groups(&s, &m).unwrap();
        assert_eq!(g.groups[0].members, vec![0, 1]);
        assert_eq!(g.groups[1].members, vec![1, 0]);
        assert_eq!((g.groups[0].rho_min, g.groups[0].rho_max), (0.9, 0.9));
        assert_eq!((g.groups[1].rho_min, g.groups[1].rho_max), (0.5, 0.5));
    }

    #[test]
    fn equal_rhos_use_index_order() {
        let s = with_rhos(&[vec![0.7; 3], vec![0.7; 3]]);
        let m = kmeans_1d(&serving_rho_values(&s), 2, &mut rng(0), 100).unwrap();
        let g = form_copilot_groups(&s, &m).unwrap();
        let members: Vec<_> = g.groups.iter().map(|g| g.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 0], vec![1, 1], vec![2, 2]]);
    }

    #[test]
    fn extrema_examples() {
        let s = with_rhos(&[vec![0.7], vec![0.9]]);
        assert_eq!(group_extrema(&[0, 0], &s), (0.7, 0.9));
        assert_eq!(group_extrema(&[0], &s), (0.7, 0.7));
    }

    #[test]
    fn extrema_feed_improvement_condition() {
        use crate::ratebound::{improvement_condition, AsymptoticInputs};
        let s = with_rhos(&[vec![0.7], vec![0.9]]);
        let (lo, hi) = group_extrema(&[0, 0], &s);
        let out = improvement_condition(&AsymptoticInputs {
            beta_row: vec![1.0, 0.5],
            own_cell: 0,
            rho_min: lo,
            rho_max: hi,
            num_groups: 10,
            trained: 5,
            slot_symbols: 200,
            delay: 2,
        })
        .unwrap();
        assert!((out.lhs - (0.49f64 / 0.81).powi(2)).abs() < 1e-14);
    }

    fn spread(s: &Scenario, matching: &[(usize, usize)]) -> f64 {
        matching
            .iter()
            .map(|&(a, b)| (s.serving_rho(0, a) - s.serving_rho(1, b)).abs())
            .sum()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn rank_matching_minimises_spread() {
        let mut r = rng(11);
        for k in 1..=6 {
            for _ in 0..20 {
                let rows: Vec<Vec<f64>> =
                    (0..2).map(|_| (0..k).map(|_| r.random::<f64>()).collect()).collect();
                let s = with_rhos(&rows);
                let m = kmeans_1d(&serving_rho_values(&s), 1, &mut rng(0), 100).unwrap();
                let g = form_copilot_groups(&s, &m).unwrap();
                let ours: Vec<(usize, usize)> =
                    g.groups.iter().map(|g| (g.members[0], g.members[1])).collect();
                let best = permutations(k)
                    .iter()
                    .map(|p| spread(&s, &p.iter().enumerate().map(|(a, &b)| (a, b)).collect::<Vec<_>>()))
                    .fold(f64::INFINITY, f64::min);
                assert!(spread(&s, &ours) <= best + 1e-12);
            }
        }
    }

    #[test]
    fn groups_from_generated_scenario() {
        let cfg = ScenarioConfig {
            users_per_cell: 12,
            rng_seed: 4,
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg).unwrap();
        let g = group_scenario(&s, 3, &mut rng(4)).unwrap();
        assert_eq!(g.len(), 12);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("groups.csv");
        g.write_csv(&s, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("group,cell,user,rho,d_g"));
        assert_eq!(text.lines().count(), 1 + 12 * 7);
    }

    proptest! {
        #[test]
        fn groups_partition_users(
            cells in 1usize..5, k in 1usize..9, nc in 1usize..5, seed in 0u64..1000
        ) {
            let mut r = rng(seed);
            let rows: Vec<Vec<f64>> = (0..cells)
                .map(|_| (0..k).map(|_| (r.random::<f64>() * 8.0).round() / 8.0).collect())
                .collect();
            let s = with_rhos(&rows);
            let m = kmeans_1d(&serving_rho_values(&s), nc, &mut r, 100).unwrap();
            let g = form_copilot_groups(&s, &m).unwrap();
            prop_assert_eq!(g.len(), k);
            for c in 0..cells {
                let mut seen: Vec<usize> = g.groups.iter().map(|g| g.members[c]).collect();
                seen.sort();
                prop_assert_eq!(seen, (0..k).collect::<Vec<_>>());
            }
            for group in &g.groups {
                prop_assert!(group.rho_min <= group.rho_max);
            }
        }

        #[test]
        fn kmeans_objective_non_increasing(
            values in proptest::collection::vec(0.0f64..1.0, 1..60), k in 1usize..6, seed in 0u64..500
        ) {
            let m = kmeans_1d(&values, k, &mut rng(seed), 100).unwrap();
            for w in m.objective_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
            for w in m.centroids.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            for (&v, &a) in values.iter().zip(&m.assignment) {
                let d = (v - m.centroids[a]).abs();
                prop_assert!(m.centroids.iter().all(|c| d <= (v - c).abs() + 1e-15));
            }
        }
    }
}
