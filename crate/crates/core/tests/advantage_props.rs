use std::collections::BTreeMap;

use gepo::advantage::{
    cluster_states, estimate_advantages, local_advantage, trajectory_advantage, trajectory_score, unified_advantage,
    AdvantageConfig, TrajectoryScore,
};
use gepo::graph::{CentralityMetric, CentralityScores, StateKey};
use gepo::shaping::{shape_trajectory, ShapedTrajectory, ShapingConfig};
use gepo::trajectory::Trajectory;
use proptest::prelude::*;

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn scores(c: &[f64]) -> CentralityScores<f64> {
    CentralityScores::from_parts(c.to_vec(), BTreeMap::new(), CentralityMetric::Betweenness, 0)
}

fn zs(z: &[f64]) -> Vec<TrajectoryScore<f64>> {
    z.iter().map(|&z| TrajectoryScore { z, return_head: z, structural: 0.0 }).collect()
}

fn group(paths: &[Vec<usize>], rewards: &[f64], c: &CentralityScores<f64>) -> Vec<ShapedTrajectory<f64>> {
    paths
        .iter()
        .zip(rewards)
        .map(|(p, &r)| {
            let keys: Vec<StateKey> = p.iter().copied().map(StateKey).collect();
            shape_trajectory(Trajectory::from_keys(&keys, 4, r), c, &ShapingConfig::default()).unwrap()
        })
        .collect()
}

#[test]
fn hand_examples() {
    let cfg = AdvantageConfig { w_struct: 0.5, ..Default::default() };
    let c = scores(&[0.2, 0.4]);
    let s = group(&[vec![0, 1]], &[1.0], &scores(&[0.0, 0.0]));
    let ts = trajectory_score(&s[0], &c, &cfg);
    assert!((ts.return_head - 1.0).abs() < 1e-12);
    assert!((ts.z - 1.15).abs() < 1e-6);

    let a = trajectory_advantage(&zs(&[2.0, 0.0]), &AdvantageConfig::default()).unwrap();
    assert!((a[0] - R).abs() < 1e-6 && (a[1] + R).abs() < 1e-6);
    assert_eq!(trajectory_advantage(&zs(&[3.0]), &AdvantageConfig::default()).unwrap(), vec![0.0]);
    assert_eq!(trajectory_advantage(&zs(&[1.0, 1.0, 1.0]), &AdvantageConfig::default()).unwrap(), vec![0.0; 3]);

    let mut clusters = BTreeMap::new();
    clusters.insert(StateKey(0), vec![(0, 0), (1, 0)]);
    clusters.insert(StateKey(1), vec![(1, 1)]);
    let local =
        local_advantage(&clusters, &[vec![2.0], vec![0.0, 5.0]], &scores(&[0.5, 0.9]), &AdvantageConfig::default())
            .unwrap();
    assert!((local[0][0] - 1.060660).abs() < 1e-6 && (local[1][0] + 1.060660).abs() < 1e-6);
    assert_eq!(local[1][1], 0.0);

    let u = unified_advantage(
        &[1.0_f64, -1.0],
        &[vec![-1.0], vec![1.0]],
        &AdvantageConfig { lambda: 0.5, ..Default::default() },
    )
    .unwrap();
    assert!(u[0][0].abs() < 1e-12 && u[1][0].abs() < 1e-12);
}

fn batch() -> impl Strategy<Value = (Vec<Vec<usize>>, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0usize..8, 2..10), n),
            prop::collection::vec(prop::sample::select(vec![0.0, 1.0]), n),
            prop::collection::vec(0.0f64..1.0, 8),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_advantages_are_centred(z in prop::collection::vec(-5.0f64..5.0, 2..20)) {
        let a = trajectory_advantage(&zs(&z), &AdvantageConfig::default()).unwrap();
        prop_assert!(a.iter().sum::<f64>().abs() / (a.len() as f64) < 1e-9);
    }

    #[test]
    fn shift_invariance(z in prop::collection::vec(-5.0f64..5.0, 1..20), c in -100.0f64..100.0) {
        let cfg = AdvantageConfig::default();
        let a = trajectory_advantage(&zs(&z), &cfg).unwrap();
        let shifted: Vec<f64> = z.iter().map(|x| x + c).collect();
        let b = trajectory_advantage(&zs(&shifted), &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_keeps_order_and_sign(z in prop::collection::vec(-5.0f64..5.0, 2..20), k in 0.01f64..100.0) {
        let cfg = AdvantageConfig::default();
        let a = trajectory_advantage(&zs(&z), &cfg).unwrap();
        let scaled: Vec<f64> = z.iter().map(|x| x * k).collect();
        let b = trajectory_advantage(&zs(&scaled), &cfg).unwrap();
        for i in 0..z.len() {
            for j in 0..z.len() {
                if z[i] < z[j] {
                    prop_assert!(b[i] <= b[j]);
                }
            }
            prop_assert!(a[i].signum() == b[i].signum() || a[i].abs() < 1e-9);
        }
    }

    #[test]
    fn clusters_partition_the_batch((paths, rewards, c) in batch()) {
        let g = group(&paths, &rewards, &scores(&c));
        let clusters = cluster_states(&g);
        let mut seen = std::collections::BTreeSet::new();
        for (key, members) in &clusters {
            for &(i, t) in members {
                prop_assert_eq!(g[i].base.steps[t].state, *key);
                prop_assert!(seen.insert((i, t)), "duplicate member");
            }
        }
        let total: usize = g.iter().map(|s| s.len()).sum();
        prop_assert_eq!(seen.len(), total);
    }

    #[test]
    fn unified_components_are_finite_and_centred((paths, rewards, c) in batch(), lambda in 0.0f64..=1.0) {
        let cfg = AdvantageConfig { lambda, ..Default::default() };
        let s = scores(&c);
        let set = estimate_advantages(&group(&paths, &rewards, &s), &s, &cfg).unwrap();
        prop_assert!(set.unified.iter().flatten().all(|x| x.is_finite()));
        let flat: Vec<f64> = set.unified.iter().flatten().copied().collect();
        prop_assert!((flat.iter().sum::<f64>() / flat.len() as f64).abs() < 1e-9);
        for (row, ids) in set.unified.iter().zip(&set.cluster_ids) {
            prop_assert_eq!(row.len(), ids.len());
        }
    }

    #[test]
    fn centrality_amplifies_local_advantage(r in prop::collection::vec(-3.0f64..3.0, 2..8), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let returns: Vec<Vec<f64>> = vec![r.clone(), r.clone()];
        let mut clusters = BTreeMap::new();
        clusters.insert(StateKey(0), (0..r.len()).map(|t| (0, t)).collect::<Vec<_>>());
        clusters.insert(StateKey(1), (0..r.len()).map(|t| (1, t)).collect::<Vec<_>>());
        let local = local_advantage(&clusters, &returns, &scores(&[lo, hi]), &AdvantageConfig::default()).unwrap();
        for (hi_t, lo_t) in local[1].iter().zip(&local[0]) {
            prop_assert!(hi_t.abs() >= lo_t.abs() - 1e-12);
        }
    }

    #[test]
    fn singletons_are_zero(path in prop::collection::vec(0usize..1000, 2..10)) {
        // every state distinct: all clusters are singletons
        let mut p = path.clone();
        p.sort();
        p.dedup();
        prop_assume!(p.len() >= 2);
        let s = scores(&vec![0.5; 1000]);
        let g = group(&[p], &[1.0], &s);
        let set = estimate_advantages(&g, &s, &AdvantageConfig::default()).unwrap();
        prop_assert!(set.local.iter().flatten().all(|&x| x == 0.0));
        prop_assert_eq!(set.trajectory.clone(), vec![0.0]);
    }
}
