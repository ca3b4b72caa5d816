use std::collections::HashSet;

use abcp::ab_kernel::{AbKernel, CoupledDrivers};
use abcp::analysis::{alpha_permanent, meet};
use abcp::combinatorics::{
    bell_number, enumerate_partitions, enumerate_trees, partition_fiber, permutations, tree_distance, tree_fiber,
};
use abcp::cp_kernel::{cp_prob, CpKernel, PartitionKernel};
use abcp::io::{parse_newick, to_newick};
use abcp::mass_frag::{mass_apply, MassFragmentation};
use abcp::paintbox::{paintbox_prob, MixtureMeasure, RankedMassPartition};
use abcp::weighted_trees::{weighted_restrict, WeightedTree};
use abcp::{FragmentationTree, GroundSet, Label, SetPartition};
use proptest::prelude::*;

fn ground(n: usize) -> Vec<Label> {
    (1..=n as Label).collect()
}

fn arb_partition(max_n: usize) -> impl Strategy<Value = SetPartition> {
    (1..=max_n)
        .prop_flat_map(|n| prop::collection::vec(0..n, n))
        .prop_map(|colors| SetPartition::from_colors(&ground(colors.len()), &colors))
}

fn arb_perm(n: usize) -> impl Strategy<Value = Vec<Label>> {
    Just(ground(n)).prop_shuffle()
}

fn arb_tree(n: usize, k: Option<usize>) -> impl Strategy<Value = FragmentationTree> {
    let trees = enumerate_trees(n, k);
    (0..trees.len()).prop_map(move |i| trees[i].clone())
}

fn arb_masses(k: usize) -> impl Strategy<Value = RankedMassPartition> {
    prop::collection::vec(0.0f64..1.0, k).prop_filter_map("all zero", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-3).then(|| RankedMassPartition::from_unranked(w.iter().map(|x| x / total).collect()).unwrap())
    })
}

fn arb_nu(k: usize) -> impl Strategy<Value = MixtureMeasure> {
    prop_oneof![
        arb_masses(k).prop_map(MixtureMeasure::point),
        (arb_masses(k), arb_masses(k), 0.05f64..0.95).prop_map(|(a, b, w)| MixtureMeasure::finite(vec![
            (a, w),
            (b, 1.0 - w)
        ])
        .unwrap()),
        (0.1f64..5.0).prop_map(move |beta| MixtureMeasure::dirichlet(k, beta).unwrap()),
    ]
}

fn inverse(perm: &[Label]) -> Vec<Label> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p as usize - 1] = i as Label + 1;
    }
    inv
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Number of partitions of `[n]` into exactly `k` blocks.
fn stirling2(n: usize, k: usize) -> u128 {
    let mut s = vec![vec![0u128; k + 1]; n + 1];
    s[0][0] = 1;
    for i in 1..=n {
        for j in 1..=k.min(i) {
            s[i][j] = j as u128 * s[i - 1][j] + s[i - 1][j - 1];
        }
    }
    s[n][k]
}

#[test]
fn partition_counts() {
    let bell = [1u128, 1, 2, 5, 15, 52, 203, 877];
    for (n, &b) in bell.iter().enumerate().skip(1) {
        assert_eq!(enumerate_partitions(n, None).len() as u128, b);
        assert_eq!(bell_number(n), b);
        for k in 1..=n {
            let expect: u128 = (1..=k).map(|j| stirling2(n, j)).sum();
            assert_eq!(enumerate_partitions(n, Some(k)).len() as u128, expect, "n={n} k={k}");
        }
    }
}

#[test]
fn tree_counts() {
    // all trees: 1, 1, 4, 26, 236; binary trees: (2n-3)!!
    let all = [1usize, 1, 4, 26, 236];
    let binary = [1usize, 1, 3, 15, 105];
    for n in 1..=5 {
        assert_eq!(enumerate_trees(n, None).len(), all[n - 1]);
        assert_eq!(enumerate_trees(n, Some(2)).len(), binary[n - 1]);
    }
}

#[test]
fn fibers_partition_the_next_level() {
    for n in 1..=4 {
        for k in [Some(2), Some(3), None] {
            let mut seen = HashSet::new();
            for p in enumerate_partitions(n, k) {
                for q in partition_fiber(&p, n as Label + 1, k) {
                    assert_eq!(q.restrict(&GroundSet::range(n)).unwrap(), p);
                    assert!(seen.insert(q));
                }
            }
            assert_eq!(seen.len(), enumerate_partitions(n + 1, k).len());

            let mut seen = HashSet::new();
            for t in enumerate_trees(n, k) {
                for u in tree_fiber(&t, n as Label + 1, k) {
                    assert_eq!(u.restrict(&GroundSet::range(n)).unwrap(), t);
                    assert!(seen.insert(u));
                }
            }
            assert_eq!(seen.len(), enumerate_trees(n + 1, k).len());
        }
    }
}

#[test]
fn metric_on_five_labels() {
    let trees = enumerate_trees(5, Some(2));
    for a in &trees {
        for b in &trees {
            let d = tree_distance(a, b).unwrap();
            assert_eq!(d == 0.0, a == b);
            assert_eq!(d, tree_distance(b, a).unwrap());
            for c in trees.iter().step_by(7) {
                // ultrametric, so the triangle inequality holds in its strong form
                let (ac, cb) = (tree_distance(a, c).unwrap(), tree_distance(c, b).unwrap());
                assert!(d <= ac.max(cb) + 1e-15);
            }
        }
    }
}

/// Expansion along the first row.
fn permanent_by_minors(a: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    (0..a.len())
        .map(|j| {
            let minor: Vec<Vec<f64>> = a[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                .collect();
            a[0][j] * permanent_by_minors(&minor)
        })
        .sum()
}

fn arb_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restriction_composes(p in arb_partition(7), cut in 0usize..7, cut2 in 0usize..7) {
        let n = p.len();
        let s: Vec<Label> = ground(n).into_iter().filter(|x| !(*x as usize + cut).is_multiple_of(3)).collect();
        prop_assume!(!s.is_empty());
        let t: Vec<Label> = s.iter().copied().filter(|x| (*x as usize + cut2).is_multiple_of(2)).collect();
        prop_assume!(!t.is_empty());
        let (s, t) = (GroundSet::new(s).unwrap(), GroundSet::new(t).unwrap());
        prop_assert_eq!(p.restrict(&s).unwrap().restrict(&t).unwrap(), p.restrict(&t).unwrap());
    }

    #[test]
    fn tree_restriction_composes(t in arb_tree(5, None), drop in 1u32..=5) {
        let full = GroundSet::range(5);
        let s = GroundSet::new(full.iter().copied().filter(|&x| x != drop).collect()).unwrap();
        let r = t.restrict(&s).unwrap();
        let inner = GroundSet::new(s.iter().copied().filter(|&x| x % 2 == 1).collect()).unwrap();
        prop_assert_eq!(r.restrict(&inner).unwrap(), t.restrict(&inner).unwrap());
        prop_assert!(r.vertices().iter().all(|v| v.len() == 1 || r.children_of(r.index_of(v).unwrap()).len() >= 2));
    }

    #[test]
    fn permutations_act(p in arb_partition(6), seed in any::<u64>()) {
        let n = p.len();
        let perms = permutations(n);
        let s = &perms[(seed % perms.len() as u64) as usize];
        let r = &perms[((seed >> 20) % perms.len() as u64) as usize];
        prop_assert_eq!(p.permute(s).permute(&inverse(s)), p.clone());
        let composed: Vec<Label> = s.iter().map(|&x| r[x as usize - 1]).collect();
        prop_assert_eq!(p.permute(s).permute(r), p.permute(&composed));
        prop_assert_eq!(p.permute(s).block_sizes().len(), p.num_blocks());
    }

    #[test]
    fn tree_permutation_round_trip(t in arb_tree(5, None), sigma in arb_perm(5)) {
        prop_assert_eq!(t.permute(&sigma).permute(&inverse(&sigma)), t.clone());
        prop_assert_eq!(t.permute(&sigma).degree(), t.degree());
    }

    #[test]
    fn meet_laws(a in arb_partition(6), seed in any::<u64>()) {
        let n = a.len();
        let colors: Vec<usize> = (0..n).map(|i| ((seed >> (3 * i)) % 3) as usize).collect();
        let b = SetPartition::from_colors(&ground(n), &colors);
        let m = meet(&a, &b).unwrap();
        prop_assert_eq!(&m, &meet(&b, &a).unwrap());
        prop_assert_eq!(meet(&a, &a).unwrap(), a.clone());
        prop_assert!(m.refines(&a) && m.refines(&b));
        prop_assert_eq!(meet(&m, &a).unwrap(), m.clone());
        let one = SetPartition::one_block(&GroundSet::range(n));
        prop_assert_eq!(meet(&a, &one).unwrap(), a);
    }

    #[test]
    fn paintbox_is_a_distribution(s in arb_masses(3), n in 1usize..=5, sigma in arb_perm(5)) {
        let parts = enumerate_partitions(n, None);
        let total: f64 = parts.iter().map(|p| paintbox_prob(&s, p)).sum();
        prop_assert!(close(total, 1.0, 1e-12));
        let sigma: Vec<Label> = sigma.into_iter().filter(|&x| x as usize <= n).collect();
        for p in &parts {
            prop_assert!(close(paintbox_prob(&s, p), paintbox_prob(&s, &p.permute(&sigma)), 1e-14));
        }
    }

    #[test]
    fn dirichlet_paintbox_is_a_distribution(k in 1usize..=4, beta in 0.05f64..10.0, n in 1usize..=6) {
        let nu = MixtureMeasure::dirichlet(k, beta).unwrap();
        let total: f64 = enumerate_partitions(n, None).iter().map(|p| nu.prob_sizes(&p.block_sizes())).sum();
        prop_assert!(close(total, 1.0, 1e-12));
    }

    #[test]
    fn cp_rows_sum_to_one(nu in arb_nu(3), k in 3usize..=4, n in 1usize..=4) {
        let parts = enumerate_partitions(n, Some(k));
        for b in &parts {
            let total: f64 = parts.iter().map(|c| cp_prob(b, c, &nu, k).unwrap()).sum();
            prop_assert!(close(total, 1.0, 1e-12), "row {} sums to {}", b, total);
        }
    }

    #[test]
    fn cp_exchangeable(nu in arb_nu(2), sigma in arb_perm(4)) {
        let parts = enumerate_partitions(4, Some(2));
        for b in &parts {
            for c in &parts {
                let p = cp_prob(b, c, &nu, 2).unwrap();
                let q = cp_prob(&b.permute(&sigma), &c.permute(&sigma), &nu, 2).unwrap();
                prop_assert!(close(p, q, 1e-14));
            }
        }
    }

    #[test]
    fn cp_consistent(nu in arb_nu(3), n in 1usize..=3) {
        let k = 3;
        let x = n as Label + 1;
        for b in enumerate_partitions(n, Some(k)) {
            for c in enumerate_partitions(n, Some(k)) {
                let target = cp_prob(&b, &c, &nu, k).unwrap();
                for b_star in partition_fiber(&b, x, Some(k)) {
                    let lifted: f64 = partition_fiber(&c, x, Some(k))
                        .iter()
                        .map(|c2| cp_prob(&b_star, c2, &nu, k).unwrap())
                        .sum();
                    prop_assert!(close(lifted, target, 1e-12));
                }
            }
        }
    }

    #[test]
    fn ab_forms_agree(nu in arb_nu(2), t in arb_tree(4, Some(2))) {
        prop_assume!(!nu.is_degenerate());
        let ab = AbKernel::cp(nu, 2).unwrap();
        let mut total = 0.0;
        for u in enumerate_trees(4, Some(2)) {
            let a = ab.prob(&t, &u).unwrap();
            prop_assert!(close(a, ab.prob_recursive(&t, &u).unwrap(), 1e-12));
            total += a;
        }
        prop_assert!(close(total, 1.0, 1e-12));
    }

    #[test]
    fn ab_exchangeable(nu in arb_nu(3), t in arb_tree(4, Some(3)), sigma in arb_perm(4)) {
        prop_assume!(!nu.is_degenerate());
        let ab = AbKernel::cp(nu, 3).unwrap();
        for u in enumerate_trees(4, Some(3)) {
            let p = ab.prob(&t, &u).unwrap();
            let q = ab.prob(&t.permute(&sigma), &u.permute(&sigma)).unwrap();
            prop_assert!(close(p, q, 1e-13));
        }
    }

    #[test]
    fn alpha_permanent_oracles(a in arb_matrix(), alpha in 0.1f64..4.0) {
        let n = a.len();
        let minors = permanent_by_minors(&a);
        prop_assert!(close(alpha_permanent(&a, 1.0).unwrap(), minors, 1e-9 * (1.0 + minors.abs())));
        let ones = vec![vec![1.0; n]; n];
        let rising: f64 = (0..n).map(|i| alpha + i as f64).product();
        prop_assert!(close(alpha_permanent(&ones, alpha).unwrap(), rising, 1e-9 * rising));
        // simultaneous row and column permutation keeps cycle types
        let rev: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[n - 1 - i][n - 1 - j]).collect()).collect();
        let x = alpha_permanent(&a, alpha).unwrap();
        prop_assert!(close(x, alpha_permanent(&rev, alpha).unwrap(), 1e-9 * (1.0 + x.abs())));
    }

    #[test]
    fn newick_round_trips(t in arb_tree(5, None), raw in prop::collection::vec(0.0f64..10.0, 9)) {
        let lengths: Vec<f64> = (0..t.vertices().len())
            .map(|i| if t.vertex(i).len() == 1 { 0.0 } else { (raw[i % raw.len()] * 1e6).round() / 1e6 })
            .collect();
        let w = WeightedTree::new(t, lengths).unwrap();
        prop_assert_eq!(parse_newick(&to_newick(&w)).unwrap(), w);
    }

    #[test]
    fn restriction_keeps_path_lengths(t in arb_tree(5, None), raw in prop::collection::vec(0.0f64..10.0, 9)) {
        let lengths: Vec<f64> = (0..t.vertices().len()).map(|i| raw[i % raw.len()]).collect();
        let w = WeightedTree::new(t, lengths).unwrap();
        let r = weighted_restrict(&w).unwrap();
        prop_assert_eq!(r.tree().ground(), &[1, 2, 3, 4]);
        for x in 1..=4 {
            prop_assert!(close(r.path_length(x).unwrap(), w.path_length(x).unwrap(), 1e-12));
        }
    }

    #[test]
    fn mass_chain_conserves(nu in arb_nu(3), seed in any::<u64>(), start in prop::collection::vec(0.01f64..1.0, 1..=3)) {
        let total: f64 = start.iter().sum();
        let mut kids: Vec<f64> = start.iter().map(|x| x / total).collect();
        kids.sort_by(|a, b| b.total_cmp(a));
        let mut state = MassFragmentation::from_root_children(kids).unwrap();
        for step in 0..5u64 {
            let mut drivers = CoupledDrivers::new(&nu, 3, seed.wrapping_add(step));
            state = mass_apply(&state, &mut drivers, 3, 3).unwrap();
            prop_assert!(state.conservation_error() <= 1e-9);
            prop_assert!(state.depth() <= 3);
            let kids = state.root_children();
            prop_assert!(kids.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

#[test]
fn cp_kernel_trait_matches_free_function() {
    let nu = MixtureMeasure::dirichlet(3, 0.7).unwrap();
    let kernel = CpKernel::new(nu.clone(), 3).unwrap();
    let parts = enumerate_partitions(4, Some(3));
    for b in &parts {
        for c in &parts {
            assert_eq!(kernel.prob(b, c), cp_prob(b, c, &nu, 3).unwrap());
        }
    }
}
