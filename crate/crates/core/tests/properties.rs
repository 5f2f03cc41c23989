mod common;

use std::collections::BTreeSet;

use alforge_core::coldstart::{
    elbow_select, kmeans, kmeans_best_of, select_seed_instances, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use alforge_core::metrics::{
    classifier_uncertainty, entropy_of_classes, info_density_cosine, info_density_euclidean, margin_uncertainty,
    snapshot,
};
use alforge_core::models::{build_committee, mean_posterior, KnnModel, PosteriorVector};
use alforge_core::oracle::{fuse, overall_confidence, FusionStrategy};
use alforge_core::strategies::{select, should_switch, Similarity, StrategySpec, SwitchPolicy, UsMeasure};
use alforge_core::synthetic::{gaussian_blobs, grid_centers};
use alforge_core::{Dataset, Error, LoadOptions};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_survives_any_labeling_sequence(n in 1usize..40, ops in prop::collection::vec((0usize..50, 0usize..4), 0..80)) {
        let rows = vec![vec![0.0]; n];
        let mut ds = Dataset::new(rows, vec!["a".into(), "b".into(), "c".into()], None).unwrap();
        for (id, class) in ops {
            let before_labeled = ds.labeled().len();
            match ds.mark_labeled(id, class) {
                Ok(()) => prop_assert_eq!(ds.labeled().len(), before_labeled + 1),
                Err(Error::AlreadyLabeled(_)) | Err(Error::UnknownId(_)) | Err(Error::UnknownClass { .. }) => {
                    prop_assert_eq!(ds.labeled().len(), before_labeled)
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
            let labeled: BTreeSet<usize> = ds.labeled().keys().copied().collect();
            prop_assert!(labeled.is_disjoint(ds.unlabeled()));
            let union: BTreeSet<usize> = labeled.union(ds.unlabeled()).copied().collect();
            prop_assert_eq!(union, (0..n).collect::<BTreeSet<_>>());
            prop_assert!(ds.labeled().values().all(|&c| c < 3));
            prop_assert!(ds.validate().is_ok());
        }
    }

    #[test]
    fn csv_round_trip_is_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..30);
        let dim = r.random_range(1..5);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(-1e6..1e6)).collect()).collect();
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let names: Vec<String> = vec!["alpha".into(), "beta".into(), "gamma".into()];
        let ds = Dataset::new(rows, names.clone(), Some(truth)).unwrap();
        let options = LoadOptions {
            label_column: Some("label".into()),
            standardize: false,
            class_names: Some(names),
            ..LoadOptions::default()
        };
        let mut first = Vec::new();
        ds.write_csv(&mut first, Some("label")).unwrap();
        let back = Dataset::from_csv_reader(first.as_slice(), &options).unwrap();
        prop_assert_eq!(back.instances(), ds.instances());
        prop_assert_eq!(back.ground_truth(), ds.ground_truth());
        let mut second = Vec::new();
        back.write_csv(&mut second, Some("label")).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn knn_matches_exhaustive_scan(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=200);
        let dim = r.random_range(1..=4);
        let rows = random_rows(&mut r, n, dim);
        let classes = r.random_range(2..=5);
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..classes)).collect();
        let names = (0..classes).map(|c| format!("c{c}")).collect();
        let mut ds = Dataset::new(rows, names, Some(truth.clone())).unwrap();
        for id in 0..n {
            if r.random_bool(0.5) {
                ds.mark_labeled(id, truth[id]).unwrap();
            }
        }
        if ds.labeled().is_empty() {
            ds.mark_labeled(0, truth[0]).unwrap();
        }
        let labeled: Vec<usize> = ds.labeled().keys().copied().collect();
        let k = r.random_range(1..=15);
        let model = KnnModel::fit(&ds, &labeled, k).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = random_rows(&mut r, 1, dim).remove(0);
            let got = model.predict_proba(&x).unwrap();
            let want = bf_knn(&ds, &labeled, k, &x);
            prop_assert_eq!(got.probs(), want.as_slice());
        }
    }

    #[test]
    fn consensus_is_member_mean(seed in any::<u64>()) {
        let mut r = rng(seed);
        let w = random_world(&mut r, 40, 5);
        for id in 0..w.dataset.len() {
            let x = w.dataset.features(id);
            let got = w.committee.consensus_proba(x).unwrap();
            let want = bf_committee_mean(&w.dataset, &w.committee, x);
            for (g, e) in got.probs().iter().zip(&want) {
                prop_assert!(close(*g, *e, 1e-12));
            }
        }
    }

    #[test]
    fn ie_scales_and_ic_is_scale_free(seed in any::<u64>(), s in 0.01f64..100.0) {
        let mut r = rng(seed);
        let n = r.random_range(2..30);
        let rows = random_rows(&mut r, n, 3);
        let scaled: Vec<Vec<f64>> = rows.iter().map(|v| v.iter().map(|x| x * s).collect()).collect();
        let pool: Vec<&[f64]> = rows[1..].iter().map(Vec::as_slice).collect();
        let pool_s: Vec<&[f64]> = scaled[1..].iter().map(Vec::as_slice).collect();
        let ie = info_density_euclidean(&rows[0], pool.iter().copied()).unwrap();
        let ie_s = info_density_euclidean(&scaled[0], pool_s.iter().copied()).unwrap();
        prop_assert!(close(ie_s, s * ie, 1e-12 * (1.0 + s * ie)));
        let ic = info_density_cosine(&rows[0], pool.iter().copied()).unwrap();
        let ic_s = info_density_cosine(&scaled[0], pool_s.iter().copied()).unwrap();
        prop_assert!(close(ic, ic_s, 1e-12));
    }

    #[test]
    fn overall_confidence_is_plain_mean(scores in prop::collection::vec(1u8..=5, 1..500)) {
        let got = overall_confidence(scores.iter().copied()).unwrap();
        let mean = scores.iter().map(|&s| s as f64).sum::<f64>() / scores.len() as f64;
        prop_assert!(close(got, mean, 1e-12));
        prop_assert!((1.0..=5.0).contains(&got));
    }

    #[test]
    fn fusion_is_ordered(pairs in prop::collection::vec((1u8..=5, 1u8..=5), 1..200)) {
        let fused = |f: FusionStrategy| -> Vec<u8> {
            pairs.iter().map(|&(m, e)| fuse(m, e, f).unwrap()).collect()
        };
        let (c, e, o) = (
            fused(FusionStrategy::Conservative),
            fused(FusionStrategy::ExpertAlwaysRight),
            fused(FusionStrategy::Optimistic),
        );
        for i in 0..pairs.len() {
            prop_assert!(c[i] <= e[i] && e[i] <= o[i]);
        }
        let (sc, se, so) = (
            overall_confidence(c).unwrap(),
            overall_confidence(e).unwrap(),
            overall_confidence(o).unwrap(),
        );
        prop_assert!(sc <= se && se <= so);
    }

    #[test]
    fn switch_is_monotone_in_epsilon(
        history in prop::collection::vec(0.0f64..2.0, 2..40),
        window in 2usize..10,
        eps in 1e-6f64..1.0,
        bump in 0.0f64..1.0,
    ) {
        let base = SwitchPolicy { window, stall_epsilon: eps, oscillation_threshold: 10.0, ..SwitchPolicy::default() };
        let wider = SwitchPolicy { stall_epsilon: eps + bump, ..base.clone() };
        if should_switch(&history, &base) {
            prop_assert!(should_switch(&history, &wider));
        }
    }

    #[test]
    fn lloyd_never_raises_wcss(seed in any::<u64>(), k in 1usize..6) {
        let mut r = rng(seed);
        let n = r.random_range(k..60);
        let rows = random_rows(&mut r, n, 2);
        let ds = Dataset::new(rows, vec!["x".into()], None).unwrap();
        let c = kmeans(&ds, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        for w in c.wcss_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", c.wcss_trace);
        }
        let recomputed: f64 = (0..n)
            .map(|id| bf_sq_dist(ds.features(id), &c.centroids[c.assignment[id]]))
            .sum();
        prop_assert!(close(recomputed, c.wcss, 1e-9 * (1.0 + recomputed)));
    }

    #[test]
    fn seeds_are_closest_remaining_in_cluster(seed in any::<u64>(), k in 1usize..6, fraction in 0.01f64..1.0) {
        let mut r = rng(seed);
        let n = r.random_range(k..80);
        let rows = random_rows(&mut r, n, 2);
        let ds = Dataset::new(rows, vec!["x".into()], None).unwrap();
        let c = kmeans(&ds, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let sel = select_seed_instances(&ds, &c, fraction).unwrap();
        let budget = ((fraction * n as f64 - 1e-9).ceil() as usize).min(n);
        prop_assert_eq!(sel.selected.len(), budget);
        let mut taken = BTreeSet::new();
        for &id in &sel.selected {
            let cl = c.assignment[id];
            let d = |j: usize| (bf_sq_dist(ds.features(j), &c.centroids[cl]), j);
            let best = (0..n)
                .filter(|&j| c.assignment[j] == cl && !taken.contains(&j))
                .map(d)
                .min_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap();
            prop_assert_eq!(best.1, id);
            taken.insert(id);
        }
        let total: usize = sel.per_cluster_quota.values().sum();
        prop_assert_eq!(total, budget);
    }

    #[test]
    fn selectors_are_pure_and_pick_from_pool(seed in any::<u64>()) {
        let mut r = rng(seed);
        let w = random_world(&mut r, 40, 4);
        let specs = [
            StrategySpec::us(),
            StrategySpec::Us { measure: UsMeasure::Margin },
            StrategySpec::Us { measure: UsMeasure::Entropy },
            StrategySpec::Qbc,
            StrategySpec::Dwm { measure: UsMeasure::ClassifierUncertainty, similarity: Similarity::Cosine },
            StrategySpec::Dwm { measure: UsMeasure::Entropy, similarity: Similarity::Euclidean },
        ];
        for spec in specs {
            let a = select(&spec, &w.model, Some(&w.committee), &w.dataset).unwrap();
            let b = select(&spec, &w.model, Some(&w.committee), &w.dataset).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(w.dataset.unlabeled().contains(&a));
        }
    }

    #[test]
    fn snapshot_ranges_hold(seed in any::<u64>()) {
        let mut r = rng(seed);
        let w = random_world(&mut r, 30, 6);
        let snap = snapshot(&w.dataset, &w.model, &w.committee, 0, 3.0).unwrap();
        let ln_c = (w.dataset.n_classes() as f64).ln();
        let c = w.dataset.n_classes() as f64;
        prop_assert!(snap.ec >= 0.0 && snap.ec <= ln_c + 1e-12);
        prop_assert!(snap.ce >= 0.0 && snap.ce <= ln_c + 1e-12);
        prop_assert!(snap.mu >= 0.0 && snap.mu <= 1.0);
        prop_assert!(snap.cu >= 0.0 && snap.cu <= 1.0 - 1.0 / c + 1e-12);
        prop_assert!(snap.ie >= 0.0);
        prop_assert!(snap.ic >= -1.0 - 1e-12 && snap.ic <= 1.0 + 1e-12);
        let acc = snap.accuracy.unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
    }
}

#[test]
fn posterior_ranges_on_ten_thousand_draws() {
    let mut r = rng(7);
    for _ in 0..10_000 {
        let c = r.random_range(2..=8);
        let p = PosteriorVector::new(random_posterior(&mut r, c));
        let sum: f64 = p.probs().iter().sum();
        assert!(close(sum, 1.0, 1e-12));
        let ec = entropy_of_classes(&p);
        let mu = margin_uncertainty(&p).unwrap();
        let cu = classifier_uncertainty(&p);
        assert!(ec >= 0.0 && ec <= (c as f64).ln() + 1e-12);
        assert!((0.0..=1.0).contains(&mu));
        assert!(cu >= 0.0 && cu <= 1.0 - 1.0 / c as f64 + 1e-12);
        assert!(close(cu + p.max_prob(), 1.0, 1e-15));
        let mut sorted = p.probs().to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(mu == 0.0, sorted[0] == sorted[1]);
        let mut shuffled = p.probs().to_vec();
        shuffled.reverse();
        shuffled.rotate_left(r.random_range(0..c));
        assert!(close(entropy_of_classes(&PosteriorVector::new(shuffled)), ec, 1e-12));
        assert!(ec <= entropy_of_classes(&PosteriorVector::new(vec![1.0 / c as f64; c])) + 1e-12);
    }
}

#[test]
fn predict_proba_sums_to_one_on_ten_thousand_inputs() {
    let mut r = rng(11);
    let w = random_world(&mut r, 50, 6);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..w.dataset.dim()).map(|_| r.random_range(-6.0..6.0)).collect();
        let p = w.model.predict_proba(&x).unwrap();
        assert!(close(p.probs().iter().sum::<f64>(), 1.0, 1e-12));
    }
}

#[test]
fn mean_posterior_of_identical_members_is_identity() {
    let p = PosteriorVector::new(vec![0.25, 0.5, 0.25]);
    let m = mean_posterior(&[p.clone(), p.clone(), p.clone()]).unwrap();
    assert_eq!(m.probs(), p.probs());
}

#[test]
fn committee_rebuild_is_bit_identical() {
    let mut r = rng(3);
    let w = random_world(&mut r, 50, 4);
    let a = build_committee(&w.dataset, 5, 3, 99).unwrap();
    let b = build_committee(&w.dataset, 5, 3, 99).unwrap();
    assert_eq!(a.records(), b.records());
    let labeled: Vec<usize> = w.dataset.labeled().keys().copied().collect();
    let m1 = KnnModel::fit(&w.dataset, &labeled, 5).unwrap();
    let m2 = KnnModel::fit(&w.dataset, &labeled, 5).unwrap();
    for id in 0..w.dataset.len() {
        let x = w.dataset.features(id);
        assert_eq!(m1.predict_proba(x).unwrap(), m2.predict_proba(x).unwrap());
    }
}

#[test]
fn elbow_is_deterministic() {
    let ds = gaussian_blobs(&grid_centers(4, 8.0), 50, 1.0, 5).unwrap();
    let a = elbow_select(&ds, 10, 17).unwrap();
    let b = elbow_select(&ds, 10, 17).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, 4);
}

#[test]
fn seed_set_covers_every_blob() {
    for seed in 0..10 {
        let ds = gaussian_blobs(&grid_centers(4, 8.0), 100, 1.0, seed).unwrap();
        let c = kmeans_best_of(&ds, 4, seed, 5).unwrap();
        let sel = select_seed_instances(&ds, &c, 0.02).unwrap();
        let blobs: BTreeSet<usize> = sel.selected.iter().map(|&id| ds.true_class(id).unwrap()).collect();
        assert_eq!(blobs.len(), 4, "seed {seed}");
    }
}
