//! Library results against independent reference computations.

mod common;

use manloc_core::bayes::{refine_bayes, LikelihoodParams};
use manloc_core::edt::{edt_bruteforce, edt_exact};
use manloc_core::metrics::{evaluate, roc_auc, threshold_sweep};
use manloc_core::regions::{extract_regions, select_best_region, similarity};
use manloc_core::{BinaryMask, Heatmap, LabelMap};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn mask_strategy(max: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<bool>(), w * h).prop_map(move |bits| BinaryMask::new(w, h, bits).unwrap())
    })
}

fn scored_strategy(max_len: usize, levels: u32) -> impl Strategy<Value = (Heatmap, BinaryMask)> {
    (2..=max_len).prop_flat_map(move |n| {
        (
            proptest::collection::vec(0..=levels, n),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(q, mut g)| {
                g[0] = true;
                g[n - 1] = false;
                let pred = Heatmap::new(n, 1, q.iter().map(|&k| k as f32 / levels as f32).collect()).unwrap();
                (pred, BinaryMask::new(n, 1, g).unwrap())
            })
    })
}

proptest! {
    #[test]
    fn edt_matches_exhaustive_search(mask in mask_strategy(24)) {
        let fast = edt_exact(&mask);
        let slow = edt_bruteforce(&mask);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn similarity_matches_double_loop(seed in any::<u64>(), density in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = random_mask(&mut rng, 16, 12, density);
        prop_assume!(mask.area() > 0);
        let a = random_heatmap(&mut rng, 16, 12);
        let s = similarity(&mask, &a).unwrap();
        prop_assert!((s - similarity_double_loop(&mask, &a)).abs() <= 1e-9);
    }

    #[test]
    fn auc_matches_pairwise_count((pred, gt) in scored_strategy(300, 16)) {
        let auc = roc_auc(&pred, &gt).unwrap();
        prop_assert!((auc - pairwise_auc(pred.values(), gt.bits())).abs() <= 1e-9);
    }

    #[test]
    fn sweep_best_f1_matches_exhaustive_cuts((pred, gt) in scored_strategy(200, 8)) {
        let sweep = threshold_sweep(&pred, &gt, 9).unwrap();
        let best = sweep.iter().map(|(_, r)| r.f1).fold(0.0, f64::max);
        prop_assert_eq!(best, exhaustive_best_f1(pred.values(), gt.bits()));
    }

    #[test]
    fn evaluate_counts_match_definition((pred, gt) in scored_strategy(200, 8), k in 0u32..=8) {
        let tau = f64::from(k) / 8.0;
        let r = evaluate(&pred, &gt, tau).unwrap();
        let (tp, fp, tn, fnn) = definitional_counts(pred.values(), gt.bits(), tau);
        prop_assert_eq!((r.counts.tp, r.counts.fp, r.counts.tn, r.counts.fn_), (tp, fp, tn, fnn));
        prop_assert_eq!(r.f1, f1_from_counts(tp, fp, fnn));
    }

    #[test]
    fn refinement_moves_mass_toward_the_mask(seed in any::<u64>(), lin in 0.51f64..0.99, lout in 0.01f64..0.49) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prior = random_heatmap(&mut rng, 10, 10);
        let mask = random_mask(&mut rng, 10, 10, 0.4);
        let p = LikelihoodParams::new(lin, lout).unwrap();
        let post = refine_bayes(&prior, &mask, &p).unwrap();
        for ((&q, &r), &m) in prior.values().iter().zip(post.values()).zip(mask.bits()) {
            if m {
                prop_assert!(r >= q);
            } else {
                prop_assert!(r <= q);
            }
        }
    }
}

#[test]
fn selection_agrees_with_scoring_every_region_by_hand() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 1..=6 {
        let labels = random_labelmap(&mut rng, 20, 20, k);
        let a = random_heatmap(&mut rng, 20, 20);
        let regions = extract_regions(&labels);
        let mut best = (0u32, f64::NEG_INFINITY);
        for l in 1..=k {
            let m = BinaryMask::from_fn(20, 20, |x, y| labels.get(x, y) == l).unwrap();
            let s = similarity_double_loop(&m, &a);
            if s > best.1 + 1e-12 {
                best = (l, s);
            }
        }
        assert_eq!(select_best_region(&regions, &a).unwrap().label, best.0);
    }
}

#[test]
fn background_label_is_never_a_candidate() {
    let labels = LabelMap::new(3, 1, vec![0, 4, 0]).unwrap();
    let regions = extract_regions(&labels);
    assert_eq!(regions.iter().map(|r| r.label).collect::<Vec<_>>(), vec![4]);
}
