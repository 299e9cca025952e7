mod common;

use std::collections::HashSet;

use common::{random_sequence, random_track, rng, tiny_config};
use dyadflow::model::DyadSequence;
use dyadflow::trainer::{batch_loss, derange, make_negative_batch, warmup_lr, TrainConfig, Trainer};
use dyadflow::DyadFlowModel;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derangements_are_fixed_point_free_permutations(n in 2usize..60, seed in any::<u64>()) {
        let p = derange(n, &mut rng(seed)).unwrap();
        prop_assert_eq!(p.len(), n);
        prop_assert!(p.iter().enumerate().all(|(i, &j)| i != j));
        let set: HashSet<usize> = p.iter().copied().collect();
        prop_assert_eq!(set.len(), n);
        prop_assert!(p.iter().all(|&j| j < n));
    }

    #[test]
    fn negative_batches_move_interlocutor_streams_together(n in 2usize..8, seed in any::<u64>()) {
        let cfg = tiny_config();
        let batch: Vec<DyadSequence> = (0..n).map(|i| random_sequence(&cfg, 6, seed ^ i as u64)).collect();
        let (neg, perm) = make_negative_batch(&batch, &mut rng(seed)).unwrap();
        for (i, item) in neg.iter().enumerate() {
            prop_assert_ne!(perm[i], i);
            prop_assert_eq!(&item.avatar_face, &batch[i].avatar_face);
            prop_assert_eq!(&item.avatar_speech, &batch[i].avatar_speech);
            prop_assert_eq!(&item.interlocutor_face, &batch[perm[i]].interlocutor_face);
            prop_assert_eq!(&item.interlocutor_speech, &batch[perm[i]].interlocutor_speech);
        }
    }

    #[test]
    fn causal_window_ends_before_t(dim in 1usize..4, len in 1usize..20, t in 0usize..25, w in 1usize..10, seed in any::<u64>()) {
        let track = random_track(dim, len, &mut rng(seed));
        let t = t.min(len);
        let mut out = Vec::new();
        track.window_into(t, w, &mut out);
        prop_assert_eq!(out.len(), w * dim);
        for i in 0..w {
            let src = t as isize - w as isize + i as isize;
            let got = &out[i * dim..(i + 1) * dim];
            if src < 0 {
                prop_assert!(got.iter().all(|&v| v == 0.0));
            } else {
                prop_assert_eq!(got, track.frame(src as usize));
            }
        }
    }

    #[test]
    fn warmup_is_monotone_and_capped(warmup in 0u64..1000, a in 0u64..3000, b in 0u64..3000) {
        let cfg = TrainConfig { warmup_steps: warmup, ..TrainConfig::default() };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(warmup_lr(lo, &cfg) <= warmup_lr(hi, &cfg));
        prop_assert!(warmup_lr(hi, &cfg) <= cfg.initial_lr);
        if hi >= warmup {
            prop_assert_eq!(warmup_lr(hi, &cfg), cfg.initial_lr);
        }
    }
}

#[test]
fn derangement_of_fewer_than_two_is_an_error() {
    assert!(derange(0, &mut rng(0)).is_err());
    assert!(derange(1, &mut rng(0)).is_err());
    let cfg = tiny_config();
    assert!(make_negative_batch(&[random_sequence(&cfg, 4, 0)], &mut rng(0)).is_err());
}

#[test]
fn derangements_are_roughly_uniform() {
    // n = 3 has exactly two derangements.
    let mut r = rng(9);
    let first = (0..4000).filter(|_| derange(3, &mut r).unwrap() == vec![1, 2, 0]).count();
    assert!((1800..2200).contains(&first), "{first}");
}

#[test]
fn loss_rule_covers_every_case() {
    assert_eq!(batch_loss(2.5, false), Some(2.5));
    assert_eq!(batch_loss(2.5, true), Some(-2.5));
    assert_eq!(batch_loss(-0.5, true), None);
}

fn sources() -> Vec<DyadSequence> {
    (0..4).map(|i| random_sequence(&tiny_config(), 60, 100 + i)).collect()
}

fn trainer(cfg: TrainConfig) -> Trainer {
    let mut model = DyadFlowModel::new(tiny_config(), 1).unwrap();
    model.initialize_actnorm(&sources(), 200).unwrap();
    Trainer::new(model, cfg).unwrap()
}

fn small_train_config() -> TrainConfig {
    TrainConfig {
        initial_lr: 1e-2,
        warmup_steps: 3,
        batch_size: 4,
        sequence_length: 10,
        epochs: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn training_reduces_nll_on_the_training_windows() {
    let src = sources();
    let mut tr = trainer(TrainConfig { negative_training: false, ..small_train_config() });
    let before: f64 = src.iter().map(|s| tr.model.sequence_nll(s).unwrap()).sum();
    let mut sink = std::io::sink();
    for _ in 0..10 {
        tr.train_epoch(&src, &mut sink).unwrap();
    }
    let after: f64 = src.iter().map(|s| tr.model.sequence_nll(s).unwrap()).sum();
    assert!(after < before - 0.5, "{before} -> {after}");
}

#[test]
fn epochs_visit_full_batches_and_log_every_step() {
    let src = sources();
    let mut tr = trainer(small_train_config());
    let mut log = Vec::new();
    let m = tr.train_epoch(&src, &mut log).unwrap();
    let text = String::from_utf8(log).unwrap();
    assert_eq!(text.lines().count(), m.batches);
    assert_eq!(m.batches, m.positive_batches + m.negative_batches);
    assert_eq!(m.sample_fed_frames, 0);
    assert_eq!(tr.counters.epoch, 1);
    assert_eq!(tr.counters.batch_in_epoch, 0);
    // 4 sources of 60 frames cut into 10-frame windows from a random phase.
    assert!((20..=24).contains(&(m.batches * 4)), "{} batches", m.batches);
    for line in text.lines() {
        assert_eq!(line.split(' ').count(), 5);
    }
}

#[test]
fn no_neg_train_never_builds_negative_batches() {
    let src = sources();
    let mut tr = trainer(TrainConfig { negative_training: false, negative_prob: 1.0, ..small_train_config() });
    let mut sink = std::io::sink();
    for _ in 0..3 {
        assert_eq!(tr.train_epoch(&src, &mut sink).unwrap().negative_batches, 0);
    }
}

#[test]
fn invalid_train_configs_are_rejected() {
    let model = DyadFlowModel::new(tiny_config(), 0).unwrap();
    assert!(Trainer::new(model.clone(), TrainConfig { batch_size: 0, ..small_train_config() }).is_err());
    assert!(Trainer::new(model.clone(), TrainConfig { batch_size: 1, ..small_train_config() }).is_err());
    assert!(Trainer::new(model, TrainConfig { sequence_length: 1, ..small_train_config() }).is_err());
}
