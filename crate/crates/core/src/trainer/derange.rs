use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::DyadSequence;

/// Uniformly random permutation of `0..n` without fixed points, by
/// rejection sampling of uniform shuffles.
pub fn derange<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::NoDerangement(n));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(perm);
        }
    }
}

/// Mismatched batch: item `i` keeps its own avatar face and speech but
/// receives the interlocutor face and speech of item `perm[i]`, moved
/// together as whole contiguous sequences.
pub fn make_negative_batch<R: Rng + ?Sized>(
    batch: &[DyadSequence],
    rng: &mut R,
) -> Result<(Vec<DyadSequence>, Vec<usize>)> {
    if batch.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "negative batches need at least 2 items, got {}",
            batch.len()
        )));
    }
    let perm = derange(batch.len(), rng)?;
    let out = batch
        .iter()
        .zip(&perm)
        .map(|(item, &src)| DyadSequence {
            avatar_face: item.avatar_face.clone(),
            avatar_speech: item.avatar_speech.clone(),
            interlocutor_speech: batch[src].interlocutor_speech.clone(),
            interlocutor_face: batch[src].interlocutor_face.clone(),
        })
        .collect();
    Ok((out, perm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::Track;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn two_elements_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(derange(2, &mut rng).unwrap(), vec![1, 0]);
    }

    #[test]
    fn single_element_has_no_derangement() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(derange(1, &mut rng), Err(Error::NoDerangement(1))));
        assert!(matches!(derange(0, &mut rng), Err(Error::NoDerangement(0))));
    }

    #[test]
    fn three_elements_cover_both_derangements_uniformly() {
        // Exhaustive enumeration of the 3! permutations leaves exactly these two.
        let mut all = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let p = [a, b, c];
                    let distinct = a != b && b != c && a != c;
                    if distinct && p.iter().enumerate().all(|(i, &v)| i != v) {
                        all.push(p.to_vec());
                    }
                }
            }
        }
        assert_eq!(all, vec![vec![1, 2, 0], vec![2, 0, 1]]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..4000 {
            *counts.entry(derange(3, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 2);
        for p in &all {
            let c = counts[p] as f64;
            // Binomial(4000, 0.5): sd ≈ 31.6
            assert!((c - 2000.0).abs() < 4.0 * 31.7, "{p:?}: {c}");
        }
    }

    fn item(tag: f64, len: usize) -> DyadSequence {
        let ramp = |dim: usize, off: f64| {
            Track::new(dim, (0..dim * len).map(|i| tag * 1000.0 + off + i as f64).collect()).unwrap()
        };
        DyadSequence {
            avatar_face: ramp(2, 0.0),
            avatar_speech: ramp(3, 100.0),
            interlocutor_speech: ramp(3, 200.0),
            interlocutor_face: ramp(2, 300.0),
        }
    }

    #[test]
    fn negative_batch_keeps_pairs_and_contiguity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch: Vec<_> = (0..6).map(|i| item(i as f64, 5)).collect();
        for _ in 0..50 {
            let (neg, perm) = make_negative_batch(&batch, &mut rng).unwrap();
            for (i, n) in neg.iter().enumerate() {
                assert_ne!(perm[i], i);
                assert_eq!(n.avatar_face, batch[i].avatar_face);
                assert_eq!(n.avatar_speech, batch[i].avatar_speech);
                // Both interlocutor streams come from the same, whole source item.
                assert_eq!(n.interlocutor_face, batch[perm[i]].interlocutor_face);
                assert_eq!(n.interlocutor_speech, batch[perm[i]].interlocutor_speech);
            }
        }
    }

    #[test]
    fn pair_batch_swaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch = vec![item(0.0, 3), item(1.0, 3)];
        let (neg, perm) = make_negative_batch(&batch, &mut rng).unwrap();
        assert_eq!(perm, vec![1, 0]);
        assert_eq!(neg[0].interlocutor_face, batch[1].interlocutor_face);
        assert_eq!(neg[1].interlocutor_speech, batch[0].interlocutor_speech);
        assert!(make_negative_batch(&batch[..1], &mut rng).is_err());
    }
}
