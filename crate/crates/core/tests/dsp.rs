mod common;

use std::f64::consts::PI;

use common::{normal_vec, rng};
use dyadflow::features::{
    compute_mfcc_energy, compute_prosody, savgol_coefficients, savgol_filter, vad_mask, AudioSignal, EdgeMode,
    MelFilterbank, MfccExtractor, VadConfig,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const SR: u32 = 16_000;

fn audio(samples: Vec<f64>) -> AudioSignal {
    AudioSignal::new(samples, SR).unwrap()
}

fn tone(freqs: &[(f64, f64)], secs: f64) -> Vec<f64> {
    (0..(secs * SR as f64) as usize)
        .map(|n| {
            let t = n as f64 / SR as f64;
            freqs.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum()
        })
        .collect()
}

/// Least-squares polynomial fit over the window centred on `i`, evaluated
/// at the centre.
fn lstsq_smooth(x: &[f64], i: usize, half: usize, order: usize) -> f64 {
    let n = 2 * half + 1;
    let a = DMatrix::from_fn(n, order + 1, |r, c| (r as f64 - half as f64).powi(c as i32));
    let b = DVector::from_iterator(n, (0..n).map(|r| x[i + r - half]));
    let coef = a.svd(true, true).solve(&b, 1e-12).unwrap();
    coef[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn savgol_reproduces_cubics(
        coef in prop::array::uniform4(-2.0f64..2.0),
        len in 9usize..80,
    ) {
        let x: Vec<f64> = (0..len)
            .map(|t| {
                let u = t as f64 / 10.0;
                coef[0] + coef[1] * u + coef[2] * u * u + coef[3] * u * u * u
            })
            .collect();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let interp = savgol_filter(&x, 9, 3, EdgeMode::Interp);
        for (a, b) in x.iter().zip(&interp) {
            prop_assert!((a - b).abs() < 1e-9 * scale);
        }
        let mirror = savgol_filter(&x, 9, 3, EdgeMode::Mirror);
        for t in 4..len - 4 {
            prop_assert!((x[t] - mirror[t]).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn savgol_interior_matches_least_squares(seed in any::<u64>(), half in 2usize..6, order in 0usize..4) {
        prop_assume!(order < 2 * half + 1);
        let x = normal_vec(40, &mut rng(seed));
        let y = savgol_filter(&x, 2 * half + 1, order, EdgeMode::Interp);
        for i in half..40 - half {
            prop_assert!((y[i] - lstsq_smooth(&x, i, half, order)).abs() < 1e-9);
        }
    }

    #[test]
    fn mfcc_is_translation_covariant(seed in any::<u64>(), shift in 1usize..5) {
        let mut r = rng(seed);
        let base: Vec<f64> = normal_vec(4800, &mut r).iter().map(|v| 0.1 * v).collect();
        let hop = 160;
        let mut shifted: Vec<f64> = normal_vec(shift * hop, &mut r).iter().map(|v| 0.1 * v).collect();
        shifted.extend_from_slice(&base);
        let a = compute_mfcc_energy(&audio(base)).unwrap();
        let b = compute_mfcc_energy(&audio(shifted)).unwrap();
        prop_assert_eq!(b.len(), a.len() + shift);
        for t in 0..a.len() {
            for (u, v) in a.frame(t).iter().zip(b.frame(t + shift)) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gain_moves_only_log_energy(seed in any::<u64>(), gain in 0.1f64..10.0) {
        let x: Vec<f64> = normal_vec(640, &mut rng(seed)).iter().map(|v| 0.1 * v).collect();
        let ex = MfccExtractor::new(SR).unwrap();
        let a = ex.frame_features(&x[..320]);
        let scaled: Vec<f64> = x[..320].iter().map(|v| gain * v).collect();
        let b = ex.frame_features(&scaled);
        for k in 0..25 {
            prop_assert!((a[k] - b[k]).abs() < 1e-9);
        }
        prop_assert!((b[25] - a[25] - 2.0 * gain.ln()).abs() < 1e-9);
    }
}

#[test]
fn savgol_reference_coefficients() {
    let c = savgol_coefficients(7, 2);
    let expected = [-2.0, 3.0, 6.0, 7.0, 6.0, 3.0, -2.0].map(|v| v / 21.0);
    for (a, b) in c.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn mel_filters_peak_at_increasing_centres() {
    let fb = MelFilterbank::new(26, 1024, SR);
    assert_eq!(fb.weights.len(), 26);
    assert!(fb.centers_hz.windows(2).all(|w| w[0] < w[1]));
    for w in &fb.weights {
        assert_eq!(w.len(), 513);
        let peak = w.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
    // Adjacent triangles overlap so that the filters tile the band.
    for j in 1..26 {
        let overlap: f64 = fb.weights[j - 1].iter().zip(&fb.weights[j]).map(|(a, b)| a.min(*b)).sum();
        assert!(overlap > 0.0, "filters {} and {j} do not overlap", j - 1);
    }
}

#[test]
fn pitch_follows_a_harmonic_voice() {
    let x = tone(&[(120.0, 0.4), (240.0, 0.2), (360.0, 0.1)], 0.5);
    let p = compute_prosody(&audio(x)).unwrap();
    let interior = 3..p.features.len() - 3;
    for t in interior {
        assert!(p.voiced[t]);
        assert!((p.features.frame(t)[0] - 120.0).abs() < 2.0, "frame {t}: {}", p.features.frame(t)[0]);
        assert!(p.features.frame(t)[1].abs() < 1.0);
    }
}

#[test]
fn white_noise_is_mostly_unvoiced() {
    let x: Vec<f64> = normal_vec(8000, &mut rng(3)).iter().map(|v| 0.2 * v).collect();
    let p = compute_prosody(&audio(x)).unwrap();
    let voiced = p.voiced.iter().filter(|&&v| v).count();
    assert!(voiced * 5 < p.voiced.len(), "{voiced} of {} voiced", p.voiced.len());
}

#[test]
fn vad_suppresses_crosstalk() {
    let cfg = VadConfig::default();
    let loud = tone(&[(200.0, 0.5)], 1.0);
    let bleed = tone(&[(200.0, 0.02)], 1.0);
    let silent = vec![0.0; SR as usize];
    let (a, b) = vad_mask(&audio(loud.clone()), &audio(bleed), &cfg).unwrap();
    assert_eq!(a.len(), 25);
    assert!(a.iter().all(|&v| v) && b.iter().all(|&v| !v));
    let (a, b) = vad_mask(&audio(loud.clone()), &audio(loud), &cfg).unwrap();
    assert!(a.iter().chain(&b).all(|&v| v));
    let (a, b) = vad_mask(&audio(silent.clone()), &audio(silent), &cfg).unwrap();
    assert!(a.iter().chain(&b).all(|&v| !v));
}

#[test]
fn vad_rejects_mismatched_channels() {
    let cfg = VadConfig::default();
    assert!(vad_mask(&audio(vec![0.0; 1600]), &audio(vec![0.0; 1500]), &cfg).is_err());
}

#[test]
fn resampling_preserves_pitch() {
    let x: Vec<f64> = (0..22_050).map(|n| 0.5 * (2.0 * PI * 200.0 * n as f64 / 22_050.0).sin()).collect();
    let a = AudioSignal::new(x, 22_050).unwrap().resampled(SR);
    assert_eq!(a.sample_rate, SR);
    assert!((a.samples.len() as i64 - SR as i64).abs() <= 1);
    let p = compute_prosody(&a).unwrap();
    let mid = p.features.len() / 2;
    assert!((p.features.frame(mid)[0] - 200.0).abs() < 2.0);
}
