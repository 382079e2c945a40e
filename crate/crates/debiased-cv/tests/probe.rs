//! Temporary probe comparing bootstrap centering constructions. Not part of
//! the suite; run explicitly with `--ignored`.

use debiased_cv::bootstrap::{order_stat_index, resample, widening};
use debiased_cv::contrast::contrast_with_folds;
use debiased_cv::matrix::ErrorMatrix;
use debiased_cv::randomized::{randomized_estimate, NoiseConfig};
use debiased_cv::rng::{subseed, substream};
use debiased_cv::sim::scenario::{gen_s0, gen_s1};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
enum Center {
    Scalar,
    Paired,
}

#[derive(Clone, Copy, Debug)]
enum Noise {
    SharedPath,
    Fresh,
}

fn coverage(s1: bool, center: Center, noise: Noise, reps: usize, b: usize) -> (f64, f64) {
    let n = 100;
    let m = 30;
    let hits: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = subseed(999, rep as u64);
            let mut gen = substream(seed, 0);
            let (em, truth) = if s1 {
                let (em, mu) = gen_s1(n, m, &mut gen).unwrap();
                (em, mu)
            } else {
                (gen_s0(n, m, &mut gen).unwrap(), vec![0.0; m])
            };
            let (a2, _) = contrast_with_folds(&em, 2, &mut substream(seed, 1)).unwrap();
            let cfg = NoiseConfig::from_matrix(&em);
            let a3 = randomized_estimate(&em, &cfg, &mut substream(seed, 2)).unwrap();
            let err = truth[a2.selected.min(m - 1)];
            let err2 = truth[{
                let q = em.column_means();
                debiased_cv::selection::argmin(q.as_slice().unwrap())
            }];
            let err_random: f64 = a3
                .selection_frequencies
                .iter()
                .zip(&truth)
                .map(|(&f, &t)| f * t)
                .sum();
            let _ = err2;

            let q_orig = em.column_means();
            let q_orig = q_orig.as_slice().unwrap().to_vec();

            // Bootstrap both estimators.
            let mut d2 = Vec::with_capacity(b);
            let mut d3 = Vec::with_capacity(b);
            let mut nom2 = Vec::with_capacity(b);
            let mut nom3 = Vec::with_capacity(b);
            for rb in 0..b {
                let mut rrng = substream(subseed(seed, 3), rb as u64);
                let repm = resample(&em, &mut rrng);
                let (c, _) = contrast_with_folds(&repm, 2, &mut rrng).unwrap();
                d2.push(c.estimate);
                nom2.push(q_orig[c.selected]);

                let cfg_b = NoiseConfig::from_matrix(&repm);
                let mut nrng = match noise {
                    Noise::SharedPath => substream(subseed(seed, 3), u64::MAX),
                    Noise::Fresh => substream(subseed(seed, 4), rb as u64),
                };
                let r = randomized_estimate(&repm, &cfg_b, &mut nrng).unwrap();
                d3.push(r.estimate);
                nom3.push(
                    r.selection_frequencies
                        .iter()
                        .zip(&q_orig)
                        .map(|(&f, &q)| f * q)
                        .sum::<f64>(),
                );
            }
            let w = widening(n);
            let ci = |est: f64, d: &[f64], nom: &[f64]| -> (f64, f64) {
                let mut diffs: Vec<f64> = match center {
                    Center::Scalar => {
                        let c = nom.iter().sum::<f64>() / b as f64;
                        d.iter().map(|&v| v - c).collect()
                    }
                    Center::Paired => d.iter().zip(nom).map(|(&v, &c)| v - c).collect(),
                };
                diffs.sort_by(|a, b| a.total_cmp(b));
                (
                    est + diffs[order_stat_index(0.05, b)] - w,
                    est + diffs[order_stat_index(0.95, b)] + w,
                )
            };
            let (lo2, hi2) = ci(a2.estimate, &d2, &nom2);
            let (lo3, hi3) = ci(a3.estimate, &d3, &nom3);
            (lo2 <= err && err <= hi2, lo3 <= err_random && err_random <= hi3)
        })
        .collect();
    let c2 = hits.iter().filter(|h| h.0).count() as f64 / reps as f64;
    let c3 = hits.iter().filter(|h| h.1).count() as f64 / reps as f64;
    (c2, c3)
}

#[test]
#[ignore]
fn probe_centering() {
    for (center, noise) in [
        (Center::Scalar, Noise::SharedPath),
        (Center::Paired, Noise::SharedPath),
        (Center::Paired, Noise::Fresh),
    ] {
        for s1 in [false, true] {
            let (c2, c3) = coverage(s1, center, noise, 400, 500);
            println!(
                "scenario={} center={center:?} noise={noise:?}: A2 {c2:.3}  A3 {c3:.3}",
                if s1 { "S1" } else { "S0" }
            );
        }
    }
}
