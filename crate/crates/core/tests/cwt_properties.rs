use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavescope::cwt::{cwt_direct_with, cwt_with};
use wavescope::{cwt, cwt_direct, power, CwtOptions, MotherWavelet, ScaleGrid, WaveletSpectrum};

const RAW: CwtOptions = CwtOptions { demean: false };

fn wavelets() -> [MotherWavelet; 2] {
    [
        MotherWavelet::default(),
        MotherWavelet::complex_morlet(1.5, 1.0).unwrap(),
    ]
}

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Worst per-row `max|a-b| / max|b|` over cells inside the cone of influence.
fn coi_relative_error(a: &WaveletSpectrum, b: &WaveletSpectrum) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..b.grid.len() {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..b.len() {
            if b.in_coi(j, k) {
                diff = diff.max((a.coefficients[[j, k]] - b.coefficients[[j, k]]).norm());
                scale = scale.max(b.coefficients[[j, k]].norm());
            }
        }
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        }
    }
    worst
}

#[test]
fn impulse_response_matches_closed_form() {
    let n = 64;
    let k0 = 23;
    let mut x = vec![0.0; n];
    x[k0] = 1.0;
    for w in wavelets() {
        let grid = ScaleGrid::default_for(n, 1.0).unwrap();
        let fast = cwt_with(&x, &w, &grid, 1.0, RAW).unwrap();
        let direct = cwt_direct_with(&x, &w, &grid, 1.0, RAW).unwrap();
        let p = power(&fast);
        for (j, &s) in grid.scales().iter().enumerate() {
            for k in 0..n {
                let u = (k0 as f64 - k as f64) / s;
                let expected = if u.abs() <= w.support_radius() {
                    s.powf(-0.5) * w.evaluate(u).norm()
                } else {
                    0.0
                };
                // one-term sum: the direct route reproduces it exactly
                let d = direct.coefficients[[j, k]].norm();
                assert!((d - expected).abs() <= 1e-15 * expected.max(1.0), "{w} j={j} k={k}");
                let f = fast.coefficients[[j, k]].norm();
                assert!((f - expected).abs() <= 1e-12, "{w} j={j} k={k}: {f} vs {expected}");
                assert!((p.values[[j, k]] - expected * expected).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn impulse_with_sampling_interval() {
    // dt enters both the wavelet argument and the quadrature weight
    let n = 40;
    let dt = 0.25;
    let mut x = vec![0.0; n];
    x[20] = 1.0;
    let w = MotherWavelet::default();
    let grid = ScaleGrid::default_for(n, dt).unwrap();
    let spec = cwt_with(&x, &w, &grid, dt, RAW).unwrap();
    for (j, &s) in grid.scales().iter().enumerate() {
        for k in 0..n {
            let u = (20.0 - k as f64) * dt / s;
            let expected = s.powf(-0.5) * w.evaluate(u).norm() * dt;
            assert!((spec.coefficients[[j, k]].norm() - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn fast_matches_direct_inside_coi() {
    for w in wavelets() {
        for n in [64, 256] {
            let grid = ScaleGrid::default_for(n, 1.0).unwrap();
            for seed in 0..10 {
                let x = noise(n, seed);
                for options in [CwtOptions::default(), RAW] {
                    let fast = cwt_with(&x, &w, &grid, 1.0, options).unwrap();
                    let direct = cwt_direct_with(&x, &w, &grid, 1.0, options).unwrap();
                    let err = coi_relative_error(&fast, &direct);
                    assert!(err <= 1e-8, "{w} n={n} seed={seed}: {err:e}");
                }
            }
        }
    }
}

#[test]
fn fast_matches_direct_everywhere_for_short_series() {
    // the discretization is the same on every cell, not just inside the cone
    let n = 100;
    let x = noise(n, 99);
    for w in wavelets() {
        let grid = ScaleGrid::default_for(n, 1.0).unwrap();
        let fast = cwt(&x, &w, &grid, 1.0).unwrap();
        let direct = cwt_direct(&x, &w, &grid, 1.0).unwrap();
        let peak = direct.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let diff = (&fast.coefficients - &direct.coefficients)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-10 * peak);
    }
}

#[test]
fn direct_route_is_linear() {
    let n = 96;
    let (a, b) = (1.7, -0.4);
    let x = noise(n, 1);
    let y = noise(n, 2);
    let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
    for w in wavelets() {
        let grid = ScaleGrid::default_for(n, 1.0).unwrap();
        let wx = cwt_direct(&x, &w, &grid, 1.0).unwrap().coefficients;
        let wy = cwt_direct(&y, &w, &grid, 1.0).unwrap().coefficients;
        let wz = cwt_direct(&z, &w, &grid, 1.0).unwrap().coefficients;
        let combo = wx.mapv(|c| c * a) + wy.mapv(|c| c * b);
        let peak = wz.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (p, q) in wz.iter().zip(combo.iter()) {
            assert!((p - q).norm() <= 1e-12 * peak);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fast_route_is_linear(
        x in prop::collection::vec(-10.0f64..10.0, 32..80),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        seed in 0u64..1000,
    ) {
        let n = x.len();
        let y = noise(n, seed);
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let w = MotherWavelet::default();
        let grid = ScaleGrid::default_for(n, 1.0).unwrap();
        let wx = cwt(&x, &w, &grid, 1.0).unwrap().coefficients;
        let wy = cwt(&y, &w, &grid, 1.0).unwrap().coefficients;
        let wz = cwt(&z, &w, &grid, 1.0).unwrap().coefficients;
        let combo = wx.mapv(|c| c * a) + wy.mapv(|c| c * b);
        let peak = wx.iter().chain(wy.iter()).map(|c| c.norm()).fold(1e-300, f64::max)
            * (a.abs() + b.abs()).max(1.0);
        for (p, q) in wz.iter().zip(combo.iter()) {
            prop_assert!((p - q).norm() <= 1e-12 * peak);
        }
    }

    #[test]
    fn doubling_amplitude_quadruples_power(
        x in prop::collection::vec(-3.0f64..3.0, 16..64),
    ) {
        let w = MotherWavelet::complex_morlet(1.5, 1.0).unwrap();
        let grid = ScaleGrid::default_for(x.len(), 1.0).unwrap();
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let p1 = power(&cwt(&x, &w, &grid, 1.0).unwrap()).values;
        let p2 = power(&cwt(&doubled, &w, &grid, 1.0).unwrap()).values;
        for (a, b) in p1.iter().zip(p2.iter()) {
            // ×2 is exact in binary floating point, so ×4 is too
            prop_assert_eq!(4.0 * a, *b);
        }
    }
}

#[test]
fn circular_shift_moves_interior_columns() {
    let n = 256;
    let shift = 37;
    let x = noise(n, 5);
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[(i + shift) % n] = x[i];
    }
    for w in wavelets() {
        let grid = ScaleGrid::default_for(n, 1.0).unwrap();
        let wx = cwt(&x, &w, &grid, 1.0).unwrap();
        let wy = cwt(&y, &w, &grid, 1.0).unwrap();
        let mut compared = 0;
        for (j, &s) in grid.scales().iter().enumerate() {
            let reach = (w.support_radius() * s).floor() as usize;
            for k in 0..n {
                let ks = (k + shift) % n;
                let inside = |c: usize| c >= reach && c + reach < n;
                if !(inside(k) && inside(ks) && wx.in_coi(j, k) && wy.in_coi(j, ks)) {
                    continue;
                }
                let a = wx.coefficients[[j, k]];
                let b = wy.coefficients[[j, ks]];
                assert!((a - b).norm() <= 1e-8 * a.norm().max(1e-3), "{w} j={j} k={k}");
                compared += 1;
            }
        }
        assert!(compared > 1000, "{compared}");
    }
}

#[test]
fn constant_input_is_rejected() {
    for n in [64, 256, 1024] {
        let w = MotherWavelet::default();
        let grid = ScaleGrid::default_for(n, 1.0).unwrap();
        for level in [1.0, 123.456] {
            let spec = cwt(&vec![level; n], &w, &grid, 1.0).unwrap();
            let max_coef = spec.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(max_coef <= 1e-6 * n as f64 * level);
            let p = power(&spec);
            let max_power = p.values.iter().cloned().fold(0.0, f64::max);
            assert!(max_power <= 1e-12 * (n * n) as f64);
        }
    }
}

#[test]
fn raw_interior_residual_tracks_admissibility() {
    // Away from the edges a raw constant sees the full truncated wavelet, so
    // the response is the discrete mean of ψ: tiny at ω = 6, large at ω = 1.
    let n = 512;
    let x = vec![1.0; n];
    let grid = ScaleGrid::build(n, 1.0, 2.0, 4).unwrap();
    let interior_max = |w: &MotherWavelet| {
        let spec = cwt_with(&x, w, &grid, 1.0, RAW).unwrap();
        let mut m: f64 = 0.0;
        for (j, &s) in grid.scales().iter().enumerate() {
            let reach = (w.support_radius() * s).ceil() as usize;
            for k in reach..n.saturating_sub(reach) {
                m = m.max(spec.coefficients[[j, k]].norm());
            }
        }
        m
    };
    let admissible = interior_max(&MotherWavelet::default());
    let inadmissible = interior_max(&MotherWavelet::morlet(1.0).unwrap());
    assert!(admissible < 1e-6, "{admissible:e}");
    assert!(inadmissible > 0.5, "{inadmissible:e}");
}

#[test]
fn cosine_localizes_at_expected_scale() {
    let n = 1024;
    let f = 1.0 / 32.0;
    let x: Vec<f64> = (0..n).map(|k| (2.0 * PI * f * k as f64).cos()).collect();
    let w = MotherWavelet::default();
    let grid = ScaleGrid::default_for(n, 1.0).unwrap();
    let target = w.center_frequency() / f;
    assert!((target - 30.56).abs() < 0.01);

    let mean_power = |spec: &WaveletSpectrum| -> Vec<f64> {
        let p = power(spec);
        (0..grid.len())
            .map(|j| {
                let cells: Vec<f64> =
                    (0..n).filter(|&k| p.in_coi(j, k)).map(|k| p.values[[j, k]]).collect();
                if cells.is_empty() {
                    0.0
                } else {
                    cells.iter().sum::<f64>() / cells.len() as f64
                }
            })
            .collect()
    };
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0
    };
    // brute-force scan on the direct oracle
    let oracle = argmax(&mean_power(&cwt_direct(&x, &w, &grid, 1.0).unwrap()));
    let fast = argmax(&mean_power(&cwt(&x, &w, &grid, 1.0).unwrap()));
    assert_eq!(fast, oracle);
    let offset = grid.voice_position(grid.scales()[fast]) - grid.voice_position(target);
    assert!(offset.abs() <= 1.0, "peak at {} voices from σ*", offset);
}

#[test]
fn output_is_bit_identical_across_thread_counts() {
    let n = 700;
    let x = noise(n, 11);
    let w = MotherWavelet::complex_morlet(1.5, 1.0).unwrap();
    let grid = ScaleGrid::default_for(n, 1.0).unwrap();
    let run = |threads: usize| -> Array2<Complex64> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cwt(&x, &w, &grid, 1.0).unwrap().coefficients)
    };
    let one = run(1);
    for threads in [2, 5] {
        let many = run(threads);
        assert!(one
            .iter()
            .zip(many.iter())
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    }
}

#[test]
fn plan_rejects_wrong_length() {
    let w = MotherWavelet::default();
    let grid = ScaleGrid::default_for(64, 1.0).unwrap();
    let plan = wavescope::CwtPlan::new(64, &w, &grid, 1.0, CwtOptions::default()).unwrap();
    assert!(plan.transform(&noise(63, 0)).is_err());
    assert!(plan.fft_len().is_power_of_two());
    assert!(plan.fft_len() >= 64);
}
