use flexdog_core::dog::{convolve_valid, correlate_valid, dog, op_count, GaussianKernel, IntensityImage, OpCount};
use flexdog_core::plane::Plane;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

/// Direct valid-mode convolution that counts every multiply and add it performs.
fn instrumented_convolution(m: usize, n: usize, p: usize) -> OpCount {
    let side = 2 * p + 1;
    let image = vec![1.0f64; m * n];
    let kernel = vec![1.0f64; side * side];
    let (mut mults, mut adds) = (0u64, 0u64);
    for y in 0..n - 2 * p {
        for x in 0..m - 2 * p {
            let mut acc: Option<f64> = None;
            for ky in 0..side {
                for kx in 0..side {
                    let prod = image[(y + ky) * m + x + kx] * kernel[ky * side + kx];
                    mults += 1;
                    acc = Some(match acc {
                        None => prod,
                        Some(a) => {
                            adds += 1;
                            a + prod
                        }
                    });
                }
            }
            std::hint::black_box(acc);
        }
    }
    OpCount { multiplications: mults, additions: adds }
}

/// Evaluates the Gaussian, the convolution and the difference straight from
/// their definitions.
fn brute_force_dog(img: &[f64], m: usize, n: usize, s1: f64, s2: f64, p: i64) -> Vec<f64> {
    let g = |x: i64, y: i64, s: f64| {
        (-((x * x + y * y) as f64) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s)
    };
    let norm = |s: f64| {
        let mut t = 0.0;
        for y in -p..=p {
            for x in -p..=p {
                t += g(x, y, s);
            }
        }
        t
    };
    let (n1, n2) = (norm(s1), norm(s2));
    let mut out = Vec::new();
    for y in p..n as i64 - p {
        for x in p..m as i64 - p {
            let (mut a, mut b) = (0.0, 0.0);
            for dy in -p..=p {
                for dx in -p..=p {
                    let v = img[((y + dy) as usize) * m + (x + dx) as usize];
                    a += v * g(dx, dy, s1) / n1;
                    b += v * g(dx, dy, s2) / n2;
                }
            }
            out.push(a - b);
        }
    }
    out
}

#[test]
fn op_count_matches_instrumented_convolution() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (1usize..=5).prop_flat_map(|p| (2 * p + 1..=64usize, 2 * p + 1..=64usize, Just(p)));
    for _ in 0..200 {
        let (m, n, p) = strategy.new_tree(&mut runner).unwrap().current();
        assert_eq!(op_count(m, n, p).unwrap(), instrumented_convolution(m, n, p), "({m}, {n}, {p})");
    }
}

#[test]
fn complexity_ratio_approaches_constant() {
    let p = 5usize;
    let ratios: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|&m| op_count(m, m, p).unwrap().multiplications as f64 / (8 * m * m * p * p) as f64)
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    assert!(ratios.iter().all(|r| *r <= 1.0));
    // limit is 121/200
    assert!((ratios[2] - 121.0 / 200.0).abs() < 0.06);
}

#[test]
fn step_edge_changes_sign_across_edge() {
    let (m, n) = (10usize, 6usize);
    let img: Vec<f64> = (0..m * n).map(|i| if i % m >= m / 2 { 1.0 } else { 0.0 }).collect();
    let s1 = 0.85;
    let s2 = s1 * std::f64::consts::SQRT_2;
    let expected = brute_force_dog(&img, m, n, s1, s2, 1);

    let image = IntensityImage::new(m, n, img).unwrap();
    let k1 = GaussianKernel::new(s1, 1, true).unwrap();
    let k2 = GaussianKernel::new(s2, 1, true).unwrap();
    let d = dog(&image, &k1, &k2).unwrap();
    assert_eq!(d.values.len(), expected.len());
    for (a, e) in d.values.iter().zip(&expected) {
        assert!((a - e).abs() < 1e-14);
    }
    let row: Vec<f64> = (0..d.values.width()).map(|x| d.values.get(x, 2)).collect();
    // output column c covers input columns c..c+2; the edge is between input columns 4 and 5
    assert!(row[3] < 0.0, "{row:?}");
    assert!(row[4] > 0.0, "{row:?}");
    for (c, v) in row.iter().enumerate() {
        if !(3..=4).contains(&c) {
            assert!(v.abs() < 1e-12, "column {c}: {v}");
        }
    }
}

fn image_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (5usize..16, 5usize..16).prop_flat_map(|(m, n)| (Just(m), Just(n), prop::collection::vec(0.0f64..=1.0, m * n)))
}

proptest! {
    #[test]
    fn normalized_kernels_sum_to_one(sigma in 0.3f64..100.0, p in 1usize..=7) {
        let k = GaussianKernel::new(sigma, p, true).unwrap();
        prop_assert!((k.sum() - 1.0).abs() < 1e-12);
        let c = k.weight(0, 0);
        prop_assert!(k.weights().iter().all(|w| *w > 0.0 && *w <= c));
    }

    #[test]
    fn convolution_is_linear(
        (m, n, a_px) in image_strategy(),
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        sigma in 0.4f64..3.0,
    ) {
        let b_px: Vec<f64> = a_px.iter().enumerate().map(|(i, v)| (v * 7.0 + (seed % 97) as f64 + i as f64) % 1.0).collect();
        let i1 = Plane::new(m, n, a_px).unwrap();
        let i2 = Plane::new(m, n, b_px).unwrap();
        let mixed = i1.zip_with(&i2, |x, y| a * x + b * y).unwrap();
        let k = GaussianKernel::new(sigma, 2, true).unwrap();
        let lhs = correlate_valid(&mixed, &k).unwrap();
        let c1 = correlate_valid(&i1, &k).unwrap();
        let c2 = correlate_valid(&i2, &k).unwrap();
        let rhs = c1.zip_with(&c2, |x, y| a * x + b * y).unwrap();
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((l - r).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_are_preserved(c in 0.0f64..=1.0, sigma in 0.3f64..20.0, p in 1usize..=3) {
        let img = IntensityImage::constant(2 * p + 4, 2 * p + 3, c).unwrap();
        let k = GaussianKernel::new(sigma, p, true).unwrap();
        let out = convolve_valid(&img, &k).unwrap();
        prop_assert!(out.values.iter().all(|v| (v - c).abs() < 1e-12));
    }

    #[test]
    fn self_difference_is_zero((m, n, px) in image_strategy(), sigma in 0.4f64..3.0) {
        let img = IntensityImage::new(m, n, px).unwrap();
        let k = GaussianKernel::new(sigma, 1, true).unwrap();
        let f = convolve_valid(&img, &k).unwrap();
        let d = flexdog_core::dog::difference(&f, &f).unwrap();
        prop_assert!(d.values.iter().all(|v| *v == 0.0));
    }
}
