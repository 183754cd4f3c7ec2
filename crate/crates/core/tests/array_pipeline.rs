use flexdog_core::adc::{quantize, AdcSpec};
use flexdog_core::dog::{dog, GaussianKernel, IntensityImage};
use flexdog_core::patterns::Pattern;
use flexdog_core::pipeline::{monte_carlo, run_dog_analog, run_dog_pipeline, AnalogConfig};
use flexdog_core::variation::VariationModel;
use proptest::prelude::*;

fn kernels(p: usize) -> (GaussianKernel<f64>, GaussianKernel<f64>) {
    let s1 = 0.85 * p as f64;
    (
        GaussianKernel::new(s1, p, true).unwrap(),
        GaussianKernel::new(s1 * std::f64::consts::SQRT_2, p, true).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn zero_variation_matches_digital_dog(
        p in 1usize..=2,
        (m, n, px) in (5usize..=32, 5usize..=32).prop_flat_map(|(m, n)| (Just(m), Just(n), prop::collection::vec(0.0f64..=1.0, m * n))),
    ) {
        let img = IntensityImage::new(m, n, px).unwrap();
        let (k1, k2) = kernels(p);
        let analog = run_dog_analog(&img, &k1, &k2, &AnalogConfig::for_half_width(p), 5).unwrap();
        let digital = dog(&img, &k1, &k2).unwrap();
        let got = analog.descaled();
        let scale = digital.values.max_abs().max(f64::MIN_POSITIVE);
        for (a, d) in got.iter().zip(digital.values.iter()) {
            prop_assert!((a - d).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn quantization_error_is_half_lsb(v in -1.0f64..3.0, bits in 1u32..=12, vref in 0.1f64..2.5) {
        let adc = AdcSpec { bits, vref, ..AdcSpec::default() };
        let c = quantize(v, &adc);
        let lsb = adc.lsb();
        let clamped = v.clamp(0.0, vref);
        prop_assert!((c.code as f64 * lsb - clamped).abs() <= lsb / 2.0 * (1.0 + 1e-12));
        prop_assert_eq!(c.saturated, !(0.0..=vref).contains(&v));
        prop_assert!(c.code >= 0 && c.code <= adc.max_code());
    }
}

#[test]
fn mnist_sized_pattern_produces_edge_codes() {
    let (k1, k2) = kernels(1);
    let img = Pattern::Ring.render::<f64>(28, 28).unwrap();
    let (codes, report) = run_dog_pipeline(&img, &k1, &k2, &AnalogConfig::default(), 3).unwrap();
    assert_eq!((codes.width(), codes.height()), (26, 26));
    assert!(codes.codes.iter().all(|c| c.abs() <= codes.max_code()));
    assert!(report.errors.edge_pixels > 0);
    assert!(report.errors.edge_localization.unwrap() >= 0.7);
    // interior and background stay at zero
    assert_eq!(codes.codes.get(0, 0), 0);
    assert!(report.errors.mean_abs_error < 1.0);
}

fn run_in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn monte_carlo_independent_of_thread_count() {
    let (k1, k2) = kernels(1);
    let img = Pattern::Cross.render::<f64>(28, 28).unwrap();
    let cfg = AnalogConfig { variation: VariationModel::uniform(0.1), ..AnalogConfig::default() };
    let one = run_in_pool(1, || monte_carlo(&img, &k1, &k2, &cfg, 16, 1000).unwrap());
    let four = run_in_pool(4, || monte_carlo(&img, &k1, &k2, &cfg, 16, 1000).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.mean_mae.to_bits(), four.mean_mae.to_bits());
}

#[test]
fn error_grows_with_each_variation_source() {
    let (k1, k2) = kernels(1);
    let img = Pattern::Ring.render::<f64>(28, 28).unwrap();
    let setters: [(&str, fn(&mut VariationModel, f64)); 3] = [
        ("gamma", |m, s| m.gamma_rel_sigma = s),
        ("gain", |m, s| m.gain_rel_sigma = s),
        ("sensor", |m, s| m.sensor_rel_sigma = s),
    ];
    for (name, set) in setters {
        let summaries: Vec<_> = [0.02, 0.10, 0.20]
            .iter()
            .map(|&s| {
                let mut cfg = AnalogConfig::default();
                set(&mut cfg.variation, s);
                monte_carlo(&img, &k1, &k2, &cfg, 100, 7).unwrap()
            })
            .collect();
        for w in summaries.windows(2) {
            assert!(w[1].mean_mae >= w[0].mean_mae, "{name}: {} then {}", w[0].mean_mae, w[1].mean_mae);
        }
        let (_, lo_hi) = summaries[0].ci95();
        let (hi_lo, _) = summaries[2].ci95();
        assert!(lo_hi < hi_lo, "{name}: intervals overlap ({lo_hi} vs {hi_lo})");
    }
}

#[test]
fn independent_arrays_differ_from_shared() {
    let (k1, k2) = kernels(1);
    let img = Pattern::Checkerboard.render::<f64>(16, 16).unwrap();
    let shared = AnalogConfig { variation: VariationModel::uniform(0.1), ..AnalogConfig::default() };
    let split = AnalogConfig { shared_array: false, ..shared.clone() };
    let a = run_dog_analog(&img, &k1, &k2, &shared, 4).unwrap();
    let b = run_dog_analog(&img, &k1, &k2, &split, 4).unwrap();
    assert_eq!(a.v1, b.v1);
    assert_ne!(a.v2, b.v2);
}

#[test]
fn settling_error_lowers_node_voltages() {
    let (k1, k2) = kernels(1);
    let img = Pattern::Constant.render::<f64>(8, 8).unwrap();
    let ideal = run_dog_analog(&img, &k1, &k2, &AnalogConfig::default(), 0).unwrap();
    let slow = run_dog_analog(&img, &k1, &k2, &AnalogConfig { settling_error: true, ..AnalogConfig::default() }, 0).unwrap();
    let ratio = slow.v1.get(0, 0) / ideal.v1.get(0, 0);
    assert!((ratio - (1.0 - (-7.0f64).exp())).abs() < 1e-12);
}
