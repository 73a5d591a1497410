use circmark_core::attacks::AttackSpec;
use circmark_core::image::Image;
use circmark_core::linalg::circulant_spectrum;
use circmark_core::metrics::{nc, psnr};
use circmark_core::watermark::{
    generate_blocks, is_admissible, satisfies_ordering, WatermarkSpec, COEFF_RANGE,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn image_strategy(max: usize) -> impl Strategy<Value = Image> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(-40.0..300.0f64, w * h)
            .prop_map(move |s| Image::new(w, h, s).unwrap())
    })
}

fn square_image(side: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0.0..=255.0f64, side * side)
        .prop_map(move |s| Image::new(side, side, s).unwrap())
}

proptest! {
    #[test]
    fn quantize_is_idempotent(img in image_strategy(20)) {
        let q = img.quantize();
        prop_assert!(q.is_quantized());
        prop_assert_eq!(q.quantize(), q);
    }

    #[test]
    fn normalize_geometry_is_idempotent(img in image_strategy(24)) {
        if let Ok(n) = img.normalize_geometry() {
            prop_assert_eq!(n.width(), n.height());
            prop_assert_eq!(n.width() % 4, 0);
            prop_assert_eq!(n.normalize_geometry().unwrap(), n);
        } else {
            prop_assert!(img.width() < 4 || img.height() < 4);
        }
    }

    #[test]
    fn psnr_is_symmetric(a in square_image(8), b in square_image(8)) {
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn quantization_psnr_floor(a in square_image(12)) {
        // max error 0.5 gives MSE <= 0.25
        let floor = 10.0 * (255.0f64 * 255.0 / 0.25).log10();
        prop_assert!(psnr(&a, &a.quantize()).unwrap() >= floor - 1e-9);
        prop_assert!(floor > 48.0);
    }

    #[test]
    fn nc_norm_is_scale_invariant(v in prop::collection::vec(-50.0..50.0f64, 16), lambda in 0.01..100.0f64) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let w = DMatrix::from_vec(4, 4, v);
        let scaled = &w * lambda;
        prop_assert!((nc(&w, &scaled).unwrap().nc_norm - 1.0).abs() <= 1e-12);
        prop_assert!((nc(&w, &(-&w)).unwrap().nc_norm + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn generated_blocks_are_admissible(seed in any::<u64>(), k in 1usize..12) {
        let blocks = generate_blocks(seed, k).unwrap();
        prop_assert_eq!(blocks.len(), k);
        for b in &blocks {
            prop_assert!(is_admissible(b));
            prop_assert!(b.coeffs().iter().all(|&c| c.fract() == 0.0 && COEFF_RANGE.contains(&(c as i32))));
            let d = circulant_spectrum(b);
            prop_assert_eq!(d[2], d[3]);
            prop_assert!(satisfies_ordering(d) && d[2] > 0.0);
        }
        prop_assert_eq!(&blocks, &generate_blocks(seed, k).unwrap());
        prop_assert!(WatermarkSpec::new(blocks, 4 * k).is_ok());
    }

    #[test]
    fn attacks_preserve_shape_and_range(img in image_strategy(16), seed in any::<u64>()) {
        for text in [
            "salt_pepper:density=0.2", "speckle:variance=0.04", "gaussian_noise:variance=0.01",
            "gaussian_filter:size=5,sigma=2", "median:size=3", "average:size=3", "wiener:size=3",
            "sharpen", "rotate:angle=7", "translate:dx=3,dy=-2", "crop_center:size=4,fill=255",
            "histeq", "gamma:gamma=0.7", "scale_cycle:out=0.5,in=2",
        ] {
            let mut spec: AttackSpec = text.parse().unwrap();
            spec.seed = seed;
            let out = spec.apply(&img, None).unwrap();
            prop_assert_eq!(out.dims(), img.dims());
            prop_assert!(out.is_quantized());
            prop_assert_eq!(out, spec.apply(&img, None).unwrap());
        }
    }
}

#[test]
fn salt_pepper_count_is_binomial() {
    let img = Image::filled(512, 512, 128.0).unwrap();
    let spec: AttackSpec = "salt_pepper:density=0.02,seed=11".parse().unwrap();
    let out = spec.apply(&img, None).unwrap();
    let hit = out.samples().iter().filter(|&&v| v != 128.0).count() as f64;
    let n = 512.0 * 512.0;
    let (mean, sd) = (n * 0.02, (n * 0.02 * 0.98f64).sqrt());
    assert!((hit - mean).abs() <= 3.0 * sd, "{hit}");
}

#[test]
fn speckle_and_gaussian_noise_have_expected_spread() {
    let img = Image::filled(256, 256, 128.0).unwrap();
    let sample_var = |text: &str| {
        let out = text
            .parse::<AttackSpec>()
            .unwrap()
            .apply(&img, None)
            .unwrap();
        let n = out.samples().len() as f64;
        let m = out.samples().iter().sum::<f64>() / n;
        (
            m,
            out.samples().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n,
        )
    };
    // speckle: var = 128² · 0.04; gaussian: var = 255² · 0.001
    let (m, v) = sample_var("speckle:variance=0.04,seed=1");
    assert!(
        (m - 128.0).abs() < 0.5 && (v / (128.0 * 128.0 * 0.04) - 1.0).abs() < 0.05,
        "{m} {v}"
    );
    let (m, v) = sample_var("gaussian_noise:variance=0.001,seed=1");
    assert!(
        (m - 128.0).abs() < 0.5 && (v / (255.0 * 255.0 * 0.001) - 1.0).abs() < 0.05,
        "{m} {v}"
    );
}
