use hrbase::dataio;
use hrbase::estimators::{fit_bage, fit_bam, fit_bmotion};
use hrbase::synth::{generate_dataset, write_dataset, GenParams};
use hrbase::{build_feature_rows, fit, mae, predict, FeatureConfig, FeatureRow, Method, Variant};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

fn feature_rows(seed: u64, n: usize, params: &GenParams) -> Vec<FeatureRow> {
    let data = generate_dataset(seed, n, params).unwrap();
    build_feature_rows(&data.tracks, &data.ages, &data.metas, &FeatureConfig::default()).unwrap()
}

fn train_mae(method: Method, rows: &[FeatureRow]) -> f64 {
    let model = fit(method, rows, 10).unwrap();
    let preds: Vec<f64> = predict(&model, rows).unwrap().iter().map(|p| p.hr_pred).collect();
    let truth: Vec<f64> = rows.iter().map(|r| r.hr_true.unwrap()).collect();
    mae(&truth, &preds).unwrap()
}

#[test]
fn noiseless_age_line_recovered_exactly() {
    let params = GenParams {
        a: 0.8,
        b: 0.0,
        c: 60.0,
        sigma: 0.0,
        age_jitter: 0.0,
        ..GenParams::default()
    };
    let rows = feature_rows(9, 150, &params);
    let Variant::BAge { lm } = fit_bage(&rows, 10).unwrap().variant else { panic!() };
    assert!((lm.slope - 0.8).abs() < 1e-6, "slope {}", lm.slope);
    assert!((lm.intercept - 60.0).abs() < 1e-6, "intercept {}", lm.intercept);
}

#[test]
fn noisy_age_slope_in_band() {
    let rows = feature_rows(2024, 200, &GenParams::default());
    let Variant::BAge { lm } = fit_bage(&rows, 10).unwrap().variant else { panic!() };
    assert!((0.7..=0.9).contains(&lm.slope), "slope {}", lm.slope);
}

#[test]
fn motion_slope_in_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ama = Uniform::new(0.0, 0.5).unwrap();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<FeatureRow> = (0..200)
        .map(|i| {
            let m: f64 = ama.sample(&mut rng);
            FeatureRow {
                video_id: format!("m{i:03}"),
                ama: Some(m),
                age: None,
                hr_true: Some(50.0 * m + 75.0 + noise.sample(&mut rng)),
            }
        })
        .collect();
    let Variant::BMotion { lm } = fit_bmotion(&rows, 10).unwrap().variant else { panic!() };
    assert!((45.0..=55.0).contains(&lm.slope), "slope {}", lm.slope);
}

#[test]
fn multiplicative_motion_effect_helps_bam() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let age = Uniform::new_inclusive(15.0, 40.0).unwrap();
    let ama = Uniform::new(0.0, 1.0).unwrap();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<FeatureRow> = (0..200)
        .map(|i| {
            let (a, m): (f64, f64) = (age.sample(&mut rng), ama.sample(&mut rng));
            FeatureRow {
                video_id: format!("r{i:03}"),
                ama: Some(m),
                age: Some(a),
                hr_true: Some((0.8 * a + 60.0) * (1.0 + 0.1 * m) + noise.sample(&mut rng)),
            }
        })
        .collect();
    let bam = train_mae(Method::Bam, &rows);
    let bage = train_mae(Method::BAge, &rows);
    assert!(bam <= bage, "bam {bam} vs bage {bage}");
    let Variant::Bam { lm_resid, .. } = fit_bam(&rows, 10).unwrap().variant else { panic!() };
    assert!(lm_resid.slope > 0.05, "residual slope {}", lm_resid.slope);
}

#[test]
fn generated_files_load_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(3, 30, &GenParams::default(), dir.path()).unwrap();
    let tracks = dataio::load_tracks(&dir.path().join("tracks.csv")).unwrap();
    let metas = dataio::load_meta(&dir.path().join("meta.csv")).unwrap();
    let ages = dataio::load_ages(&dir.path().join("ages.csv")).unwrap();
    assert_eq!(tracks, data.tracks);
    assert_eq!(metas, data.metas);
    assert_eq!(ages, data.ages);
}

#[test]
fn zero_motion_dataset_is_static() {
    let params = GenParams {
        m_max: 0.0,
        ..GenParams::default()
    };
    let rows = feature_rows(8, 20, &params);
    assert!(rows.iter().all(|r| r.ama == Some(0.0)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bam_equals_bage_on_exact_age_line(
        slope in -2.0f64..2.0,
        intercept in 60.0f64..120.0,
        train in prop::collection::vec((15.0f64..40.0, 0.0f64..1.0), 3..40),
        probes in prop::collection::vec((15.0f64..40.0, 0.0f64..2.0), 1..30),
    ) {
        let rows: Vec<FeatureRow> = train
            .iter()
            .enumerate()
            .map(|(i, &(age, ama))| FeatureRow {
                video_id: format!("t{i}"),
                ama: Some(ama),
                age: Some(age),
                hr_true: Some(slope * age + intercept),
            })
            .collect();
        let probe_rows: Vec<FeatureRow> = probes
            .iter()
            .enumerate()
            .map(|(i, &(age, ama))| FeatureRow { video_id: format!("p{i}"), ama: Some(ama), age: Some(age), hr_true: None })
            .collect();
        let bam = predict(&fit(Method::Bam, &rows, 10).unwrap(), &probe_rows).unwrap();
        let bage = predict(&fit(Method::BAge, &rows, 10).unwrap(), &probe_rows).unwrap();
        for (x, y) in bam.iter().zip(&bage) {
            prop_assert_eq!(&x.video_id, &y.video_id);
            prop_assert!((x.hr_pred - y.hr_pred).abs() <= 1e-9);
        }
    }

    #[test]
    fn model_file_round_trip_predicts_bit_equal(seed in 0u64..1000, method in 0usize..4) {
        let rows = feature_rows(seed, 12, &GenParams { b: 0.2, ..GenParams::default() });
        let model = fit(Method::ALL[method], &rows, 10).unwrap();
        let back = dataio::parse_model(&dataio::render_model(&model)).unwrap();
        let a = predict(&model, &rows).unwrap();
        let b = predict(&back, &rows).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.hr_pred.to_bits(), y.hr_pred.to_bits());
        }
    }

    #[test]
    fn bc_predictions_have_no_variance(hrs in prop::collection::vec(40.0f64..200.0, 1..50)) {
        let rows: Vec<FeatureRow> = hrs
            .iter()
            .enumerate()
            .map(|(i, &h)| FeatureRow { video_id: format!("v{i}"), ama: None, age: None, hr_true: Some(h) })
            .collect();
        let preds = predict(&fit(Method::Bc, &rows, 10).unwrap(), &rows).unwrap();
        prop_assert_eq!(preds.len(), rows.len());
        prop_assert!(preds.iter().all(|p| p.hr_pred == preds[0].hr_pred));
    }
}
