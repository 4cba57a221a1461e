use rwrefine_core::experiments::{
    noise_sweep, perturb_boundary_prob, scale_sweep, seed_quality_sweep, Sample, ScaleSample,
    SeedsMode,
};
use rwrefine_core::fixture::{generate, lowres_estimate, Scene, SceneSpec};
use rwrefine_core::{refine, PipelineConfig, ProbMap};

fn scene(side: usize) -> Scene {
    generate(&SceneSpec {
        width: side,
        height: side,
        lowres_long_axis: side / 8,
        ..SceneSpec::disk_512()
    })
    .unwrap()
}

fn small_config() -> PipelineConfig {
    PipelineConfig {
        n_thin: 8,
        n_prun: 4,
        ..PipelineConfig::default()
    }
}

fn sample(s: &Scene) -> Sample {
    Sample {
        name: "disk".into(),
        boundary: s.boundary.clone(),
        lowres: Some(s.lowres.clone()),
        gt: s.gt.clone(),
    }
}

#[test]
fn perturbation_contract() {
    let p = ProbMap::new(4, 4, 1, (0..16).map(|i| i as f32 / 15.0).collect()).unwrap();
    assert_eq!(perturb_boundary_prob(&p, 0.0, 9).unwrap(), p);
    let a = perturb_boundary_prob(&p, 0.1, 9).unwrap();
    assert_eq!(a, perturb_boundary_prob(&p, 0.1, 9).unwrap());
    assert_ne!(a, perturb_boundary_prob(&p, 0.1, 10).unwrap());
    let zeros = ProbMap::new(8, 8, 1, vec![0.0; 64]).unwrap();
    let noisy = perturb_boundary_prob(&zeros, 25.0, 1).unwrap();
    assert!(noisy.data().iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(noisy.data().contains(&0.0) && noisy.data().contains(&1.0));
    assert!(perturb_boundary_prob(&p, -1.0, 1).is_err());
}

#[test]
fn zero_noise_reproduces_the_clean_run() {
    let s = scene(128);
    let cfg = small_config();
    let reports = noise_sweep(&[sample(&s)], SeedsMode::Estimated, &[0.0], 1, &cfg, 5).unwrap();
    assert_eq!(reports[0].rel_shift, 0.0);
    let clean = refine(&s.lowres, &s.boundary, &cfg).unwrap();
    let counts = rwrefine_core::metrics::confusion(&clean.labels, &s.gt).unwrap();
    let iou = rwrefine_core::metrics::overall_iou(&counts).unwrap() * 100.0;
    assert!((reports[0].iou_all - iou).abs() < 1e-9);
}

#[test]
fn noise_sweep_is_deterministic_and_ordered() {
    let s = scene(96);
    let cfg = small_config();
    let levels = [0.02, 0.5];
    let a = noise_sweep(&[sample(&s)], SeedsMode::GroundTruth, &levels, 2, &cfg, 3).unwrap();
    let b = noise_sweep(&[sample(&s)], SeedsMode::GroundTruth, &levels, 2, &cfg, 3).unwrap();
    assert_eq!(a, b);
    assert!(a[0].rel_shift > 0.0);
    assert!(a[1].rel_shift >= a[0].rel_shift);
    for r in &a {
        // correct seeds only dilute the error
        assert!(r.iou_all >= r.iou_nonseed);
        assert!((0.0..=100.0).contains(&r.iou_all));
    }
}

#[test]
fn seed_quality_on_ground_truth() {
    let s = scene(128);
    let rows = seed_quality_sweep(
        &[sample(&s)],
        SeedsMode::GroundTruth,
        &[0, 5, 10, 20, 40],
        &[0, 10],
        0.03,
    )
    .unwrap();
    assert_eq!(
        (rows[0].coverage_pct, rows[0].false_positive_pct),
        (100.0, 0.0)
    );
    for prun in [0, 10] {
        let cov: Vec<f64> = rows
            .iter()
            .filter(|r| r.n_prun == prun)
            .map(|r| r.coverage_pct)
            .collect();
        assert!(cov.windows(2).all(|w| w[1] <= w[0]), "{cov:?}");
    }
    assert!(rows.iter().all(|r| r.false_positive_pct == 0.0));
}

#[test]
fn finer_estimates_refine_better() {
    let s = scene(256);
    let scales = [16, 32, 64, 128];
    let estimates = scales
        .iter()
        .map(|&sc| (sc, lowres_estimate(&s.gt, sc, 0.15, 7).unwrap()))
        .collect();
    let samples = [ScaleSample {
        name: "disk".into(),
        boundary: s.boundary.clone(),
        gt: s.gt.clone(),
        estimates,
    }];
    let rows = scale_sweep(&samples, &scales, &small_config()).unwrap();
    let iou: Vec<f64> = rows.iter().map(|r| r.iou).collect();
    assert!(iou.windows(2).all(|w| w[1] >= w[0]), "{iou:?}");
    assert!(scale_sweep(&samples, &[48], &small_config()).is_err());
}
