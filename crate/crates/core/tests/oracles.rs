mod common;

use common::*;
use despeckle::fuzzy::{
    edge_indicator, fuzzy_divergence, ifd_measure, to_membership, EdgeDetector, TemplateSet, D_MAX,
};
use despeckle::image::{central_gradient, convolve, gaussian_kernel, ImageGrid};
use despeckle::metrics::{mssim, speckle_index};
use despeckle::solvers::{tv_divergence, FluxScheme};
use despeckle::EdgeIndicatorField;

const TOL: f64 = 1e-8;

fn shapes() -> Vec<(usize, usize)> {
    vec![(1, 1), (1, 7), (5, 1), (3, 3), (8, 5), (13, 17), (32, 32), (31, 20)]
}

#[test]
fn convolve_matches_padded_grid() {
    for (seed, (w, h)) in shapes().into_iter().enumerate() {
        let img = random_image(w, h, 0.0, 255.0, seed as u64);
        for (xi, r) in [(0.5, 1), (1.0, 3), (2.0, 6), (1.3, 9)] {
            let got = convolve(&img, &gaussian_kernel(xi, r).unwrap());
            let want = convolve_oracle(&img, &gaussian_2d(xi, r));
            assert!(max_abs_diff(got.data(), &want) < TOL, "{w}x{h} xi={xi} r={r}");
        }
    }
}

#[test]
fn gradient_matches_oracle() {
    for (seed, (w, h)) in shapes().into_iter().enumerate() {
        let img = random_image(w, h, 0.0, 255.0, 100 + seed as u64);
        let g = central_gradient(&img, 1.0).unwrap();
        let (dx, dy) = gradient_oracle(&img);
        assert!(max_abs_diff(&g.dx, &dx) < TOL);
        assert!(max_abs_diff(&g.dy, &dy) < TOL);
        let g2 = central_gradient(&img, 2.0).unwrap();
        let half: Vec<f64> = dx.iter().map(|v| v / 2.0).collect();
        assert!(max_abs_diff(&g2.dx, &half) < TOL);
    }
}

#[test]
fn tv_divergence_matches_oracle() {
    for (seed, (w, h)) in shapes().into_iter().enumerate() {
        let img = random_image(w, h, 1.0, 255.0, 200 + seed as u64);
        let theta_img = random_image(w, h, 0.05, 1.0, 300 + seed as u64);
        let theta = EdgeIndicatorField::new(w, h, theta_img.data().to_vec(), 0.05).unwrap();
        for eps in [1e-3, 0.5, 10.0] {
            let got = tv_divergence(&img, &theta, eps).unwrap();
            let want = tv_divergence_oracle(&img, theta.values(), eps);
            assert!(max_abs_diff(&got, &want) < TOL, "{w}x{h} eps={eps}");
        }
    }
}

#[test]
fn tv_divergence_rejects_bad_input() {
    let img = random_image(4, 4, 1.0, 2.0, 1);
    assert!(tv_divergence(&img, &EdgeIndicatorField::uniform(4, 3), 1.0).is_err());
    assert!(tv_divergence(&img, &EdgeIndicatorField::uniform(4, 4), 0.0).is_err());
    assert!(despeckle::solvers::weighted_tv_divergence(&img, &[1.0; 3], 1.0, FluxScheme::Conservative).is_err());
}

#[test]
fn mssim_matches_oracle() {
    for (seed, (w, h)) in [(11, 11), (16, 12), (32, 32), (25, 30)].into_iter().enumerate() {
        let a = random_image(w, h, 0.0, 255.0, 400 + seed as u64);
        let b = random_image(w, h, 0.0, 255.0, 500 + seed as u64);
        let blur = convolve(&a, &gaussian_kernel(1.0, 2).unwrap());
        for win in [3, 7, 11] {
            for other in [&b, &blur] {
                let got = mssim(&a, other, win).unwrap();
                let want = mssim_oracle(&a, other, win);
                assert!((got - want).abs() < TOL, "{w}x{h} win={win}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn speckle_index_matches_oracle() {
    for (seed, (w, h)) in shapes().into_iter().enumerate() {
        let img = random_image(w, h, 1.0, 255.0, 600 + seed as u64);
        for win in [1, 3, 5] {
            let got = speckle_index(&img, win).unwrap();
            let want = speckle_index_oracle(&img, win);
            assert!((got - want).abs() < TOL, "{w}x{h} win={win}");
        }
    }
}

#[test]
fn divergence_matches_definition() {
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    for &p in &grid {
        for &q in &grid {
            let got = fuzzy_divergence(p, q).unwrap();
            assert!((got - divergence_oracle(p, q)).abs() < 1e-14);
        }
    }
}

/// Exhaustive double loop over (template, element) pairs on the raw
/// definition, compared with both the literal measure and the fast indicator.
fn brute_force_measure(window: &[f64; 9], templates: &TemplateSet) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for t in templates.templates() {
        let mut min = f64::INFINITY;
        for (w, e) in window.iter().zip(t.entries()) {
            min = min.min(divergence_oracle(*w, *e));
        }
        best = best.max(min);
    }
    best
}

#[test]
fn vertical_step_window() {
    let window = [0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0];
    let set = TemplateSet::default();
    let got = ifd_measure(&window, &set).unwrap();
    assert!((got - brute_force_measure(&window, &set)).abs() < 1e-15);
    // The window is itself one of the templates, so some template's inverse
    // polarity disagrees everywhere: F reaches the maximum.
    assert!((got - D_MAX).abs() < 1e-12);
}

#[test]
fn zero_window_has_zero_strength() {
    let set = TemplateSet::default();
    assert_eq!(ifd_measure(&[0.0; 9], &set).unwrap(), 0.0);
    let img = ImageGrid::filled(6, 6, 0.0, 255.0).unwrap();
    let theta = edge_indicator(&img, &set, 0.05).unwrap();
    assert!(theta.values().iter().all(|t| *t == 1.0));
}

#[test]
fn fast_indicator_matches_literal_measure() {
    let set = TemplateSet::default();
    for seed in 0..4u64 {
        let img = random_image(17, 13, 0.0, 255.0, 700 + seed);
        let theta = edge_indicator(&img, &set, 0.05).unwrap();
        let mu = to_membership(&img);
        for y in 0..13 {
            for x in 0..17 {
                let f = brute_force_measure(&mu.window(x, y), &set);
                let want = (1.0 - f / D_MAX).clamp(0.05, 1.0);
                assert!((theta.values()[y * 17 + x] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn hesitation_changes_memberships_before_divergence() {
    let set = TemplateSet::default();
    let img = random_image(9, 9, 0.0, 255.0, 800);
    let plain = EdgeDetector::new(set.clone(), 0.05).unwrap().indicator(&img);
    let det = EdgeDetector::new(set.clone(), 0.05)
        .unwrap()
        .with_hesitation(Some(2.0))
        .unwrap();
    let hes = det.indicator(&img);
    assert_ne!(plain, hes);
    let h = |m: f64| despeckle::fuzzy::hesitant_membership(m, 2.0);
    let mu = to_membership(&img);
    let hs: Vec<_> = set
        .templates()
        .iter()
        .map(|t| {
            let mut e = *t.entries();
            e.iter_mut().for_each(|v| *v = h(*v));
            despeckle::fuzzy::FuzzyTemplate::new(t.label.clone(), e).unwrap()
        })
        .collect();
    let hset = TemplateSet::new(hs).unwrap();
    let mut win = mu.window(4, 4);
    win.iter_mut().for_each(|v| *v = h(*v));
    let want = (1.0 - brute_force_measure(&win, &hset) / D_MAX).clamp(0.05, 1.0);
    assert!((hes.values()[4 * 9 + 4] - want).abs() < 1e-12);
}
