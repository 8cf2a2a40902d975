use dampgap::analysis::{
    default_t_grid, fit_decay_slope, gn_ratio, integral_inequality_ratio, DEFAULT_FIT_WINDOW,
};
use dampgap::quadrature::geomspace;
use dampgap::Grid;
use proptest::prelude::*;

fn gaussian(grid: &Grid, lam: f64, c: f64) -> dampgap::PhysicalField {
    grid.sample(|x| c * (-x.iter().map(|v| (lam * v).powi(2)).sum::<f64>()).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gn_ratio_dilation_invariant(lam in 0.6f64..1.6, s in prop::sample::select(vec![1.0, 2.0]), q in 2.0f64..10.0) {
        let grid = Grid::new(1, 1024, 40.0).unwrap();
        let base = gn_ratio(&gaussian(&grid, 1.0, 1.0), q, s).unwrap().ratio;
        let scaled = gn_ratio(&gaussian(&grid, lam, 1.0), q, s).unwrap().ratio;
        prop_assert!((scaled - base).abs() <= 1e-6 * base, "{scaled} vs {base}");
    }

    #[test]
    fn gn_ratio_scale_free(c in 1e-3f64..1e3, s in 0.5f64..2.0, q in 2.0f64..6.0) {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let theta = 2.0 * (0.5 - 1.0 / q) / s;
        if theta > 1.0 {
            prop_assert!(gn_ratio(&gaussian(&grid, 1.0, 1.0), q, s).is_err());
            return Ok(());
        }
        let base = gn_ratio(&gaussian(&grid, 1.0, 1.0), q, s).unwrap().ratio;
        let scaled = gn_ratio(&gaussian(&grid, 1.0, c), q, s).unwrap().ratio;
        prop_assert!((scaled - base).abs() <= 1e-12 * base);
    }

    #[test]
    fn planted_slope_recovered(slope in -5.0f64..2.0, log_c in -3.0f64..3.0) {
        let c = 10f64.powf(log_c);
        let samples: Vec<(f64, f64)> = geomspace(1.0, 1e5, 50)
            .into_iter()
            .map(|t| (t, c * (1.0 + t).powf(slope)))
            .collect();
        let fit = fit_decay_slope(&samples, DEFAULT_FIT_WINDOW).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() <= 1e-9);
    }
}

#[test]
fn integral_inequality_ratios_stay_bounded() {
    let grid = default_t_grid();
    for (a, b) in [(1.5, 0.5), (2.0, 2.0), (0.5, 1.5)] {
        let check = integral_inequality_ratio(a, b, &grid).unwrap();
        let max = check.ratio_curve.iter().map(|&(_, r)| r).fold(0.0, f64::max);
        assert!(max.is_finite() && max > 0.0, "({a}, {b})");
        assert!(check.is_bounded(), "({a}, {b}): tail variation {:?}", check.tail_variation());
    }
}
