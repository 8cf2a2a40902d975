use dampgap::spectral::{
    apply_fractional_laplacian, forward_transform, fractional_laplacian_physical, inverse_transform, lp_norm,
};
use dampgap::{Grid, PhysicalField};
use proptest::prelude::*;

fn field(dim: usize, points: usize, half_width: f64, values: &[f64]) -> PhysicalField {
    let grid = Grid::new(dim, points, half_width).unwrap();
    PhysicalField::from_real(grid, values).unwrap()
}

fn lattice_dot(f: &PhysicalField, g: &PhysicalField) -> f64 {
    f.values().iter().zip(g.values()).map(|(a, b)| a.re * b.re).sum::<f64>() * f.grid().cell_volume()
}

fn arb_1d() -> impl Strategy<Value = PhysicalField> {
    (1.0f64..30.0, prop::collection::vec(-1.0f64..1.0, 64)).prop_map(|(l, v)| field(1, 64, l, &v))
}

fn arb_2d() -> impl Strategy<Value = PhysicalField> {
    (1.0f64..10.0, prop::collection::vec(-1.0f64..1.0, 256)).prop_map(|(l, v)| field(2, 16, l, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_identity(f in prop_oneof![arb_1d(), arb_2d()]) {
        let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
        let scale = f.max_abs();
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn plancherel(f in prop_oneof![arb_1d(), arb_2d()]) {
        let direct = lp_norm(&f, 2.0).unwrap();
        let spectral = forward_transform(&f).unwrap().l2_norm();
        prop_assert!((direct - spectral).abs() <= 1e-12 * direct);
    }

    #[test]
    fn exchange_identity(
        f in arb_1d(),
        noise in prop::collection::vec(-0.1f64..0.1, 64),
        s in prop::sample::select(vec![0.3, 1.0, 1.7]),
    ) {
        let g_vals: Vec<f64> = f.values().iter().zip(&noise).map(|(a, e)| a.re + e).collect();
        let g = PhysicalField::from_real(*f.grid(), &g_vals).unwrap();
        let lf = fractional_laplacian_physical(&f, s).unwrap();
        let lg = fractional_laplacian_physical(&g, s).unwrap();
        let (a, b) = (lattice_dot(&lf, &g), lattice_dot(&f, &lg));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "{a} vs {b}");
    }

    #[test]
    fn fractional_semigroup(f in prop_oneof![arb_1d(), arb_2d()], s1 in 0.0f64..1.5, s2 in 0.0f64..1.5) {
        let fh = forward_transform(&f).unwrap();
        let twice = apply_fractional_laplacian(&apply_fractional_laplacian(&fh, s1).unwrap(), s2).unwrap();
        let once = apply_fractional_laplacian(&fh, s1 + s2).unwrap();
        let scale = once.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (a, b) in twice.coeffs().iter().zip(once.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn norms_are_homogeneous(f in arb_1d(), c in 0.01f64..100.0, q in 1.0f64..8.0) {
        let mut g = f.clone();
        g.scale(c);
        let (a, b) = (lp_norm(&g, q).unwrap(), c * lp_norm(&f, q).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn three_dimensional_round_trip() {
    let grid = Grid::new(3, 16, 4.0).unwrap();
    let f = grid.sample(|x| (-(x[0] * x[0] + 2.0 * x[1] * x[1] + 0.5 * x[2] * x[2])).exp() * (1.0 + x[0]));
    let fh = forward_transform(&f).unwrap();
    let back = inverse_transform(&fh).unwrap();
    for (a, b) in f.values().iter().zip(back.values()) {
        assert!((a - b).norm() <= 1e-12);
    }
    let direct = lp_norm(&f, 2.0).unwrap();
    assert!((direct - fh.l2_norm()).abs() <= 1e-12 * direct);
}
