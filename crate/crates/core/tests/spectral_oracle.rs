use bloch_nitsche::geometry::{honeycomb_inclusions, HexLattice};
use bloch_nitsche::material::{Coupling, MaterialModel, MaterialParams, WeightForm};
use bloch_nitsche::spectral::fourier_coefficients_w;

/// Bessel function of the first kind of order one by its power series.
fn bessel_j1(x: f64) -> f64 {
    let mut term = x / 2.0;
    let mut sum = term;
    let q = -(x * x) / 4.0;
    for m in 1..80 {
        term *= q / (m as f64 * (m as f64 + 1.0));
        sum += term;
    }
    sum
}

#[test]
fn j1_series_matches_known_values() {
    assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
    assert!((bessel_j1(3.831_705_970_207_512) - 0.0).abs() < 1e-13);
}

#[test]
fn disc_indicator_matches_circular_aperture() {
    let lat = HexLattice::<f64>::honeycomb();
    let incs = honeycomb_inclusions(&lat, 0.2).unwrap();
    // W = 2 I inside one disc and I outside, so W_hat(G != 0) is the disc indicator's coefficient.
    let params = MaterialParams {
        eps_a: 0.5,
        eps_b: 0.5,
        eps0: 1.0,
        coupling: Coupling::Bulk {
            gamma: 0.0,
            form: WeightForm::FirstOrder,
        },
    };
    let model = MaterialModel::new(params, lat, vec![incs[0]]);
    let c = fourier_coefficients_w(&model, 1024, 8).unwrap();
    let r = 0.2;
    let mut worst: f64 = 0.0;
    for (&(m1, m2), w) in &c.coeffs {
        if (m1, m2) == (0, 0) {
            continue;
        }
        let g = lat.dual_point(m1, m2).norm();
        let exact = 2.0 * std::f64::consts::PI * r * bessel_j1(g * r) / (lat.cell_area * g);
        worst = worst.max((w.m[0][0].norm() - exact.abs()).abs());
    }
    assert!(worst < 1e-6, "worst deviation {worst:e}");
}
