#![allow(dead_code)]

use bloch_nitsche::geometry::{cut_triangle_general, gauss_segment_rule, Inclusion, Site, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of the randomized trace-inequality experiment.
#[derive(Debug, Default)]
pub struct TraceReport {
    pub triangles: usize,
    pub trace_checks: usize,
    pub trace_violations: usize,
    pub point_checks: usize,
    pub point_violations: usize,
    /// Largest observed `lhs / rhs` of the trace inequality.
    pub worst_ratio: f64,
}

/// Random perturbed-equilateral triangle of diameter about `h`.
fn random_triangle(rng: &mut ChaCha8Rng) -> [Vec2<f64>; 3] {
    let h = rng.gen_range(0.01..0.3);
    let rot = rng.gen_range(0.0..std::f64::consts::TAU);
    let origin = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut tri = [Vec2::zero(); 3];
    for (i, p) in tri.iter_mut().enumerate() {
        let ang = rot + std::f64::consts::TAU * i as f64 / 3.0 + rng.gen_range(-0.2..0.2);
        let rad = h / 3f64.sqrt() * rng.gen_range(0.85..1.15);
        *p = origin + Vec2::new(ang.cos(), ang.sin()) * rad;
    }
    tri
}

fn diameter(tri: &[Vec2<f64>; 3]) -> f64 {
    (0..3).map(|i| tri[i].dist(tri[(i + 1) % 3])).fold(0.0, f64::max)
}

/// Gradient of the nodal basis function at vertex `j` (constant on the triangle).
fn basis_gradient(tri: &[Vec2<f64>; 3], j: usize) -> Vec2<f64> {
    let (a, b, c) = (tri[j], tri[(j + 1) % 3], tri[(j + 2) % 3]);
    let edge = c - b;
    let twice_area = (b - a).cross(c - a);
    // Perpendicular to the opposite edge, pointing towards vertex j.
    Vec2::new(-edge.y, edge.x) * (-1.0 / twice_area)
}

fn basis_value(tri: &[Vec2<f64>; 3], j: usize, x: Vec2<f64>) -> f64 {
    1.0 + basis_gradient(tri, j).dot(x - tri[j])
}

fn random_point_in(rng: &mut ChaCha8Rng, tri: &[Vec2<f64>; 3]) -> Vec2<f64> {
    let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v
}

/// Draws `count` cut triangles and checks, for every nodal basis function and
/// both sides `i`, `||b_j||^2_{Γ_K} <= 4 h^2 |Γ_K| / |K_i| ||∇b_j||^2_{K_i}`
/// and `|b_j(x)| <= 2 h |∇b_j|` at 20 random points of `K`.
pub fn trace_inequality_trials(count: usize, seed: u64) -> TraceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = TraceReport::default();
    while rep.triangles < count {
        let tri = random_triangle(&mut rng);
        let h = diameter(&tri);
        // Circle through an interior point, so the boundary is crossed.
        let p = random_point_in(&mut rng, &tri);
        let r = h * rng.gen_range(0.5..10.0);
        let dir = rng.gen_range(0.0..std::f64::consts::TAU);
        let inc = Inclusion {
            center: p + Vec2::new(dir.cos(), dir.sin()) * r,
            radius: r,
            site: Site::A,
        };
        let Ok(geom) = cut_triangle_general(&tri, &inc, rng.gen_range(1..8)) else {
            continue;
        };
        if geom.area1 <= 0.0 || geom.area2 <= 0.0 || geom.gamma_length <= 0.0 {
            continue;
        }
        rep.triangles += 1;
        for j in 0..3 {
            let grad2 = basis_gradient(&tri, j).norm2();
            let mut trace = 0.0;
            for seg in &geom.gamma_segments {
                let rule = gauss_segment_rule(seg.a, seg.b, 2).unwrap();
                trace += rule.integrate(|x| basis_value(&tri, j, x).powi(2));
            }
            for area in [geom.area1, geom.area2] {
                let rhs = 4.0 * h * h * geom.gamma_length / area * grad2 * area;
                rep.trace_checks += 1;
                rep.worst_ratio = rep.worst_ratio.max(trace / rhs);
                if trace > rhs {
                    rep.trace_violations += 1;
                }
            }
            let bound = 2.0 * h * grad2.sqrt();
            for _ in 0..20 {
                let x = random_point_in(&mut rng, &tri);
                rep.point_checks += 1;
                if basis_value(&tri, j, x).abs() > bound {
                    rep.point_violations += 1;
                }
            }
        }
    }
    rep
}
