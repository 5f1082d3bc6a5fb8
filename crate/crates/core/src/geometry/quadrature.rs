//! Quadrature rules on triangles, segments and cut sub-cells.

use super::{signed_area, CutGeometry, GeometryError, Vec2};
use crate::scalar::Real;

/// Points and positive weights of a planar or line rule.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadRule<T> {
    pub points: Vec<Vec2<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadRule<T> {
    pub fn new() -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(Vec2<T>) -> T) -> T {
        self.points.iter().zip(&self.weights).map(|(p, w)| *w * f(*p)).sum()
    }

    fn append(&mut self, other: QuadRule<T>) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

const STRANG_FIX: [f64; 3] = [0.659027622374092, 0.231933368553031, 0.109039009072877];

/// Barycentric points and reference weights (summing to one) of the degree-`order` rule.
fn triangle_reference(order: usize) -> Result<Vec<([f64; 3], f64)>, GeometryError> {
    match order {
        1 => Ok(vec![([1.0 / 3.0; 3], 1.0)]),
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            Ok(vec![
                ([a, b, b], 1.0 / 3.0),
                ([b, a, b], 1.0 / 3.0),
                ([b, b, a], 1.0 / 3.0),
            ])
        }
        3 => {
            let [a, b, c] = STRANG_FIX;
            let perms = [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]];
            Ok(perms.into_iter().map(|p| (p, 1.0 / 6.0)).collect())
        }
        o => Err(GeometryError::UnsupportedOrder(o)),
    }
}

/// Rule exact for polynomials of total degree `order` (1, 2 or 3) on `tri`.
pub fn triangle_rule<T: Real>(tri: &[Vec2<T>; 3], order: usize) -> Result<QuadRule<T>, GeometryError> {
    let area = signed_area(tri).abs();
    let refr = triangle_reference(order)?;
    let mut rule = QuadRule::new();
    for (bary, w) in refr {
        let p = tri[0] * T::lit(bary[0]) + tri[1] * T::lit(bary[1]) + tri[2] * T::lit(bary[2]);
        rule.points.push(p);
        rule.weights.push(area * T::lit(w));
    }
    Ok(rule)
}

/// Gauss-Legendre rule on the segment `[a, b]`: one point for order 1, two
/// points (exact to degree 3) for orders 2 and 3.
pub fn gauss_segment_rule<T: Real>(a: Vec2<T>, b: Vec2<T>, order: usize) -> Result<QuadRule<T>, GeometryError> {
    let len = a.dist(b);
    let half = T::lit(0.5);
    let mut rule = QuadRule::new();
    match order {
        1 => {
            rule.points.push(a.lerp(b, half));
            rule.weights.push(len);
        }
        2 | 3 => {
            let s = T::one() / (T::lit(2.0) * T::lit(3.0).sqrt());
            for t in [half - s, half + s] {
                rule.points.push(a.lerp(b, t));
                rule.weights.push(len * half);
            }
        }
        o => return Err(GeometryError::UnsupportedOrder(o)),
    }
    Ok(rule)
}

/// Ear-clipping triangulation of a simple polygon (either orientation).
///
/// Collinear and duplicate vertices are dropped first. Output triangles are
/// counter-clockwise; their areas sum to the polygon area.
pub fn triangulate_polygon<T: Real>(poly: &[Vec2<T>]) -> Vec<[Vec2<T>; 3]> {
    let mut pts: Vec<Vec2<T>> = if signed_area(poly) < T::zero() {
        poly.iter().rev().copied().collect()
    } else {
        poly.to_vec()
    };
    let scale = pts
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(T::zero(), T::max)
        .max(T::lit(1e-300));
    let eps = T::lit(1e-14) * scale * scale;
    let mut out = Vec::with_capacity(pts.len().saturating_sub(2));

    // Drop duplicates and straight vertices.
    let mut changed = true;
    while changed && pts.len() >= 3 {
        changed = false;
        let n = pts.len();
        for i in 0..n {
            let p = pts[(i + n - 1) % n];
            let c = pts[i];
            let q = pts[(i + 1) % n];
            let dir = (c - p).dot(q - c);
            if (c - p).cross(q - c).abs() <= eps && dir >= T::zero() {
                pts.remove(i);
                changed = true;
                break;
            }
        }
    }

    while pts.len() > 3 {
        let n = pts.len();
        let mut best: Option<(usize, T)> = None;
        for i in 0..n {
            let p = pts[(i + n - 1) % n];
            let c = pts[i];
            let q = pts[(i + 1) % n];
            let turn = (c - p).cross(q - c);
            if turn <= T::zero() {
                continue;
            }
            let tri = [p, c, q];
            let blocked = pts
                .iter()
                .enumerate()
                .any(|(j, &x)| j != i && j != (i + n - 1) % n && j != (i + 1) % n && inside_or_on(&tri, x, eps));
            if blocked {
                continue;
            }
            // Prefer well-shaped ears for stable quadrature.
            let quality = turn / ((c - p).norm2() + (q - c).norm2() + (p - q).norm2());
            if best.map_or(true, |(_, b)| quality > b) {
                best = Some((i, quality));
            }
        }
        let Some((i, _)) = best else {
            // Degenerate input: fall back to a fan from the first vertex.
            for k in 1..pts.len() - 1 {
                out.push([pts[0], pts[k], pts[k + 1]]);
            }
            return out;
        };
        let n = pts.len();
        out.push([pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]]);
        pts.remove(i);
    }
    if pts.len() == 3 && signed_area(&pts) > T::zero() {
        out.push([pts[0], pts[1], pts[2]]);
    }
    out
}

fn inside_or_on<T: Real>(tri: &[Vec2<T>; 3], x: Vec2<T>, eps: T) -> bool {
    (0..3).all(|e| (tri[(e + 1) % 3] - tri[e]).cross(x - tri[e]) >= -eps)
}

/// Interface rule: Gauss points on every chord with the chord's normal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterfaceRule<T> {
    pub points: Vec<Vec2<T>>,
    pub weights: Vec<T>,
    /// Unit normal at each point, pointing from subdomain 1 into 2.
    pub normals: Vec<Vec2<T>>,
}

impl<T: Real> InterfaceRule<T> {
    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// Volume rules on both physical parts of a cut element and the interface rule.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutQuadrature<T> {
    pub side1: QuadRule<T>,
    pub side2: QuadRule<T>,
    pub interface: InterfaceRule<T>,
}

impl<T: Real> CutQuadrature<T> {
    pub fn side(&self, side: usize) -> &QuadRule<T> {
        if side == 1 {
            &self.side1
        } else {
            &self.side2
        }
    }
}

fn polygon_rule<T: Real>(poly: &[Vec2<T>], order: usize) -> Result<QuadRule<T>, GeometryError> {
    let mut rule = QuadRule::new();
    for tri in triangulate_polygon(poly) {
        rule.append(triangle_rule(&tri, order)?);
    }
    Ok(rule)
}

/// Quadrature of degree `order` on each side polygon and Gauss rules on the chords.
pub fn subcell_quadrature<T: Real>(geom: &CutGeometry<T>, order: usize) -> Result<CutQuadrature<T>, GeometryError> {
    let side1 = polygon_rule(&geom.side1_polygon, order)?;
    let mut side2 = QuadRule::new();
    for poly in &geom.side2_polygons {
        side2.append(polygon_rule(poly, order)?);
    }
    let mut interface = InterfaceRule::default();
    for seg in &geom.gamma_segments {
        let r = gauss_segment_rule(seg.a, seg.b, order)?;
        interface.normals.extend(std::iter::repeat(seg.normal).take(r.len()));
        interface.points.extend(r.points);
        interface.weights.extend(r.weights);
    }
    Ok(CutQuadrature {
        side1,
        side2,
        interface,
    })
}
