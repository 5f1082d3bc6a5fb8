//! Triangle/circle classification and cutting.

use super::{signed_area, GeometryError, Inclusion, Vec2};
use crate::scalar::Real;

/// Position of a mesh element relative to the inclusions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementClass {
    /// Entirely inside inclusion `inclusion` (subdomain 1).
    Regular1 { inclusion: usize },
    /// Entirely in the background (subdomain 2).
    Regular2,
    /// Crossed by the circle of inclusion `inclusion`.
    Interface { inclusion: usize },
}

impl ElementClass {
    #[inline]
    pub fn is_interface(&self) -> bool {
        matches!(self, ElementClass::Interface { .. })
    }

    /// Whether the element belongs to the covering of subdomain `side` (1 or 2).
    #[inline]
    pub fn covers_side(&self, side: usize) -> bool {
        match self {
            ElementClass::Regular1 { .. } => side == 1,
            ElementClass::Regular2 => side == 2,
            ElementClass::Interface { .. } => true,
        }
    }

    pub fn inclusion(&self) -> Option<usize> {
        match *self {
            ElementClass::Regular1 { inclusion } | ElementClass::Interface { inclusion } => Some(inclusion),
            ElementClass::Regular2 => None,
        }
    }
}

/// Where the circle meets a triangle boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing<T> {
    /// Edge `e` runs from vertex `e` to vertex `(e + 1) % 3`.
    pub edge: usize,
    /// Position along the edge in `[0, 1]`.
    pub t: T,
    pub point: Vec2<T>,
    /// Set when the crossing coincides with a triangle vertex.
    pub vertex: Option<usize>,
}

fn violation(reason: impl Into<String>) -> GeometryError {
    GeometryError::AssumptionViolation {
        element: None,
        reason: reason.into(),
    }
}

/// Tie tolerance for distance comparisons against the radius.
fn tie_tol<T: Real>(r: T) -> T {
    T::lit(1e-14) * r.max(T::one())
}

/// Distance from `p` to the closed triangle.
fn point_triangle_distance<T: Real>(tri: &[Vec2<T>; 3], p: Vec2<T>) -> T {
    let orient = signed_area(tri);
    let mut inside = true;
    for e in 0..3 {
        let a = tri[e];
        let b = tri[(e + 1) % 3];
        let s = (b - a).cross(p - a) * orient.signum();
        if s < T::zero() {
            inside = false;
        }
    }
    if inside {
        return T::zero();
    }
    (0..3)
        .map(|e| point_segment_distance(tri[e], tri[(e + 1) % 3], p))
        .fold(T::infinity(), T::min)
}

fn point_segment_distance<T: Real>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> T {
    let d = b - a;
    let l2 = d.norm2();
    let t = if l2 > T::zero() {
        ((p - a).dot(d) / l2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    (a + d * t).dist(p)
}

/// Intersections of the circle of `inc` with the triangle boundary.
///
/// Succeeds only when the boundary is met exactly twice with each open edge
/// crossed at most once; any other configuration (tangency, double crossing
/// of an edge, a disc swallowed by the element) is reported as a violation.
pub fn circle_crossings<T: Real>(tri: &[Vec2<T>; 3], inc: &Inclusion<T>) -> Result<[Crossing<T>; 2], GeometryError> {
    let r = inc.radius;
    let t_tol = T::lit(1e-12);
    let mut vertex_hit = [false; 3];
    let mut out: Vec<Crossing<T>> = Vec::with_capacity(2);
    for (v, hit) in vertex_hit.iter_mut().enumerate() {
        if (tri[v].dist(inc.center) - r).abs() <= tie_tol(r) {
            *hit = true;
        }
    }
    for e in 0..3 {
        let p = tri[e];
        let q = tri[(e + 1) % 3];
        let d = q - p;
        let f = p - inc.center;
        let a = d.norm2();
        let b = T::lit(2.0) * f.dot(d);
        let c = f.norm2() - r * r;
        let disc = b * b - T::lit(4.0) * a * c;
        // Relative tangency threshold.
        let scale = b * b + (T::lit(4.0) * a * c).abs();
        let tangent_tol = T::lit(1e-13) * scale.max(a * r * r);
        if disc < -tangent_tol {
            continue;
        }
        if disc.abs() <= tangent_tol {
            let t = -b / (T::lit(2.0) * a);
            if t > t_tol && t < T::one() - t_tol {
                return Err(violation(format!("circle tangent to edge {e}")));
            }
            continue;
        }
        let sq = disc.sqrt();
        // Numerically stable roots.
        let qq = -T::lit(0.5) * (b + b.signum() * sq);
        let mut roots = [
            qq / a,
            if qq != T::zero() {
                c / qq
            } else {
                -b / (T::lit(2.0) * a)
            },
        ];
        if roots[0] > roots[1] {
            roots.swap(0, 1);
        }
        let mut interior = 0;
        for t in roots {
            if t > t_tol && t < T::one() - t_tol {
                interior += 1;
                out.push(Crossing {
                    edge: e,
                    t,
                    point: p + d * t,
                    vertex: None,
                });
            }
        }
        if interior > 1 {
            return Err(violation(format!("edge {e} crossed twice")));
        }
    }
    for (v, hit) in vertex_hit.iter().enumerate() {
        if *hit {
            out.push(Crossing {
                edge: v,
                t: T::zero(),
                point: tri[v],
                vertex: Some(v),
            });
        }
    }
    if out.len() != 2 {
        return Err(violation(format!(
            "circle meets the element boundary {} times (expected 2)",
            out.len()
        )));
    }
    Ok([out[0], out[1]])
}

/// Classifies `tri` against the inclusion set.
///
/// An element is `Interface` when the circle meets the closed triangle (ties
/// within `1e-14` count as meeting); otherwise its side follows from the
/// vertex distances. Meeting more than one inclusion is a violation.
pub fn classify_triangle<T: Real>(
    tri: &[Vec2<T>; 3],
    inclusions: &[Inclusion<T>],
) -> Result<ElementClass, GeometryError> {
    let mut found: Option<ElementClass> = None;
    for (idx, inc) in inclusions.iter().enumerate() {
        let r = inc.radius;
        let tol = tie_tol(r);
        let dmin = point_triangle_distance(tri, inc.center);
        if dmin > r + tol {
            continue;
        }
        let dmax = tri.iter().map(|v| v.dist(inc.center)).fold(T::zero(), T::max);
        let class = if dmax < r - tol {
            ElementClass::Regular1 { inclusion: idx }
        } else {
            circle_crossings(tri, inc)?;
            ElementClass::Interface { inclusion: idx }
        };
        if found.is_some() {
            return Err(violation("element meets more than one inclusion"));
        }
        found = Some(class);
    }
    Ok(found.unwrap_or(ElementClass::Regular2))
}

/// Classification without the interface assumption.
///
/// An element is `Interface` when the circle crosses its boundary
/// transversally, in any number of places; an element merely touched by the
/// circle takes the side of its centroid. Only configurations that cannot be
/// cut into polygons (a disc strictly inside the element, or an element meeting
/// two discs) are errors.
pub fn classify_triangle_relaxed<T: Real>(
    tri: &[Vec2<T>; 3],
    inclusions: &[Inclusion<T>],
) -> Result<ElementClass, GeometryError> {
    let mut found: Option<ElementClass> = None;
    for (idx, inc) in inclusions.iter().enumerate() {
        let r = inc.radius;
        let tol = tie_tol(r);
        let dmin = point_triangle_distance(tri, inc.center);
        if dmin > r + tol {
            continue;
        }
        let dmax = tri.iter().map(|v| v.dist(inc.center)).fold(T::zero(), T::max);
        let class = if dmax < r - tol {
            ElementClass::Regular1 { inclusion: idx }
        } else {
            match cut_triangle_general(tri, inc, 4) {
                Ok(g) if g.area1 > T::zero() && g.area2 > T::zero() => ElementClass::Interface { inclusion: idx },
                _ if dmin == T::zero() => {
                    return Err(violation("disc lies strictly inside the element"));
                }
                _ => {
                    let c = (tri[0] + tri[1] + tri[2]) * (T::one() / T::lit(3.0));
                    if inc.contains(c) {
                        ElementClass::Regular1 { inclusion: idx }
                    } else {
                        continue;
                    }
                }
            }
        };
        if found.is_some() {
            return Err(violation("element meets more than one inclusion"));
        }
        found = Some(class);
    }
    Ok(found.unwrap_or(ElementClass::Regular2))
}

/// Chord of the polygonal interface approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSegment<T> {
    pub a: Vec2<T>,
    pub b: Vec2<T>,
    /// Unit normal pointing out of the inclusion (from subdomain 1 into 2).
    pub normal: Vec2<T>,
    /// The normal is the exact circle normal at the chord's mid-angle.
    pub exact_arc_normal: bool,
}

impl<T: Real> GammaSegment<T> {
    pub fn length(&self) -> T {
        self.a.dist(self.b)
    }
}

/// Decomposition of an interface element into its two physical parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CutGeometry<T> {
    /// Approximation of `K ∩ Ω1` (counter-clockwise).
    pub side1_polygon: Vec<Vec2<T>>,
    /// Approximation of `K ∩ Ω2` (counter-clockwise).
    pub side2_polygons: Vec<Vec<Vec2<T>>>,
    pub gamma_segments: Vec<GammaSegment<T>>,
    pub area1: T,
    pub area2: T,
    pub gamma_length: T,
}

impl<T: Real> CutGeometry<T> {
    pub fn area(&self) -> T {
        self.area1 + self.area2
    }
}

/// Splits `tri` along the circle of `inc`, replacing each arc by `m_arc` chords.
///
/// The configuration must satisfy the interface assumption (see
/// [`circle_crossings`]); use [`cut_triangle_general`] otherwise.
pub fn cut_triangle<T: Real>(
    tri: &[Vec2<T>; 3],
    inc: &Inclusion<T>,
    m_arc: usize,
) -> Result<CutGeometry<T>, GeometryError> {
    circle_crossings(tri, inc)?;
    cut_triangle_general(tri, inc, m_arc)
}

/// Splits `tri` along the circle of `inc` for any transversal configuration.
///
/// `K ∩ B_r` is convex, so side 1 is a single polygon; side 2 gets one polygon
/// per boundary run outside the disc. Fails when the circle does not cross the
/// boundary transversally (no cut, or a disc strictly inside the element).
pub fn cut_triangle_general<T: Real>(
    tri: &[Vec2<T>; 3],
    inc: &Inclusion<T>,
    m_arc: usize,
) -> Result<CutGeometry<T>, GeometryError> {
    let m_arc = m_arc.max(1);
    let tri = if signed_area(tri) < T::zero() {
        [tri[0], tri[2], tri[1]]
    } else {
        *tri
    };
    let r = inc.radius;

    // Counter-clockwise boundary walk with every transversal crossing inserted.
    let mut walk: Vec<Vec2<T>> = Vec::with_capacity(9);
    for e in 0..3 {
        let p = tri[e];
        let q = tri[(e + 1) % 3];
        walk.push(p);
        let d = q - p;
        let f = p - inc.center;
        let a = d.norm2();
        let b = T::lit(2.0) * f.dot(d);
        let c = f.norm2() - r * r;
        let disc = b * b - T::lit(4.0) * a * c;
        let scale = b * b + (T::lit(4.0) * a * c).abs();
        if disc <= T::lit(1e-13) * scale.max(a * r * r) {
            // Tangency does not split the element.
            continue;
        }
        let sq = disc.sqrt();
        let qq = -T::lit(0.5) * (b + b.signum() * sq);
        let mut roots = [
            qq / a,
            if qq != T::zero() {
                c / qq
            } else {
                -b / (T::lit(2.0) * a)
            },
        ];
        if roots[0] > roots[1] {
            roots.swap(0, 1);
        }
        for t in roots {
            if t > T::zero() && t < T::one() {
                walk.push(p + d * t);
            }
        }
    }
    let n = walk.len();
    // Inside status of each boundary piece walk[i] -> walk[i + 1].
    let half = T::lit(0.5);
    let third = T::one() / T::lit(3.0);
    let inside: Vec<bool> = (0..n)
        .map(|i| {
            let (p, q) = (walk[i], walk[(i + 1) % n]);
            // Two interior samples, so a tangency point alone never marks a piece inside.
            inc.signed_distance(p.lerp(q, third)) + inc.signed_distance(q.lerp(p, third)) < T::zero()
        })
        .collect();
    let entries: Vec<usize> = (0..n).filter(|&i| inside[i] && !inside[(i + n - 1) % n]).collect();
    if entries.is_empty() {
        return Err(violation("circle does not cross the element boundary"));
    }

    let angle = |p: Vec2<T>| (p.y - inc.center.y).atan2(p.x - inc.center.x);
    let tau = T::TAU();
    let m = T::from_usize_lossy(m_arc);
    // Chord vertices along the circle, counter-clockwise from `from` to `to`.
    let arc = |from: Vec2<T>, to: Vec2<T>| {
        let th0 = angle(from);
        let mut sweep = angle(to) - th0;
        while sweep <= T::zero() {
            sweep += tau;
        }
        while sweep > tau {
            sweep -= tau;
        }
        let mut pts = Vec::with_capacity(m_arc + 1);
        pts.push(from);
        for j in 1..m_arc {
            let th = th0 + sweep * T::from_usize_lossy(j) / m;
            pts.push(inc.center + Vec2::new(th.cos(), th.sin()) * r);
        }
        pts.push(to);
        let normals: Vec<Vec2<T>> = (0..m_arc)
            .map(|j| {
                let th = th0 + sweep * (T::from_usize_lossy(j) + half) / m;
                Vec2::new(th.cos(), th.sin())
            })
            .collect();
        (pts, normals)
    };

    let mut side1 = Vec::with_capacity(n + m_arc * entries.len());
    let mut side2_polygons = Vec::with_capacity(entries.len());
    let mut gamma_segments = Vec::with_capacity(m_arc * entries.len());
    for (k, &entry) in entries.iter().enumerate() {
        // Inside run from this entry to its exit.
        let mut i = entry;
        loop {
            side1.push(walk[i]);
            i = (i + 1) % n;
            if !inside[i] {
                break;
            }
        }
        let exit = i;
        let next_entry = entries[(k + 1) % entries.len()];
        let (chord, normals) = arc(walk[exit], walk[next_entry]);
        side1.extend(chord[..m_arc].iter().copied());
        for (j, w) in chord.windows(2).enumerate() {
            gamma_segments.push(GammaSegment {
                a: w[0],
                b: w[1],
                normal: normals[j],
                exact_arc_normal: true,
            });
        }
        // Outside run from the exit to the next entry, closed by the reversed arc.
        let mut poly = Vec::with_capacity(n + m_arc);
        let mut i = exit;
        loop {
            poly.push(walk[i]);
            if i == next_entry {
                break;
            }
            i = (i + 1) % n;
        }
        poly.extend(chord[1..m_arc].iter().rev().copied());
        side2_polygons.push(poly);
    }
    // The first entry was pushed by the first run; remove the duplicate closing point.
    dedup_closed(&mut side1);

    let gamma_length = gamma_segments.iter().map(|s| s.length()).sum();
    let area1 = signed_area(&side1).abs();
    let area2 = side2_polygons.iter().map(|p| signed_area(p).abs()).sum();
    Ok(CutGeometry {
        side1_polygon: side1,
        side2_polygons,
        gamma_segments,
        area1,
        area2,
        gamma_length,
    })
}

fn dedup_closed<T: Real>(poly: &mut Vec<Vec2<T>>) {
    poly.dedup();
    while poly.len() > 1 && poly.first() == poly.last() {
        poly.pop();
    }
}

/// Exact area of `polygon ∩ B_r(center)` for a simple polygon (either
/// orientation), using the arc geometry directly rather than chords.
pub fn disc_polygon_overlap_area<T: Real>(polygon: &[Vec2<T>], center: Vec2<T>, r: T) -> T {
    let n = polygon.len();
    if n < 3 {
        return T::zero();
    }
    let mut total = T::zero();
    for i in 0..n {
        total += origin_triangle_disc_area(polygon[i] - center, polygon[(i + 1) % n] - center, r);
    }
    total.abs()
}

/// Signed area of `triangle(0, a, b) ∩ B_r(0)`.
fn origin_triangle_disc_area<T: Real>(a: Vec2<T>, b: Vec2<T>, r: T) -> T {
    let d = b - a;
    let qa = d.norm2();
    if qa == T::zero() {
        return T::zero();
    }
    let qb = T::lit(2.0) * a.dot(d);
    let qc = a.norm2() - r * r;
    let disc = qb * qb - T::lit(4.0) * qa * qc;
    let mut cuts = vec![T::zero()];
    if disc > T::zero() {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (T::lit(2.0) * qa), (-qb + sq) / (T::lit(2.0) * qa)] {
            if t > T::zero() && t < T::one() {
                cuts.push(t);
            }
        }
    }
    cuts.push(T::one());
    let half = T::lit(0.5);
    let mut area = T::zero();
    for w in cuts.windows(2) {
        let p = a + d * w[0];
        let q = a + d * w[1];
        let mid = (p + q) * half;
        if mid.norm2() <= r * r {
            area += half * p.cross(q);
        } else {
            let ang = p.cross(q).atan2(p.dot(q));
            area += half * r * r * ang;
        }
    }
    area
}
