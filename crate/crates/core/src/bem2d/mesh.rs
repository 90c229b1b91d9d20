//! Polygonal boundaries split into straight panels.

use crate::{Error, Result};

pub type Point = [f64; 2];

/// The L-shaped domain `[0,1]² \ [0,½)²`, counterclockwise.
pub const L_SHAPE: [Point; 6] = [
    [0.5, 0.0],
    [1.0, 0.0],
    [1.0, 1.0],
    [0.0, 1.0],
    [0.0, 0.5],
    [0.5, 0.5],
];

pub const UNIT_SQUARE: [Point; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// A straight segment of the boundary, parametrised by arclength `u ∈ [0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    pub tangent: Point,
    /// Outward unit normal (points out of the bounded domain).
    pub normal: Point,
    pub edge: usize,
    pub starts_at_corner: bool,
    pub ends_at_corner: bool,
}

impl Panel {
    fn new(start: Point, end: Point, edge: usize, starts_at_corner: bool, ends_at_corner: bool) -> Self {
        let d = sub(end, start);
        let length = norm(d);
        let tangent = [d[0] / length, d[1] / length];
        Self {
            start,
            end,
            length,
            tangent,
            normal: [tangent[1], -tangent[0]],
            edge,
            starts_at_corner,
            ends_at_corner,
        }
    }

    /// Point at arclength `u`; exact at both endpoints.
    pub fn at(&self, u: f64) -> Point {
        let t = u / self.length;
        [
            (1.0 - t) * self.start[0] + t * self.end[0],
            (1.0 - t) * self.start[1] + t * self.end[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub target_h: f64,
    /// Grading exponent `β ≥ 1`; `1` is uniform.
    pub grading: f64,
}

#[derive(Debug, Clone)]
pub struct PolygonBoundary {
    vertices: Vec<Point>,
    panels: Vec<Panel>,
    panels_per_edge: Vec<usize>,
    spec: MeshSpec,
}

/// Fractions `(i/n)^β`, `i = 0..=n`, of a half edge measured from its corner.
pub fn graded_fractions(n: usize, grading: f64) -> Vec<f64> {
    (0..=n).map(|i| (i as f64 / n as f64).powf(grading)).collect()
}

/// Smallest panel count whose largest (outermost) graded panel is at most
/// `target_h` on a half edge of length `half`.
fn half_edge_panels(half: f64, target_h: f64, grading: f64) -> usize {
    let mut n = 1usize;
    loop {
        let last = half * (1.0 - ((n - 1) as f64 / n as f64).powf(grading));
        if last <= target_h * (1.0 + 1e-12) {
            return n;
        }
        n += 1;
    }
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    let on = |p: Point, q: Point, r: Point| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on(a, b, c))
        || (o2 == 0.0 && on(a, b, d))
        || (o3 == 0.0 && on(c, d, a))
        || (o4 == 0.0 && on(c, d, b))
}

pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| cross(vertices[i], vertices[(i + 1) % n]))
        .sum::<f64>()
}

fn check_polygon(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Geometry(format!("a polygon needs 3 vertices, got {n}")));
    }
    if vertices.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Geometry("non-finite vertex coordinate".into()));
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        if norm(sub(b, a)) == 0.0 {
            return Err(Error::Geometry(format!("edge {i} has zero length")));
        }
        let e1 = sub(b, a);
        let e2 = sub(c, b);
        if cross(e1, e2).abs() <= 1e-12 * norm(e1) * norm(e2) {
            return Err(Error::Geometry(format!(
                "edges {i} and {} are collinear at vertex {:?}",
                (i + 1) % n,
                b
            )));
        }
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::Geometry(format!("edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

/// Split every edge at its midpoint and each half into panels graded toward
/// the corner by the power rule.
///
/// Clockwise vertex lists are reversed so that normals always point out of
/// the enclosed domain.
pub fn mesh_polygon(vertices: &[Point], target_h: f64, grading: f64) -> Result<PolygonBoundary> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::Geometry(format!("target_h must be positive, got {target_h}")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::Geometry(format!("grading exponent must be >= 1, got {grading}")));
    }
    check_polygon(vertices)?;
    let mut verts = vertices.to_vec();
    if signed_area(&verts) < 0.0 {
        verts.reverse();
    }
    let n = verts.len();
    let mut panels_per_edge = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        let len = norm(sub(b, a));
        panels_per_edge.push(2 * half_edge_panels(0.5 * len, target_h, grading));
    }
    mesh_with_counts(verts, panels_per_edge, MeshSpec { target_h, grading })
}

fn mesh_with_counts(verts: Vec<Point>, panels_per_edge: Vec<usize>, spec: MeshSpec) -> Result<PolygonBoundary> {
    let n = verts.len();
    if panels_per_edge.len() != n || panels_per_edge.iter().any(|&c| c == 0 || c % 2 == 1) {
        return Err(Error::Geometry("each edge needs an even, positive panel count".into()));
    }
    let mut panels = Vec::new();
    for (i, &count) in panels_per_edge.iter().enumerate() {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        let half = count / 2;
        let fr = graded_fractions(half, spec.grading);
        // parameter along the edge in [0, 1]
        let mut ts: Vec<f64> = fr.iter().map(|f| 0.5 * f).collect();
        ts.extend(fr.iter().rev().skip(1).map(|f| 1.0 - 0.5 * f));
        let pts: Vec<Point> = ts
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    a
                } else if t == 1.0 {
                    b
                } else {
                    [(1.0 - t) * a[0] + t * b[0], (1.0 - t) * a[1] + t * b[1]]
                }
            })
            .collect();
        for j in 0..count {
            panels.push(Panel::new(pts[j], pts[j + 1], i, j == 0, j + 1 == count));
        }
    }
    Ok(PolygonBoundary {
        vertices: verts,
        panels,
        panels_per_edge,
        spec,
    })
}

impl PolygonBoundary {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn panels_per_edge(&self) -> &[usize] {
        &self.panels_per_edge
    }

    pub fn spec(&self) -> &MeshSpec {
        &self.spec
    }

    pub fn perimeter(&self) -> f64 {
        self.panels.iter().map(|p| p.length).sum()
    }

    pub fn max_panel_length(&self) -> f64 {
        self.panels.iter().map(|p| p.length).fold(0.0, f64::max)
    }

    /// Rebuild from an explicit panel count per edge.
    pub fn from_counts(vertices: &[Point], panels_per_edge: Vec<usize>, spec: MeshSpec) -> Result<Self> {
        check_polygon(vertices)?;
        if signed_area(vertices) < 0.0 {
            return Err(Error::Geometry("explicit panel counts need counterclockwise vertices".into()));
        }
        mesh_with_counts(vertices.to_vec(), panels_per_edge, spec)
    }

    /// Index of the next panel along the boundary.
    pub fn next(&self, p: usize) -> usize {
        (p + 1) % self.panels.len()
    }

    pub fn prev(&self, p: usize) -> usize {
        (p + self.panels.len() - 1) % self.panels.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_uniform() {
        let b = mesh_polygon(&UNIT_SQUARE, 0.5, 1.0).unwrap();
        assert_eq!(b.panels().len(), 8);
        assert!(b.panels().iter().all(|p| (p.length - 0.5).abs() < 1e-15));
    }

    #[test]
    fn l_shape_perimeter_and_normals() {
        let b = mesh_polygon(&L_SHAPE, 0.125, 2.0).unwrap();
        assert!((b.perimeter() - 4.0).abs() < 1e-12);
        assert!(b.max_panel_length() <= 0.125);
        assert!((signed_area(b.vertices()) - 0.75).abs() < 1e-15);
        // bottom edge runs +x, its outward normal is -y
        let p = &b.panels()[0];
        assert_eq!(p.normal, [0.0, -1.0]);
        for (i, p) in b.panels().iter().enumerate() {
            assert_eq!(p.end, b.panels()[b.next(i)].start);
        }
    }

    #[test]
    fn power_rule_fractions() {
        let b = mesh_polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.22, 2.0).unwrap();
        assert_eq!(b.panels_per_edge()[0], 8);
        let ends: Vec<f64> = b.panels()[..8].iter().map(|p| p.end[0]).collect();
        let expect = [1.0 / 32.0, 0.125, 9.0 / 32.0, 0.5, 1.0 - 9.0 / 32.0, 0.875, 1.0 - 1.0 / 32.0, 1.0];
        for (e, x) in ends.iter().zip(expect) {
            assert!((e - x).abs() < 1e-15);
        }
        assert_eq!(graded_fractions(4, 2.0), vec![0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0]);
    }

    #[test]
    fn bad_polygons_are_rejected() {
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(mesh_polygon(&bowtie, 0.1, 1.0), Err(Error::Geometry(_))));
        let collinear = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(mesh_polygon(&collinear, 0.1, 1.0).is_err());
        assert!(mesh_polygon(&UNIT_SQUARE, 0.0, 1.0).is_err());
        assert!(mesh_polygon(&UNIT_SQUARE, 0.1, 0.5).is_err());
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let mut cw = UNIT_SQUARE.to_vec();
        cw.reverse();
        let b = mesh_polygon(&cw, 0.5, 1.0).unwrap();
        assert!(signed_area(b.vertices()) > 0.0);
    }
}
