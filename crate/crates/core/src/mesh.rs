//! Two-dimensional meshes for the unit square and the square with circular voids.
//!
//! A [`Mesh`] is a uniform collection of first-order elements (bilinear quads or
//! linear triangles, counter-clockwise) together with its oriented boundary
//! facets. Boundary facets carry a [`BoundaryTag`] assigned geometrically by
//! [`classify_boundary`].

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::element;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Quad4,
    Tri3,
}

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::Quad4 => 4,
            ElementKind::Tri3 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Quad4 => "quad4",
            ElementKind::Tri3 => "tri3",
        }
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad4" => Ok(ElementKind::Quad4),
            "tri3" => Ok(ElementKind::Tri3),
            other => Err(Error::invalid(format!("unknown element kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Bottom edge `y = 0` of the unit square.
    GammaBottom,
    /// Boundary of a circular void.
    GammaIn,
    /// Outer perimeter of the voided square.
    GammaOut,
    GammaOther,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::GammaBottom => "bottom",
            BoundaryTag::GammaIn => "in",
            BoundaryTag::GammaOut => "out",
            BoundaryTag::GammaOther => "other",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottom" => Ok(BoundaryTag::GammaBottom),
            "in" => Ok(BoundaryTag::GammaIn),
            "out" => Ok(BoundaryTag::GammaOut),
            "other" => Ok(BoundaryTag::GammaOther),
            other => Err(Error::invalid(format!("unknown boundary tag `{other}`"))),
        }
    }
}

/// A boundary edge, oriented so that the owning element lies to its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Facet {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Circle { center, radius }
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        (dist(p, self.center) - self.radius).abs()
    }

    pub fn contains(&self, p: Point) -> bool {
        dist(p, self.center) < self.radius
    }

    /// Radial projection onto the circle.
    pub fn snap(&self, p: Point) -> Point {
        let d = dist(p, self.center);
        let s = self.radius / d;
        [
            self.center[0] + s * (p[0] - self.center[0]),
            self.center[1] + s * (p[1] - self.center[1]),
        ]
    }
}

/// Geometric description of a domain, used to tag boundary facets.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// `(0,1)²` with `y = 0` tagged as the Dirichlet edge.
    UnitSquare,
    /// `(0,1)²` minus closed disks.
    VoidedSquare { circles: Vec<Circle> },
}

impl Domain {
    /// The two-void geometry of the topology optimization example.
    pub fn paper_voided() -> Self {
        Domain::VoidedSquare {
            circles: vec![
                Circle::new([0.2, 0.8], 0.1),
                Circle::new([0.7, 0.3], 0.2),
            ],
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::VoidedSquare { circles } => {
                1.0 - circles
                    .iter()
                    .map(|c| std::f64::consts::PI * c.radius * c.radius)
                    .sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    kind: ElementKind,
    connectivity: Vec<usize>,
    facets: Vec<Facet>,
}

impl Mesh {
    /// Assemble a mesh from raw parts, checking index ranges and element orientation.
    pub fn new(
        nodes: Vec<Point>,
        kind: ElementKind,
        connectivity: Vec<usize>,
        facets: Vec<Facet>,
    ) -> Result<Self> {
        let npe = kind.nodes_per_element();
        if !connectivity.len().is_multiple_of(npe) {
            return Err(Error::Mesh(format!(
                "connectivity length {} is not a multiple of {npe}",
                connectivity.len()
            )));
        }
        if let Some(&bad) = connectivity.iter().find(|&&i| i >= nodes.len()) {
            return Err(Error::Mesh(format!("element references missing node {bad}")));
        }
        for f in &facets {
            if f.nodes.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::Mesh(format!(
                    "facet ({}, {}) references a missing node",
                    f.nodes[0], f.nodes[1]
                )));
            }
        }
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::NonFinite("mesh nodes"));
        }
        let mesh = Mesh {
            nodes,
            kind,
            connectivity,
            facets,
        };
        for e in 0..mesh.element_count() {
            if !mesh.element_is_positive(e) {
                return Err(Error::Mesh(format!(
                    "element {e} has non-positive jacobian determinant"
                )));
            }
        }
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn element_count(&self) -> usize {
        self.connectivity.len() / self.kind.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.kind.nodes_per_element();
        &self.connectivity[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.connectivity.chunks_exact(self.kind.nodes_per_element())
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facets_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &Facet> + '_ {
        self.facets.iter().filter(move |f| f.tag == tag)
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.facets.iter().any(|f| f.tag == tag)
    }

    pub fn facet_length(&self, f: &Facet) -> f64 {
        dist(self.nodes[f.nodes[0]], self.nodes[f.nodes[1]])
    }

    /// Sorted, deduplicated node indices touched by facets with `tag`.
    pub fn nodes_on_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .facets_with_tag(tag)
            .flat_map(|f| f.nodes)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn element_centroid(&self, e: usize) -> Point {
        let nodes = self.element(e);
        let k = nodes.len() as f64;
        let (sx, sy) = nodes
            .iter()
            .fold((0.0, 0.0), |(x, y), &i| (x + self.nodes[i][0], y + self.nodes[i][1]));
        [sx / k, sy / k]
    }

    fn element_coords(&self, e: usize) -> Vec<Point> {
        self.element(e).iter().map(|&i| self.nodes[i]).collect()
    }

    /// Jacobian determinant is positive at every element quadrature point.
    pub fn element_is_positive(&self, e: usize) -> bool {
        let coords = self.element_coords(e);
        match self.kind {
            ElementKind::Tri3 => signed_area(coords[0], coords[1], coords[2]) > 0.0,
            ElementKind::Quad4 => element::quad_gauss_points()
                .iter()
                .all(|&(xi, eta, _)| element::quad4_jacobian_det(&coords, xi, eta) > 0.0),
        }
    }

    /// Checks the boundary invariants: each facet belongs to exactly one element
    /// and every boundary node touches exactly two facets.
    pub fn check_boundary(&self) -> Result<()> {
        let expected = boundary_edges(self.kind, &self.connectivity);
        let mut expected_set: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &expected {
            *expected_set.entry(edge_key(e[0], e[1])).or_default() += 1;
        }
        if expected.len() != self.facets.len() {
            return Err(Error::Mesh(format!(
                "mesh has {} facets but {} boundary edges",
                self.facets.len(),
                expected.len()
            )));
        }
        for f in &self.facets {
            if expected_set.remove(&edge_key(f.nodes[0], f.nodes[1])).is_none() {
                return Err(Error::Mesh(format!(
                    "facet ({}, {}) is not a boundary edge",
                    f.nodes[0], f.nodes[1]
                )));
            }
        }
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for f in &self.facets {
            for n in f.nodes {
                *degree.entry(n).or_default() += 1;
            }
        }
        if let Some((n, d)) = degree.iter().find(|(_, &d)| d != 2) {
            return Err(Error::Mesh(format!(
                "boundary node {n} touches {d} facets; boundary is not a set of closed loops"
            )));
        }
        Ok(())
    }

    /// Replace facet tags; facet count and order must match.
    pub fn with_tags(&self, tags: &[BoundaryTag]) -> Result<Mesh> {
        if tags.len() != self.facets.len() {
            return Err(Error::DimensionMismatch {
                expected: self.facets.len(),
                found: tags.len(),
                context: "facet tags",
            });
        }
        let mut out = self.clone();
        for (f, &t) in out.facets.iter_mut().zip(tags) {
            f.tag = t;
        }
        Ok(out)
    }

    /// Serialize in the plain-text mesh format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{} {}", p[0], p[1]);
        }
        let _ = writeln!(s, "elements {} {}", self.element_count(), self.kind.name());
        for el in self.elements() {
            let line: Vec<String> = el.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        let _ = writeln!(s, "facets {}", self.facets.len());
        for f in &self.facets {
            let _ = writeln!(s, "{} {} {}", f.nodes[0], f.nodes[1], f.tag);
        }
        s
    }

    /// Parse the plain-text mesh format written by [`Mesh::to_text`].
    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of input, expected {what}")))
        };

        let (ln, header) = next("nodes header")?;
        let n_nodes = parse_header(ln, header, "nodes", 1)?[0]
            .parse::<usize>()
            .map_err(|e| Error::parse(ln, e.to_string()))?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let (ln, line) = next("node line")?;
            let v = parse_floats(ln, line, 2)?;
            nodes.push([v[0], v[1]]);
        }

        let (ln, header) = next("elements header")?;
        let parts = parse_header(ln, header, "elements", 2)?;
        let n_el: usize = parts[0].parse().map_err(|_| Error::parse(ln, "bad element count"))?;
        let kind: ElementKind = parts[1].parse()?;
        let mut connectivity = Vec::with_capacity(n_el * kind.nodes_per_element());
        for _ in 0..n_el {
            let (ln, line) = next("element line")?;
            let idx = parse_indices(ln, line, kind.nodes_per_element())?;
            connectivity.extend(idx);
        }

        let (ln, header) = next("facets header")?;
        let n_f: usize = parse_header(ln, header, "facets", 1)?[0]
            .parse()
            .map_err(|_| Error::parse(ln, "bad facet count"))?;
        let mut facets = Vec::with_capacity(n_f);
        for _ in 0..n_f {
            let (ln, line) = next("facet line")?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::parse(ln, "expected `i j tag`"));
            }
            let a = toks[0].parse().map_err(|_| Error::parse(ln, "bad facet index"))?;
            let b = toks[1].parse().map_err(|_| Error::parse(ln, "bad facet index"))?;
            facets.push(Facet {
                nodes: [a, b],
                tag: toks[2].parse()?,
            });
        }
        Mesh::new(nodes, kind, connectivity, facets)
    }

    /// Serialize as an ASCII MSH 2.2 document (triangles and boundary lines).
    pub fn to_gmsh_ascii(&self) -> String {
        let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
        let _ = writeln!(s, "{}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} 0", i + 1, p[0], p[1]);
        }
        s.push_str("$EndNodes\n$Elements\n");
        let _ = writeln!(s, "{}", self.facets.len() + self.element_count());
        let mut id = 1;
        for f in &self.facets {
            let _ = writeln!(s, "{id} 1 2 0 0 {} {}", f.nodes[0] + 1, f.nodes[1] + 1);
            id += 1;
        }
        let ty = match self.kind {
            ElementKind::Tri3 => 2,
            ElementKind::Quad4 => 3,
        };
        for el in self.elements() {
            let idx: Vec<String> = el.iter().map(|i| (i + 1).to_string()).collect();
            let _ = writeln!(s, "{id} {ty} 2 0 0 {}", idx.join(" "));
            id += 1;
        }
        s.push_str("$EndElements\n");
        s
    }
}

fn parse_header<'a>(ln: usize, line: &'a str, keyword: &str, n: usize) -> Result<Vec<&'a str>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.first() != Some(&keyword) || toks.len() != n + 1 {
        return Err(Error::parse(ln, format!("expected `{keyword}` header")));
    }
    Ok(toks[1..].to_vec())
}

fn parse_floats(ln: usize, line: &str, n: usize) -> Result<Vec<f64>> {
    let v: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
    let v = v.map_err(|e| Error::parse(ln, e.to_string()))?;
    if v.len() != n {
        return Err(Error::parse(ln, format!("expected {n} numbers, found {}", v.len())));
    }
    Ok(v)
}

fn parse_indices(ln: usize, line: &str, n: usize) -> Result<Vec<usize>> {
    let v: std::result::Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
    let v = v.map_err(|e| Error::parse(ln, e.to_string()))?;
    if v.len() != n {
        return Err(Error::parse(ln, format!("expected {n} indices, found {}", v.len())));
    }
    Ok(v)
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edges owned by exactly one element, oriented as in that element and listed
/// in element order.
pub(crate) fn boundary_edges(kind: ElementKind, connectivity: &[usize]) -> Vec<[usize; 2]> {
    let npe = kind.nodes_per_element();
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for el in connectivity.chunks_exact(npe) {
        for k in 0..npe {
            *count.entry(edge_key(el[k], el[(k + 1) % npe])).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for el in connectivity.chunks_exact(npe) {
        for k in 0..npe {
            let (a, b) = (el[k], el[(k + 1) % npe]);
            if count[&edge_key(a, b)] == 1 {
                out.push([a, b]);
            }
        }
    }
    out
}

fn on_square_perimeter(p: Point, tol: f64) -> bool {
    p[0].abs() <= tol || (p[0] - 1.0).abs() <= tol || p[1].abs() <= tol || (p[1] - 1.0).abs() <= tol
}

/// Tag every boundary facet from its midpoint position.
///
/// Unit square: `|y| ≤ tol` is [`BoundaryTag::GammaBottom`], the rest of the
/// perimeter [`BoundaryTag::GammaOther`]. Voided square: midpoints within `tol`
/// of a circle, plus the sagitta of a chord of the facet's length, are
/// [`BoundaryTag::GammaIn`], within `tol` of the perimeter
/// [`BoundaryTag::GammaOut`]. Any facet matching neither is an error.
pub fn classify_boundary(mesh: &Mesh, domain: &Domain, tol: f64) -> Result<Mesh> {
    if !(tol > 0.0) {
        return Err(Error::invalid("classification tolerance must be positive"));
    }
    let mut tags = Vec::with_capacity(mesh.facets.len());
    for f in &mesh.facets {
        let a = mesh.nodes[f.nodes[0]];
        let b = mesh.nodes[f.nodes[1]];
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let tag = match domain {
            Domain::UnitSquare => {
                if mid[1].abs() <= tol {
                    Some(BoundaryTag::GammaBottom)
                } else if on_square_perimeter(mid, tol) {
                    Some(BoundaryTag::GammaOther)
                } else {
                    None
                }
            }
            Domain::VoidedSquare { circles } => {
                let half = 0.5 * (b[0] - a[0]).hypot(b[1] - a[1]);
                // a straight chord's midpoint lies inside the circle by the sagitta
                let on_circle = |c: &Circle| {
                    let sagitta = c.radius - (c.radius * c.radius - half * half).max(0.0).sqrt();
                    c.distance_to_boundary(mid) <= tol + sagitta
                };
                if circles.iter().any(on_circle) {
                    Some(BoundaryTag::GammaIn)
                } else if on_square_perimeter(mid, tol) {
                    Some(BoundaryTag::GammaOut)
                } else {
                    None
                }
            }
        };
        match tag {
            Some(t) => tags.push(t),
            None => {
                return Err(Error::Mesh(format!(
                    "boundary facet with midpoint ({:.6}, {:.6}) matches no boundary",
                    mid[0], mid[1]
                )))
            }
        }
    }
    mesh.with_tags(&tags)
}

/// Structured `n × n` bilinear quadrilateral mesh of the unit square.
///
/// Node `(i, j)` sits at `(i/n, j/n)` with index `j (n+1) + i`.
pub fn build_unit_square_quad(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("unit square mesh needs at least one subdivision"));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut connectivity = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            connectivity.extend([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let facets = boundary_edges(ElementKind::Quad4, &connectivity)
        .into_iter()
        .map(|nodes| Facet {
            nodes,
            tag: BoundaryTag::GammaOther,
        })
        .collect();
    let mesh = Mesh::new(nodes, ElementKind::Quad4, connectivity, facets)?;
    classify_boundary(&mesh, &Domain::UnitSquare, h / 4.0)
}

/// Triangulation of the unit square with circular voids.
///
/// A structured grid of spacing `1/⌈1/h⌉` is split into triangles, elements
/// whose centroid falls inside a circle are removed and the nodes on each void
/// boundary are projected radially onto their circle. Elements that degenerate
/// under the projection, and pinched boundary nodes, are resolved by removing
/// the offending void-adjacent elements and repeating.
pub fn build_voided_square_tri(h: f64, circles: &[Circle]) -> Result<Mesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("mesh size must be positive"));
    }
    let n = (1.0 / h - 1e-9).ceil().max(1.0) as usize;
    let spacing = 1.0 / n as f64;
    for (k, c) in circles.iter().enumerate() {
        if !(c.radius > 0.0) {
            return Err(Error::invalid(format!("circle {k} has non-positive radius")));
        }
        if h >= c.radius {
            return Err(Error::invalid(format!(
                "mesh size {h} does not resolve circle {k} of radius {}",
                c.radius
            )));
        }
        let clearance = [
            c.center[0] - c.radius,
            1.0 - c.center[0] - c.radius,
            c.center[1] - c.radius,
            1.0 - c.center[1] - c.radius,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        if clearance <= 0.0 {
            return Err(Error::invalid(format!("circle {k} is not strictly inside the unit square")));
        }
        if clearance < 2.0 * spacing * (1.0 - 1e-9) {
            return Err(Error::invalid(format!(
                "circle {k} is closer than two mesh cells to the outer boundary"
            )));
        }
        for (l, d) in circles.iter().enumerate().skip(k + 1) {
            let gap = dist(c.center, d.center) - c.radius - d.radius;
            if gap <= 0.0 {
                return Err(Error::invalid(format!("circles {k} and {l} overlap")));
            }
            if gap < 2.0 * spacing * (1.0 - 1e-9) {
                return Err(Error::invalid(format!(
                    "circles {k} and {l} are closer than two mesh cells"
                )));
            }
        }
    }

    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut grid = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            grid.push([i as f64 * spacing, j as f64 * spacing]);
        }
    }
    let mut tris: Vec<[usize; 3]> = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    let centroid = |t: &[usize; 3], pts: &[Point]| {
        [
            (pts[t[0]][0] + pts[t[1]][0] + pts[t[2]][0]) / 3.0,
            (pts[t[0]][1] + pts[t[1]][1] + pts[t[2]][1]) / 3.0,
        ]
    };
    let mut alive: Vec<bool> = tris
        .iter()
        .map(|t| {
            let c = centroid(t, &grid);
            !circles.iter().any(|circ| circ.contains(c))
        })
        .collect();

    let nearest_circle = |p: Point| {
        circles
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.distance_to_boundary(p)
                    .total_cmp(&b.1.distance_to_boundary(p))
            })
            .map(|(k, _)| k)
            .expect("at least one circle")
    };
    let min_area = 0.2 * 0.5 * spacing * spacing;
    let outer_tol = 1e-12;

    let mut positions;
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::Mesh("void boundary repair did not terminate".into()));
        }
        let conn: Vec<usize> = tris
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .flat_map(|(t, _)| *t)
            .collect();
        let edges = boundary_edges(ElementKind::Tri3, &conn);
        let mut degree: HashMap<usize, usize> = HashMap::new();
        let mut void_nodes: Vec<usize> = Vec::new();
        for e in &edges {
            let on_outer = on_square_perimeter(grid[e[0]], outer_tol)
                && on_square_perimeter(grid[e[1]], outer_tol);
            for &v in e {
                *degree.entry(v).or_default() += 1;
                if !on_outer {
                    void_nodes.push(v);
                }
            }
        }
        void_nodes.sort_unstable();
        void_nodes.dedup();

        let mut killed = false;
        // Pinched nodes: remove the surviving elements around them that hug the void.
        let mut pinched: Vec<usize> = degree
            .iter()
            .filter(|(_, &d)| d != 2)
            .map(|(&v, _)| v)
            .collect();
        pinched.sort_unstable();
        for v in pinched {
            let k = nearest_circle(grid[v]);
            let circ = &circles[k];
            for (t, a) in tris.iter().zip(alive.iter_mut()) {
                if *a
                    && t.contains(&v)
                    && dist(centroid(t, &grid), circ.center) < circ.radius + spacing
                {
                    *a = false;
                    killed = true;
                }
            }
        }
        if killed {
            continue;
        }

        positions = grid.clone();
        for &v in &void_nodes {
            positions[v] = circles[nearest_circle(grid[v])].snap(grid[v]);
        }
        for (t, a) in tris.iter().zip(alive.iter_mut()) {
            if !*a {
                continue;
            }
            let area = signed_area(positions[t[0]], positions[t[1]], positions[t[2]]);
            if area < min_area {
                if !t.iter().any(|v| void_nodes.binary_search(v).is_ok()) {
                    return Err(Error::Mesh("degenerate element away from the voids".into()));
                }
                *a = false;
                killed = true;
            }
        }
        if !killed {
            break;
        }
    }

    // Compact: drop dead elements and unused nodes.
    let mut remap = vec![usize::MAX; positions.len()];
    let mut nodes = Vec::new();
    let mut connectivity = Vec::new();
    for (t, _) in tris.iter().zip(&alive).filter(|(_, &a)| a) {
        for &v in t {
            if remap[v] == usize::MAX {
                remap[v] = nodes.len();
                nodes.push(positions[v]);
            }
            connectivity.push(remap[v]);
        }
    }
    let facets = boundary_edges(ElementKind::Tri3, &connectivity)
        .into_iter()
        .map(|nodes| Facet {
            nodes,
            tag: BoundaryTag::GammaOther,
        })
        .collect();
    let mesh = Mesh::new(nodes, ElementKind::Tri3, connectivity, facets)?;
    let domain = Domain::VoidedSquare {
        circles: circles.to_vec(),
    };
    let mesh = classify_boundary(&mesh, &domain, spacing / 4.0)?;
    mesh.check_boundary()?;

    for (k, c) in circles.iter().enumerate() {
        let count = mesh
            .facets_with_tag(BoundaryTag::GammaIn)
            .filter(|f| {
                let a = mesh.node(f.nodes[0]);
                let b = mesh.node(f.nodes[1]);
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                c.distance_to_boundary(mid) <= spacing / 4.0
            })
            .count();
        if count < 8 {
            return Err(Error::invalid(format!(
                "mesh size {h} too coarse: circle {k} has only {count} facets"
            )));
        }
    }
    Ok(mesh)
}

/// Parse an ASCII MSH 2.2 document containing triangles.
///
/// Physical tags are ignored; lines and points are skipped. Nodes not used by
/// any triangle are dropped and the rest renumbered in file order. Triangles
/// are reoriented counter-clockwise. Boundary facets are extracted as edges
/// owned by a single triangle and left as [`BoundaryTag::GammaOther`] until
/// [`classify_boundary`] is applied.
pub fn import_gmsh_ascii(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut version_ok = false;
    let mut raw_nodes: Vec<(usize, Point)> = Vec::new();
    let mut raw_tris: Vec<(usize, [usize; 3])> = Vec::new();

    while let Some((ln, line)) = lines.next() {
        match line {
            "" => continue,
            "$MeshFormat" => {
                let (ln, fmt) = lines
                    .next()
                    .ok_or_else(|| Error::parse(ln, "missing format line"))?;
                let toks: Vec<&str> = fmt.split_whitespace().collect();
                if toks.first() != Some(&"2.2") {
                    return Err(Error::parse(
                        ln,
                        format!("unsupported MSH version `{}`", toks.first().unwrap_or(&"")),
                    ));
                }
                if toks.get(1) != Some(&"0") {
                    return Err(Error::parse(ln, "only ASCII MSH files are supported"));
                }
                version_ok = true;
                expect_end(&mut lines, "$EndMeshFormat")?;
            }
            "$Nodes" => {
                let (ln, count) = lines.next().ok_or_else(|| Error::parse(ln, "missing node count"))?;
                let count: usize = count.parse().map_err(|_| Error::parse(ln, "bad node count"))?;
                for _ in 0..count {
                    let (ln, l) = lines.next().ok_or_else(|| Error::parse(ln, "truncated $Nodes"))?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() < 3 {
                        return Err(Error::parse(ln, "node line needs `id x y [z]`"));
                    }
                    let tag: usize = toks[0].parse().map_err(|_| Error::parse(ln, "bad node id"))?;
                    let x: f64 = toks[1].parse().map_err(|_| Error::parse(ln, "bad coordinate"))?;
                    let y: f64 = toks[2].parse().map_err(|_| Error::parse(ln, "bad coordinate"))?;
                    raw_nodes.push((tag, [x, y]));
                }
                expect_end(&mut lines, "$EndNodes")?;
            }
            "$Elements" => {
                let (ln, count) = lines
                    .next()
                    .ok_or_else(|| Error::parse(ln, "missing element count"))?;
                let count: usize = count.parse().map_err(|_| Error::parse(ln, "bad element count"))?;
                for _ in 0..count {
                    let (ln, l) = lines.next().ok_or_else(|| Error::parse(ln, "truncated $Elements"))?;
                    let toks: std::result::Result<Vec<usize>, _> =
                        l.split_whitespace().map(str::parse).collect();
                    let toks = toks.map_err(|_| Error::parse(ln, "bad element line"))?;
                    if toks.len() < 3 {
                        return Err(Error::parse(ln, "element line too short"));
                    }
                    let (ty, ntags) = (toks[1], toks[2]);
                    let node_ids = toks.get(3 + ntags..).unwrap_or(&[]);
                    match ty {
                        // point, line, second-order line
                        15 | 1 | 8 => {}
                        2 => {
                            if node_ids.len() != 3 {
                                return Err(Error::parse(ln, "triangle needs three nodes"));
                            }
                            raw_tris.push((ln, [node_ids[0], node_ids[1], node_ids[2]]));
                        }
                        3 | 9 | 10 | 16 | 20 | 21 => {
                            return Err(Error::parse(
                                ln,
                                format!("unsupported 2D element type {ty}; only 3-node triangles are accepted"),
                            ))
                        }
                        _ => {
                            return Err(Error::parse(ln, format!("unsupported element type {ty}")))
                        }
                    }
                }
                expect_end(&mut lines, "$EndElements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                let end = format!("$End{}", &other[1..]);
                loop {
                    match lines.next() {
                        Some((_, l)) if l == end => break,
                        Some(_) => {}
                        None => return Err(Error::parse(ln, format!("unterminated section {other}"))),
                    }
                }
            }
            _ => return Err(Error::parse(ln, format!("unexpected line `{line}`"))),
        }
    }
    if !version_ok {
        return Err(Error::parse(0, "missing $MeshFormat section"));
    }
    if raw_tris.is_empty() {
        return Err(Error::Mesh("document contains no triangles".into()));
    }

    let by_tag: HashMap<usize, usize> = raw_nodes
        .iter()
        .enumerate()
        .map(|(k, (tag, _))| (*tag, k))
        .collect();
    let mut remap = vec![usize::MAX; raw_nodes.len()];
    let mut used = vec![false; raw_nodes.len()];
    let mut tris = Vec::with_capacity(raw_tris.len());
    for (ln, t) in &raw_tris {
        let mut local = [0usize; 3];
        for (slot, tag) in local.iter_mut().zip(t) {
            *slot = *by_tag
                .get(tag)
                .ok_or_else(|| Error::parse(*ln, format!("triangle references unknown node {tag}")))?;
            used[*slot] = true;
        }
        tris.push(local);
    }
    let mut nodes = Vec::new();
    for (k, (_, p)) in raw_nodes.iter().enumerate() {
        if used[k] {
            remap[k] = nodes.len();
            nodes.push(*p);
        }
    }
    let mut connectivity = Vec::with_capacity(3 * tris.len());
    for t in tris {
        let mut t = t.map(|k| remap[k]);
        let area = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        if area < 0.0 {
            t.swap(1, 2);
        } else if area == 0.0 {
            return Err(Error::Mesh("degenerate triangle in MSH document".into()));
        }
        connectivity.extend(t);
    }
    let facets = boundary_edges(ElementKind::Tri3, &connectivity)
        .into_iter()
        .map(|nodes| Facet {
            nodes,
            tag: BoundaryTag::GammaOther,
        })
        .collect();
    Mesh::new(nodes, ElementKind::Tri3, connectivity, facets)
}

fn expect_end<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    end: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l == end => Ok(()),
        Some((ln, l)) => Err(Error::parse(ln, format!("expected {end}, found `{l}`"))),
        None => Err(Error::parse(0, format!("missing {end}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = build_unit_square_quad(1).unwrap();
        assert_eq!(m.node_count(), 4);
        assert_eq!(m.element_count(), 1);
        assert_eq!(m.facets().len(), 4);
        assert_eq!(m.facets_with_tag(BoundaryTag::GammaBottom).count(), 1);

        let m = build_unit_square_quad(2).unwrap();
        assert_eq!((m.node_count(), m.element_count(), m.facets().len()), (9, 4, 8));

        let m = build_unit_square_quad(64).unwrap();
        assert_eq!((m.node_count(), m.element_count()), (4225, 4096));
        m.check_boundary().unwrap();
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(build_unit_square_quad(0).is_err());
    }

    #[test]
    fn bottom_edge_is_tagged() {
        let m = build_unit_square_quad(2).unwrap();
        let bottom: Vec<_> = m.facets_with_tag(BoundaryTag::GammaBottom).collect();
        assert_eq!(bottom.len(), 2);
        let f = bottom[0];
        assert_eq!(m.node(f.nodes[0]), [0.0, 0.0]);
        assert_eq!(m.node(f.nodes[1]), [0.5, 0.0]);
    }

    #[test]
    fn voided_mesh_snaps_inner_boundary() {
        let domain = Domain::paper_voided();
        let Domain::VoidedSquare { circles } = &domain else { unreachable!() };
        let m = build_voided_square_tri(0.03, circles).unwrap();
        m.check_boundary().unwrap();
        for f in m.facets_with_tag(BoundaryTag::GammaIn) {
            for v in f.nodes {
                let p = m.node(v);
                let d = circles
                    .iter()
                    .map(|c| c.distance_to_boundary(p))
                    .fold(f64::INFINITY, f64::min);
                assert!(d <= 1e-12, "node {v} is {d} off its circle");
            }
        }
        let out: f64 = m
            .facets_with_tag(BoundaryTag::GammaOut)
            .map(|f| m.facet_length(f))
            .sum();
        assert!((out - 4.0).abs() < 1e-6);
        for (k, c) in circles.iter().enumerate() {
            let len: f64 = m
                .facets_with_tag(BoundaryTag::GammaIn)
                .filter(|f| c.distance_to_boundary(m.node(f.nodes[0])) < 1e-9)
                .map(|f| m.facet_length(f))
                .sum();
            let exact = 2.0 * std::f64::consts::PI * c.radius;
            assert!((len - exact).abs() < 0.01 * exact, "circle {k}: {len} vs {exact}");
        }
    }

    #[test]
    fn voided_mesh_rejects_bad_geometry() {
        let c = |x, y, r| Circle::new([x, y], r);
        assert!(build_voided_square_tri(0.03, &[c(0.3, 0.3, 0.2), c(0.5, 0.5, 0.2)]).is_err());
        assert!(build_voided_square_tri(0.03, &[c(0.05, 0.5, 0.1)]).is_err());
        assert!(build_voided_square_tri(0.03, &[c(0.5, 0.5, 0.0)]).is_err());
        assert!(build_voided_square_tri(0.15, &[c(0.5, 0.5, 0.1)]).is_err());
    }

    #[test]
    fn gmsh_minimal_document() {
        let doc = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n\
                   $Elements\n1\n1 2 2 0 1 1 2 3\n$EndElements\n";
        let m = import_gmsh_ascii(doc).unwrap();
        assert_eq!((m.node_count(), m.element_count(), m.facets().len()), (3, 1, 3));
    }

    #[test]
    fn gmsh_errors() {
        let v3 = "$MeshFormat\n3.0 0 8\n$EndMeshFormat\n";
        assert!(matches!(import_gmsh_ascii(v3), Err(Error::Parse { .. })));
        let dangling = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n2\n1 0 0 0\n2 1 0 0\n$EndNodes\n\
                        $Elements\n1\n1 2 2 0 1 1 2 7\n$EndElements\n";
        assert!(import_gmsh_ascii(dangling).is_err());
        let quad = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
                    $Elements\n1\n1 3 2 0 1 1 2 3 4\n$EndElements\n";
        assert!(import_gmsh_ascii(quad).is_err());
    }

    #[test]
    fn gmsh_round_trip_of_voided_mesh() {
        let domain = Domain::paper_voided();
        let Domain::VoidedSquare { circles } = &domain else { unreachable!() };
        let m = build_voided_square_tri(0.05, circles).unwrap();
        let imported = import_gmsh_ascii(&m.to_gmsh_ascii()).unwrap();
        let tagged = classify_boundary(&imported, &domain, 0.05 / 4.0).unwrap();
        assert_eq!(tagged, m);
    }

    #[test]
    fn chord_sagitta_is_allowed_for_void_facets() {
        let domain = Domain::paper_voided();
        let Domain::VoidedSquare { circles } = &domain else { unreachable!() };
        for h in [0.05, 0.03] {
            let m = build_voided_square_tri(h, circles).unwrap();
            let imported = import_gmsh_ascii(&m.to_gmsh_ascii()).unwrap();
            assert_eq!(classify_boundary(&imported, &domain, 1e-6).unwrap(), m);
        }
    }

    #[test]
    fn interior_edges_are_not_facets() {
        let m = build_unit_square_quad(3).unwrap();
        let center = m
            .facets()
            .iter()
            .filter(|f| {
                f.nodes.iter().all(|&v| {
                    let p = m.node(v);
                    p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0
                })
            })
            .count();
        assert_eq!(center, 0);
    }

    #[test]
    fn classification_is_idempotent() {
        let m = build_unit_square_quad(4).unwrap();
        let again = classify_boundary(&m, &Domain::UnitSquare, 0.0625).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn unclassified_facet_is_an_error() {
        let doc = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n\
                   $Elements\n1\n1 2 2 0 1 1 2 3\n$EndElements\n";
        let m = import_gmsh_ascii(doc).unwrap();
        assert!(classify_boundary(&m, &Domain::UnitSquare, 0.01).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let domain = Domain::paper_voided();
        let Domain::VoidedSquare { circles } = &domain else { unreachable!() };
        let m = build_voided_square_tri(0.04, circles).unwrap();
        let text = m.to_text();
        let back = Mesh::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }
}
