//! Polygonal meshes: storage, face topology, geometric quantities and the
//! line-oriented text format.
//!
//! Elements are stored as counterclockwise vertex cycles. Faces are created
//! in order of first appearance while walking the elements by id, so the
//! owner of a face is always its lowest-id incident element and the stored
//! normal points out of the owner.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::quadrature::{polygon_centroid, polygon_subtriangles, signed_triangle_area, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    pub length: f64,
    /// Unit normal pointing out of `owner`.
    pub normal: Point,
    pub owner: usize,
    pub neighbor: Option<usize>,
    /// Index of this face among the owner's edges (and the neighbor's).
    pub owner_edge: usize,
    pub neighbor_edge: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }

    pub fn incident_elements(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.owner).chain(self.neighbor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    UnitSquare,
    /// [-1, 1]^2 with [0, 1) x (-1, 0] removed.
    LShape,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::LShape => 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub elements: Vec<Vec<usize>>,
    pub faces: Vec<Face>,
    /// Face ids of each element in edge order: edge i joins vertex i and i + 1.
    pub element_faces: Vec<Vec<usize>>,
    pub areas: Vec<f64>,
    pub barycenters: Vec<Point>,
    pub diameters: Vec<f64>,
    pub h_max: f64,
}

impl Mesh {
    /// Builds a mesh from raw polygons; clockwise polygons are reversed.
    pub fn new(nodes: Vec<Point>, mut elements: Vec<Vec<usize>>) -> Result<Self> {
        for (k, poly) in elements.iter_mut().enumerate() {
            if poly.len() < 3 {
                return Err(Error::InvalidArgument(format!(
                    "element {k} has {} vertices",
                    poly.len()
                )));
            }
            if let Some(&v) = poly.iter().find(|&&v| v >= nodes.len()) {
                return Err(Error::InvalidArgument(format!(
                    "element {k} references node {v} of {}",
                    nodes.len()
                )));
            }
            let area = signed_area(&nodes, poly);
            let scale = diameter(&nodes, poly);
            if area.abs() <= 1e-14 * scale * scale || !area.is_finite() {
                return Err(Error::DegenerateElement(k));
            }
            if area < 0.0 {
                poly.reverse();
            }
        }
        let (faces, element_faces) = compute_topology(&nodes, &elements)?;
        let areas: Vec<f64> = elements.iter().map(|p| signed_area(&nodes, p)).collect();
        let barycenters = elements
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let verts: Vec<Point> = p.iter().map(|&v| nodes[v]).collect();
                polygon_centroid(&verts).ok_or(Error::DegenerateElement(k))
            })
            .collect::<Result<Vec<_>>>()?;
        let diameters: Vec<f64> = elements.iter().map(|p| diameter(&nodes, p)).collect();
        let h_max = diameters.iter().copied().fold(0.0, f64::max);
        Ok(Mesh {
            nodes,
            elements,
            faces,
            element_faces,
            areas,
            barycenters,
            diameters,
            h_max,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self, element: usize) -> Vec<Point> {
        self.elements[element]
            .iter()
            .map(|&v| self.nodes[v])
            .collect()
    }

    pub fn is_simplicial(&self) -> bool {
        self.elements.iter().all(|p| p.len() == 3)
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_boundary())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_boundary())
    }

    /// Face-adjacent elements of `element`.
    pub fn neighbors(&self, element: usize) -> impl Iterator<Item = usize> + '_ {
        self.element_faces[element].iter().filter_map(move |&f| {
            let face = &self.faces[f];
            match face.neighbor {
                Some(n) if face.owner == element => Some(n),
                Some(_) => Some(face.owner),
                None => None,
            }
        })
    }

    /// Outward unit normal of `face` as seen from `element`.
    pub fn outward_normal(&self, face: usize, element: usize) -> Point {
        let f = &self.faces[face];
        if f.owner == element {
            f.normal
        } else {
            [-f.normal[0], -f.normal[1]]
        }
    }

    pub fn face_endpoints(&self, face: usize) -> (Point, Point) {
        let [a, b] = self.faces[face].vertices;
        (self.nodes[a], self.nodes[b])
    }

    /// Whether `x` lies in the closed polygon `element` (up to `tol`).
    pub fn contains(&self, element: usize, x: Point, tol: f64) -> bool {
        let poly = &self.elements[element];
        let k = poly.len();
        (0..k).all(|i| {
            let a = self.nodes[poly[i]];
            let b = self.nodes[poly[(i + 1) % k]];
            signed_triangle_area(a, b, x) >= -tol
        })
    }

    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.num_elements()).find(|&k| self.contains(k, x, 1e-14))
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Relabels elements: new element i is old element `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Mesh> {
        let elements = order.iter().map(|&k| self.elements[k].clone()).collect();
        Mesh::new(self.nodes.clone(), elements)
    }
}

fn signed_area(nodes: &[Point], poly: &[usize]) -> f64 {
    let a = nodes[poly[0]];
    poly[1..]
        .windows(2)
        .map(|w| signed_triangle_area(a, nodes[w[0]], nodes[w[1]]))
        .sum()
}

fn diameter(nodes: &[Point], poly: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, &a) in poly.iter().enumerate() {
        for &b in &poly[i + 1..] {
            d = d.max(dist(nodes[a], nodes[b]));
        }
    }
    d
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Builds faces from polygon edges. Each undirected vertex pair becomes one
/// face; a third incidence is a non-manifold error.
pub fn compute_topology(
    nodes: &[Point],
    elements: &[Vec<usize>],
) -> Result<(Vec<Face>, Vec<Vec<usize>>)> {
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Face> = Vec::new();
    let mut element_faces = Vec::with_capacity(elements.len());
    for (k, poly) in elements.iter().enumerate() {
        let n = poly.len();
        let mut ids = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                None => {
                    let (pa, pb) = (nodes[a], nodes[b]);
                    let length = dist(pa, pb);
                    let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                    lookup.insert(key, faces.len());
                    ids.push(faces.len());
                    faces.push(Face {
                        vertices: [a, b],
                        length,
                        normal,
                        owner: k,
                        neighbor: None,
                        owner_edge: i,
                        neighbor_edge: None,
                    });
                }
                Some(&f) => {
                    let face = &mut faces[f];
                    if face.neighbor.is_some() || face.owner == k {
                        return Err(Error::NonManifoldEdge(key.0, key.1));
                    }
                    face.neighbor = Some(k);
                    face.neighbor_edge = Some(i);
                    ids.push(f);
                }
            }
        }
        element_faces.push(ids);
    }
    Ok((faces, element_faces))
}

/// Structured triangulation with `n` cells per side; every cell is split
/// along its bottom-left to top-right diagonal.
///
/// The L-shape is the `n`-mesh of [-1, 1]^2 with the lower-right quadrant
/// removed, so `n` must be even for the cut to follow mesh lines.
pub fn build_structured_triangle_mesh(n: usize, domain: Domain) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("subdivisions must be >= 1".into()));
    }
    if domain == Domain::LShape && n % 2 == 1 {
        return Err(Error::InvalidArgument(
            "L-shape needs an even number of subdivisions".into(),
        ));
    }
    let (origin, side) = match domain {
        Domain::UnitSquare => (0.0, 1.0),
        Domain::LShape => (-1.0, 2.0),
    };
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([
                origin + side * i as f64 / n as f64,
                origin + side * j as f64 / n as f64,
            ]);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            if domain == Domain::LShape && i >= n / 2 && j < n / 2 {
                continue;
            }
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push(vec![v00, v10, v11]);
            elements.push(vec![v00, v11, v01]);
        }
    }
    if domain == Domain::LShape {
        compact_nodes(&mut nodes, &mut elements);
    }
    Mesh::new(nodes, elements)
}

fn compact_nodes(nodes: &mut Vec<Point>, elements: &mut [Vec<usize>]) {
    let mut map = vec![usize::MAX; nodes.len()];
    let mut used = vec![false; nodes.len()];
    for p in elements.iter() {
        for &v in p {
            used[v] = true;
        }
    }
    let mut kept = Vec::new();
    for (v, &u) in used.iter().enumerate() {
        if u {
            map[v] = kept.len();
            kept.push(nodes[v]);
        }
    }
    for p in elements.iter_mut() {
        for v in p.iter_mut() {
            *v = map[*v];
        }
    }
    *nodes = kept;
}

/// Reads the `nodes <N>` / `elements <M>` text format; `#` starts a comment.
pub fn read_mesh<R: BufRead>(reader: R) -> Result<Mesh> {
    enum Section {
        Header,
        Nodes(usize),
        ElementsHeader,
        Elements(usize),
        Done,
    }
    let mut nodes = Vec::new();
    let mut elements: Vec<Vec<usize>> = Vec::new();
    let mut section = Section::Header;
    let mut last_line = 0;
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        section = match section {
            Section::Header | Section::ElementsHeader => {
                let expected = if matches!(section, Section::Header) {
                    "nodes"
                } else {
                    "elements"
                };
                if tokens.len() != 2 || tokens[0] != expected {
                    return Err(parse_err(lineno, format!("expected '{expected} <count>'")));
                }
                let count: usize = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad count '{}'", tokens[1])))?;
                match (expected, count) {
                    ("nodes", 0) => Section::ElementsHeader,
                    ("nodes", c) => Section::Nodes(c),
                    (_, 0) => Section::Done,
                    (_, c) => Section::Elements(c),
                }
            }
            Section::Nodes(remaining) => {
                if tokens.len() != 2 {
                    return Err(parse_err(lineno, "expected '<x> <y>'".into()));
                }
                let x: f64 = tokens[0]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad coordinate '{}'", tokens[0])))?;
                let y: f64 = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad coordinate '{}'", tokens[1])))?;
                nodes.push([x, y]);
                if remaining == 1 {
                    Section::ElementsHeader
                } else {
                    Section::Nodes(remaining - 1)
                }
            }
            Section::Elements(remaining) => {
                let nums = tokens
                    .iter()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| parse_err(lineno, "expected integer vertex ids".into()))?;
                let k = nums[0];
                if k < 3 || nums.len() != k + 1 {
                    return Err(parse_err(
                        lineno,
                        format!("expected {k} vertex ids after the count"),
                    ));
                }
                if let Some(&v) = nums[1..].iter().find(|&&v| v >= nodes.len()) {
                    return Err(parse_err(lineno, format!("vertex id {v} out of range")));
                }
                elements.push(nums[1..].to_vec());
                if remaining == 1 {
                    Section::Done
                } else {
                    Section::Elements(remaining - 1)
                }
            }
            Section::Done => return Err(parse_err(lineno, "unexpected trailing content".into())),
        };
    }
    if !matches!(section, Section::Done) {
        return Err(parse_err(last_line, "unexpected end of input".into()));
    }
    Mesh::new(nodes, elements)
}

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "nodes {}", mesh.nodes.len())?;
    for [x, y] in &mesh.nodes {
        writeln!(out, "{x:.17e} {y:.17e}")?;
    }
    writeln!(out, "elements {}", mesh.elements.len())?;
    for poly in &mesh.elements {
        let ids: Vec<String> = poly.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", poly.len(), ids.join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRegularity {
    /// min over elements K and edges e of K of h_e / h_K.
    pub min_edge_ratio: f64,
    pub max_edge_ratio: f64,
    /// Smallest angle (radians) of the integration sub-triangulation.
    pub min_angle: f64,
}

pub fn shape_regularity_report(mesh: &Mesh) -> ShapeRegularity {
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut min_angle = f64::INFINITY;
    for k in 0..mesh.num_elements() {
        for &f in &mesh.element_faces[k] {
            let r = mesh.faces[f].length / mesh.diameters[k];
            min_ratio = min_ratio.min(r);
            max_ratio = max_ratio.max(r);
        }
        for tri in polygon_subtriangles(&mesh.vertices(k)) {
            for i in 0..3 {
                let (p, a, b) = (tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let u = [a[0] - p[0], a[1] - p[1]];
                let v = [b[0] - p[0], b[1] - p[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(a, p) * dist(b, p));
                min_angle = min_angle.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
    }
    ShapeRegularity {
        min_edge_ratio: min_ratio,
        max_edge_ratio: max_ratio,
        min_angle,
    }
}
