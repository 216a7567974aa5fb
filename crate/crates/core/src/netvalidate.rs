//! Geometric hypotheses on a contact graph: triangulation, sequential
//! triangle construction, boundary compatibility, cell-connectedness, and
//! the inductive spanning-subgraph construction that certifies full column
//! rank of the interior rigidity block.

use crate::geometry::{det2, Vec2};
use crate::packing::ContactGraph;
use std::collections::{BTreeSet, HashMap, HashSet};
use thiserror::Error;

/// Two unit vectors count as collinear when |det| is at most this.
pub const DEFAULT_TOL_COLLINEAR: f64 = 1e-9;

/// Interior-vertex count up to which cell-connectedness enumerates all
/// connected interior subsets.
pub const EXHAUSTIVE_INTERIOR_CAP: usize = 18;

/// Subset-size limit used by the sampled cell-connectedness mode.
pub const DEFAULT_SAMPLED_SUBSET_SIZE: usize = 5;

#[derive(Debug, Error)]
pub enum NetValidateError {
    #[error("invalid straight-line embedding: {0}")]
    Embedding(String),
    #[error("exhaustive subset enumeration requested for {interior} interior vertices (cap {cap})")]
    Explosion { interior: usize, cap: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Bounded faces of the straight-line embedding plus the outer face.
#[derive(Debug, Clone)]
pub struct FaceSet {
    /// Bounded faces, each a counterclockwise vertex cycle.
    pub bounded: Vec<Vec<usize>>,
    /// The outer face cycle (clockwise).
    pub outer: Vec<usize>,
}

/// Result of the triangulation check.
#[derive(Debug, Clone)]
pub struct TriangulationReport {
    pub is_triangulation: bool,
    /// All bounded faces when they are triangles.
    pub triangles: Vec<[usize; 3]>,
    /// A non-triangular bounded face, when one exists.
    pub offending_face: Option<Vec<usize>>,
    pub reason: Option<String>,
}

/// Result of the sequential triangle-gluing search.
#[derive(Debug, Clone)]
pub struct SequentialReport {
    pub ok: bool,
    /// Order in which triangles were glued (indices into the triangle list).
    pub order: Vec<usize>,
    /// Faces that could not be reached by edge-gluing.
    pub stuck_frontier: Vec<usize>,
}

/// Result of the boundary-compatibility check.
#[derive(Debug, Clone)]
pub struct BoundaryCompatReport {
    pub ok: bool,
    /// Interior vertices adjacent to the boundary without a non-collinear
    /// pair of boundary edges.
    pub violations: Vec<usize>,
}

/// How cell-connectedness enumerates interior subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellConnectedMode {
    /// Exhaustive for small interiors, sampled above the cap.
    Auto,
    /// All connected interior subsets; errors above the cap.
    Exhaustive,
    /// Connected subsets grown by breadth-first search up to the given size.
    Sampled { max_subset_size: usize },
}

/// The enumeration that was actually performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellCheckCoverage {
    Exhaustive,
    Sampled { max_subset_size: usize },
}

/// Result of the cell-connectedness check.
///
/// `connected` uses the reading in which the two witness vertices outside the
/// subset may be boundary vertices; this is the version the rank argument
/// uses and the one a periodic triangular lattice satisfies. The strict
/// reading additionally requires both outside vertices to be interior; it is
/// reported alongside because the two verdicts differ on some graphs.
#[derive(Debug, Clone)]
pub struct CellConnectedReport {
    pub connected: bool,
    pub witness: Option<Vec<usize>>,
    pub strict_connected: bool,
    pub strict_witness: Option<Vec<usize>>,
    pub coverage: CellCheckCoverage,
}

/// Certificate of the inductive spanning-subgraph construction: starting
/// from the boundary, every interior vertex is absorbed together with two
/// non-collinear incident edges into the already-covered set.
#[derive(Debug, Clone)]
pub struct GammaMaxCertificate {
    /// (interior vertex, the two chosen edge ids), in absorption order.
    pub additions: Vec<(usize, [usize; 2])>,
    pub covered: bool,
    pub uncovered: Vec<usize>,
}

impl GammaMaxCertificate {
    pub fn chosen_edge_count(&self) -> usize {
        2 * self.additions.len()
    }
}

/// Aggregate regularity report.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub triangulation: TriangulationReport,
    pub sequential: Option<SequentialReport>,
    pub boundary: BoundaryCompatReport,
    pub cell: Option<CellConnectedReport>,
    pub overall: bool,
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    det2(a - o, b - o)
}

fn segments_properly_intersect(p1: Vec2, p2: Vec2, p3: Vec2, p4: Vec2) -> bool {
    let d1 = cross(p3, p4, p1);
    let d2 = cross(p3, p4, p2);
    let d3 = cross(p1, p2, p3);
    let d4 = cross(p1, p2, p4);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn point_on_segment_interior(p: Vec2, a: Vec2, b: Vec2, tol: f64) -> bool {
    let ab = b - a;
    let len = ab.norm();
    if len == 0.0 {
        return false;
    }
    if cross(a, b, p).abs() > tol * len {
        return false;
    }
    let t = (p - a).dot(&ab) / (len * len);
    t > tol / len && t < 1.0 - tol / len
}

fn is_connected(graph: &ContactGraph) -> bool {
    let n = graph.n_vertices();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &(_, w) in graph.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

/// Validates the straight-line embedding: no two edges may cross or overlap
/// away from shared endpoints, and no vertex may sit in the interior of an
/// edge.
fn validate_embedding(graph: &ContactGraph) -> Result<(), NetValidateError> {
    let scale = graph.scale();
    let tol = 1e-9 * scale;
    let edges = graph.edges();
    for (l1, &(a, b)) in edges.iter().enumerate() {
        let (pa, pb) = (graph.position(a), graph.position(b));
        for &(c, d) in edges.iter().skip(l1 + 1) {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            let (pc, pd) = (graph.position(c), graph.position(d));
            if segments_properly_intersect(pa, pb, pc, pd) {
                return Err(NetValidateError::Embedding(format!(
                    "edges ({a},{b}) and ({c},{d}) cross"
                )));
            }
        }
        for v in 0..graph.n_vertices() {
            if v == a || v == b {
                continue;
            }
            if point_on_segment_interior(graph.position(v), pa, pb, tol) {
                return Err(NetValidateError::Embedding(format!(
                    "vertex {v} lies inside edge ({a},{b})"
                )));
            }
        }
    }
    Ok(())
}

/// Extracts the planar face decomposition from the straight-line embedding
/// using the angular edge ordering around each vertex. The outer face is the
/// unique cycle with negative signed area.
pub fn extract_faces(graph: &ContactGraph) -> Result<FaceSet, NetValidateError> {
    validate_embedding(graph)?;
    let n = graph.n_vertices();

    // counterclockwise rotation of neighbors around each vertex
    let mut rotation: Vec<Vec<usize>> = Vec::with_capacity(n);
    for v in 0..n {
        let mut nbrs: Vec<(f64, usize)> = graph
            .neighbors(v)
            .iter()
            .map(|&(_, w)| {
                let d = graph.position(w) - graph.position(v);
                (d.y.atan2(d.x), w)
            })
            .collect();
        nbrs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for pair in nbrs.windows(2) {
            if (pair[0].0 - pair[1].0).abs() < 1e-12 {
                return Err(NetValidateError::Embedding(format!(
                    "overlapping edges at vertex {v}"
                )));
            }
        }
        rotation.push(nbrs.into_iter().map(|(_, w)| w).collect());
    }
    let index_in_rotation: Vec<HashMap<usize, usize>> = rotation
        .iter()
        .map(|r| r.iter().enumerate().map(|(k, &w)| (w, k)).collect())
        .collect();

    // walk each directed edge once; successor of (u -> v) is (v -> w) with w
    // the clockwise-next neighbor of v after u, which keeps the face on the
    // left of the walk
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut bounded = Vec::new();
    let mut outer: Option<Vec<usize>> = None;
    for &(i, j) in graph.edges() {
        for (u0, v0) in [(i, j), (j, i)] {
            if used.contains(&(u0, v0)) {
                continue;
            }
            let mut face = Vec::new();
            let (mut u, mut v) = (u0, v0);
            loop {
                used.insert((u, v));
                face.push(u);
                let rot = &rotation[v];
                let k = index_in_rotation[v][&u];
                let w = rot[(k + rot.len() - 1) % rot.len()];
                u = v;
                v = w;
                if (u, v) == (u0, v0) {
                    break;
                }
                if face.len() > 2 * graph.n_edges() + 2 {
                    return Err(NetValidateError::Embedding(
                        "face walk failed to close".into(),
                    ));
                }
            }
            let area = signed_area(graph, &face);
            if area < 0.0 {
                if outer.is_some() {
                    return Err(NetValidateError::Embedding(
                        "multiple outer faces (graph is not a plane triangulation)".into(),
                    ));
                }
                outer = Some(face);
            } else {
                bounded.push(face);
            }
        }
    }
    let outer = outer.ok_or_else(|| NetValidateError::Embedding("no outer face found".into()))?;
    Ok(FaceSet { bounded, outer })
}

fn signed_area(graph: &ContactGraph, cycle: &[usize]) -> f64 {
    let mut s = 0.0;
    for k in 0..cycle.len() {
        let p = graph.position(cycle[k]);
        let q = graph.position(cycle[(k + 1) % cycle.len()]);
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

/// True iff every bounded face of the embedding is a triangle.
pub fn check_triangulation(graph: &ContactGraph) -> Result<TriangulationReport, NetValidateError> {
    if graph.n_vertices() < 3 || graph.n_edges() < 3 {
        return Ok(TriangulationReport {
            is_triangulation: false,
            triangles: vec![],
            offending_face: None,
            reason: Some("fewer than 3 vertices or edges".into()),
        });
    }
    if !is_connected(graph) {
        return Ok(TriangulationReport {
            is_triangulation: false,
            triangles: vec![],
            offending_face: None,
            reason: Some("graph is disconnected".into()),
        });
    }
    let faces = extract_faces(graph)?;
    let mut triangles = Vec::with_capacity(faces.bounded.len());
    for face in &faces.bounded {
        if face.len() != 3 {
            return Ok(TriangulationReport {
                is_triangulation: false,
                triangles: vec![],
                offending_face: Some(face.clone()),
                reason: Some(format!("bounded face with {} vertices", face.len())),
            });
        }
        triangles.push([face[0], face[1], face[2]]);
    }
    Ok(TriangulationReport {
        is_triangulation: true,
        triangles,
        offending_face: None,
        reason: None,
    })
}

fn face_edge_set(t: &[usize; 3]) -> [(usize, usize); 3] {
    let e = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    [e(t[0], t[1]), e(t[1], t[2]), e(t[0], t[2])]
}

/// Greedy search for a triangle ordering in which each triangle after the
/// first shares a full edge with the union of its predecessors.
pub fn check_sequential_construction(
    graph: &ContactGraph,
) -> Result<SequentialReport, NetValidateError> {
    let tri = check_triangulation(graph)?;
    if !tri.is_triangulation {
        return Ok(SequentialReport {
            ok: false,
            order: vec![],
            stuck_frontier: (0..tri.triangles.len()).collect(),
        });
    }
    let faces = tri.triangles;
    if faces.is_empty() {
        return Ok(SequentialReport { ok: false, order: vec![], stuck_frontier: vec![] });
    }
    let mut order = vec![0usize];
    let mut covered: HashSet<(usize, usize)> = face_edge_set(&faces[0]).into_iter().collect();
    let mut remaining: BTreeSet<usize> = (1..faces.len()).collect();
    loop {
        let next = remaining
            .iter()
            .copied()
            .find(|&f| face_edge_set(&faces[f]).iter().any(|e| covered.contains(e)));
        match next {
            Some(f) => {
                remaining.remove(&f);
                order.push(f);
                covered.extend(face_edge_set(&faces[f]));
            }
            None => break,
        }
    }
    let stuck: Vec<usize> = remaining.into_iter().collect();
    Ok(SequentialReport { ok: stuck.is_empty(), order, stuck_frontier: stuck })
}

/// For each interior vertex adjacent to the boundary: it must have at least
/// two boundary neighbors joined by non-collinear edges.
pub fn check_boundary_compatibility(graph: &ContactGraph, tol_collinear: f64) -> BoundaryCompatReport {
    let mut violations = Vec::new();
    for v in 0..graph.interior_count() {
        let boundary_units: Vec<Vec2> = graph
            .neighbors(v)
            .iter()
            .filter(|&&(_, w)| graph.is_boundary(w))
            .map(|&(l, _)| graph.unit_from(v, l))
            .collect();
        if boundary_units.is_empty() {
            continue;
        }
        let mut ok = false;
        'outer: for (k, qa) in boundary_units.iter().enumerate() {
            for qb in boundary_units.iter().skip(k + 1) {
                if det2(*qa, *qb).abs() > tol_collinear {
                    ok = true;
                    break 'outer;
                }
            }
        }
        if !ok {
            violations.push(v);
        }
    }
    BoundaryCompatReport { ok: violations.is_empty(), violations }
}

/// Runs the inductive construction: start from all boundary vertices and
/// repeatedly absorb an interior vertex that has at least two non-collinear
/// edges into the covered set, recording exactly two such edges.
pub fn build_gamma_max(graph: &ContactGraph, tol_collinear: f64) -> GammaMaxCertificate {
    let n = graph.n_vertices();
    let mut in_cover = vec![false; n];
    for v in graph.interior_count()..n {
        in_cover[v] = true;
    }
    let mut additions = Vec::new();
    loop {
        let mut progressed = false;
        for v in 0..graph.interior_count() {
            if in_cover[v] {
                continue;
            }
            let candidates: Vec<usize> = graph
                .neighbors(v)
                .iter()
                .filter(|&&(_, w)| in_cover[w])
                .map(|&(l, _)| l)
                .collect();
            let mut chosen = None;
            'pairs: for (k, &la) in candidates.iter().enumerate() {
                for &lb in candidates.iter().skip(k + 1) {
                    let qa = graph.unit_from(v, la);
                    let qb = graph.unit_from(v, lb);
                    if det2(qa, qb).abs() > tol_collinear {
                        chosen = Some([la, lb]);
                        break 'pairs;
                    }
                }
            }
            if let Some(pair) = chosen {
                in_cover[v] = true;
                additions.push((v, pair));
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let uncovered: Vec<usize> = (0..graph.interior_count()).filter(|&v| !in_cover[v]).collect();
    GammaMaxCertificate { covered: uncovered.is_empty(), additions, uncovered }
}

/// Union-of-two-adjacent-triangles quadrilaterals, each as 4 distinct
/// vertices.
fn adjacent_triangle_quads(triangles: &[[usize; 3]]) -> Vec<[usize; 4]> {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (f, t) in triangles.iter().enumerate() {
        for e in face_edge_set(t) {
            by_edge.entry(e).or_default().push(f);
        }
    }
    let mut quads = Vec::new();
    let mut keys: Vec<(usize, usize)> = by_edge.keys().copied().collect();
    keys.sort_unstable();
    for e in keys {
        let fs = &by_edge[&e];
        if fs.len() != 2 {
            continue;
        }
        let mut verts: BTreeSet<usize> = triangles[fs[0]].into_iter().collect();
        verts.extend(triangles[fs[1]]);
        if verts.len() == 4 {
            let v: Vec<usize> = verts.into_iter().collect();
            quads.push([v[0], v[1], v[2], v[3]]);
        }
    }
    quads
}

/// Enumerate connected subsets (size >= 2) of the interior-induced graph.
/// Exhaustive mode visits subsets in ascending bitmask order; sampled mode
/// grows connected subsets up to `max_size`, each visited once, ordered by
/// size then lexicographically.
struct SubsetEnumerator {
    subsets: Vec<Vec<usize>>,
}

impl SubsetEnumerator {
    fn exhaustive(adj: &[Vec<usize>], ni: usize) -> Self {
        let mut subsets = Vec::new();
        for mask in 1u64..(1u64 << ni) {
            if mask.count_ones() < 2 {
                continue;
            }
            let members: Vec<usize> = (0..ni).filter(|&v| mask & (1 << v) != 0).collect();
            if Self::connected(adj, &members) {
                subsets.push(members);
            }
        }
        Self { subsets }
    }

    fn sampled(adj: &[Vec<usize>], ni: usize, max_size: usize) -> Self {
        // enumerate each connected subset once: grow only with vertices larger
        // than the anchor, never revisiting excluded extensions
        let mut subsets = Vec::new();
        for anchor in 0..ni {
            let mut current = vec![anchor];
            let ext: Vec<usize> =
                adj[anchor].iter().copied().filter(|&w| w > anchor).collect();
            Self::extend(adj, anchor, &mut current, &ext, max_size, &mut subsets);
        }
        subsets.sort_by(|a, b| (a.len(), a.clone()).cmp(&(b.len(), b.clone())));
        Self { subsets }
    }

    fn extend(
        adj: &[Vec<usize>],
        anchor: usize,
        current: &mut Vec<usize>,
        extension: &[usize],
        max_size: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() >= 2 {
            let mut s = current.clone();
            s.sort_unstable();
            out.push(s);
        }
        if current.len() == max_size {
            return;
        }
        let mut ext = extension.to_vec();
        while let Some(w) = ext.pop() {
            current.push(w);
            let mut next_ext = ext.clone();
            for &x in &adj[w] {
                if x > anchor && !current.contains(&x) && !next_ext.contains(&x) {
                    next_ext.push(x);
                }
            }
            Self::extend(adj, anchor, current, &next_ext, max_size, out);
            current.pop();
        }
    }

    fn connected(adj: &[Vec<usize>], members: &[usize]) -> bool {
        let inside: HashSet<usize> = members.iter().copied().collect();
        let mut seen = HashSet::new();
        let mut stack = vec![members[0]];
        seen.insert(members[0]);
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if inside.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == members.len()
    }
}

/// Checks cell-connectedness: every connected interior subset (with at least
/// two vertices) must attach to the rest of the graph through a braced
/// quadrilateral, i.e. a union of two adjacent triangles with exactly two of
/// its four vertices inside the subset.
pub fn check_cell_connected(
    graph: &ContactGraph,
    mode: CellConnectedMode,
) -> Result<CellConnectedReport, NetValidateError> {
    let tri = check_triangulation(graph)?;
    if !tri.is_triangulation {
        return Err(NetValidateError::Precondition(
            "cell-connectedness requires a triangulation".into(),
        ));
    }
    let ni = graph.interior_count();
    let quads = adjacent_triangle_quads(&tri.triangles);

    // interior-induced adjacency
    let adj: Vec<Vec<usize>> = (0..ni)
        .map(|v| {
            graph
                .neighbors(v)
                .iter()
                .map(|&(_, w)| w)
                .filter(|&w| w < ni)
                .collect()
        })
        .collect();

    let (coverage, enumerator) = match mode {
        CellConnectedMode::Auto => {
            if ni <= EXHAUSTIVE_INTERIOR_CAP {
                (CellCheckCoverage::Exhaustive, SubsetEnumerator::exhaustive(&adj, ni))
            } else {
                let m = DEFAULT_SAMPLED_SUBSET_SIZE;
                (
                    CellCheckCoverage::Sampled { max_subset_size: m },
                    SubsetEnumerator::sampled(&adj, ni, m),
                )
            }
        }
        CellConnectedMode::Exhaustive => {
            if ni > EXHAUSTIVE_INTERIOR_CAP {
                return Err(NetValidateError::Explosion {
                    interior: ni,
                    cap: EXHAUSTIVE_INTERIOR_CAP,
                });
            }
            (CellCheckCoverage::Exhaustive, SubsetEnumerator::exhaustive(&adj, ni))
        }
        CellConnectedMode::Sampled { max_subset_size } => (
            CellCheckCoverage::Sampled { max_subset_size },
            SubsetEnumerator::sampled(&adj, ni, max_subset_size),
        ),
    };

    let mut witness = None;
    let mut strict_witness = None;
    for members in &enumerator.subsets {
        let inside: HashSet<usize> = members.iter().copied().collect();
        let mut relaxed_ok = false;
        let mut strict_ok = false;
        for q in &quads {
            let in_count = q.iter().filter(|v| inside.contains(v)).count();
            if in_count != 2 {
                continue;
            }
            relaxed_ok = true;
            let outside_interior =
                q.iter().filter(|&&v| !inside.contains(&v) && v < ni).count();
            if outside_interior == 2 {
                strict_ok = true;
                break;
            }
        }
        if !strict_ok && strict_witness.is_none() {
            strict_witness = Some(members.clone());
        }
        if !relaxed_ok {
            witness = Some(members.clone());
            break;
        }
    }
    Ok(CellConnectedReport {
        connected: witness.is_none(),
        witness,
        strict_connected: strict_witness.is_none(),
        strict_witness,
        coverage,
    })
}

/// Aggregates the four regularity checks.
pub fn check_regular_triangulation(
    graph: &ContactGraph,
    tol_collinear: f64,
    cell_mode: CellConnectedMode,
) -> Result<RegularityReport, NetValidateError> {
    let triangulation = check_triangulation(graph)?;
    let boundary = check_boundary_compatibility(graph, tol_collinear);
    let (sequential, cell) = if triangulation.is_triangulation {
        (
            Some(check_sequential_construction(graph)?),
            Some(check_cell_connected(graph, cell_mode)?),
        )
    } else {
        (None, None)
    };
    let overall = triangulation.is_triangulation
        && sequential.as_ref().is_some_and(|s| s.ok)
        && boundary.ok
        && cell.as_ref().is_some_and(|c| c.connected);
    Ok(RegularityReport { triangulation, sequential, boundary, cell, overall })
}
