//! Disk packings, contact detection, and boundary conditions.
//!
//! A [`Packing`] is a list of disks plus boundary-group labels. Contacts are
//! detected pairwise and assembled into an oriented [`ContactGraph`] whose
//! vertices are reindexed interior-first so that downstream matrix
//! partitioning is a plain column split. Boundary displacements are
//! prescribed per group as infinitesimal rigid motions and assembled into
//! the boundary vector `g`.
//!
//! Packings are immutable after construction; all deformation lives in
//! displacement vectors.

use crate::geometry::{rotate_cw, Vec2};
use nalgebra::DVector;
use thiserror::Error;

/// Default contact tolerance as a fraction of the mean radius.
pub const DEFAULT_TOL_CONTACT_REL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PackingError {
    #[error("disk {id} has non-positive radius {radius}")]
    Radius { id: usize, radius: f64 },
    #[error("disk ids are not unique and contiguous 0..N-1")]
    Ids,
    #[error("boundary group {group} contains invalid disk id {id}")]
    GroupIndex { group: usize, id: usize },
    #[error("disk {id} appears in more than one boundary group")]
    GroupsOverlap { id: usize },
    #[error("disks {i} and {j} overlap: distance {dist} < {min}")]
    Overlap { i: usize, j: usize, dist: f64, min: f64 },
    #[error("disks {i} and {j} have coincident centers")]
    Degenerate { i: usize, j: usize },
    #[error("boundary vertex {id} is covered by {count} groups (expected exactly 1)")]
    GroupCoverage { id: usize, count: usize },
    #[error("invalid generator size: {0}")]
    Size(String),
    #[error("expected {expected} motions for {groups} groups")]
    MotionCount { expected: usize, groups: usize },
}

/// A single disk: index, center and radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Disk {
    pub id: usize,
    pub center: Vec2,
    pub radius: f64,
}

/// A disk packing with boundary-group labels.
///
/// Boundary-group membership is input data, not inferred: the boundary
/// vertices are exactly the union of the groups, and each group is expected
/// to move as a single rigid body.
#[derive(Debug, Clone)]
pub struct Packing {
    disks: Vec<Disk>,
    boundary_groups: Vec<Vec<usize>>,
}

impl Packing {
    /// Validates ids, radii and group structure. Disks are stored sorted by id.
    pub fn new(mut disks: Vec<Disk>, boundary_groups: Vec<Vec<usize>>) -> Result<Self, PackingError> {
        let n = disks.len();
        disks.sort_by_key(|d| d.id);
        for (k, d) in disks.iter().enumerate() {
            if d.id != k {
                return Err(PackingError::Ids);
            }
            if !(d.radius > 0.0) {
                return Err(PackingError::Radius { id: d.id, radius: d.radius });
            }
        }
        let mut seen = vec![false; n];
        for (gi, group) in boundary_groups.iter().enumerate() {
            for &id in group {
                if id >= n {
                    return Err(PackingError::GroupIndex { group: gi, id });
                }
                if seen[id] {
                    return Err(PackingError::GroupsOverlap { id });
                }
                seen[id] = true;
            }
        }
        Ok(Packing { disks, boundary_groups })
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn boundary_groups(&self) -> &[Vec<usize>] {
        &self.boundary_groups
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    /// Mean radius, used to scale the default contact tolerance.
    pub fn mean_radius(&self) -> f64 {
        if self.disks.is_empty() {
            return 0.0;
        }
        self.disks.iter().map(|d| d.radius).sum::<f64>() / self.disks.len() as f64
    }

    /// Default contact tolerance for this packing.
    pub fn default_tol_contact(&self) -> f64 {
        DEFAULT_TOL_CONTACT_REL * self.mean_radius()
    }

    /// Checks that every disk in a boundary group touches at least one other
    /// disk of the same group. Returns the ids that violate this.
    pub fn group_contact_violations(&self, tol_contact: f64) -> Vec<usize> {
        let mut bad = Vec::new();
        for group in &self.boundary_groups {
            for &i in group {
                let di = &self.disks[i];
                let touches = group.iter().any(|&j| {
                    if j == i {
                        return false;
                    }
                    let dj = &self.disks[j];
                    ((di.center - dj.center).norm() - (di.radius + dj.radius)).abs() <= tol_contact
                });
                if !touches {
                    bad.push(i);
                }
            }
        }
        bad
    }
}

/// An infinitesimal rigid displacement field `u(x) = c + alpha K (x - x_star)`
/// with `K` the clockwise rotation by pi/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub c: Vec2,
    pub alpha: f64,
    pub x_star: Vec2,
}

impl RigidMotion {
    pub fn new(c: Vec2, alpha: f64, x_star: Vec2) -> Self {
        RigidMotion { c, alpha, x_star }
    }

    pub fn zero() -> Self {
        RigidMotion { c: Vec2::zeros(), alpha: 0.0, x_star: Vec2::zeros() }
    }

    /// Evaluates the displacement field at `x`.
    pub fn displacement_at(&self, x: Vec2) -> Vec2 {
        self.c + self.alpha * rotate_cw(x - self.x_star)
    }
}

/// Evaluates a rigid displacement field at a point.
pub fn rigid_displacement(motion: &RigidMotion, x: Vec2) -> Vec2 {
    motion.displacement_at(x)
}

/// The oriented contact network.
///
/// Vertices are reindexed interior-first: indices `0..interior_count` are
/// interior, the rest boundary, so the last `2 N_b` components of any
/// configuration vector correspond to boundary vertices. Each contact is
/// stored once as `(i, j)` with `i < j` in the new indexing, together with
/// the unit vector pointing from `i` to `j`.
#[derive(Debug, Clone)]
pub struct ContactGraph {
    positions: Vec<Vec2>,
    edges: Vec<(usize, usize)>,
    units: Vec<Vec2>,
    interior_count: usize,
    /// new index -> original disk id
    original_ids: Vec<usize>,
    /// original disk id -> new index
    new_ids: Vec<usize>,
    /// per-vertex list of (edge index, neighbor)
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl ContactGraph {
    /// Builds a graph directly from positions and edges.
    ///
    /// `positions` must already be ordered interior-first with
    /// `interior_count` interior vertices. Intended for fixtures and tests
    /// that are not backed by a disk packing.
    pub fn from_parts(
        positions: Vec<Vec2>,
        mut edges: Vec<(usize, usize)>,
        interior_count: usize,
    ) -> Result<Self, PackingError> {
        let n = positions.len();
        assert!(interior_count <= n, "interior_count exceeds vertex count");
        for e in edges.iter_mut() {
            assert!(e.0 != e.1, "self-loop edge");
            assert!(e.0 < n && e.1 < n, "edge endpoint out of range");
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut units = Vec::with_capacity(edges.len());
        for &(i, j) in &edges {
            let d = positions[j] - positions[i];
            let norm = d.norm();
            if norm == 0.0 {
                return Err(PackingError::Degenerate { i, j });
            }
            units.push(d / norm);
        }
        let adjacency = build_adjacency(n, &edges);
        Ok(ContactGraph {
            positions,
            units,
            edges,
            interior_count,
            original_ids: (0..n).collect(),
            new_ids: (0..n).collect(),
            adjacency,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn boundary_count(&self) -> usize {
        self.positions.len() - self.interior_count
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        v >= self.interior_count
    }

    pub fn position(&self, v: usize) -> Vec2 {
        self.positions[v]
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, l: usize) -> (usize, usize) {
        self.edges[l]
    }

    /// Unit vector of edge `l`, oriented from the smaller to the larger index.
    pub fn unit(&self, l: usize) -> Vec2 {
        self.units[l]
    }

    /// Unit vector of edge `l` oriented away from vertex `v`.
    pub fn unit_from(&self, v: usize, l: usize) -> Vec2 {
        let (i, j) = self.edges[l];
        debug_assert!(v == i || v == j);
        if v == i {
            self.units[l]
        } else {
            -self.units[l]
        }
    }

    /// Incident edges of `v` as (edge index, neighbor) pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn original_id(&self, v: usize) -> usize {
        self.original_ids[v]
    }

    pub fn new_index(&self, original_id: usize) -> usize {
        self.new_ids[original_id]
    }

    /// True if both endpoints of edge `l` are boundary vertices.
    pub fn is_boundary_edge(&self, l: usize) -> bool {
        let (i, j) = self.edges[l];
        self.is_boundary(i) && self.is_boundary(j)
    }

    /// Characteristic length: the maximum pairwise coordinate spread.
    pub fn scale(&self) -> f64 {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm().max(1.0)
    }
}

fn build_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (l, &(i, j)) in edges.iter().enumerate() {
        adj[i].push((l, j));
        adj[j].push((l, i));
    }
    adj
}

/// Detects contacts and builds the oriented contact graph.
///
/// An edge `(i,j)` is present iff `| |x_i - x_j| - (a_i + a_j) | <= tol_contact`.
/// Vertices are reindexed interior-first; the original-id map is retained.
pub fn build_contact_graph(packing: &Packing, tol_contact: f64) -> Result<ContactGraph, PackingError> {
    let n = packing.len();
    let disks = packing.disks();

    let mut is_bdry = vec![false; n];
    for group in packing.boundary_groups() {
        for &id in group {
            is_bdry[id] = true;
        }
    }

    // interior-first reindexing, ascending original id within each block
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&id| (is_bdry[id], id));
    let mut new_ids = vec![0usize; n];
    for (new, &orig) in order.iter().enumerate() {
        new_ids[orig] = new;
    }
    let interior_count = is_bdry.iter().filter(|b| !*b).count();

    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let da = &disks[a];
            let db = &disks[b];
            let dist = (da.center - db.center).norm();
            if dist == 0.0 {
                return Err(PackingError::Degenerate { i: a, j: b });
            }
            let sum = da.radius + db.radius;
            if dist < sum - tol_contact {
                return Err(PackingError::Overlap { i: a, j: b, dist, min: sum - tol_contact });
            }
            if (dist - sum).abs() <= tol_contact {
                let (i, j) = (new_ids[a], new_ids[b]);
                edges.push(if i < j { (i, j) } else { (j, i) });
            }
        }
    }
    edges.sort_unstable();

    let positions: Vec<Vec2> = order.iter().map(|&orig| disks[orig].center).collect();
    let units: Vec<Vec2> = edges
        .iter()
        .map(|&(i, j)| {
            let d = positions[j] - positions[i];
            d / d.norm()
        })
        .collect();
    let adjacency = build_adjacency(n, &edges);

    Ok(ContactGraph {
        positions,
        edges,
        units,
        interior_count,
        original_ids: order,
        new_ids,
        adjacency,
    })
}

/// Prescribed boundary displacements: one rigid motion per group plus the
/// assembled vector `g` of length `2 N_b` in the graph's boundary ordering.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    pub motions: Vec<RigidMotion>,
    pub g: DVector<f64>,
}

impl BoundaryConditions {
    /// Displacement of boundary vertex `v` (graph index).
    pub fn displacement(&self, graph: &ContactGraph, v: usize) -> Vec2 {
        debug_assert!(graph.is_boundary(v));
        let k = v - graph.interior_count();
        Vec2::new(self.g[2 * k], self.g[2 * k + 1])
    }
}

/// Assembles the boundary displacement vector from per-group rigid motions.
///
/// `groups` contains original disk ids and must cover each boundary vertex
/// exactly once.
pub fn assemble_boundary_vector(
    graph: &ContactGraph,
    motions: &[RigidMotion],
    groups: &[Vec<usize>],
) -> Result<BoundaryConditions, PackingError> {
    if motions.len() != groups.len() {
        return Err(PackingError::MotionCount { expected: groups.len(), groups: motions.len() });
    }
    let nb = graph.boundary_count();
    let mut count = vec![0usize; nb];
    let mut g = DVector::zeros(2 * nb);
    for (m, group) in groups.iter().enumerate() {
        for &orig in group {
            let v = graph.new_index(orig);
            if !graph.is_boundary(v) {
                return Err(PackingError::GroupCoverage { id: orig, count: 0 });
            }
            let k = v - graph.interior_count();
            count[k] += 1;
            let u = motions[m].displacement_at(graph.position(v));
            g[2 * k] = u.x;
            g[2 * k + 1] = u.y;
        }
    }
    for (k, &c) in count.iter().enumerate() {
        if c != 1 {
            let v = graph.interior_count() + k;
            return Err(PackingError::GroupCoverage { id: graph.original_id(v), count: c });
        }
    }
    Ok(BoundaryConditions { motions: motions.to_vec(), g })
}

/// One boundary-boundary contact check in an [`A3Report`].
#[derive(Debug, Clone)]
pub struct A3Check {
    pub edge: usize,
    pub displaced_distance: f64,
    pub limit: f64,
    pub ok: bool,
}

/// Result of the gap condition: for every boundary-boundary contact the
/// displaced distance must not exceed `a_i + a_j + min_k a_k`, which keeps
/// particles from escaping through gaps opened between boundary groups.
#[derive(Debug, Clone)]
pub struct A3Report {
    pub checks: Vec<A3Check>,
    pub pass: bool,
}

impl A3Report {
    pub fn violations(&self) -> impl Iterator<Item = &A3Check> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Checks the boundary gap condition for every boundary-boundary contact edge.
pub fn check_a3_gap_condition(
    packing: &Packing,
    graph: &ContactGraph,
    bc: &BoundaryConditions,
) -> A3Report {
    let min_radius = packing
        .disks()
        .iter()
        .map(|d| d.radius)
        .fold(f64::INFINITY, f64::min);
    let mut checks = Vec::new();
    for l in 0..graph.n_edges() {
        if !graph.is_boundary_edge(l) {
            continue;
        }
        let (i, j) = graph.edge(l);
        let ui = bc.displacement(graph, i);
        let uj = bc.displacement(graph, j);
        let displaced = ((graph.position(i) + ui) - (graph.position(j) + uj)).norm();
        let ri = packing.disks()[graph.original_id(i)].radius;
        let rj = packing.disks()[graph.original_id(j)].radius;
        let limit = ri + rj + min_radius;
        let ok = displaced <= limit + 1e-9 * (ri + rj);
        checks.push(A3Check { edge: l, displaced_distance: displaced, limit, ok });
    }
    let pass = checks.iter().all(|c| c.ok);
    A3Report { checks, pass }
}

/// Generates a triangular-lattice packing of equal disks with spacing
/// `2 * radius`. Even rows hold `cols - 1` disks offset by one radius, odd
/// rows hold `cols`; `rows = cols = 3` yields the 7-disk hexagonal cell.
/// Perimeter disks form a single boundary group.
pub fn generate_lattice_packing(rows: usize, cols: usize, radius: f64) -> Result<Packing, PackingError> {
    let disks = lattice_disks(rows, cols, radius)?;
    let boundary = lattice_perimeter(rows, cols);
    Packing::new(disks, vec![boundary])
}

/// Lattice disk positions without group assignment (row-major ids).
pub(crate) fn lattice_disks(rows: usize, cols: usize, radius: f64) -> Result<Vec<Disk>, PackingError> {
    if rows < 3 || cols < 3 {
        return Err(PackingError::Size(format!("rows and cols must be >= 3, got {rows}x{cols}")));
    }
    if !(radius > 0.0) {
        return Err(PackingError::Size(format!("radius must be positive, got {radius}")));
    }
    let mut disks = Vec::new();
    let mut id = 0;
    for r in 0..rows {
        let (count, offset) = row_shape(r, cols, radius);
        let y = 3f64.sqrt() * radius * r as f64;
        for k in 0..count {
            disks.push(Disk {
                id,
                center: Vec2::new(offset + 2.0 * radius * k as f64, y),
                radius,
            });
            id += 1;
        }
    }
    Ok(disks)
}

fn row_shape(r: usize, cols: usize, radius: f64) -> (usize, f64) {
    if r % 2 == 0 {
        (cols - 1, radius)
    } else {
        (cols, 0.0)
    }
}

/// Row-major ids of the lattice perimeter: first and last rows plus the ends
/// of every row.
pub(crate) fn lattice_perimeter(rows: usize, cols: usize) -> Vec<usize> {
    let mut ids = Vec::new();
    let mut id = 0;
    for r in 0..rows {
        let count = if r % 2 == 0 { cols - 1 } else { cols };
        for k in 0..count {
            if r == 0 || r == rows - 1 || k == 0 || k == count - 1 {
                ids.push(id);
            }
            id += 1;
        }
    }
    ids
}

/// Ids of row `r` of a lattice generated by [`generate_lattice_packing`].
pub fn lattice_row_ids(rows: usize, cols: usize, r: usize) -> Vec<usize> {
    assert!(r < rows);
    let mut id = 0;
    for rr in 0..r {
        id += if rr % 2 == 0 { cols - 1 } else { cols };
    }
    let count = if r % 2 == 0 { cols - 1 } else { cols };
    (id..id + count).collect()
}

/// Ready-made packings and graphs used by tests, the CLI and the examples.
pub mod fixtures {
    use super::*;

    /// The 7-disk hexagonal cell: a unit-radius disk surrounded by six
    /// touching disks; the ring is a single boundary group.
    pub fn hex_cell(radius: f64) -> Packing {
        generate_lattice_packing(3, 3, radius).expect("3x3 lattice is valid")
    }

    /// Hexagonal cell split into a two-disk "top" group (the ring disks
    /// above the center) and a four-disk "rest" group.
    ///
    /// Row-major lattice ids: 0,1 bottom row; 2,3,4 middle; 5,6 top.
    pub fn hex_cell_two_groups(radius: f64) -> Packing {
        let disks = lattice_disks(3, 3, radius).expect("3x3 lattice is valid");
        let top = vec![5, 6];
        let rest = vec![0, 1, 2, 4];
        Packing::new(disks, vec![top, rest]).expect("valid groups")
    }

    /// Triangular lattice with only the first and last rows marked as
    /// boundary walls (two groups); the side columns stay free. The two
    /// walls share no contacts, so wall motions never strain a
    /// boundary-boundary edge.
    pub fn two_wall_lattice(rows: usize, cols: usize, radius: f64) -> Packing {
        let disks = lattice_disks(rows, cols, radius).expect("valid lattice");
        let bottom = lattice_row_ids(rows, cols, 0);
        let top = lattice_row_ids(rows, cols, rows - 1);
        Packing::new(disks, vec![bottom, top]).expect("valid groups")
    }

    /// Five-disk strip: two boundary pairs bridged by one interior disk.
    ///
    /// ids: 0=(0,0), 1=(2,0) interior, 2=(4,0), 3=(1,sqrt3), 4=(3,sqrt3);
    /// groups: left {0,3}, right {2,4}. E = 7 with three boundary-boundary
    /// contacts.
    pub fn strip5() -> Packing {
        let s3 = 3f64.sqrt();
        let disks = vec![
            Disk { id: 0, center: Vec2::new(0.0, 0.0), radius: 1.0 },
            Disk { id: 1, center: Vec2::new(2.0, 0.0), radius: 1.0 },
            Disk { id: 2, center: Vec2::new(4.0, 0.0), radius: 1.0 },
            Disk { id: 3, center: Vec2::new(1.0, s3), radius: 1.0 },
            Disk { id: 4, center: Vec2::new(3.0, s3), radius: 1.0 },
        ];
        Packing::new(disks, vec![vec![0, 3], vec![2, 4]]).expect("valid strip")
    }

    /// Seven-disk strip with two interior disks between a three-disk bottom
    /// wall and a two-disk top wall. E = 11 with three boundary-boundary
    /// contacts.
    pub fn double_strip7() -> Packing {
        let s3 = 3f64.sqrt();
        let disks = vec![
            Disk { id: 0, center: Vec2::new(0.0, 0.0), radius: 1.0 },
            Disk { id: 1, center: Vec2::new(2.0, 0.0), radius: 1.0 },
            Disk { id: 2, center: Vec2::new(4.0, 0.0), radius: 1.0 },
            Disk { id: 3, center: Vec2::new(1.0, s3), radius: 1.0 },
            Disk { id: 4, center: Vec2::new(3.0, s3), radius: 1.0 },
            Disk { id: 5, center: Vec2::new(0.0, 2.0 * s3), radius: 1.0 },
            Disk { id: 6, center: Vec2::new(2.0, 2.0 * s3), radius: 1.0 },
        ];
        Packing::new(disks, vec![vec![0, 1, 2], vec![5, 6]]).expect("valid strip")
    }

    /// A triangulation that fails the strict reading of cell-connectedness:
    /// an inner triangle around a hub vertex, each inner vertex collinear
    /// with the hub and one outer corner, outer triangle as boundary.
    ///
    /// Vertices 0,1,2 = inner triangle, 3 = hub (all interior);
    /// 4,5,6 = outer corners (boundary). Not a disk packing; used for
    /// graph-level validation tests.
    pub fn cevian_triangle_graph() -> ContactGraph {
        let dirs = [90f64, 210.0, 330.0].map(|d| {
            let r = d.to_radians();
            Vec2::new(r.cos(), r.sin())
        });
        let mut positions = Vec::new();
        for d in dirs {
            positions.push(d); // inner triangle at radius 1
        }
        positions.push(Vec2::zeros()); // hub
        for d in dirs {
            positions.push(3.0 * d); // outer corners at radius 3
        }
        let edges = vec![
            (0, 1),
            (1, 2),
            (0, 2),
            (0, 3),
            (1, 3),
            (2, 3),
            (0, 4),
            (1, 5),
            (2, 6),
            (4, 5),
            (5, 6),
            (4, 6),
            // annulus diagonals, one per quad, chosen not to stack two
            // extra outer edges on any single inner vertex
            (1, 4),
            (2, 5),
            (0, 6),
        ];
        ContactGraph::from_parts(positions, edges, 4).expect("valid fixture")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_disk_packing(gap: f64) -> Packing {
        Packing::new(
            vec![
                Disk { id: 0, center: Vec2::new(0.0, 0.0), radius: 1.0 },
                Disk { id: 1, center: Vec2::new(2.0 + gap, 0.0), radius: 1.0 },
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn two_touching_disks_make_one_edge() {
        let g = build_contact_graph(&two_disk_packing(0.0), 1e-9).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.edge(0), (0, 1));
        assert_eq!(g.unit(0), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn distant_disks_make_no_edge() {
        let g = build_contact_graph(&two_disk_packing(3.0), 1e-9).unwrap();
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn overlapping_disks_error() {
        let err = build_contact_graph(&two_disk_packing(-0.5), 1e-9).unwrap_err();
        assert!(matches!(err, PackingError::Overlap { .. }));
    }

    #[test]
    fn coincident_centers_error() {
        let p = Packing::new(
            vec![
                Disk { id: 0, center: Vec2::zeros(), radius: 1.0 },
                Disk { id: 1, center: Vec2::zeros(), radius: 1.0 },
            ],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            build_contact_graph(&p, 1e-9).unwrap_err(),
            PackingError::Degenerate { .. }
        ));
    }

    #[test]
    fn hex_cell_has_twelve_edges_six_center_six_ring() {
        // oracle: enumerate pairwise distances of the 7 lattice disks
        let p = fixtures::hex_cell(1.0);
        assert_eq!(p.len(), 7);
        let mut touching = 0;
        for a in 0..7 {
            for b in (a + 1)..7 {
                let d = (p.disks()[a].center - p.disks()[b].center).norm();
                if (d - 2.0).abs() < 1e-12 {
                    touching += 1;
                }
            }
        }
        assert_eq!(touching, 12);

        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        assert_eq!(g.n_edges(), 12);
        assert_eq!(g.interior_count(), 1);
        assert_eq!(g.boundary_count(), 6);
        let center = 0; // single interior vertex is reindexed first
        let center_ring = g.neighbors(center).len();
        assert_eq!(center_ring, 6);
        // ring-ring edges are the remaining six
        assert_eq!(g.edges().iter().filter(|&&(i, _)| i != center).count(), 6);
    }

    #[test]
    fn rigid_displacement_examples() {
        let m = RigidMotion::new(Vec2::new(1.0, 0.0), 0.0, Vec2::zeros());
        assert_eq!(m.displacement_at(Vec2::new(7.0, -3.0)), Vec2::new(1.0, 0.0));

        let m = RigidMotion::new(Vec2::zeros(), 1.0, Vec2::zeros());
        assert_eq!(m.displacement_at(Vec2::new(1.0, 0.0)), Vec2::new(0.0, -1.0));

        // hand evaluation: (1,1) + 2*K(0,2) = (1,1) + 2*(2,0) = (5,1)
        let m = RigidMotion::new(Vec2::new(1.0, 1.0), 2.0, Vec2::new(1.0, 0.0));
        assert_eq!(m.displacement_at(Vec2::new(1.0, 2.0)), Vec2::new(5.0, 1.0));
    }

    #[test]
    fn boundary_vector_zero_motion_is_zero() {
        let p = fixtures::hex_cell(1.0);
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        let bc =
            assemble_boundary_vector(&g, &[RigidMotion::zero()], p.boundary_groups()).unwrap();
        assert_eq!(bc.g.len(), 12);
        assert!(bc.g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn boundary_vector_uniform_translation_repeats() {
        let p = fixtures::hex_cell(1.0);
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        let eps = 1e-3;
        let m = RigidMotion::new(Vec2::new(eps, 0.0), 0.0, Vec2::zeros());
        let bc = assemble_boundary_vector(&g, &[m], p.boundary_groups()).unwrap();
        for k in 0..6 {
            assert_eq!(bc.g[2 * k], eps);
            assert_eq!(bc.g[2 * k + 1], 0.0);
        }
    }

    #[test]
    fn boundary_vector_two_groups_mixes_blocks() {
        let p = fixtures::hex_cell_two_groups(1.0);
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        let eps = 1e-3;
        let down = RigidMotion::new(Vec2::new(0.0, -eps), 0.0, Vec2::zeros());
        let bc =
            assemble_boundary_vector(&g, &[down, RigidMotion::zero()], p.boundary_groups())
                .unwrap();
        let mut moved = 0;
        let mut fixed = 0;
        for k in 0..g.boundary_count() {
            let u = Vec2::new(bc.g[2 * k], bc.g[2 * k + 1]);
            if u == Vec2::new(0.0, -eps) {
                moved += 1;
            } else if u == Vec2::zeros() {
                fixed += 1;
            }
        }
        assert_eq!((moved, fixed), (2, 4));
    }

    #[test]
    fn group_coverage_error_on_missing_group() {
        let p = fixtures::hex_cell_two_groups(1.0);
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        // only the first group supplied
        let groups = vec![p.boundary_groups()[0].clone()];
        let err = assemble_boundary_vector(&g, &[RigidMotion::zero()], &groups).unwrap_err();
        assert!(matches!(err, PackingError::GroupCoverage { .. }));
    }

    #[test]
    fn a3_holds_for_zero_motion_and_same_group_rigid_motion() {
        let p = fixtures::hex_cell(1.0);
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        let bc =
            assemble_boundary_vector(&g, &[RigidMotion::zero()], p.boundary_groups()).unwrap();
        let r = check_a3_gap_condition(&p, &g, &bc);
        assert!(r.pass);
        for c in &r.checks {
            assert_relative_eq!(c.displaced_distance, 2.0, epsilon = 1e-12);
        }

        // one group under a rigid motion: displaced distances stay a_i + a_j
        let m = RigidMotion::new(Vec2::new(0.3, -0.1), 0.05, Vec2::new(2.0, 0.0));
        let bc = assemble_boundary_vector(&g, &[m], p.boundary_groups()).unwrap();
        let r = check_a3_gap_condition(&p, &g, &bc);
        for c in &r.checks {
            // rigid motion is an isometry only to first order in alpha
            assert_relative_eq!(c.displaced_distance, 2.0, epsilon = 1e-2);
        }
    }

    #[test]
    fn a3_detects_groups_pulled_apart() {
        // two unit disks pulled apart along the line of centers by 1.5:
        // displaced distance 3.5 > 2 + 1
        let p = Packing::new(
            vec![
                Disk { id: 0, center: Vec2::new(0.0, 0.0), radius: 1.0 },
                Disk { id: 1, center: Vec2::new(2.0, 0.0), radius: 1.0 },
                Disk { id: 2, center: Vec2::new(1.0, 3f64.sqrt()), radius: 1.0 },
                Disk { id: 3, center: Vec2::new(3.0, 3f64.sqrt()), radius: 1.0 },
            ],
            vec![vec![0, 2], vec![1, 3]],
        )
        .unwrap();
        let g = build_contact_graph(&p, 1e-9).unwrap();
        let pull = RigidMotion::new(Vec2::new(1.5, 0.0), 0.0, Vec2::zeros());
        let bc =
            assemble_boundary_vector(&g, &[RigidMotion::zero(), pull], p.boundary_groups())
                .unwrap();
        let r = check_a3_gap_condition(&p, &g, &bc);
        assert!(!r.pass);
        let worst = r.violations().next().unwrap();
        assert_relative_eq!(worst.displaced_distance, 3.5, epsilon = 1e-12);
        assert_relative_eq!(worst.limit, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lattice_generator_counts_and_errors() {
        let p = generate_lattice_packing(3, 3, 1.0).unwrap();
        assert_eq!(p.len(), 7);
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        assert_eq!((g.interior_count(), g.boundary_count()), (1, 6));

        assert!(matches!(
            generate_lattice_packing(2, 5, 1.0).unwrap_err(),
            PackingError::Size(_)
        ));
        assert!(matches!(
            generate_lattice_packing(4, 4, 0.0).unwrap_err(),
            PackingError::Size(_)
        ));
    }

    #[test]
    fn lattice_nearest_neighbor_distance_is_diameter() {
        let r = 0.75;
        let p = generate_lattice_packing(4, 4, r).unwrap();
        let mut min = f64::INFINITY;
        for a in 0..p.len() {
            for b in (a + 1)..p.len() {
                let d = (p.disks()[a].center - p.disks()[b].center).norm();
                min = min.min(d);
            }
        }
        assert_relative_eq!(min, 2.0 * r, epsilon = 1e-12);
        // and every contact pair is exactly at the diameter
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        for l in 0..g.n_edges() {
            let (i, j) = g.edge(l);
            let d = (g.position(i) - g.position(j)).norm();
            assert_relative_eq!(d, 2.0 * r, epsilon = 1e-12);
        }
    }

    #[test]
    fn group_contact_invariant_holds_for_fixtures() {
        for p in [
            fixtures::hex_cell(1.0),
            fixtures::hex_cell_two_groups(1.0),
            fixtures::strip5(),
            fixtures::double_strip7(),
            fixtures::two_wall_lattice(6, 6, 1.0),
            generate_lattice_packing(5, 7, 0.5).unwrap(),
        ] {
            assert!(p.group_contact_violations(p.default_tol_contact()).is_empty());
        }
        // a singleton group violates it
        let p = Packing::new(
            vec![
                Disk { id: 0, center: Vec2::new(0.0, 0.0), radius: 1.0 },
                Disk { id: 1, center: Vec2::new(2.0, 0.0), radius: 1.0 },
            ],
            vec![vec![0]],
        )
        .unwrap();
        assert_eq!(p.group_contact_violations(1e-9), vec![0]);
    }

    #[test]
    fn orientation_invariant_and_no_duplicate_edges() {
        let p = generate_lattice_packing(5, 5, 1.0).unwrap();
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        let scale = g.scale();
        let mut seen = std::collections::HashSet::new();
        for l in 0..g.n_edges() {
            let (i, j) = g.edge(l);
            assert!(i < j);
            assert!(seen.insert((i, j)));
            let q = g.unit(l);
            assert_relative_eq!(q.norm(), 1.0, epsilon = 1e-12);
            let d = g.position(j) - g.position(i);
            assert_relative_eq!(q.dot(&d), d.norm(), epsilon = 1e-12 * scale);
        }
    }

    #[test]
    fn rigid_motion_annihilates_pair_constraints() {
        let p = generate_lattice_packing(4, 5, 1.0).unwrap();
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        let m = RigidMotion::new(Vec2::new(0.2, -0.7), 0.3, Vec2::new(1.0, 2.0));
        let scale = g.scale();
        for l in 0..g.n_edges() {
            let (i, j) = g.edge(l);
            let rel = m.displacement_at(g.position(j)) - m.displacement_at(g.position(i));
            assert!(rel.dot(&g.unit(l)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn boundary_vector_is_linear_in_motion_parameters() {
        let p = fixtures::hex_cell_two_groups(1.0);
        let g = build_contact_graph(&p, p.default_tol_contact()).unwrap();
        let m1 = [
            RigidMotion::new(Vec2::new(0.1, 0.2), 0.3, Vec2::new(1.0, 0.5)),
            RigidMotion::new(Vec2::new(-0.4, 0.0), -0.1, Vec2::new(1.0, 0.5)),
        ];
        let m2 = [
            RigidMotion::new(Vec2::new(0.05, -0.3), -0.2, Vec2::new(1.0, 0.5)),
            RigidMotion::new(Vec2::new(0.0, 0.15), 0.25, Vec2::new(1.0, 0.5)),
        ];
        let sum: Vec<RigidMotion> = m1
            .iter()
            .zip(&m2)
            .map(|(a, b)| RigidMotion::new(a.c + b.c, a.alpha + b.alpha, a.x_star))
            .collect();
        let g1 = assemble_boundary_vector(&g, &m1, p.boundary_groups()).unwrap().g;
        let g2 = assemble_boundary_vector(&g, &m2, p.boundary_groups()).unwrap().g;
        let gs = assemble_boundary_vector(&g, &sum, p.boundary_groups()).unwrap().g;
        assert_relative_eq!((&g1 + &g2 - &gs).norm(), 0.0, epsilon = 1e-14);
    }
}
