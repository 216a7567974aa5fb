//! First-order rigidity matrix assembly, partitioning, and rank tests.
//!
//! The rigidity matrix has one row per edge with the edge unit vector
//! written at the two vertex places (`+q` at the head, `-q` at the tail).
//! Its null space characterizes first-order flexes; the interior column
//! block `R` of the partitioned system drives the reduced quadratic program.

use crate::geometry::{rotate_cw, Vec2};
use crate::packing::ContactGraph;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative singular-value threshold for numerical rank.
pub const DEFAULT_TOL_RANK: f64 = 1e-10;

/// Column count up to which a dense copy is kept alongside the row-compressed
/// storage. Matrix-vector products always use the rows; the dense copy serves
/// factorizations and export.
pub const DENSE_COLUMN_LIMIT: usize = 4096;

#[derive(Debug, Error)]
pub enum RigidityError {
    #[error("graph ordering contract violated: {0}")]
    Ordering(String),
    #[error("degenerate vertex set: {0}")]
    Degenerate(String),
}

/// A sparse-row matrix whose rows have a handful of nonzero entries.
///
/// Stored row-compressed; a dense copy is cached when the column count is at
/// most [`DENSE_COLUMN_LIMIT`].
#[derive(Debug, Clone)]
pub struct EdgeMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
    dense: Option<DMatrix<f64>>,
}

impl EdgeMatrix {
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let dense = if ncols <= DENSE_COLUMN_LIMIT {
            let mut m = DMatrix::zeros(nrows, ncols);
            for (l, row) in rows.iter().enumerate() {
                for &(c, v) in row {
                    m[(l, c)] = v;
                }
            }
            Some(m)
        } else {
            None
        };
        EdgeMatrix { nrows, ncols, rows, dense }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, l: usize) -> &[(usize, f64)] {
        &self.rows[l]
    }

    pub fn is_zero_row(&self, l: usize) -> bool {
        self.rows[l].is_empty()
    }

    /// `y = M x`
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        for (l, row) in self.rows.iter().enumerate() {
            let mut s = 0.0;
            for &(c, v) in row {
                s += v * x[c];
            }
            y[l] = s;
        }
        y
    }

    /// `y = M^T x`
    pub fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = DVector::zeros(self.ncols);
        for (l, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                y[c] += v * x[l];
            }
        }
        y
    }

    /// Dot product of row `l` with `x`.
    pub fn row_dot(&self, l: usize, x: &DVector<f64>) -> f64 {
        self.rows[l].iter().map(|&(c, v)| v * x[c]).sum()
    }

    /// `M^T M` as a dense matrix.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.ncols, self.ncols);
        for row in &self.rows {
            for &(c1, v1) in row {
                for &(c2, v2) in row {
                    g[(c1, c2)] += v1 * v2;
                }
            }
        }
        g
    }

    /// Dense form (cached copy when available, rebuilt otherwise).
    pub fn to_dense(&self) -> DMatrix<f64> {
        if let Some(d) = &self.dense {
            return d.clone();
        }
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (l, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(l, c)] = v;
            }
        }
        m
    }
}

/// The E x 2N first-order rigidity matrix together with its row-to-edge map.
#[derive(Debug, Clone)]
pub struct RigidityMatrix {
    pub matrix: EdgeMatrix,
    pub edges: Vec<(usize, usize)>,
}

/// Assembles the rigidity matrix of a contact graph: row `l` for edge
/// `(i, j)` carries `-q` at the place of `i` and `+q` at the place of `j`.
pub fn assemble_rigidity_matrix(graph: &ContactGraph) -> RigidityMatrix {
    let n = graph.n_vertices();
    let mut rows = Vec::with_capacity(graph.n_edges());
    for l in 0..graph.n_edges() {
        let (i, j) = graph.edge(l);
        let q = graph.unit(l);
        rows.push(vec![
            (2 * i, -q.x),
            (2 * i + 1, -q.y),
            (2 * j, q.x),
            (2 * j + 1, q.y),
        ]);
    }
    RigidityMatrix {
        matrix: EdgeMatrix::from_rows(2 * n, rows),
        edges: graph.edges().to_vec(),
    }
}

/// The interior/boundary split `R^r = [ R | R^b ]` plus `a = R^b g`.
#[derive(Debug, Clone)]
pub struct PartitionedSystem {
    /// Interior block, E x 2(N - N_b).
    pub r: EdgeMatrix,
    /// Boundary block, E x 2 N_b.
    pub r_b: EdgeMatrix,
    /// `a = R^b g`.
    pub a: DVector<f64>,
}

/// Splits the rigidity matrix into interior and boundary column blocks and
/// forms `a = R^b g`. Requires the interior-first ordering the graph
/// maintains by construction.
pub fn partition_system(
    rm: &RigidityMatrix,
    graph: &ContactGraph,
    g: &DVector<f64>,
) -> Result<PartitionedSystem, RigidityError> {
    let n = graph.n_vertices();
    if rm.matrix.ncols() != 2 * n {
        return Err(RigidityError::Ordering(format!(
            "matrix has {} columns, graph requires {}",
            rm.matrix.ncols(),
            2 * n
        )));
    }
    if g.len() != 2 * graph.boundary_count() {
        return Err(RigidityError::Ordering(format!(
            "boundary vector has length {}, expected {}",
            g.len(),
            2 * graph.boundary_count()
        )));
    }
    let ic = 2 * graph.interior_count();
    let mut rows_i = Vec::with_capacity(rm.matrix.nrows());
    let mut rows_b = Vec::with_capacity(rm.matrix.nrows());
    for l in 0..rm.matrix.nrows() {
        let mut ri = Vec::new();
        let mut rb = Vec::new();
        for &(c, v) in rm.matrix.row(l) {
            if c < ic {
                ri.push((c, v));
            } else {
                rb.push((c - ic, v));
            }
        }
        rows_i.push(ri);
        rows_b.push(rb);
    }
    let r = EdgeMatrix::from_rows(ic, rows_i);
    let r_b = EdgeMatrix::from_rows(2 * n - ic, rows_b);
    let a = r_b.mul_vec(g);
    Ok(PartitionedSystem { r, r_b, a })
}

/// Numerical rank: the number of singular values exceeding
/// `tol_rank * sigma_max`.
pub fn rank_of(m: &DMatrix<f64>, tol_rank: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol_rank * max).count()
}

/// The three infinitesimal rigid-displacement fields as 2N-vectors:
/// unit translations along x and y, and the unit rotation about the centroid.
pub fn rigid_motion_basis(graph: &ContactGraph) -> [DVector<f64>; 3] {
    let n = graph.n_vertices();
    let centroid = graph.positions().iter().sum::<Vec2>() / n.max(1) as f64;
    let mut tx = DVector::zeros(2 * n);
    let mut ty = DVector::zeros(2 * n);
    let mut rot = DVector::zeros(2 * n);
    for v in 0..n {
        tx[2 * v] = 1.0;
        ty[2 * v + 1] = 1.0;
        let u = rotate_cw(graph.position(v) - centroid);
        rot[2 * v] = u.x;
        rot[2 * v + 1] = u.y;
    }
    [tx, ty, rot]
}

/// First-order rigidity test: true iff the null space of the rigidity matrix
/// is exactly the 3-dimensional space of rigid displacements.
pub fn is_first_order_rigid(graph: &ContactGraph, tol_rank: f64) -> Result<bool, RigidityError> {
    let n = graph.n_vertices();
    if n < 2 {
        return Err(RigidityError::Degenerate(format!("need at least 2 vertices, got {n}")));
    }
    let p0 = graph.position(0);
    if (1..n).all(|v| graph.position(v) == p0) {
        return Err(RigidityError::Degenerate("all vertices coincide".into()));
    }
    let rm = assemble_rigidity_matrix(graph);
    let rank = rank_of(&rm.matrix.to_dense(), tol_rank);
    Ok(2 * n - rank == 3)
}

/// Stacks interior displacements and boundary data into the full 2N-vector
/// `U = (z; g)`.
pub fn assemble_full_displacement(
    graph: &ContactGraph,
    z: &DVector<f64>,
    g: &DVector<f64>,
) -> DVector<f64> {
    assert_eq!(z.len(), 2 * graph.interior_count(), "interior block size mismatch");
    assert_eq!(g.len(), 2 * graph.boundary_count(), "boundary block size mismatch");
    let mut u = DVector::zeros(z.len() + g.len());
    u.rows_mut(0, z.len()).copy_from(z);
    u.rows_mut(z.len(), g.len()).copy_from(g);
    u
}
