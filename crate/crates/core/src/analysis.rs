//! Contact classification at a minimizer, the per-vertex active-edge audit,
//! v-vectors and genericity margins, k-neighborhoods and the order
//! parameter.

use crate::geometry::{det2, distance_to_line, Vec2};
use crate::packing::ContactGraph;
use nalgebra::DVector;
use std::collections::BTreeSet;
use thiserror::Error;

/// Angular margin below which a weighted v-vector counts as lying on an
/// incident contact line.
pub const DEFAULT_TOL_GENERIC: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("vertex index {0} out of range")]
    Index(usize),
    #[error("k-neighborhood of vertex {vertex} at k={k} induces no edges")]
    EmptyNeighborhood { vertex: usize, k: usize },
}

/// Contact classification.
///
/// A contact is broken when its normal slack is positive, and solid-like
/// otherwise. Solid-like contacts split into stuck (no relative displacement
/// along either axis of the contact) and sheared (zero normal, nonzero
/// tangential relative displacement). An infinitesimal rigid rotation of a
/// pair produces the same pair data as tangential shear, so the two are
/// indistinguishable from pair displacements; sheared covers both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactKind {
    Broken,
    Stuck,
    Sheared,
}

impl ContactKind {
    pub fn is_solid_like(self) -> bool {
        !matches!(self, ContactKind::Broken)
    }

    pub fn label(self) -> &'static str {
        match self {
            ContactKind::Broken => "broken",
            ContactKind::Stuck => "stuck",
            ContactKind::Sheared => "sheared",
        }
    }
}

/// Per-edge classification with the raw slack and tangential components.
#[derive(Debug, Clone, Copy)]
pub struct ContactState {
    pub kind: ContactKind,
    /// Normal relative displacement `(u_j - u_i) . q_ij`.
    pub slack: f64,
    /// Tangential relative displacement `(u_j - u_i) . q_perp`.
    pub tangential: f64,
}

fn vertex_displacement(u: &DVector<f64>, v: usize) -> Vec2 {
    Vec2::new(u[2 * v], u[2 * v + 1])
}

/// Classifies every edge from the full displacement vector `U = (z; g)`.
pub fn classify_contacts(graph: &ContactGraph, u: &DVector<f64>, tol_active: f64) -> Vec<ContactState> {
    assert_eq!(u.len(), 2 * graph.n_vertices(), "displacement vector size mismatch");
    let mut states = Vec::with_capacity(graph.n_edges());
    for l in 0..graph.n_edges() {
        let (i, j) = graph.edge(l);
        let rel = vertex_displacement(u, j) - vertex_displacement(u, i);
        let q = graph.unit(l);
        let slack = rel.dot(&q);
        let tangential = det2(q, rel); // rel . q_perp with q_perp = (-q.y, q.x)
        let kind = if slack > tol_active {
            ContactKind::Broken
        } else if tangential.abs() <= tol_active {
            ContactKind::Stuck
        } else {
            ContactKind::Sheared
        };
        states.push(ContactState { kind, slack, tangential });
    }
    states
}

/// Audit of one interior vertex: its solid-like incident edges and whether
/// some pair of them has linearly independent directions.
#[derive(Debug, Clone)]
pub struct VertexAudit {
    pub vertex: usize,
    pub solid_edges: Vec<usize>,
    pub independent_pair: Option<(usize, usize)>,
    pub pass: bool,
}

/// Per-interior-vertex audit of the two-active-edge property.
#[derive(Debug, Clone)]
pub struct TheoremAudit {
    pub vertices: Vec<VertexAudit>,
    pub all_pass: bool,
}

/// Checks that every interior vertex has at least two solid-like incident
/// edges with linearly independent unit vectors.
pub fn verify_theorem(
    graph: &ContactGraph,
    states: &[ContactState],
    tol_collinear: f64,
) -> TheoremAudit {
    let mut vertices = Vec::with_capacity(graph.interior_count());
    for v in 0..graph.interior_count() {
        let solid: Vec<usize> = graph
            .neighbors(v)
            .iter()
            .map(|&(l, _)| l)
            .filter(|&l| states[l].kind.is_solid_like())
            .collect();
        let mut pair = None;
        'outer: for (k, &la) in solid.iter().enumerate() {
            for &lb in solid.iter().skip(k + 1) {
                if det2(graph.unit_from(v, la), graph.unit_from(v, lb)).abs() > tol_collinear {
                    pair = Some((la, lb));
                    break 'outer;
                }
            }
        }
        vertices.push(VertexAudit { vertex: v, pass: pair.is_some(), solid_edges: solid, independent_pair: pair });
    }
    let all_pass = vertices.iter().all(|a| a.pass);
    TheoremAudit { vertices, all_pass }
}

/// Per-interior-vertex direction sums.
#[derive(Debug, Clone)]
pub struct VVectors {
    /// One 2-vector per interior vertex.
    pub v: Vec<Vec2>,
    /// `min_i |v_i|`.
    pub min_norm: f64,
}

/// Without weights: `v_i = sum_j q_ij` over the neighbors of `i`.
/// With per-edge weights `delta`: the restriction of `R^T delta` to the
/// place of `i`, which carries the rigidity-row signs and equals
/// `-sum_j delta_ij q_ij`.
pub fn compute_v_vectors(graph: &ContactGraph, delta: Option<&[f64]>) -> VVectors {
    if let Some(d) = delta {
        assert_eq!(d.len(), graph.n_edges(), "one weight per edge required");
    }
    let mut v = Vec::with_capacity(graph.interior_count());
    for i in 0..graph.interior_count() {
        let mut s = Vec2::zeros();
        for &(l, _) in graph.neighbors(i) {
            let q = graph.unit_from(i, l);
            match delta {
                Some(d) => s -= d[l] * q,
                None => s += q,
            }
        }
        v.push(s);
    }
    let min_norm = if v.is_empty() {
        0.0
    } else {
        v.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min)
    };
    VVectors { v, min_norm }
}

/// Genericity of a pre-stress choice.
#[derive(Debug, Clone)]
pub struct GenericityReport {
    pub ok: bool,
    /// Smallest Euclidean distance from a weighted v-vector to an incident
    /// contact line.
    pub margin: f64,
    pub worst_vertex: Option<usize>,
}

/// True iff every weighted v-vector keeps an angular distance greater than
/// `tol_generic` from every line spanned by an incident unit vector. The
/// reported margin is the smallest Euclidean distance to such a line.
pub fn check_genericity(graph: &ContactGraph, delta: &[f64], tol_generic: f64) -> GenericityReport {
    let vv = compute_v_vectors(graph, Some(delta));
    let mut ok = true;
    let mut margin = f64::INFINITY;
    let mut worst = None;
    for i in 0..graph.interior_count() {
        let v = vv.v[i];
        let norm = v.norm();
        if norm == 0.0 {
            return GenericityReport { ok: false, margin: 0.0, worst_vertex: Some(i) };
        }
        for &(l, _) in graph.neighbors(i) {
            let q = graph.unit_from(i, l);
            let dist = distance_to_line(v, q);
            if dist < margin {
                margin = dist;
                worst = Some(i);
            }
            if dist / norm <= tol_generic {
                ok = false;
            }
        }
    }
    if !margin.is_finite() {
        margin = 0.0;
    }
    GenericityReport { ok, margin, worst_vertex: worst }
}

/// Breadth-first ball of radius `k` around vertex `i`, inclusive.
pub fn k_neighborhood(
    graph: &ContactGraph,
    i: usize,
    k: usize,
) -> Result<BTreeSet<usize>, AnalysisError> {
    if i >= graph.n_vertices() {
        return Err(AnalysisError::Index(i));
    }
    let mut ball: BTreeSet<usize> = BTreeSet::new();
    ball.insert(i);
    let mut frontier = vec![i];
    for _ in 0..k {
        let mut next = Vec::new();
        for &v in &frontier {
            for &(_, w) in graph.neighbors(v) {
                if ball.insert(w) {
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(ball)
}

/// Order parameter: fraction of solid-like edges among the edges with both
/// endpoints in the k-neighborhood of `i`.
pub fn order_parameter(
    graph: &ContactGraph,
    states: &[ContactState],
    i: usize,
    k: usize,
) -> Result<f64, AnalysisError> {
    let ball = k_neighborhood(graph, i, k)?;
    let mut total = 0usize;
    let mut solid = 0usize;
    for l in 0..graph.n_edges() {
        let (a, b) = graph.edge(l);
        if ball.contains(&a) && ball.contains(&b) {
            total += 1;
            if states[l].kind.is_solid_like() {
                solid += 1;
            }
        }
    }
    if total == 0 {
        return Err(AnalysisError::EmptyNeighborhood { vertex: i, k });
    }
    Ok(solid as f64 / total as f64)
}

/// Comparison of the full-graph order parameter against the two lower
/// bounds: the double-counting bound `(N - N_b)/E` implied by the audit, and
/// the coarser `N/E` variant. Only the first is asserted by the test suite;
/// both are recorded.
#[derive(Debug, Clone)]
pub struct OrderBound {
    pub rho_full: f64,
    pub solid_edges: usize,
    pub derived_bound: f64,
    pub paper_bound: f64,
    pub theorem_pass: bool,
    /// True when the audit passes and the derived bound holds.
    pub satisfied: bool,
}

/// Evaluates `rho(x, N)` on the whole graph and compares against the bounds.
pub fn order_parameter_bound(
    graph: &ContactGraph,
    states: &[ContactState],
    audit: &TheoremAudit,
) -> Result<OrderBound, AnalysisError> {
    let n = graph.n_vertices();
    let e = graph.n_edges();
    let rho_full = order_parameter(graph, states, 0, n)?;
    let solid_edges = states.iter().filter(|s| s.kind.is_solid_like()).count();
    let derived_bound = (n - graph.boundary_count()) as f64 / e as f64;
    let paper_bound = n as f64 / e as f64;
    let holds = solid_edges >= n - graph.boundary_count() && rho_full + 1e-15 >= derived_bound;
    Ok(OrderBound {
        rho_full,
        solid_edges,
        derived_bound,
        paper_bound,
        theorem_pass: audit.all_pass,
        satisfied: !audit.all_pass || holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{build_contact_graph, fixtures, Packing, RigidMotion};
    use crate::rigidity::rigid_motion_basis;
    use approx::assert_relative_eq;

    fn hex_graph() -> ContactGraph {
        let p = fixtures::hex_cell(1.0);
        build_contact_graph(&p, p.default_tol_contact()).unwrap()
    }

    fn field_from_motion(graph: &ContactGraph, m: &RigidMotion) -> DVector<f64> {
        let mut u = DVector::zeros(2 * graph.n_vertices());
        for v in 0..graph.n_vertices() {
            let d = m.displacement_at(graph.position(v));
            u[2 * v] = d.x;
            u[2 * v + 1] = d.y;
        }
        u
    }

    #[test]
    fn rigid_translation_leaves_every_edge_stuck() {
        let g = hex_graph();
        let m = RigidMotion::new(Vec2::new(0.4, -0.2), 0.0, Vec2::zeros());
        let states = classify_contacts(&g, &field_from_motion(&g, &m), 1e-8);
        assert!(states.iter().all(|s| s.kind == ContactKind::Stuck));
    }

    #[test]
    fn rigid_rotation_shears_every_edge() {
        let g = hex_graph();
        let m = RigidMotion::new(Vec2::zeros(), 0.3, Vec2::new(2.0, 1.0));
        let states = classify_contacts(&g, &field_from_motion(&g, &m), 1e-8);
        for s in &states {
            assert_eq!(s.kind, ContactKind::Sheared);
            assert!(s.slack.abs() <= 1e-12);
            assert!(s.tangential.abs() > 1e-3);
        }
    }

    #[test]
    fn separating_pair_is_broken() {
        let p = Packing::new(
            vec![
                crate::packing::Disk { id: 0, center: Vec2::new(0.0, 0.0), radius: 1.0 },
                crate::packing::Disk { id: 1, center: Vec2::new(2.0, 0.0), radius: 1.0 },
            ],
            vec![],
        )
        .unwrap();
        let g = build_contact_graph(&p, 1e-9).unwrap();
        let eps = 1e-3;
        let u = DVector::from_vec(vec![0.0, 0.0, eps, 0.0]);
        let states = classify_contacts(&g, &u, 1e-8);
        assert_eq!(states[0].kind, ContactKind::Broken);
        assert_relative_eq!(states[0].slack, eps);
    }

    #[test]
    fn classification_is_a_partition() {
        let g = hex_graph();
        let u = DVector::from_fn(2 * g.n_vertices(), |k, _| ((k * 97) % 13) as f64 * 1e-3);
        let states = classify_contacts(&g, &u, 1e-8);
        assert_eq!(states.len(), g.n_edges());
        for s in states {
            let kinds = [ContactKind::Broken, ContactKind::Stuck, ContactKind::Sheared];
            assert_eq!(kinds.iter().filter(|&&k| k == s.kind).count(), 1);
        }
    }

    #[test]
    fn slacks_are_invariant_under_added_rigid_fields() {
        let g = hex_graph();
        let u = DVector::from_fn(2 * g.n_vertices(), |k, _| ((k * 31) % 17) as f64 * 1e-3);
        let states = classify_contacts(&g, &u, 1e-8);
        let scale = g.scale();
        for basis in rigid_motion_basis(&g) {
            let shifted = &u + 0.37 * &basis;
            let states2 = classify_contacts(&g, &shifted, 1e-8);
            for (s1, s2) in states.iter().zip(&states2) {
                assert!((s1.slack - s2.slack).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn theorem_audit_checks_independence() {
        let g = hex_graph();
        // all edges stuck: center has six active edges at 60 degrees
        let states = classify_contacts(&g, &DVector::zeros(14), 1e-8);
        let audit = verify_theorem(&g, &states, 1e-9);
        assert!(audit.all_pass);
        assert_eq!(audit.vertices.len(), 1);
        assert_eq!(audit.vertices[0].solid_edges.len(), 6);

        // keep only two collinear edges active: audit fails
        let mut broken = states;
        let center = 0;
        let keep: Vec<usize> = g
            .neighbors(center)
            .iter()
            .map(|&(l, _)| l)
            .filter(|&l| g.unit_from(center, l).y.abs() < 1e-12)
            .collect();
        assert_eq!(keep.len(), 2); // the two horizontal contacts
        for (l, s) in broken.iter_mut().enumerate() {
            if !keep.contains(&l) {
                s.kind = ContactKind::Broken;
            }
        }
        let audit = verify_theorem(&g, &broken, 1e-9);
        assert!(!audit.all_pass);
        assert!(audit.vertices[0].independent_pair.is_none());
    }

    #[test]
    fn unweighted_v_vector_vanishes_on_hex_cell() {
        let g = hex_graph();
        let vv = compute_v_vectors(&g, None);
        assert!(vv.v[0].norm() <= 1e-14);
        assert!(vv.min_norm <= 1e-14);
    }

    #[test]
    fn v_vector_of_right_angle_neighbors() {
        let g = ContactGraph::from_parts(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![(0, 1), (0, 2)],
            1,
        )
        .unwrap();
        let vv = compute_v_vectors(&g, None);
        assert_relative_eq!(vv.v[0].x, 1.0);
        assert_relative_eq!(vv.v[0].y, 1.0);
    }

    #[test]
    fn uniform_delta_is_rejected_on_hex_cell() {
        let g = hex_graph();
        let delta = vec![0.75; g.n_edges()];
        let rep = check_genericity(&g, &delta, DEFAULT_TOL_GENERIC);
        assert!(!rep.ok);
        assert_eq!(rep.margin, 0.0);
    }

    #[test]
    fn margin_is_euclidean_distance_to_nearest_line() {
        let g = ContactGraph::from_parts(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![(0, 1), (0, 2)],
            1,
        )
        .unwrap();
        // delta weights chosen so v = -(0.5 q01 + 1.0 q02) = (-0.5, -1.0)
        let rep = check_genericity(&g, &[0.5, 1.0], DEFAULT_TOL_GENERIC);
        assert!(rep.ok);
        // distance to the x-axis line is 1.0, to the y-axis line 0.5
        assert_relative_eq!(rep.margin, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn k_neighborhood_basics() {
        let g = hex_graph();
        assert_eq!(k_neighborhood(&g, 0, 0).unwrap().len(), 1);
        assert_eq!(k_neighborhood(&g, 0, 1).unwrap().len(), 7);
        assert!(matches!(k_neighborhood(&g, 99, 1), Err(AnalysisError::Index(99))));

        // path graph a-b-c: 1-ball around an end holds two vertices
        let g = ContactGraph::from_parts(
            vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(4.0, 0.0)],
            vec![(0, 1), (1, 2)],
            0,
        )
        .unwrap();
        let ball = k_neighborhood(&g, 0, 1).unwrap();
        assert_eq!(ball.into_iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn order_parameter_ratios() {
        let g = hex_graph();
        let mut states = classify_contacts(&g, &DVector::zeros(14), 1e-8);
        assert_relative_eq!(order_parameter(&g, &states, 0, 7).unwrap(), 1.0);
        for s in states.iter_mut() {
            s.kind = ContactKind::Broken;
        }
        assert_relative_eq!(order_parameter(&g, &states, 0, 7).unwrap(), 0.0);

        // 0-neighborhood induces no edges
        assert!(matches!(
            order_parameter(&g, &states, 0, 0),
            Err(AnalysisError::EmptyNeighborhood { .. })
        ));
    }

    #[test]
    fn order_parameter_two_thirds() {
        // triangle with one broken edge: rho = 2/3
        let g = ContactGraph::from_parts(
            vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 3f64.sqrt())],
            vec![(0, 1), (1, 2), (0, 2)],
            0,
        )
        .unwrap();
        let mut states = classify_contacts(&g, &DVector::zeros(6), 1e-8);
        states[1].kind = ContactKind::Broken;
        assert_relative_eq!(order_parameter(&g, &states, 0, 3).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn full_graph_order_parameter_is_vertex_independent() {
        let g = hex_graph();
        let u = DVector::from_fn(14, |k, _| ((k * 7) % 5) as f64 * 1e-3);
        let states = classify_contacts(&g, &u, 1e-8);
        let n = g.n_vertices();
        let rho0 = order_parameter(&g, &states, 0, n).unwrap();
        for i in 1..n {
            let rho = order_parameter(&g, &states, i, n).unwrap();
            assert_eq!(rho.to_bits(), rho0.to_bits());
        }
    }

    #[test]
    fn bound_record_on_all_stuck_hex() {
        let g = hex_graph();
        let states = classify_contacts(&g, &DVector::zeros(14), 1e-8);
        let audit = verify_theorem(&g, &states, 1e-9);
        let bound = order_parameter_bound(&g, &states, &audit).unwrap();
        assert!(bound.satisfied);
        assert_relative_eq!(bound.rho_full, 1.0);
        assert_relative_eq!(bound.derived_bound, 1.0 / 12.0);
        assert_relative_eq!(bound.paper_bound, 7.0 / 12.0);
        assert!(bound.solid_edges >= 1);
    }
}
