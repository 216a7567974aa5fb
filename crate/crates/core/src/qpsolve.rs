//! The reduced quadratic program and its solvers.
//!
//! The program minimizes `F(z) = 1/2 d^-3 |R z + a + d_vec|^2` subject to
//! `R z + a >= 0`, where `R` is the interior block of the rigidity matrix,
//! `a = R^b g` carries the boundary data and `d_vec = -d * delta` the
//! pre-stress offsets. `R` has full column rank on regular triangulations,
//! so the objective is strictly convex and the minimizer unique.
//!
//! The production path is a primal active-set method certified by the KKT
//! residuals; a brute-force oracle enumerates candidate active sets on small
//! instances. Multipliers follow the stationarity convention
//! `R^T (R z + a + d_vec - lambda) = 0`, i.e. lambda carries the same units
//! as the constraint slacks and does not scale with the objective prefactor.
//!
//! Rows of `R` that are identically zero (contacts between two boundary
//! vertices) cannot be influenced by the interior unknowns. They are
//! excluded from the working-set machinery but kept in every feasibility
//! measure, so boundary data that strains such a contact surfaces as a
//! Phase-1 infeasibility with a positive residual.

use crate::analysis::{self, TheoremAudit};
use crate::packing::{BoundaryConditions, ContactGraph};
use crate::rigidity::{assemble_full_displacement, EdgeMatrix, PartitionedSystem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Relative slack threshold for snapping a constraint to active.
pub const DEFAULT_TOL_ACTIVE_REL: f64 = 1e-8;
/// Relative KKT residual tolerance.
pub const DEFAULT_TOL_KKT: f64 = 1e-8;
/// Relative Phase-1 residual threshold.
pub const DEFAULT_TOL_FEAS_REL: f64 = 1e-8;
/// Rejection budget of the generic pre-stress sampler.
pub const GENERICITY_MAX_ATTEMPTS: usize = 1000;
/// Active-set enumeration cap of the brute-force oracle.
pub const BRUTE_FORCE_EDGE_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("pre-stress weight {value} at edge {edge} outside [1/2, 1]")]
    DeltaRange { edge: usize, value: f64 },
    #[error("cutoff scale d must be positive, got {0}")]
    CutoffScale(f64),
    #[error("no generic pre-stress found after {attempts} attempts (degenerate geometry)")]
    Genericity { attempts: usize },
    #[error("normal equations are singular (R lacks full column rank)")]
    Rank,
    #[error("working-set KKT system is singular")]
    SingularKkt,
    #[error("active-set iteration limit {max_iter} reached (objective {objective})")]
    MaxIter { max_iter: usize, objective: f64 },
    #[error("start point is infeasible (worst slack {worst})")]
    StartInfeasible { worst: f64 },
    #[error("brute force requires at most {cap} constrained edges, instance has {edges}")]
    Cap { edges: usize, cap: usize },
    #[error("no KKT-certified candidate found by enumeration")]
    NoCertificate,
    #[error("d ladder must be positive and strictly increasing")]
    Ladder,
}

/// Pre-stress cutoffs: `d_ij = d * delta_ij` with `delta_ij` in `[1/2, 1]`,
/// entering the objective as the offset vector `d_vec = -d * delta`.
///
/// The per-edge weights are stored positive; the negative interval sometimes
/// used for the offset vector is the same object once the minus sign of
/// `d_vec` is absorbed.
#[derive(Debug, Clone)]
pub struct PreStress {
    pub d: f64,
    pub delta: Vec<f64>,
    pub d_vec: DVector<f64>,
}

impl PreStress {
    pub fn new(d: f64, delta: Vec<f64>) -> Result<Self, QpError> {
        if !(d > 0.0) {
            return Err(QpError::CutoffScale(d));
        }
        for (l, &x) in delta.iter().enumerate() {
            if !(0.5..=1.0).contains(&x) {
                return Err(QpError::DeltaRange { edge: l, value: x });
            }
        }
        let d_vec = DVector::from_iterator(delta.len(), delta.iter().map(|&x| -d * x));
        Ok(PreStress { d, delta, d_vec })
    }

    /// Uniform weights `delta_l = value` (handy for fixtures).
    pub fn uniform(d: f64, value: f64, edges: usize) -> Result<Self, QpError> {
        Self::new(d, vec![value; edges])
    }
}

/// The reduced quadratic program.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub r: EdgeMatrix,
    pub a: DVector<f64>,
    pub d_vec: DVector<f64>,
    /// Objective prefactor (`d^-3` when assembled from a pre-stress).
    pub scale: f64,
    /// Rows of `R` with no interior entries (boundary-boundary contacts).
    pub zero_rows: Vec<usize>,
    /// Complement of `zero_rows`.
    pub constrained_rows: Vec<usize>,
}

impl QpProblem {
    pub fn new(r: EdgeMatrix, a: DVector<f64>, d_vec: DVector<f64>, scale: f64) -> Result<Self, QpError> {
        if r.nrows() != a.len() || r.nrows() != d_vec.len() {
            return Err(QpError::Dimension(format!(
                "R has {} rows, a has {}, d_vec has {}",
                r.nrows(),
                a.len(),
                d_vec.len()
            )));
        }
        if !(scale > 0.0) {
            return Err(QpError::CutoffScale(scale));
        }
        let zero_rows: Vec<usize> = (0..r.nrows()).filter(|&l| r.is_zero_row(l)).collect();
        let constrained_rows: Vec<usize> = (0..r.nrows()).filter(|&l| !r.is_zero_row(l)).collect();
        Ok(QpProblem { r, a, d_vec, scale, zero_rows, constrained_rows })
    }

    pub fn n_vars(&self) -> usize {
        self.r.ncols()
    }

    pub fn n_constraints(&self) -> usize {
        self.r.nrows()
    }

    /// `R z + a`.
    pub fn slacks(&self, z: &DVector<f64>) -> DVector<f64> {
        self.r.mul_vec(z) + &self.a
    }

    /// `F(z) = 1/2 scale |R z + a + d_vec|^2`.
    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        let res = self.r.mul_vec(z) + &self.a + &self.d_vec;
        0.5 * self.scale * res.norm_squared()
    }

    /// Characteristic magnitude of the constraint data, used to make the
    /// relative tolerances absolute.
    pub fn problem_scale(&self) -> f64 {
        (self.d_vec.amax() + self.a.amax()).max(1.0)
    }

    /// Default snapping tolerance `1e-8 * (d + |a|_inf)`.
    pub fn default_tol_active(&self) -> f64 {
        DEFAULT_TOL_ACTIVE_REL * self.problem_scale()
    }

    /// Edges whose slack magnitude is within `tol_active` of zero.
    pub fn active_set(&self, z: &DVector<f64>, tol_active: f64) -> Vec<usize> {
        let s = self.slacks(z);
        (0..self.n_constraints()).filter(|&l| s[l].abs() <= tol_active).collect()
    }
}

/// Builds the reduced problem from a partitioned system and a pre-stress.
pub fn assemble_qp(partition: &PartitionedSystem, prestress: &PreStress) -> Result<QpProblem, QpError> {
    if partition.r.nrows() != prestress.delta.len() {
        return Err(QpError::Dimension(format!(
            "partition has {} rows, pre-stress has {} weights",
            partition.r.nrows(),
            prestress.delta.len()
        )));
    }
    QpProblem::new(
        partition.r.clone(),
        partition.a.clone(),
        prestress.d_vec.clone(),
        prestress.d.powi(-3),
    )
}

/// Samples pre-stress weights uniformly from `(1/2, 1)^E`, rejecting draws
/// whose weighted v-vectors come too close to an incident contact line.
/// Returns the accepted weights together with the achieved margin.
pub fn select_generic_delta(
    graph: &ContactGraph,
    rng_seed: u64,
    tol_generic: f64,
) -> Result<(Vec<f64>, f64), QpError> {
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    for _ in 0..GENERICITY_MAX_ATTEMPTS {
        let delta: Vec<f64> = (0..graph.n_edges()).map(|_| 0.5 + 0.5 * rng.random::<f64>()).collect();
        let rep = analysis::check_genericity(graph, &delta, tol_generic);
        if rep.ok {
            return Ok((delta, rep.margin));
        }
    }
    Err(QpError::Genericity { attempts: GENERICITY_MAX_ATTEMPTS })
}

/// Equality-constrained subproblem solver shared by the active-set method
/// and the brute-force oracle. Factorizes the symmetric block system
/// `[R^T R, A^T; A, 0]` with `A` the working rows of `R`; multipliers are
/// returned in slack units (the objective prefactor cancels).
struct EqpSolver<'a> {
    qp: &'a QpProblem,
    gram: DMatrix<f64>,
    rt_c: DVector<f64>,
}

impl<'a> EqpSolver<'a> {
    fn new(qp: &'a QpProblem) -> Self {
        let c = &qp.a + &qp.d_vec;
        EqpSolver { qp, gram: qp.r.gram(), rt_c: qp.r.tr_mul_vec(&c) }
    }

    /// Minimizes `F` subject to `(R z + a)_l = 0` for `l` in `working`.
    /// Returns `(z, mu)` or `None` when the block system is singular.
    fn solve(&self, working: &[usize]) -> Option<(DVector<f64>, Vec<f64>)> {
        let n = self.qp.n_vars();
        let s = working.len();
        if n == 0 {
            return if s == 0 { Some((DVector::zeros(0), vec![])) } else { None };
        }
        let mut k = DMatrix::zeros(n + s, n + s);
        k.view_mut((0, 0), (n, n)).copy_from(&self.gram);
        for (row, &l) in working.iter().enumerate() {
            for &(c, v) in self.qp.r.row(l) {
                k[(n + row, c)] = v;
                k[(c, n + row)] = v;
            }
        }
        let mut rhs = DVector::zeros(n + s);
        rhs.rows_mut(0, n).copy_from(&(-&self.rt_c));
        for (row, &l) in working.iter().enumerate() {
            rhs[n + row] = -self.qp.a[l];
        }
        let sol = k.clone().lu().solve(&rhs)?;
        // reject solutions of near-singular systems
        let residual = (&k * &sol - &rhs).amax();
        let bound = 1e-7 * rhs.amax().max(sol.amax()).max(1.0);
        if residual > bound {
            return None;
        }
        let z = sol.rows(0, n).into_owned();
        let mu: Vec<f64> = (0..s).map(|r| -sol[n + r]).collect();
        Some((z, mu))
    }
}

/// Solver verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    UnconstrainedFeasible,
    Infeasible,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::UnconstrainedFeasible => "unconstrained-feasible",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// The four KKT residuals.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// `|R^T (R z + a + d_vec - lambda)|_inf`
    pub stationarity: f64,
    /// `max(0, -min_l (R z + a)_l)`
    pub primal_violation: f64,
    /// `max_l |lambda_l (R z + a)_l|`
    pub complementarity: f64,
    /// `max(0, -min_l lambda_l)`
    pub dual_violation: f64,
    pub pass: bool,
}

/// Evaluates the KKT residuals of a primal-dual pair.
pub fn verify_kkt(qp: &QpProblem, z: &DVector<f64>, lambda: &DVector<f64>, tol_kkt: f64) -> KktReport {
    assert_eq!(lambda.len(), qp.n_constraints(), "one multiplier per constraint");
    let slacks = qp.slacks(z);
    let inner = qp.r.mul_vec(z) + &qp.a + &qp.d_vec - lambda;
    let stationarity = qp.r.tr_mul_vec(&inner).amax();
    let min_slack = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    let primal_violation = (-min_slack).max(0.0);
    let complementarity = (0..qp.n_constraints())
        .map(|l| (lambda[l] * slacks[l]).abs())
        .fold(0.0f64, f64::max);
    let min_lambda = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    let dual_violation = (-min_lambda).max(0.0);
    let s = qp.problem_scale();
    let pass = stationarity <= tol_kkt * s
        && primal_violation <= tol_kkt * s
        && dual_violation <= tol_kkt * s
        && complementarity <= tol_kkt * s * s;
    KktReport { stationarity, primal_violation, complementarity, dual_violation, pass }
}

/// Phase-1 outcome: the best point found and the final penalty value
/// `Phi(z) = sum_l max(0, -(R z + a)_l)^2`.
#[derive(Debug, Clone)]
pub struct FeasibilityOutcome {
    pub z: DVector<f64>,
    pub phi: f64,
    pub feasible: bool,
}

fn phi_value(qp: &QpProblem, z: &DVector<f64>) -> f64 {
    qp.slacks(z).iter().map(|&s| s.min(0.0).powi(2)).sum()
}

/// Minimizes the penalty `Phi` by Gauss-Newton steps on the active quadratic
/// piece with a backtracking line search. `Phi` is convex and continuously
/// differentiable, so a stationary point with `Phi > tol_feas^2` certifies
/// infeasibility; zero rows contribute constant terms and are certified the
/// same way.
pub fn find_feasible_point(qp: &QpProblem, tol_feas: f64) -> FeasibilityOutcome {
    let n = qp.n_vars();
    let mut z = DVector::zeros(n);
    let target = tol_feas * tol_feas;
    let max_iter = 500;
    let mut phi = phi_value(qp, &z);
    for _ in 0..max_iter {
        if phi <= target {
            return FeasibilityOutcome { z, phi, feasible: true };
        }
        let slacks = qp.slacks(&z);
        let violated: Vec<usize> = qp
            .constrained_rows
            .iter()
            .copied()
            .filter(|&l| slacks[l] < 0.0)
            .collect();
        if violated.is_empty() {
            // all residual violation sits on zero rows; nothing can move it
            return FeasibilityOutcome { z, phi, feasible: phi <= target };
        }
        // least-squares minimizer of the violated block
        let mut m = DMatrix::zeros(violated.len(), n);
        let mut rhs = DVector::zeros(violated.len());
        for (row, &l) in violated.iter().enumerate() {
            for &(c, v) in qp.r.row(l) {
                m[(row, c)] = v;
            }
            rhs[row] = -qp.a[l];
        }
        let svd = m.svd(true, true);
        let z_target = match svd.solve(&rhs, 1e-12) {
            Ok(zt) => zt,
            Err(_) => return FeasibilityOutcome { z, phi, feasible: false },
        };
        let p = &z_target - &z;
        if p.amax() <= 1e-14 * (1.0 + z.amax()) {
            return FeasibilityOutcome { z, phi, feasible: false };
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let cand = &z + t * &p;
            let phi_cand = phi_value(qp, &cand);
            if phi_cand < phi {
                z = cand;
                phi = phi_cand;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return FeasibilityOutcome { z, phi, feasible: false };
        }
    }
    let feasible = phi <= target;
    FeasibilityOutcome { z, phi, feasible }
}

/// Result of the unconstrained (boundary-conditions-only) check: when the
/// least-squares minimizer of `F` already satisfies the impenetrability
/// constraints, the constrained solve is redundant.
#[derive(Debug, Clone)]
pub struct A1Report {
    pub z_hat: DVector<f64>,
    pub min_slack: f64,
    /// True when the unconstrained minimizer is feasible.
    pub unconstrained_feasible: bool,
}

impl A1Report {
    /// The assumption "the unconstrained minimizer is infeasible" holds.
    pub fn a1_holds(&self) -> bool {
        !self.unconstrained_feasible
    }
}

/// Solves the normal equations `R^T (R z + a + d_vec) = 0` and tests the
/// minimizer against the constraints.
pub fn check_a1_unconstrained(qp: &QpProblem, tol_active: f64) -> Result<A1Report, QpError> {
    let n = qp.n_vars();
    if n == 0 {
        let min_slack = qp.a.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(A1Report {
            z_hat: DVector::zeros(0),
            min_slack,
            unconstrained_feasible: min_slack >= -tol_active,
        });
    }
    let solver = EqpSolver::new(qp);
    let (z_hat, _) = solver.solve(&[]).ok_or(QpError::Rank)?;
    let slacks = qp.slacks(&z_hat);
    let min_slack = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(A1Report { z_hat, min_slack, unconstrained_feasible: min_slack >= -tol_active })
}

/// A certified solution of the reduced problem.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: SolveStatus,
    pub z: DVector<f64>,
    /// One multiplier per constraint, zero off the working set, in slack
    /// units (stationarity convention `R^T(Rz + a + d_vec - lambda) = 0`).
    pub lambda: DVector<f64>,
    /// Edges whose slack is within `tol_active` of zero.
    pub active_set: Vec<usize>,
    pub objective: f64,
    pub kkt: KktReport,
    pub iterations: usize,
    /// Phase-1 residual when a feasibility phase ran (0 otherwise).
    pub phase1_residual: f64,
}

/// Primal active-set iteration.
///
/// The working set starts empty; each outer step solves the
/// equality-constrained subproblem on the working set, takes the longest
/// feasible step toward its minimizer (adding the blocking constraint,
/// smallest index first), and at a subproblem optimum drops the most
/// negative multiplier (smallest index among equals) until all multipliers
/// clear `-tol_kkt`.
pub fn solve_active_set(
    qp: &QpProblem,
    start: &DVector<f64>,
    tol_active: f64,
    tol_kkt: f64,
    max_iter: usize,
) -> Result<QpSolution, QpError> {
    if start.len() != qp.n_vars() {
        return Err(QpError::Dimension(format!(
            "start has {} entries, problem has {} variables",
            start.len(),
            qp.n_vars()
        )));
    }
    let scale = qp.problem_scale();
    let start_slacks = qp.slacks(start);
    let worst = start_slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    if worst < -tol_active {
        return Err(QpError::StartInfeasible { worst });
    }

    let mut z = start.clone();
    if qp.n_vars() == 0 {
        let lambda = DVector::zeros(qp.n_constraints());
        let kkt = verify_kkt(qp, &z, &lambda, tol_kkt);
        return Ok(QpSolution {
            status: SolveStatus::UnconstrainedFeasible,
            active_set: qp.active_set(&z, tol_active),
            objective: qp.objective(&z),
            z,
            lambda,
            kkt,
            iterations: 0,
            phase1_residual: 0.0,
        });
    }

    let solver = EqpSolver::new(qp);
    let mut working: Vec<usize> = Vec::new();
    let mut last_mu: Vec<f64> = Vec::new();
    for iter in 0..max_iter {
        let (z_eqp, mu) = solver.solve(&working).ok_or(QpError::SingularKkt)?;
        last_mu = mu;
        let p = &z_eqp - &z;
        if p.amax() <= 1e-12 * (1.0 + z_eqp.amax()) {
            // subproblem optimum reached: check multipliers
            let mut drop: Option<(usize, f64)> = None;
            for (k, &l) in working.iter().enumerate() {
                let m = last_mu[k];
                if m < -tol_kkt * scale && drop.map_or(true, |(_, best)| m < best) {
                    drop = Some((l, m));
                }
            }
            match drop {
                None => {
                    let mut lambda = DVector::zeros(qp.n_constraints());
                    for (k, &l) in working.iter().enumerate() {
                        lambda[l] = last_mu[k];
                    }
                    let status = if working.is_empty() {
                        SolveStatus::UnconstrainedFeasible
                    } else {
                        SolveStatus::Optimal
                    };
                    let kkt = verify_kkt(qp, &z_eqp, &lambda, tol_kkt);
                    return Ok(QpSolution {
                        status,
                        active_set: qp.active_set(&z_eqp, tol_active),
                        objective: qp.objective(&z_eqp),
                        z: z_eqp,
                        lambda,
                        kkt,
                        iterations: iter + 1,
                        phase1_residual: 0.0,
                    });
                }
                Some((l, _)) => {
                    working.retain(|&w| w != l);
                }
            }
        } else {
            // ratio test against constraints outside the working set
            let slacks = qp.slacks(&z);
            let mut alpha = 1.0f64;
            let mut blocker = None;
            let dir_tol = 1e-14 * p.amax().max(1e-300);
            for &l in &qp.constrained_rows {
                if working.contains(&l) {
                    continue;
                }
                let rp = qp.r.row_dot(l, &p);
                if rp < -dir_tol {
                    // longest step keeping (R z + a)_l >= 0; a slack already
                    // snapped to zero blocks immediately
                    let lim = slacks[l].max(0.0) / -rp;
                    if lim < alpha {
                        alpha = lim;
                        blocker = Some(l);
                    }
                }
            }
            z += alpha * &p;
            if let Some(l) = blocker {
                working.push(l);
                working.sort_unstable();
            }
        }
    }
    let mut lambda = DVector::zeros(qp.n_constraints());
    for (k, &l) in working.iter().enumerate() {
        if k < last_mu.len() {
            lambda[l] = last_mu[k];
        }
    }
    Err(QpError::MaxIter { max_iter, objective: qp.objective(&z) })
}

/// Phase-1 plus active-set solve. Returns an `Infeasible` solution carrying
/// the Phase-1 residual when no feasible point exists.
pub fn solve(qp: &QpProblem, tol_active: f64, tol_kkt: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    let tol_feas = DEFAULT_TOL_FEAS_REL * qp.problem_scale();
    let phase1 = find_feasible_point(qp, tol_feas);
    if !phase1.feasible {
        let lambda = DVector::zeros(qp.n_constraints());
        let kkt = verify_kkt(qp, &phase1.z, &lambda, tol_kkt);
        return Ok(QpSolution {
            status: SolveStatus::Infeasible,
            objective: qp.objective(&phase1.z),
            active_set: Vec::new(),
            z: phase1.z,
            lambda,
            kkt,
            iterations: 0,
            phase1_residual: phase1.phi.sqrt(),
        });
    }
    let mut sol = solve_active_set(qp, &phase1.z, tol_active, tol_kkt, max_iter)?;
    sol.phase1_residual = phase1.phi.sqrt();
    Ok(sol)
}

/// Brute-force oracle: enumerates all subsets of the constrained rows as
/// candidate active sets, solves each equality-constrained problem, and
/// keeps the feasible KKT-certified candidate. Strict convexity guarantees
/// at most one certified minimizer; finding two distinct ones is an error.
pub fn brute_force_solve(qp: &QpProblem, tol_active: f64, tol_kkt: f64) -> Result<QpSolution, QpError> {
    let rows = &qp.constrained_rows;
    let m = rows.len();
    if m > BRUTE_FORCE_EDGE_CAP {
        return Err(QpError::Cap { edges: m, cap: BRUTE_FORCE_EDGE_CAP });
    }
    let scale = qp.problem_scale();
    let solver = EqpSolver::new(qp);
    let mut best: Option<(Vec<usize>, DVector<f64>, Vec<f64>)> = None;
    let mut any_feasible = false;
    for mask in 0u64..(1u64 << m) {
        let working: Vec<usize> =
            (0..m).filter(|&k| mask & (1 << k) != 0).map(|k| rows[k]).collect();
        let Some((z, mu)) = solver.solve(&working) else { continue };
        let slacks = qp.slacks(&z);
        let min_slack = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_slack < -tol_active {
            continue;
        }
        any_feasible = true;
        if mu.iter().any(|&v| v < -tol_kkt * scale) {
            continue;
        }
        match &best {
            None => best = Some((working, z, mu)),
            Some((_, z0, _)) => {
                if (&z - z0).amax() > 1e-8 * scale {
                    return Err(QpError::NoCertificate);
                }
            }
        }
    }
    match best {
        Some((working, z, mu)) => {
            let mut lambda = DVector::zeros(qp.n_constraints());
            for (k, &l) in working.iter().enumerate() {
                lambda[l] = mu[k];
            }
            let status = if working.is_empty() {
                SolveStatus::UnconstrainedFeasible
            } else {
                SolveStatus::Optimal
            };
            let kkt = verify_kkt(qp, &z, &lambda, tol_kkt);
            Ok(QpSolution {
                status,
                active_set: qp.active_set(&z, tol_active),
                objective: qp.objective(&z),
                z,
                lambda,
                kkt,
                iterations: 1 << m,
                phase1_residual: 0.0,
            })
        }
        None if !any_feasible => {
            let z = DVector::zeros(qp.n_vars());
            let lambda = DVector::zeros(qp.n_constraints());
            let kkt = verify_kkt(qp, &z, &lambda, tol_kkt);
            Ok(QpSolution {
                status: SolveStatus::Infeasible,
                objective: qp.objective(&z),
                active_set: Vec::new(),
                z,
                lambda,
                kkt,
                iterations: 1 << m,
                phase1_residual: phi_value(qp, &DVector::zeros(qp.n_vars())).sqrt(),
            })
        }
        None => Err(QpError::NoCertificate),
    }
}

/// One row of a d-scan.
#[derive(Debug, Clone)]
pub struct DScanRow {
    pub d: f64,
    pub status: SolveStatus,
    pub active_count: usize,
    pub theorem_pass: bool,
}

/// Empirical search for the cutoff scale beyond which the per-vertex
/// two-active-edge property stabilizes.
#[derive(Debug, Clone)]
pub struct DStarScan {
    pub rows: Vec<DScanRow>,
    /// Smallest sampled d from which the audit passes for every larger d.
    pub stabilized_from: Option<f64>,
}

/// Solves the reduced problem at every `d` in the ladder (same `delta`),
/// audits the minimizer, and reports the observed stabilization point. No
/// claim is made beyond the sampled ladder.
pub fn scan_for_dstar(
    graph: &ContactGraph,
    partition: &PartitionedSystem,
    bc: &BoundaryConditions,
    delta: &[f64],
    d_values: &[f64],
    tol_kkt: f64,
    tol_collinear: f64,
    max_iter: usize,
) -> Result<DStarScan, QpError> {
    if d_values.is_empty() || d_values.windows(2).any(|w| w[0] >= w[1]) || d_values[0] <= 0.0 {
        return Err(QpError::Ladder);
    }
    let mut rows = Vec::with_capacity(d_values.len());
    for &d in d_values {
        let prestress = PreStress::new(d, delta.to_vec())?;
        let qp = assemble_qp(partition, &prestress)?;
        let tol_active = qp.default_tol_active();
        let sol = solve(&qp, tol_active, tol_kkt, max_iter)?;
        let (active_count, theorem_pass) = match sol.status {
            SolveStatus::Infeasible => (0, false),
            _ => {
                let u = assemble_full_displacement(graph, &sol.z, &bc.g);
                let states = analysis::classify_contacts(graph, &u, tol_active);
                let audit = analysis::verify_theorem(graph, &states, tol_collinear);
                (sol.active_set.len(), audit.all_pass)
            }
        };
        rows.push(DScanRow { d, status: sol.status, active_count, theorem_pass });
    }
    let mut stabilized_from = None;
    for k in (0..rows.len()).rev() {
        if rows[k].theorem_pass {
            stabilized_from = Some(rows[k].d);
        } else {
            break;
        }
    }
    Ok(DStarScan { rows, stabilized_from })
}

/// Audits a solved minimizer against the two-active-edge property.
pub fn audit_solution(
    graph: &ContactGraph,
    bc: &BoundaryConditions,
    sol: &QpSolution,
    tol_active: f64,
    tol_collinear: f64,
) -> TheoremAudit {
    let u = assemble_full_displacement(graph, &sol.z, &bc.g);
    let states = analysis::classify_contacts(graph, &u, tol_active);
    analysis::verify_theorem(graph, &states, tol_collinear)
}
