//! Minimization of F(phi) = sum_A w phi + sum_B w phi^c over c-closed
//! potentials. Two solvers:
//!
//! * an exact LP oracle — the transportation simplex on the equivalent
//!   correlation-maximization problem, returning a sparse optimal plan and
//!   the optimal dual potentials;
//! * a log-domain Sinkhorn iteration with epsilon-scaling, finished by a
//!   hard c-projection so the result lands in the discrete closed class.
//!
//! Both gauge-fix the additive constant by max phi = 0.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ctransform::{c_transform, project_to_class, Potential, TransformError};
use crate::mesh::SampleCloud;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("problem size {0} exceeds cap {1}")]
    SizeExceeded(usize, usize),
    #[error("marginals are not normalized probability weights: {0}")]
    Infeasible(String),
    #[error("iteration cap hit; residual {0:e}")]
    NonConvergence(f64),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Oracle,
    Entropic,
    Both,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub method: Method,
    /// oracle: duality-gap guard; entropic: marginal L1 residual target
    pub tol: f64,
    /// explicit override; default is geometric ratio-5 down to the floor
    pub epsilon_schedule: Option<Vec<f64>>,
    /// floor of the default schedule; None means 0.25 h^2
    pub epsilon_floor: Option<f64>,
    pub max_iterations: usize,
    /// seeds the entropic initialization and the oracle's anti-cycling
    /// perturbation; results are deterministic given the seed
    pub seed: u64,
    pub size_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Entropic,
            tol: 1e-9,
            epsilon_schedule: None,
            epsilon_floor: None,
            max_iterations: 20_000,
            seed: 0,
            size_cap: 1_000_000,
        }
    }
}

/// Sparse nonnegative coupling between two clouds.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    /// (index in A, index in B, mass)
    pub entries: Vec<(usize, usize, f64)>,
    /// correlation objective sum pi <x,p>
    pub objective: f64,
}

impl TransportPlan {
    pub fn marginal_residual(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut rows = vec![0.0; a.len()];
        let mut cols = vec![0.0; b.len()];
        for &(i, j, w) in &self.entries {
            rows[i] += w;
            cols[j] += w;
        }
        let ra = rows
            .iter()
            .zip(a)
            .map(|(r, w)| (r - w).abs())
            .fold(0.0, f64::max);
        let rb = cols
            .iter()
            .zip(b)
            .map(|(r, w)| (r - w).abs())
            .fold(0.0, f64::max);
        ra.max(rb)
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub phi: Potential,
    pub phi_star: Potential,
    pub plan: Option<TransportPlan>,
    pub duality_gap: f64,
    pub functional_value: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// F(phi) = sum_A w_i phi(x_i) + sum_B w_j phi^c(p_j).
pub fn functional_value(
    phi: &Potential,
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
) -> Result<f64, SolverError> {
    if phi.side != cloud_a.side {
        return Err(SolverError::Transform(TransformError::SideMismatch {
            found: phi.side.tag(),
            expected: cloud_a.side.tag(),
        }));
    }
    let (conj, _) = c_transform(phi, cloud_a, cloud_b)?;
    let fa: f64 = cloud_a
        .points
        .iter()
        .zip(&phi.values)
        .map(|(p, v)| p.weight * v)
        .sum();
    let fb: f64 = cloud_b
        .points
        .iter()
        .zip(&conj.values)
        .map(|(p, v)| p.weight * v)
        .sum();
    Ok(fa + fb)
}

/// Shift so max phi = 0 (phi* absorbs the opposite shift).
pub fn normalize(mut result: SolveResult) -> SolveResult {
    let m = result
        .phi
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    for v in &mut result.phi.values {
        *v -= m;
    }
    for v in &mut result.phi_star.values {
        *v += m;
    }
    result
}

fn check_normalized(cloud: &SampleCloud) -> Result<Vec<f64>, SolverError> {
    let w: Vec<f64> = cloud.points.iter().map(|p| p.weight).collect();
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 || w.iter().any(|&x| x <= 0.0) {
        return Err(SolverError::Infeasible(format!(
            "side {} has total weight {total}",
            cloud.side.tag()
        )));
    }
    Ok(w)
}

fn build_result(
    u: Vec<f64>,
    plan: Option<TransportPlan>,
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
) -> Result<SolveResult, SolverError> {
    // close the raw dual vector; this can only decrease F and keeps
    // feasibility phi + phi^c >= <x,p>
    let phi = project_to_class(&Potential::new(cloud_a.side, u), cloud_a, cloud_b)?;
    let (phi_star, _) = c_transform(&phi, cloud_a, cloud_b)?;
    let fval = functional_value(&phi, cloud_a, cloud_b)?;
    let gap = plan.as_ref().map(|p| fval - p.objective).unwrap_or(0.0);
    Ok(normalize(SolveResult {
        phi,
        phi_star,
        plan,
        duality_gap: gap,
        functional_value: fval,
    }))
}

/// Exact solver: transportation simplex maximizing sum pi <x,p> subject to
/// the cloud weights as marginals. Weights receive a deterministic
/// multiplicative perturbation of relative size 1e-11 to break the heavy
/// degeneracy of equal-weight meshes; the reported plan and duals are for
/// the perturbed problem, whose optimal value differs by O(1e-11).
pub fn solve_lp_oracle(
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    let m = cloud_a.points.len();
    let n = cloud_b.points.len();
    if m * n > config.size_cap {
        return Err(SolverError::SizeExceeded(m * n, config.size_cap));
    }
    let mut a = check_normalized(cloud_a)?;
    let mut b = check_normalized(cloud_b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    for x in a.iter_mut() {
        *x *= 1.0 + 1e-11 * rng.gen::<f64>();
    }
    for x in b.iter_mut() {
        *x *= 1.0 + 1e-11 * rng.gen::<f64>();
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let scale = sb / sa;
    for x in a.iter_mut() {
        *x *= scale;
    }
    let mut cost = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            cost.push(dot(
                &cloud_a.points[i].position,
                &cloud_b.points[j].position,
            ));
        }
    }
    let (flows, basis, u) = transport_simplex(&a, &b, &cost, n, config)?;
    let mut entries = Vec::new();
    let mut objective = 0.0;
    for (k, &(i, j)) in basis.iter().enumerate() {
        if flows[k] > 0.0 {
            entries.push((i, j, flows[k]));
            objective += flows[k] * cost[i * n + j];
        }
    }
    entries.sort_by_key(|&(i, j, _)| (i, j));
    let plan = TransportPlan { entries, objective };
    build_result(u, Some(plan), cloud_a, cloud_b)
}

/// Core transportation simplex. Returns (basis flows, basis arcs, row duals).
#[allow(clippy::type_complexity)]
fn transport_simplex(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    n: usize,
    config: &SolverConfig,
) -> Result<(Vec<f64>, Vec<(usize, usize)>, Vec<f64>), SolverError> {
    let m = a.len();
    // northwest-corner initial basis
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    let mut flows: Vec<f64> = Vec::with_capacity(m + n - 1);
    {
        let (mut i, mut j) = (0usize, 0usize);
        let mut ra = a[0];
        let mut rb = b[0];
        loop {
            let f = ra.min(rb);
            basis.push((i, j));
            flows.push(f);
            ra -= f;
            rb -= f;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if (ra <= rb && i < m - 1) || j == n - 1 {
                i += 1;
                ra = a[i];
            } else {
                j += 1;
                rb = b[j];
            }
        }
    }
    let c_scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs())).max(1.0);
    let enter_tol = 1e-12 * c_scale;
    // node ids: rows 0..m, cols m..m+n; adjacency holds basis-arc indices
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for (k, &(i, j)) in basis.iter().enumerate() {
        adj[i].push(k);
        adj[m + j].push(k);
    }
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let other = |k: usize, node: usize, basis: &[(usize, usize)]| -> usize {
        let (i, j) = basis[k];
        if node == i {
            m + j
        } else {
            i
        }
    };
    let max_pivots = config.max_iterations.max(50 * (m + n));
    let mut stack: Vec<usize> = Vec::with_capacity(m + n);
    for _pivot in 0..max_pivots {
        // duals along the tree from row 0
        let mut seen = vec![false; m + n];
        u[0] = 0.0;
        seen[0] = true;
        stack.clear();
        stack.push(0);
        while let Some(node) = stack.pop() {
            for &k in &adj[node] {
                let nb = other(k, node, &basis);
                if seen[nb] {
                    continue;
                }
                seen[nb] = true;
                let (i, j) = basis[k];
                if nb >= m {
                    v[j] = cost[i * n + j] - u[i];
                } else {
                    u[i] = cost[i * n + j] - v[j];
                }
                stack.push(nb);
            }
        }
        // entering arc: largest positive reduced profit
        let mut best = enter_tol;
        let mut enter: Option<(usize, usize)> = None;
        for i in 0..m {
            let row = i * n;
            for j in 0..n {
                let d = cost[row + j] - u[i] - v[j];
                if d > best {
                    best = d;
                    enter = Some((i, j));
                }
            }
        }
        let (ei, ej) = match enter {
            Some(e) => e,
            None => return Ok((flows, basis, u)),
        };
        // unique tree path from row ei to col ej
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n]; // (prev node, arc)
        let mut seen = vec![false; m + n];
        seen[ei] = true;
        stack.clear();
        stack.push(ei);
        while let Some(node) = stack.pop() {
            if node == m + ej {
                break;
            }
            for &k in &adj[node] {
                let nb = other(k, node, &basis);
                if !seen[nb] {
                    seen[nb] = true;
                    parent[nb] = Some((node, k));
                    stack.push(nb);
                }
            }
        }
        let mut path_arcs: Vec<usize> = Vec::new();
        let mut node = m + ej;
        while node != ei {
            let (prev, k) = parent[node].expect("basis tree is connected");
            path_arcs.push(k);
            node = prev;
        }
        path_arcs.reverse();
        // entering arc is +; walking ei -> ej along the path, arcs alternate
        // -, +, -, ... (cycle alternates around the bipartite loop)
        let mut theta = f64::INFINITY;
        let mut leave: Option<usize> = None;
        for (pos, &k) in path_arcs.iter().enumerate() {
            if pos % 2 == 0 && flows[k] < theta {
                theta = flows[k];
                leave = Some(k);
            }
        }
        let leave = leave.expect("cycle has a decreasing arc");
        for (pos, &k) in path_arcs.iter().enumerate() {
            if pos % 2 == 0 {
                flows[k] -= theta;
            } else {
                flows[k] += theta;
            }
        }
        // replace leaving arc with the entering one
        let (li, lj) = basis[leave];
        adj[li].retain(|&k| k != leave);
        adj[m + lj].retain(|&k| k != leave);
        basis[leave] = (ei, ej);
        flows[leave] = theta;
        adj[ei].push(leave);
        adj[m + ej].push(leave);
    }
    Err(SolverError::NonConvergence(f64::NAN))
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Default epsilon schedule: geometric with ratio 5 from the cost scale
/// down to the floor 0.25 h^2 (blur below mesh resolution is invisible).
/// Pass `floor` to override the stopping level.
pub fn default_schedule(
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    floor: Option<f64>,
) -> Vec<f64> {
    let c_scale: f64 = cloud_a
        .points
        .iter()
        .map(|p| p.position.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        * cloud_b
            .points
            .iter()
            .map(|p| p.position.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
    let h = cloud_a.h.max(cloud_b.h);
    let floor = floor.unwrap_or(0.25 * h * h);
    let mut eps = c_scale.max(floor * 5.0);
    let mut schedule = Vec::new();
    while eps > floor {
        schedule.push(eps);
        eps /= 5.0;
    }
    schedule.push(floor);
    schedule
}

/// Log-domain Sinkhorn with epsilon-scaling; the returned potential is the
/// hard c-projection of the regularized dual variable.
pub fn solve_entropic(
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    let m = cloud_a.points.len();
    let n = cloud_b.points.len();
    let a = check_normalized(cloud_a)?;
    let b = check_normalized(cloud_b)?;
    let schedule = match &config.epsilon_schedule {
        Some(s) => {
            assert!(
                s.windows(2).all(|w| w[1] < w[0]) && s.iter().all(|&e| e > 0.0),
                "epsilon schedule must be strictly decreasing and positive"
            );
            s.clone()
        }
        None => default_schedule(cloud_a, cloud_b, config.epsilon_floor),
    };
    let cost: Vec<f64> = (0..m)
        .flat_map(|i| {
            (0..n).map(move |j| {
                dot(
                    &cloud_a.points[i].position,
                    &cloud_b.points[j].position,
                )
            })
        })
        .collect();
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut f: Vec<f64> = vec![0.0; m];
    let mut g: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 0.1).collect();
    let c_scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs())).max(1.0);
    let mut residual = f64::INFINITY;
    for &eps in &schedule {
        // rounding in the exponent (c - f - g)/eps limits how small the
        // marginal residual can get; don't demand less than that
        let noise = 50.0 * f64::EPSILON * c_scale / eps;
        let inner_tol = if eps == *schedule.last().unwrap() {
            config.tol.max(noise)
        } else {
            config.tol.max(1e-3 * eps).max(noise)
        };
        let mut iter = 0;
        loop {
            for i in 0..m {
                let row = i * n;
                f[i] = eps
                    * log_sum_exp(
                        (0..n).map(|j| log_b[j] + (cost[row + j] - g[j]) / eps),
                    );
            }
            for j in 0..n {
                g[j] = eps
                    * log_sum_exp(
                        (0..m).map(|i| log_a[i] + (cost[i * n + j] - f[i]) / eps),
                    );
            }
            // row-marginal L1 residual (column sums are exact after g)
            residual = 0.0;
            for i in 0..m {
                let row = i * n;
                let s: f64 = (0..n)
                    .map(|j| {
                        (log_b[j] + (cost[row + j] - f[i] - g[j]) / eps).exp()
                    })
                    .sum();
                residual += a[i] * (s - 1.0).abs();
            }
            iter += 1;
            if residual <= inner_tol {
                break;
            }
            if iter >= config.max_iterations {
                if eps == *schedule.last().unwrap() {
                    return Err(SolverError::NonConvergence(residual));
                }
                break;
            }
        }
    }
    let _ = residual;
    build_result(f, None, cloud_a, cloud_b)
}

/// Dispatch on the configured method; `Both` runs the oracle when the size
/// cap allows and falls back to entropic otherwise.
pub fn solve(
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    match config.method {
        Method::Oracle => solve_lp_oracle(cloud_a, cloud_b, config),
        Method::Entropic => solve_entropic(cloud_a, cloud_b, config),
        Method::Both => {
            if cloud_a.points.len() * cloud_b.points.len() <= config.size_cap {
                solve_lp_oracle(cloud_a, cloud_b, config)
            } else {
                solve_entropic(cloud_a, cloud_b, config)
            }
        }
    }
}

/// CSV dump of a sparse plan.
pub fn plan_to_csv(plan: &TransportPlan) -> String {
    let mut s = String::from("i,j,mass\n");
    for &(i, j, w) in &plan.entries {
        s.push_str(&format!("{i},{j},{}\n", crate::report::fmt_f64(w)));
    }
    s
}
