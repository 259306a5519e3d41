//! Parabolic obstacle-problem solver for the Root barrier.
//!
//! Time-steps the variational inequality
//!   min(∂_t u - ½σ²(t,x) ∂²_x u, u - u_μ) = 0,  u(0,·) = u_{μ0},
//! with a theta-scheme and projected SOR per step, boundary values pinned to
//! the obstacle u_μ. The barrier is the first contact time of the value
//! surface with the obstacle, regularized to vanish off the embedding set.

use thiserror::Error;

use crate::barrier::{Barrier, BarrierError, INF};
use crate::diffusion::DiffusionSpec;
use crate::measure::{self, Measure, MeasureError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("convex order between initial and target fails: {0}")]
    ConvexOrder(#[from] MeasureError),
    #[error("x-range does not extend past supp(mu): potential gap {gap} at x = {x}; widen the grid")]
    RangeTooNarrow { x: f64, gap: f64 },
    #[error("PSOR did not converge at time index {time_index} after {iters} iterations")]
    PsorDiverged { time_index: usize, iters: usize },
    #[error("contact set not monotone in t at x = {x}: gap {gap} after first contact")]
    ContactNotMonotone { x: f64, gap: f64 },
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
}

/// The data of one embedding problem: start law, target law, diffusion.
#[derive(Debug, Clone)]
pub struct EmbeddingProblem {
    pub initial: Measure,
    pub target: Measure,
    pub diffusion: DiffusionSpec,
}

/// Space-time discretization parameters.
#[derive(Debug, Clone)]
pub struct SolveGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub t_cap: f64,
    pub n_t: usize,
    /// time-scheme weight in [1/2, 1]; 1 = fully implicit
    pub theta: f64,
    pub psor_tol: f64,
    pub psor_max_iters: usize,
}

impl SolveGrid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, t_cap: f64, n_t: usize) -> Self {
        SolveGrid {
            x_min,
            x_max,
            n_x,
            t_cap,
            n_t,
            theta: 1.0,
            psor_tol: 1e-9,
            psor_max_iters: 20_000,
        }
    }

    pub fn contact_tol(&self) -> f64 {
        10.0 * self.psor_tol
    }

    pub fn dt(&self) -> f64 {
        self.t_cap / (self.n_t - 1) as f64
    }
}

/// Solver state u(t, x) on the grid, bounded below by the obstacle u_μ.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// u[i][j] = u(t_i, x_j)
    pub u: Vec<Vec<f64>>,
    pub obstacle: Vec<f64>,
}

impl ValueSurface {
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut w: W,
        comments: &[String],
    ) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "t,x,u")?;
        for (i, &t) in self.t_grid.iter().enumerate() {
            for (j, &x) in self.x_grid.iter().enumerate() {
                writeln!(w, "{},{},{}", t, x, self.u[i][j])?;
            }
        }
        Ok(())
    }
}

/// Solve the obstacle problem and extract the regularized barrier.
pub fn solve(
    problem: &EmbeddingProblem,
    grid: &SolveGrid,
) -> Result<(Barrier, ValueSurface), SolverError> {
    if grid.n_x < 16 || grid.n_t < 16 {
        return Err(SolverError::BadGrid(format!(
            "need n_x, n_t >= 16, got {} x {}",
            grid.n_x, grid.n_t
        )));
    }
    if !(0.5..=1.0).contains(&grid.theta) {
        return Err(SolverError::BadGrid(format!("theta {} not in [1/2, 1]", grid.theta)));
    }
    // restrict to the diffusion domain with absorbing treatment at its edge
    let x_min = grid.x_min.max(problem.diffusion.domain.0);
    let x_max = grid.x_max.min(problem.diffusion.domain.1);
    if !(x_min < x_max) {
        return Err(SolverError::BadGrid("x-range empty after domain restriction".into()));
    }
    let n_x = grid.n_x;
    let dx = (x_max - x_min) / (n_x - 1) as f64;
    let x_grid: Vec<f64> = (0..n_x).map(|j| x_min + j as f64 * dx).collect();
    let t_grid: Vec<f64> = (0..grid.n_t).map(|i| i as f64 * grid.dt()).collect();

    let order = measure::convex_order(&problem.initial, &problem.target, &x_grid)?;
    if !order.holds {
        return Err(SolverError::ConvexOrder(MeasureError::ConvexOrderViolated {
            witness: order.witness.unwrap_or(f64::NAN),
        }));
    }
    let obstacle: Vec<f64> = x_grid.iter().map(|&x| problem.target.potential(x)).collect();
    let initial: Vec<f64> = x_grid.iter().map(|&x| problem.initial.potential(x)).collect();
    for &(j, x) in &[(0usize, x_grid[0]), (n_x - 1, x_grid[n_x - 1])] {
        let gap = initial[j] - obstacle[j];
        if gap.abs() > 1e-8 {
            return Err(SolverError::RangeTooNarrow { x, gap });
        }
    }

    let dt = grid.dt();
    let theta = grid.theta;
    let mut u = Vec::with_capacity(grid.n_t);
    u.push(initial);

    let mut omega = 1.5;
    for i in 1..grid.n_t {
        let t_eval = t_grid[i - 1] + theta * dt;
        // a_j = ½ σ² dt / dx²
        let a: Vec<f64> = x_grid
            .iter()
            .map(|&x| {
                let s = problem.diffusion.sigma(t_eval, x);
                0.5 * s * s * dt / (dx * dx)
            })
            .collect();
        let prev = &u[i - 1];
        let mut rhs = vec![0.0; n_x];
        for j in 1..n_x - 1 {
            rhs[j] = prev[j]
                + (1.0 - theta) * a[j] * (prev[j - 1] - 2.0 * prev[j] + prev[j + 1]);
        }
        let mut next = prev.clone();
        next[0] = obstacle[0];
        next[n_x - 1] = obstacle[n_x - 1];

        match psor_step(
            &mut next,
            &rhs,
            &a,
            theta,
            &obstacle,
            grid.psor_tol,
            grid.psor_max_iters,
            omega,
        ) {
            Ok(()) => {}
            Err(()) => {
                // halve over-relaxation once, then give up
                omega *= 0.5;
                next = prev.clone();
                next[0] = obstacle[0];
                next[n_x - 1] = obstacle[n_x - 1];
                psor_step(
                    &mut next,
                    &rhs,
                    &a,
                    theta,
                    &obstacle,
                    grid.psor_tol,
                    grid.psor_max_iters,
                    omega,
                )
                .map_err(|()| SolverError::PsorDiverged {
                    time_index: i,
                    iters: grid.psor_max_iters,
                })?;
            }
        }
        u.push(next);
    }

    let surface = ValueSurface {
        x_grid: x_grid.clone(),
        t_grid,
        u,
        obstacle,
    };
    let embed = measure::embedding_interval(
        &problem.initial,
        &problem.target,
        &x_grid,
        grid.contact_tol(),
    )?;
    let barrier = extract_barrier(&surface, grid.contact_tol(), grid.t_cap, Some(&embed))?;
    Ok((barrier, surface))
}

/// One projected-SOR solve of (I - θ a D2) u = rhs with u >= obstacle and
/// pinned boundary values. Converges on the complementarity residual.
#[allow(clippy::too_many_arguments)]
fn psor_step(
    u: &mut [f64],
    rhs: &[f64],
    a: &[f64],
    theta: f64,
    obstacle: &[f64],
    tol: f64,
    max_iters: usize,
    omega: f64,
) -> Result<(), ()> {
    let n = u.len();
    for _ in 0..max_iters {
        for j in 1..n - 1 {
            let diag = 1.0 + 2.0 * theta * a[j];
            let gs = (rhs[j] + theta * a[j] * (u[j - 1] + u[j + 1])) / diag;
            let relaxed = u[j] + omega * (gs - u[j]);
            u[j] = relaxed.max(obstacle[j]);
        }
        // complementarity residual: |Au - rhs| at free nodes, and Au - rhs
        // must not be significantly negative at clamped nodes
        let mut worst = 0.0f64;
        for j in 1..n - 1 {
            let diag = 1.0 + 2.0 * theta * a[j];
            let resid = diag * u[j] - theta * a[j] * (u[j - 1] + u[j + 1]) - rhs[j];
            let r = if u[j] - obstacle[j] <= tol {
                (-resid).max(0.0) // clamped: require resid >= -tol
            } else {
                resid.abs()
            };
            worst = worst.max(r);
        }
        if worst < tol {
            return Ok(());
        }
    }
    Err(())
}

/// First contact time of the surface with the obstacle per x node; INF where
/// no contact occurs by the cap. Optionally regularized to vanish outside
/// the given embedding intervals.
pub fn extract_barrier(
    surf: &ValueSurface,
    contact_tol: f64,
    t_cap: f64,
    embed: Option<&[(f64, f64)]>,
) -> Result<Barrier, SolverError> {
    let n_x = surf.x_grid.len();
    let mut values = vec![INF; n_x];
    for j in 0..n_x {
        let mut first: Option<usize> = None;
        for (i, row) in surf.u.iter().enumerate() {
            let gap = row[j] - surf.obstacle[j];
            match first {
                None if gap <= contact_tol => first = Some(i),
                Some(_) if gap > 2.0 * contact_tol => {
                    return Err(SolverError::ContactNotMonotone {
                        x: surf.x_grid[j],
                        gap,
                    });
                }
                _ => {}
            }
        }
        if let Some(i) = first {
            values[j] = surf.t_grid[i];
        }
    }
    let b = Barrier::from_node_values(surf.x_grid.clone(), values, t_cap)?;
    Ok(match embed {
        Some(ivs) => b.regularize(ivs),
        None => b,
    })
}

/// Max complementarity residual over interior nodes, with nodes adjacent to
/// obstacle kinks (atoms of the target or the initial law) reported apart.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub at_t: f64,
    pub at_x: f64,
    pub kink_max_residual: f64,
    pub kink_nodes: Vec<f64>,
}

pub fn residual_report(
    surf: &ValueSurface,
    problem: &EmbeddingProblem,
    theta: f64,
) -> ResidualReport {
    let n_x = surf.x_grid.len();
    let n_t = surf.t_grid.len();
    let dx = surf.x_grid[1] - surf.x_grid[0];
    let kink = |j: usize| -> bool {
        let x = surf.x_grid[j];
        problem
            .target
            .atoms()
            .iter()
            .chain(problem.initial.atoms())
            .any(|&(loc, _)| (x - loc).abs() <= 1.5 * dx)
    };
    let kink_nodes: Vec<f64> = (0..n_x)
        .filter(|&j| kink(j))
        .map(|j| surf.x_grid[j])
        .collect();
    let mut max_residual = 0.0f64;
    let (mut at_t, mut at_x) = (0.0, 0.0);
    let mut kink_max = 0.0f64;
    for i in 1..n_t {
        let dt = surf.t_grid[i] - surf.t_grid[i - 1];
        let t_eval = surf.t_grid[i - 1] + theta * dt;
        for j in 1..n_x - 1 {
            let s = problem.diffusion.sigma(t_eval, surf.x_grid[j]);
            let half_sig2 = 0.5 * s * s;
            let d2_new =
                (surf.u[i][j - 1] - 2.0 * surf.u[i][j] + surf.u[i][j + 1]) / (dx * dx);
            let d2_old =
                (surf.u[i - 1][j - 1] - 2.0 * surf.u[i - 1][j] + surf.u[i - 1][j + 1]) / (dx * dx);
            let pde = (surf.u[i][j] - surf.u[i - 1][j]) / dt
                - half_sig2 * (theta * d2_new + (1.0 - theta) * d2_old);
            let comp = pde.min(surf.u[i][j] - surf.obstacle[j]).abs();
            if kink(j) {
                kink_max = kink_max.max(comp);
            } else if comp > max_residual {
                max_residual = comp;
                at_t = surf.t_grid[i];
                at_x = surf.x_grid[j];
            }
        }
    }
    ResidualReport {
        max_residual,
        at_t,
        at_x,
        kink_max_residual: kink_max,
        kink_nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brownian_problem(target: Measure) -> EmbeddingProblem {
        EmbeddingProblem {
            initial: Measure::dirac(0.0),
            target,
            diffusion: DiffusionSpec::brownian(),
        }
    }

    #[test]
    fn gaussian_target_gives_constant_barrier() {
        let problem = brownian_problem(Measure::gaussian_spline(0.0, 1.0).unwrap());
        let grid = SolveGrid::new(-8.5, 8.5, 240, 2.0, 240);
        let (barrier, surf) = solve(&problem, &grid).unwrap();
        for (j, &x) in surf.x_grid.iter().enumerate() {
            if x.abs() <= 2.0 {
                let r = barrier.point_values()[j];
                assert!((r - 1.0).abs() < 0.08, "r({x}) = {r}");
            }
        }
        // surface invariants
        for j in 0..surf.x_grid.len() {
            assert!((surf.u[0][j] - problem.initial.potential(surf.x_grid[j])).abs() < 1e-12);
            for i in 0..surf.t_grid.len() {
                assert!(surf.u[i][j] >= surf.obstacle[j] - grid.psor_tol);
                if i > 0 {
                    assert!(surf.u[i][j] <= surf.u[i - 1][j] + 1e-9, "u increasing at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn two_point_target_gives_exit_time_barrier() {
        let problem = brownian_problem(Measure::two_point(-1.0, 0.5, 1.0, 0.5).unwrap());
        let grid = SolveGrid::new(-2.0, 2.0, 200, 2.0, 200);
        let (barrier, _) = solve(&problem, &grid).unwrap();
        for (j, &x) in barrier.grid().iter().enumerate() {
            let r = barrier.point_values()[j];
            if x.abs() < 0.9 {
                assert!(r.is_infinite(), "r({x}) = {r} should be INF");
            }
            if x.abs() >= 1.05 {
                assert!(r <= 2.0 * grid.dt(), "r({x}) = {r}");
            }
        }
    }

    #[test]
    fn symmetric_target_gives_symmetric_barrier() {
        let problem = brownian_problem(Measure::uniform(-1.0, 1.0).unwrap());
        let grid = SolveGrid::new(-2.0, 2.0, 201, 2.0, 200);
        let (barrier, _) = solve(&problem, &grid).unwrap();
        let n = barrier.grid().len();
        let mut worst = 0.0f64;
        for j in 0..n {
            let (a, b) = (barrier.point_values()[j], barrier.point_values()[n - 1 - j]);
            if a.is_finite() && b.is_finite() {
                worst = worst.max((a - b).abs());
            } else {
                assert_eq!(a.is_infinite(), b.is_infinite());
            }
        }
        assert!(worst <= 2.0 * grid.dt(), "asymmetry {worst}");
    }

    #[test]
    fn immediate_contact_gives_zero_barrier() {
        // target equals initial near the edges, so the gap is 0 there
        let problem = brownian_problem(Measure::uniform(-1.0, 1.0).unwrap());
        let grid = SolveGrid::new(-2.0, 2.0, 100, 1.0, 64);
        let (barrier, _) = solve(&problem, &grid).unwrap();
        assert_eq!(barrier.eval(1.5), 0.0);
        assert_eq!(barrier.eval(-1.7), 0.0);
    }

    #[test]
    fn no_contact_surface_extracts_inf() {
        let x_grid: Vec<f64> = (0..20).map(|j| j as f64 * 0.1).collect();
        let surf = ValueSurface {
            x_grid: x_grid.clone(),
            t_grid: vec![0.0, 0.5, 1.0],
            u: vec![vec![1.0; 20]; 3],
            obstacle: vec![0.0; 20],
        };
        let b = extract_barrier(&surf, 1e-8, 1.0, None).unwrap();
        for j in 1..19 {
            assert!(b.point_values()[j].is_infinite());
        }
    }

    #[test]
    fn convex_order_checked_before_stepping() {
        let problem = EmbeddingProblem {
            initial: Measure::gaussian_spline(0.0, 1.0).unwrap(),
            target: Measure::dirac(0.0),
            diffusion: DiffusionSpec::brownian(),
        };
        let grid = SolveGrid::new(-9.0, 9.0, 64, 1.0, 64);
        assert!(matches!(solve(&problem, &grid), Err(SolverError::ConvexOrder(_))));
    }

    #[test]
    fn narrow_range_rejected() {
        let problem = brownian_problem(Measure::gaussian_spline(0.0, 1.0).unwrap());
        let grid = SolveGrid::new(-2.0, 2.0, 64, 1.0, 64);
        assert!(matches!(solve(&problem, &grid), Err(SolverError::RangeTooNarrow { .. })));
    }

    #[test]
    fn residual_small_on_gaussian_run() {
        let problem = brownian_problem(Measure::gaussian_spline(0.0, 1.0).unwrap());
        let grid = SolveGrid::new(-8.5, 8.5, 200, 2.0, 200);
        let (_, surf) = solve(&problem, &grid).unwrap();
        let rep = residual_report(&surf, &problem, grid.theta);
        assert!(rep.max_residual < 1e-6, "residual {}", rep.max_residual);
    }

    #[test]
    fn contact_set_is_monotone() {
        let problem = brownian_problem(Measure::uniform(-1.0, 1.0).unwrap());
        let grid = SolveGrid::new(-2.0, 2.0, 150, 2.0, 150);
        let (_, surf) = solve(&problem, &grid).unwrap();
        let tol = grid.contact_tol();
        for j in 0..surf.x_grid.len() {
            let mut contacted = false;
            for i in 0..surf.t_grid.len() {
                let gap = surf.u[i][j] - surf.obstacle[j];
                if contacted {
                    assert!(gap <= 2.0 * tol, "left contact at ({i},{j})");
                }
                if gap <= tol {
                    contacted = true;
                }
            }
        }
    }
}
