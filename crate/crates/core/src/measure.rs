//! Finite measures on the line as atoms plus piecewise-polynomial densities.
//!
//! Potentials u_m(x) = -∫|x-y| dm(y) are evaluated in closed form per
//! polynomial piece, so convex-order and embedding-interval checks carry no
//! quadrature error beyond f64 arithmetic. Gaussian laws enter as cubic
//! spline approximations on [mean - 8sd, mean + 8sd] with the (sub-1e-15)
//! tail mass folded into the pieces by rescaling.

use thiserror::Error;

/// Equality tolerance for total-mass bookkeeping.
pub const TOTAL_TOL: f64 = 1e-12;
/// Tolerance for potential comparisons (convex order, concavity).
pub const POTENTIAL_TOL: f64 = 1e-10;
/// Tolerance for mean comparisons in convex-order checks.
pub const MEAN_TOL: f64 = 1e-9;
/// Slack allowed when checking density nonnegativity at sample points;
/// absorbs monomial-basis rounding in spline tails.
const DENSITY_SLACK: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("atom at {loc} has negative mass {mass}")]
    NegativeMass { loc: f64, mass: f64 },
    #[error("density negative ({value}) at x = {x}")]
    NegativeDensity { x: f64, value: f64 },
    #[error("piece intervals overlap near x = {x}")]
    OverlappingPieces { x: f64 },
    #[error("piece [{lo}, {hi}) is unbounded or empty")]
    BadPieceInterval { lo: f64, hi: f64 },
    #[error("declared total {declared} but atoms+pieces integrate to {actual}")]
    TotalMismatch { declared: f64, actual: f64 },
    #[error("means differ: {mean0} vs {mean1} (tolerance {tol})")]
    MeanMismatch { mean0: f64, mean1: f64, tol: f64 },
    #[error("tent parameters invalid: a={a}, b={b}, lambda={lambda}, p={p}")]
    BadTentParams { a: f64, b: f64, lambda: f64, p: f64 },
    #[error("tent target mean {c} outside ({a}, {b})")]
    TentMeanOutOfRange { a: f64, b: f64, c: f64 },
    #[error("measure has mass {mass} outside required support ({a}, {b})")]
    SupportViolation { a: f64, b: f64, mass: f64 },
    #[error("operation requires a probability measure, total is {total}")]
    NotProbability { total: f64 },
    #[error("convex order violated first at x = {witness}")]
    ConvexOrderViolated { witness: f64 },
}

/// One density piece: polynomial `c0 + c1 y + c2 y^2 + c3 y^3` on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: [f64; 4],
}

impl Piece {
    pub fn density(&self, y: f64) -> f64 {
        let c = &self.coeffs;
        ((c[3] * y + c[2]) * y + c[1]) * y + c[0]
    }

    /// ∫_l^h p(y) dy, clipped to the piece interval.
    ///
    /// Power differences are evaluated in factored form so round-off scales
    /// with the window, not with the endpoint magnitudes (tent pieces have
    /// large coefficients of cancelling sign).
    pub fn mass_between(&self, l: f64, h: f64) -> f64 {
        let l = l.max(self.lo);
        let h = h.min(self.hi);
        if h <= l {
            return 0.0;
        }
        let c = &self.coeffs;
        let [d1, d2, d3, d4, _] = power_diffs(l, h);
        c[0] * d1 + c[1] / 2.0 * d2 + c[2] / 3.0 * d3 + c[3] / 4.0 * d4
    }

    /// ∫_l^h y p(y) dy, clipped to the piece interval.
    pub fn first_moment_between(&self, l: f64, h: f64) -> f64 {
        let l = l.max(self.lo);
        let h = h.min(self.hi);
        if h <= l {
            return 0.0;
        }
        let c = &self.coeffs;
        let [_, d2, d3, d4, d5] = power_diffs(l, h);
        c[0] / 2.0 * d2 + c[1] / 3.0 * d3 + c[2] / 4.0 * d4 + c[3] / 5.0 * d5
    }

    pub fn mass(&self) -> f64 {
        self.mass_between(self.lo, self.hi)
    }

    /// Sum of absolute term magnitudes in `mass`; bounds the round-off of
    /// the cancelling sum for pieces with large coefficients.
    fn mass_magnitude(&self) -> f64 {
        let c = &self.coeffs;
        let [d1, d2, d3, d4, _] = power_diffs(self.lo, self.hi);
        (c[0] * d1).abs()
            + (c[1] / 2.0 * d2).abs()
            + (c[2] / 3.0 * d3).abs()
            + (c[3] / 4.0 * d4).abs()
    }
}

/// [h-l, h²-l², ..., h⁵-l⁵] with the common factor (h-l) pulled out.
fn power_diffs(l: f64, h: f64) -> [f64; 5] {
    let d = h - l;
    let l2 = l * l;
    let h2 = h * h;
    [
        d,
        d * (h + l),
        d * (h2 + h * l + l2),
        d * (h + l) * (h2 + l2),
        d * (h2 * h2 + h2 * h * l + h2 * l2 + h * l * l2 + l2 * l2),
    ]
}

/// A finite nonnegative measure: atoms plus disjoint polynomial density pieces.
///
/// Immutable after construction; construction validates all invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    atoms: Vec<(f64, f64)>,
    pieces: Vec<Piece>,
    declared_total: f64,
}

impl Measure {
    pub fn new(
        mut atoms: Vec<(f64, f64)>,
        mut pieces: Vec<Piece>,
        declared_total: f64,
    ) -> Result<Self, MeasureError> {
        for &(loc, mass) in &atoms {
            if mass < 0.0 || !mass.is_finite() || !loc.is_finite() {
                return Err(MeasureError::NegativeMass { loc, mass });
            }
        }
        for p in &pieces {
            if !p.lo.is_finite() || !p.hi.is_finite() || p.hi <= p.lo {
                return Err(MeasureError::BadPieceInterval { lo: p.lo, hi: p.hi });
            }
            // endpoints + Chebyshev nodes
            let mid = 0.5 * (p.lo + p.hi);
            let half = 0.5 * (p.hi - p.lo);
            for k in 0..=8 {
                let x = mid + half * (std::f64::consts::PI * k as f64 / 8.0).cos();
                let v = p.density(x);
                if v < -DENSITY_SLACK {
                    return Err(MeasureError::NegativeDensity { x, value: v });
                }
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in pieces.windows(2) {
            if w[1].lo < w[0].hi - 1e-14 * (1.0 + w[0].hi.abs()) {
                return Err(MeasureError::OverlappingPieces { x: w[1].lo });
            }
        }
        let actual: f64 =
            atoms.iter().map(|a| a.1).sum::<f64>() + pieces.iter().map(Piece::mass).sum::<f64>();
        // tolerance scales with the cancelling term magnitudes (large-slope
        // pieces cannot integrate to machine precision of the result)
        let magnitude: f64 = pieces.iter().map(Piece::mass_magnitude).sum();
        let tol = (TOTAL_TOL * (1.0 + declared_total.abs())).max(1e-14 * magnitude);
        if (actual - declared_total).abs() > tol {
            return Err(MeasureError::TotalMismatch {
                declared: declared_total,
                actual,
            });
        }
        Ok(Measure {
            atoms,
            pieces,
            declared_total,
        })
    }

    pub fn dirac(loc: f64) -> Self {
        Measure::new(vec![(loc, 1.0)], vec![], 1.0).expect("dirac is always valid")
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self, MeasureError> {
        let piece = Piece {
            lo: a,
            hi: b,
            coeffs: [1.0 / (b - a), 0.0, 0.0, 0.0],
        };
        Measure::new(vec![], vec![piece], 1.0)
    }

    pub fn two_point(x0: f64, w0: f64, x1: f64, w1: f64) -> Result<Self, MeasureError> {
        Measure::new(vec![(x0, w0), (x1, w1)], vec![], w0 + w1)
    }

    /// Cubic-spline approximation of N(mean, var) on [mean - 8sd, mean + 8sd],
    /// rescaled so the total is exactly 1 (tail mass folded in).
    pub fn gaussian_spline(mean: f64, var: f64) -> Result<Self, MeasureError> {
        assert!(var > 0.0, "variance must be positive");
        let sd = var.sqrt();
        let n_pieces = 64usize;
        let lo = mean - 8.0 * sd;
        let width = 16.0 * sd / n_pieces as f64;
        let pdf = |x: f64| {
            let z = (x - mean) / sd;
            (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        };
        let mut pieces = Vec::with_capacity(n_pieces);
        for i in 0..n_pieces {
            let a = lo + i as f64 * width;
            let b = a + width;
            let nodes = [a, a + width / 3.0, a + 2.0 * width / 3.0, b];
            let values = [pdf(nodes[0]), pdf(nodes[1]), pdf(nodes[2]), pdf(nodes[3])];
            pieces.push(Piece {
                lo: a,
                hi: b,
                coeffs: interpolate_cubic(&nodes, &values),
            });
        }
        let total: f64 = pieces.iter().map(Piece::mass).sum();
        for p in &mut pieces {
            for c in &mut p.coeffs {
                *c /= total;
            }
        }
        Measure::new(vec![], pieces, 1.0)
    }

    /// Restriction to the interval (a, b): atoms strictly inside, pieces clipped.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self, MeasureError> {
        let atoms: Vec<_> = self
            .atoms
            .iter()
            .filter(|&&(loc, _)| loc > a && loc < b)
            .cloned()
            .collect();
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            if hi > lo {
                pieces.push(Piece {
                    lo,
                    hi,
                    coeffs: p.coeffs,
                });
            }
        }
        let total = atoms.iter().map(|x| x.1).sum::<f64>()
            + pieces.iter().map(Piece::mass).sum::<f64>();
        Measure::new(atoms, pieces, total)
    }

    pub fn scale(&self, w: f64) -> Result<Self, MeasureError> {
        let atoms = self.atoms.iter().map(|&(l, m)| (l, m * w)).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                lo: p.lo,
                hi: p.hi,
                coeffs: [
                    p.coeffs[0] * w,
                    p.coeffs[1] * w,
                    p.coeffs[2] * w,
                    p.coeffs[3] * w,
                ],
            })
            .collect();
        Measure::new(atoms, pieces, self.declared_total * w)
    }

    pub fn normalize(&self) -> Result<Self, MeasureError> {
        self.scale(1.0 / self.declared_total)
    }

    /// Sum of measures. Overlapping density pieces are split at the union of
    /// all breakpoints and summed coefficient-wise (coefficients are in the
    /// absolute monomial basis, so addition is exact).
    pub fn sum(terms: &[&Measure]) -> Result<Self, MeasureError> {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for m in terms {
            for &(loc, mass) in &m.atoms {
                match atoms.iter_mut().find(|a| a.0 == loc) {
                    Some(a) => a.1 += mass,
                    None => atoms.push((loc, mass)),
                }
            }
        }
        let mut cuts: Vec<f64> = Vec::new();
        for m in terms {
            for p in &m.pieces {
                cuts.push(p.lo);
                cuts.push(p.hi);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let mut coeffs = [0.0; 4];
            let mut covered = false;
            for m in terms {
                for p in &m.pieces {
                    if p.lo <= mid && mid < p.hi {
                        covered = true;
                        for k in 0..4 {
                            coeffs[k] += p.coeffs[k];
                        }
                    }
                }
            }
            if covered {
                pieces.push(Piece { lo, hi, coeffs });
            }
        }
        let total = terms.iter().map(|m| m.declared_total).sum();
        Measure::new(atoms, pieces, total)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn total_mass(&self) -> f64 {
        self.declared_total
    }

    pub fn is_probability(&self) -> bool {
        (self.declared_total - 1.0).abs() <= TOTAL_TOL
    }

    pub fn has_atoms(&self) -> bool {
        self.atoms.iter().any(|a| a.1 > 0.0)
    }

    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|&(l, m)| l * m).sum::<f64>()
            + self
                .pieces
                .iter()
                .map(|p| p.first_moment_between(p.lo, p.hi))
                .sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.first_moment() / self.declared_total
    }

    /// Mass of the open interval (lo, hi).
    pub fn mass_open(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.atoms
            .iter()
            .filter(|&&(l, _)| l > lo && l < hi)
            .map(|a| a.1)
            .sum::<f64>()
            + self
                .pieces
                .iter()
                .map(|p| p.mass_between(lo, hi))
                .sum::<f64>()
    }

    /// CDF: mass of (-inf, x].
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(l, _)| l <= x)
            .map(|a| a.1)
            .sum::<f64>()
            + self
                .pieces
                .iter()
                .map(|p| p.mass_between(f64::NEG_INFINITY, x))
                .sum::<f64>()
    }

    /// Density of the absolutely continuous part at x (0 outside all pieces).
    pub fn density_at(&self, x: f64) -> f64 {
        for p in &self.pieces {
            if p.lo <= x && x < p.hi {
                return p.density(x);
            }
        }
        0.0
    }

    /// Smallest (x, largest x) touched by atoms or pieces.
    pub fn support_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(l, m) in &self.atoms {
            if m > 0.0 {
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
        for p in &self.pieces {
            lo = lo.min(p.lo);
            hi = hi.max(p.hi);
        }
        (lo, hi)
    }

    /// u_m(x) = -∫|x-y| dm(y), closed form per atom and per polynomial piece.
    pub fn potential(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &(loc, mass) in &self.atoms {
            acc += mass * (x - loc).abs();
        }
        for p in &self.pieces {
            // ∫ |x-y| p(y) dy = x*M0 - M1 below x, M1 - x*M0 above x
            let below_hi = x.min(p.hi);
            if below_hi > p.lo {
                acc += x * p.mass_between(p.lo, below_hi) - p.first_moment_between(p.lo, below_hi);
            }
            let above_lo = x.max(p.lo);
            if p.hi > above_lo {
                acc += p.first_moment_between(above_lo, p.hi) - x * p.mass_between(above_lo, p.hi);
            }
        }
        -acc
    }

    /// Potential sampled on a grid, with the concavity invariant checked.
    pub fn potential_curve(&self, grid: &[f64]) -> PotentialCurve {
        let values = grid.iter().map(|&x| self.potential(x)).collect();
        PotentialCurve {
            grid: grid.to_vec(),
            values,
            mean: self.mean(),
        }
    }

    /// Inverse CDF at level u*total (u in [0,1]); used for initial draws.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.declared_total;
        // merge atoms and pieces in x-order
        let mut events: Vec<(f64, Event)> = Vec::new();
        for (i, &(loc, _)) in self.atoms.iter().enumerate() {
            events.push((loc, Event::Atom(i)));
        }
        for (i, p) in self.pieces.iter().enumerate() {
            events.push((p.lo, Event::Piece(i)));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for (_, ev) in &events {
            match ev {
                Event::Atom(i) => {
                    let (loc, mass) = self.atoms[*i];
                    if acc + mass >= target {
                        return loc;
                    }
                    acc += mass;
                }
                Event::Piece(i) => {
                    let p = &self.pieces[*i];
                    let mass = p.mass();
                    if acc + mass >= target && mass > 0.0 {
                        // bisect CDF within the piece
                        let want = target - acc;
                        let (mut lo, mut hi) = (p.lo, p.hi);
                        for _ in 0..64 {
                            let mid = 0.5 * (lo + hi);
                            if p.mass_between(p.lo, mid) < want {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        return 0.5 * (lo + hi);
                    }
                    acc += mass;
                }
            }
        }
        events.last().map(|e| e.0).unwrap_or(0.0)
    }

    /// Minimum density over the given open intervals, sampled at `n_samples`
    /// interior points each; 0 wherever no piece covers a sampled point.
    pub fn min_density_on(&self, intervals: &[(f64, f64)], n_samples: usize) -> f64 {
        let mut min = f64::INFINITY;
        for &(lo, hi) in intervals {
            for j in 0..n_samples {
                let x = lo + (j as f64 + 0.5) / n_samples as f64 * (hi - lo);
                min = min.min(self.density_at(x));
            }
        }
        if min.is_infinite() {
            0.0
        } else {
            min
        }
    }
}

enum Event {
    Atom(usize),
    Piece(usize),
}

/// A potential function sampled on a grid.
#[derive(Debug, Clone)]
pub struct PotentialCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub mean: f64,
}

impl PotentialCurve {
    /// Second differences must be <= POTENTIAL_TOL (concavity).
    pub fn max_convexity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..self.grid.len().saturating_sub(1) {
            let h0 = self.grid[i] - self.grid[i - 1];
            let h1 = self.grid[i + 1] - self.grid[i];
            // chord value at grid[i] minus curve value; positive means convexity
            let chord = (self.values[i - 1] * h1 + self.values[i + 1] * h0) / (h0 + h1);
            worst = worst.max(chord - self.values[i]);
        }
        worst
    }

    pub fn is_concave(&self) -> bool {
        self.max_convexity_defect() <= POTENTIAL_TOL
    }
}

/// Fit the cubic through 4 (node, value) pairs, monomial coefficients.
fn interpolate_cubic(nodes: &[f64; 4], values: &[f64; 4]) -> [f64; 4] {
    let mut coeffs = [0.0f64; 4];
    for i in 0..4 {
        // Lagrange basis polynomial for node i, expanded to monomials
        let mut num = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        for j in 0..4 {
            if j == i {
                continue;
            }
            // multiply num by (y - nodes[j])
            let mut next = [0.0f64; 4];
            for k in (0..3).rev() {
                next[k + 1] += num[k];
            }
            for k in 0..4 {
                next[k] -= nodes[j] * num[k];
            }
            num = next;
            denom *= nodes[i] - nodes[j];
        }
        for k in 0..4 {
            coeffs[k] += values[i] * num[k] / denom;
        }
    }
    coeffs
}

/// Result of a convex-order comparison on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexOrderResult {
    pub holds: bool,
    pub witness: Option<f64>,
}

/// u_{m0} >= u_{m1} - tol at every grid point, with equal means.
pub fn convex_order(
    m0: &Measure,
    m1: &Measure,
    grid: &[f64],
) -> Result<ConvexOrderResult, MeasureError> {
    let (mean0, mean1) = (m0.mean(), m1.mean());
    if (mean0 - mean1).abs() > MEAN_TOL {
        return Err(MeasureError::MeanMismatch {
            mean0,
            mean1,
            tol: MEAN_TOL,
        });
    }
    for &x in grid {
        if m0.potential(x) < m1.potential(x) - POTENTIAL_TOL {
            return Ok(ConvexOrderResult {
                holds: false,
                witness: Some(x),
            });
        }
    }
    Ok(ConvexOrderResult {
        holds: true,
        witness: None,
    })
}

/// Maximal open grid intervals where the potential gap u_{m0} - u_{m1}
/// exceeds `tol`. Interval endpoints sit on the nearest non-violating grid
/// point (or the grid edge).
pub fn embedding_interval(
    m0: &Measure,
    m1: &Measure,
    grid: &[f64],
    tol: f64,
) -> Result<Vec<(f64, f64)>, MeasureError> {
    let order = convex_order(m0, m1, grid)?;
    if !order.holds {
        return Err(MeasureError::ConvexOrderViolated {
            witness: order.witness.unwrap_or(f64::NAN),
        });
    }
    let gap: Vec<bool> = grid
        .iter()
        .map(|&x| m0.potential(x) - m1.potential(x) > tol)
        .collect();
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..grid.len() {
        match (gap[i], run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                let lo = if s > 0 { grid[s - 1] } else { grid[0] };
                out.push((lo, grid[i]));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        let lo = if s > 0 { grid[s - 1] } else { grid[0] };
        out.push((lo, grid[grid.len() - 1]));
    }
    Ok(out)
}

/// The Example's two-triangle density on (a, b):
/// (1-λ) 2(a+p-x)/p² for x < a+p, plus λ 2(x-b+p)/p² for x > b-p.
pub fn tent_density(lambda: f64, p: f64, a: f64, b: f64, x: f64) -> Result<f64, MeasureError> {
    check_tent_params(lambda, p, a, b)?;
    let mut v = 0.0;
    if x > a && x < a + p {
        v += (1.0 - lambda) * 2.0 * (a + p - x) / (p * p);
    }
    if x < b && x > b - p {
        v += lambda * 2.0 * (x - b + p) / (p * p);
    }
    Ok(v)
}

fn check_tent_params(lambda: f64, p: f64, a: f64, b: f64) -> Result<(), MeasureError> {
    if !(a < b) || !(0.0..=1.0).contains(&lambda) || p <= 0.0 || p > (b - a) / 2.0 {
        return Err(MeasureError::BadTentParams { a, b, lambda, p });
    }
    Ok(())
}

/// The tent measure ξ_{λ,p} on (a, b) as a two-piece Measure.
pub fn tent_measure(lambda: f64, p: f64, a: f64, b: f64) -> Result<Measure, MeasureError> {
    check_tent_params(lambda, p, a, b)?;
    let mut pieces = Vec::new();
    if lambda < 1.0 {
        // (1-λ) 2(a+p-x)/p² on [a, a+p)
        let s = (1.0 - lambda) * 2.0 / (p * p);
        pieces.push(Piece {
            lo: a,
            hi: a + p,
            coeffs: [s * (a + p), -s, 0.0, 0.0],
        });
    }
    if lambda > 0.0 {
        // λ 2(x-b+p)/p² on (b-p, b)
        let s = lambda * 2.0 / (p * p);
        pieces.push(Piece {
            lo: b - p,
            hi: b,
            coeffs: [s * (p - b), s, 0.0, 0.0],
        });
    }
    Measure::new(vec![], pieces, 1.0)
}

/// Mean of ξ_{λ,p}: (1-λ)(a + p/3) + λ(b - p/3).
pub fn tent_mean(lambda: f64, p: f64, a: f64, b: f64) -> f64 {
    (1.0 - lambda) * (a + p / 3.0) + lambda * (b - p / 3.0)
}

/// Pick (λ*, p*) so the tent on (a, b) has mean c.
///
/// Deterministic tie-break: p* = (b-a)/8, shrunk to 1.5·min(c-a, b-c) when c
/// sits too close to an endpoint for the mean equation to have λ in [0, 1].
pub fn calibrate_tent(a: f64, b: f64, c: f64) -> Result<(f64, f64), MeasureError> {
    if !(a < c && c < b) {
        return Err(MeasureError::TentMeanOutOfRange { a, b, c });
    }
    let p = ((b - a) / 8.0).min(1.5 * (c - a).min(b - c));
    // mean = a + p/3 + λ ((b-a) - 2p/3), affine in λ
    let lambda = (c - a - p / 3.0) / ((b - a) - 2.0 * p / 3.0);
    assert!(
        (-1e-12..=1.0 + 1e-12).contains(&lambda),
        "tent calibration out of bracket: lambda = {lambda}"
    );
    Ok((lambda.clamp(0.0, 1.0), p))
}

/// η[A] = Σ_j ν_j ξ_{c_j}[A]: discretize ν on (a, b) into `n_cells` equal-width
/// cells, place each cell's mass in the tent calibrated to the cell barycenter.
pub fn mixture_measure(
    nu: &Measure,
    a: f64,
    b: f64,
    n_cells: usize,
) -> Result<Measure, MeasureError> {
    let outside = nu.total_mass() - nu.mass_open(a, b);
    if outside.abs() > TOTAL_TOL * (1.0 + nu.total_mass()) {
        return Err(MeasureError::SupportViolation {
            a,
            b,
            mass: outside,
        });
    }
    let width = (b - a) / n_cells as f64;
    let mut parts: Vec<Measure> = Vec::new();
    for j in 0..n_cells {
        let lo = a + j as f64 * width;
        let hi = lo + width;
        let cell = nu.restrict(lo, hi)?;
        let mass = cell.total_mass();
        if mass <= 0.0 {
            continue;
        }
        let c = cell.mean().clamp(lo, hi);
        let (lambda, p) = calibrate_tent(a, b, c)?;
        parts.push(tent_measure(lambda, p, a, b)?.scale(mass)?);
    }
    if parts.is_empty() {
        return Measure::new(vec![], vec![], 0.0);
    }
    let refs: Vec<&Measure> = parts.iter().collect();
    Measure::sum(&refs)
}
