//! Lower semi-continuous barrier functions on a grid.
//!
//! A barrier is piecewise constant on grid cells with explicit values at the
//! grid points; the evaluation rule (point value capped by both adjacent cell
//! values) makes it lower semi-continuous by construction. Outside the grid
//! span the barrier is 0, encoding r(±∞) = 0. The INF sentinel marks cells
//! the process never stops in before the cap, as opposed to censoring at the
//! horizon.

use std::io::{BufRead, Write};

use thiserror::Error;

/// Sentinel for r(x) = ∞; compares greater than any time.
pub const INF: f64 = f64::INFINITY;

#[derive(Debug, Error)]
pub enum BarrierError {
    #[error("grid must be strictly increasing with at least 2 points")]
    BadGrid,
    #[error("expected {expected} values for {points} grid points, got {got}")]
    LengthMismatch {
        expected: usize,
        points: usize,
        got: usize,
    },
    #[error("barrier values must be >= 0, found {value}")]
    NegativeValue { value: f64 },
    #[error("paste piece intervals overlap near x = {x}")]
    PasteOverlap { x: f64 },
    #[error("barrier csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    grid: Vec<f64>,
    cell_values: Vec<f64>,
    point_values: Vec<f64>,
    t_cap: f64,
}

impl Barrier {
    pub fn new(
        grid: Vec<f64>,
        cell_values: Vec<f64>,
        point_values: Vec<f64>,
        t_cap: f64,
    ) -> Result<Self, BarrierError> {
        if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(BarrierError::BadGrid);
        }
        if cell_values.len() != grid.len() - 1 {
            return Err(BarrierError::LengthMismatch {
                expected: grid.len() - 1,
                points: grid.len(),
                got: cell_values.len(),
            });
        }
        if point_values.len() != grid.len() {
            return Err(BarrierError::LengthMismatch {
                expected: grid.len(),
                points: grid.len(),
                got: point_values.len(),
            });
        }
        for &v in cell_values.iter().chain(point_values.iter()) {
            if v < 0.0 || v.is_nan() {
                return Err(BarrierError::NegativeValue { value: v });
            }
        }
        Ok(Barrier {
            grid,
            cell_values,
            point_values,
            t_cap,
        })
    }

    /// Barrier from node samples r(x_j): cells take the max of their
    /// endpoints, so node values are reproduced exactly by `eval`.
    pub fn from_node_values(
        grid: Vec<f64>,
        values: Vec<f64>,
        t_cap: f64,
    ) -> Result<Self, BarrierError> {
        if values.len() != grid.len() {
            return Err(BarrierError::LengthMismatch {
                expected: grid.len(),
                points: grid.len(),
                got: values.len(),
            });
        }
        let cells = values.windows(2).map(|w| w[0].max(w[1])).collect();
        Barrier::new(grid, cells, values, t_cap)
    }

    pub fn constant(lo: f64, hi: f64, value: f64, t_cap: f64) -> Result<Self, BarrierError> {
        Barrier::new(vec![lo, hi], vec![value], vec![value, value], t_cap)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cell_values(&self) -> &[f64] {
        &self.cell_values
    }

    pub fn point_values(&self) -> &[f64] {
        &self.point_values
    }

    pub fn t_cap(&self) -> f64 {
        self.t_cap
    }

    pub fn span(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn has_inf(&self) -> bool {
        self.cell_values.iter().any(|v| v.is_infinite())
    }

    /// Evaluate r(x). Outside the span: 0. At a grid point: the minimum of
    /// the stored point value and both adjacent cell values. Inside a cell:
    /// the cell value.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] || x > self.grid[n - 1] {
            return 0.0;
        }
        // index of first grid point >= x
        let i = self.grid.partition_point(|&g| g < x);
        if i < n && self.grid[i] == x {
            let mut v = self.point_values[i];
            if i > 0 {
                v = v.min(self.cell_values[i - 1]);
            }
            if i < n - 1 {
                v = v.min(self.cell_values[i]);
            }
            v
        } else {
            self.cell_values[i - 1]
        }
    }

    /// Maximal intervals where eval >= t (the set A of the corridor lemma
    /// hypotheses). For t <= 0 this is the full span.
    pub fn region_at_least(&self, t: f64) -> Vec<(f64, f64)> {
        if t <= 0.0 {
            return vec![self.span()];
        }
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut run: Option<(f64, f64)> = None;
        for i in 0..self.cell_values.len() {
            if self.cell_values[i] >= t {
                let (lo, hi) = (self.grid[i], self.grid[i + 1]);
                match &mut run {
                    // extend only if the junction point itself clears t
                    Some(r) if r.1 == lo && self.eval(lo) >= t => r.1 = hi,
                    Some(r) => {
                        out.push(*r);
                        run = Some((lo, hi));
                    }
                    None => run = Some((lo, hi)),
                }
            } else if let Some(r) = run.take() {
                out.push(r);
            }
        }
        if let Some(r) = run {
            out.push(r);
        }
        out
    }

    /// Zero the barrier outside the given open intervals (the regular
    /// representative vanishing off the embedding set).
    pub fn regularize(&self, intervals: &[(f64, f64)]) -> Barrier {
        let inside = |x: f64| intervals.iter().any(|&(lo, hi)| x > lo && x < hi);
        let (s_lo, s_hi) = self.span();
        // refine the grid at interval endpoints so zeroing is exact even
        // when the grid is coarse relative to the intervals
        let mut grid = self.grid.clone();
        for &(lo, hi) in intervals {
            for e in [lo, hi] {
                let sep = 1e-12 * (1.0 + e.abs());
                if e > s_lo && e < s_hi && grid.iter().all(|&g| (g - e).abs() > sep) {
                    grid.push(e);
                }
            }
        }
        grid.sort_by(f64::total_cmp);
        let cells: Vec<f64> = grid
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                if inside(mid) {
                    self.eval(mid)
                } else {
                    0.0
                }
            })
            .collect();
        let points: Vec<f64> = grid
            .iter()
            .map(|&x| if inside(x) { self.eval(x) } else { 0.0 })
            .collect();
        Barrier::new(grid, cells, points, self.t_cap).expect("valid by construction")
    }

    /// Max |difference| between adjacent cell values and its location.
    /// A finite/INF junction reports INF at the junction.
    pub fn continuity_modulus(&self) -> (f64, f64) {
        let mut worst = 0.0f64;
        let mut loc = self.grid[0];
        for i in 0..self.cell_values.len().saturating_sub(1) {
            let (a, b) = (self.cell_values[i], self.cell_values[i + 1]);
            let jump = if a.is_infinite() && b.is_infinite() {
                0.0
            } else {
                (a - b).abs()
            };
            if jump > worst {
                worst = jump;
                loc = self.grid[i + 1];
            }
        }
        (worst, loc)
    }

    /// Write the canonical CSV: header `x,r`, then 2N+1 rows alternating grid
    /// points and cell midpoints in x order, with `inf` for INF values.
    /// Leading `#` comment lines carry the cap and provenance metadata.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<(), BarrierError> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "# t_cap = {}", fmt_val(self.t_cap))?;
        writeln!(w, "x,r")?;
        for i in 0..self.cell_values.len() {
            writeln!(
                w,
                "{},{}",
                fmt_val(self.grid[i]),
                fmt_val(self.point_values[i])
            )?;
            let mid = 0.5 * (self.grid[i] + self.grid[i + 1]);
            writeln!(w, "{},{}", fmt_val(mid), fmt_val(self.cell_values[i]))?;
        }
        let n = self.grid.len() - 1;
        writeln!(
            w,
            "{},{}",
            fmt_val(self.grid[n]),
            fmt_val(self.point_values[n])
        )?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, BarrierError> {
        let mut t_cap = None;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        let mut saw_header = false;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("t_cap =") {
                    t_cap = Some(parse_val(v.trim())?);
                }
                continue;
            }
            if !saw_header {
                if line != "x,r" {
                    return Err(BarrierError::Csv(format!("expected header 'x,r', got '{line}'")));
                }
                saw_header = true;
                continue;
            }
            let (xs, rs) = line
                .split_once(',')
                .ok_or_else(|| BarrierError::Csv(format!("bad row '{line}'")))?;
            rows.push((parse_val(xs)?, parse_val(rs)?));
        }
        if rows.len() < 3 || rows.len() % 2 == 0 {
            return Err(BarrierError::Csv(format!(
                "expected an odd number (>= 3) of rows, got {}",
                rows.len()
            )));
        }
        let grid: Vec<f64> = rows.iter().step_by(2).map(|r| r.0).collect();
        let point_values: Vec<f64> = rows.iter().step_by(2).map(|r| r.1).collect();
        let cell_values: Vec<f64> = rows.iter().skip(1).step_by(2).map(|r| r.1).collect();
        let t_cap = t_cap.unwrap_or_else(|| {
            cell_values
                .iter()
                .chain(point_values.iter())
                .filter(|v| v.is_finite())
                .fold(0.0f64, |a, &b| a.max(b))
        });
        Barrier::new(grid, cell_values, point_values, t_cap)
    }

    pub fn write_csv_file(&self, path: &std::path::Path, comments: &[String]) -> Result<(), BarrierError> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f), comments)
    }

    pub fn read_csv_file(path: &std::path::Path) -> Result<Self, BarrierError> {
        let f = std::fs::File::open(path)?;
        Barrier::read_csv(std::io::BufReader::new(f))
    }
}

fn fmt_val(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

fn parse_val(s: &str) -> Result<f64, BarrierError> {
    if s == "inf" {
        Ok(INF)
    } else {
        s.parse()
            .map_err(|_| BarrierError::Csv(format!("bad number '{s}'")))
    }
}

/// Base level everywhere on `span`, replaced by base + piece value inside each
/// piece interval. INF is absorbing. The result grid is the union of the piece
/// grids, the piece interval endpoints, and the span endpoints.
pub fn paste_barriers(
    base_level: f64,
    span: (f64, f64),
    pieces: &[((f64, f64), Barrier)],
    t_cap: f64,
) -> Result<Barrier, BarrierError> {
    let mut sorted: Vec<&((f64, f64), Barrier)> = pieces.iter().collect();
    sorted.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
    for w in sorted.windows(2) {
        if w[1].0 .0 < w[0].0 .1 {
            return Err(BarrierError::PasteOverlap { x: w[1].0 .0 });
        }
    }
    let mut grid = vec![span.0, span.1];
    for ((lo, hi), b) in pieces {
        grid.push(*lo);
        grid.push(*hi);
        for &g in b.grid() {
            if g > *lo && g < *hi {
                grid.push(g);
            }
        }
    }
    grid.retain(|&x| x >= span.0 && x <= span.1);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 2 {
        return Err(BarrierError::BadGrid);
    }
    let value_at = |x: f64| -> f64 {
        for ((lo, hi), b) in pieces {
            if x > *lo && x < *hi {
                return base_level + b.eval(x); // INF + base = INF
            }
        }
        base_level
    };
    let cells = grid
        .windows(2)
        .map(|w| value_at(0.5 * (w[0] + w[1])))
        .collect();
    let points = grid.iter().map(|&x| value_at(x)).collect();
    Barrier::new(grid, cells, points, t_cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> Barrier {
        // 1 on (-1,0), 3 on (0,1), point value min at the junction
        Barrier::new(
            vec![-1.0, 0.0, 1.0],
            vec![1.0, 3.0],
            vec![1.0, 1.0, 3.0],
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn eval_basic() {
        let b = Barrier::constant(-2.0, 2.0, 1.0, 2.0).unwrap();
        assert_eq!(b.eval(0.3), 1.0);
        assert_eq!(b.eval(5.0), 0.0);
        assert_eq!(b.eval(-2.1), 0.0);
    }

    #[test]
    fn eval_lsc_at_junctions() {
        // grid point between cells valued 1 and INF with stored point value 1
        let b = Barrier::new(
            vec![-1.0, 0.0, 1.0],
            vec![1.0, INF],
            vec![1.0, 1.0, INF],
            2.0,
        )
        .unwrap();
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(0.5), INF);
        // LSC: point value <= both adjacent cell values
        for (i, &x) in b.grid().iter().enumerate() {
            let v = b.eval(x);
            if i > 0 {
                assert!(v <= b.cell_values()[i - 1]);
            }
            if i < b.cell_values().len() {
                assert!(v <= b.cell_values()[i]);
            }
        }
    }

    #[test]
    fn region_at_least_examples() {
        let c = Barrier::constant(-2.0, 2.0, 1.0, 2.0).unwrap();
        assert_eq!(c.region_at_least(0.5), vec![(-2.0, 2.0)]);
        assert!(c.region_at_least(2.0).is_empty());
        assert_eq!(c.region_at_least(0.0), vec![(-2.0, 2.0)]);

        let b = two_level();
        // LSC point value 1 < 2 at the junction, so the region opens at 0
        assert_eq!(b.region_at_least(2.0), vec![(0.0, 1.0)]);
    }

    #[test]
    fn region_antitone() {
        let b = two_level();
        let covered = |ivs: &[(f64, f64)], x: f64| ivs.iter().any(|&(l, h)| x >= l && x <= h);
        let lo = b.region_at_least(0.5);
        let hi = b.region_at_least(2.5);
        for x in [-0.9, -0.3, 0.1, 0.5, 0.9] {
            if covered(&hi, x) {
                assert!(covered(&lo, x));
            }
        }
    }

    #[test]
    fn regularize_examples() {
        let r = Barrier::constant(-2.0, 2.0, 1.0, 2.0).unwrap();
        let reg = r.regularize(&[(-1.0, 1.0)]);
        assert_eq!(reg.eval(0.0), 1.0);
        assert_eq!(reg.eval(1.5), 0.0);
        // full span is identity on cell values
        let full = r.regularize(&[(-3.0, 3.0)]);
        assert_eq!(full.cell_values(), r.cell_values());
        // empty set zeroes everything
        let zero = r.regularize(&[]);
        assert!(zero.cell_values().iter().all(|&v| v == 0.0));
        // idempotent
        let twice = reg.regularize(&[(-1.0, 1.0)]);
        assert_eq!(twice, reg);
    }

    #[test]
    fn paste_examples() {
        let empty = paste_barriers(1.0, (-2.0, 2.0), &[], 3.0).unwrap();
        assert_eq!(empty.eval(0.0), 1.0);

        let piece = Barrier::constant(0.0, 1.0, 2.0, 3.0).unwrap();
        let pasted = paste_barriers(1.0, (-2.0, 2.0), &[((0.0, 1.0), piece)], 3.0).unwrap();
        assert_eq!(pasted.eval(0.5), 3.0);
        assert_eq!(pasted.eval(-1.0), 1.0);
        assert_eq!(pasted.eval(1.5), 1.0);

        let inf_piece = Barrier::new(
            vec![0.0, 0.4, 0.6, 1.0],
            vec![0.5, INF, 0.5],
            vec![0.5, 0.5, 0.5, 0.5],
            3.0,
        )
        .unwrap();
        let pasted = paste_barriers(1.0, (-2.0, 2.0), &[((0.0, 1.0), inf_piece)], 3.0).unwrap();
        assert_eq!(pasted.eval(0.5), INF);
        assert_eq!(pasted.eval(0.2), 1.5);

        let a = Barrier::constant(0.0, 1.0, 2.0, 3.0).unwrap();
        let b = Barrier::constant(0.5, 1.5, 2.0, 3.0).unwrap();
        assert!(matches!(
            paste_barriers(1.0, (-2.0, 2.0), &[((0.0, 1.0), a), ((0.5, 1.5), b)], 3.0),
            Err(BarrierError::PasteOverlap { .. })
        ));
    }

    #[test]
    fn continuity_modulus_examples() {
        let c = Barrier::constant(-2.0, 2.0, 1.0, 2.0).unwrap();
        assert_eq!(c.continuity_modulus().0, 0.0);
        let b = two_level();
        let (jump, loc) = b.continuity_modulus();
        assert_eq!(jump, 2.0);
        assert_eq!(loc, 0.0);
        let with_inf = Barrier::new(
            vec![-1.0, 0.0, 1.0],
            vec![1.0, INF],
            vec![1.0, 1.0, INF],
            2.0,
        )
        .unwrap();
        let (jump, loc) = with_inf.continuity_modulus();
        assert_eq!(jump, INF);
        assert_eq!(loc, 0.0);
    }

    #[test]
    fn csv_roundtrip_bit_exact() {
        let b = Barrier::new(
            vec![-1.0, 0.0, 0.3333333333333333, 1.0],
            vec![1.0, INF, 0.123456789012345],
            vec![1.0, 1.0, 0.1, 0.0],
            2.5,
        )
        .unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf, &["config = deadbeef".into()]).unwrap();
        let text1 = String::from_utf8(buf).unwrap();
        assert!(text1.contains("inf"));
        let back = Barrier::read_csv(text1.as_bytes()).unwrap();
        assert_eq!(back, b);
        let mut buf2 = Vec::new();
        back.write_csv(&mut buf2, &["config = deadbeef".into()]).unwrap();
        assert_eq!(text1, String::from_utf8(buf2).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn csv_roundtrip(values in proptest::collection::vec(0.0f64..5.0, 2..20)) {
                let n = values.len();
                let grid: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 - 1.0).collect();
                let b = Barrier::from_node_values(grid, values, 5.0).unwrap();
                let mut buf = Vec::new();
                b.write_csv(&mut buf, &[]).unwrap();
                let back = Barrier::read_csv(&buf[..]).unwrap();
                prop_assert_eq!(back, b);
            }

            #[test]
            fn eval_is_lsc(values in proptest::collection::vec(0.0f64..5.0, 3..12)) {
                let n = values.len();
                let grid: Vec<f64> = (0..n).map(|i| i as f64).collect();
                let b = Barrier::from_node_values(grid, values, 5.0).unwrap();
                for (i, &x) in b.grid().iter().enumerate() {
                    let v = b.eval(x);
                    if i > 0 { prop_assert!(v <= b.cell_values()[i-1] + 1e-15); }
                    if i < b.cell_values().len() { prop_assert!(v <= b.cell_values()[i] + 1e-15); }
                }
            }
        }
    }
}
