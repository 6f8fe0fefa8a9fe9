//! Control systems `ẋ = f(x, u)` with box-constrained inputs, the benchmark systems,
//! and sampled estimation of the constants `L_f` and `f̄`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sampling::{dist, norm, QuasiSampler};

/// Safety inflation applied to every sampled sup/inf constant.
pub const SAFETY_FACTOR: f64 = 1.1;

/// Per-axis resolution of the input grid used when estimating constants.
const ESTIMATE_INPUT_RES: usize = 5;

type FieldFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// Closed box `[lower, upper]` of admissible inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl InputBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid("input box bounds must be nonempty and of equal length"));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!(
                    "input box coordinate [{lo}, {hi}] is empty or unbounded"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[-bound, bound]^dim`.
    pub fn symmetric(dim: usize, bound: f64) -> Result<Self> {
        Self::new(vec![-bound; dim], vec![bound; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (u - l))
            .collect()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    /// All `2^m` vertices in lexicographic order.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        (0..1usize << m)
            .map(|mask| {
                (0..m)
                    .map(|i| {
                        if mask >> (m - 1 - i) & 1 == 1 {
                            self.upper[i]
                        } else {
                            self.lower[i]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Uniform grid with `res` points per axis, endpoints included.
    pub fn grid(&self, res: usize) -> Result<InputGrid> {
        if res < 2 {
            return Err(Error::invalid(format!(
                "input grid resolution must be at least 2 per axis, got {res}"
            )));
        }
        Ok(InputGrid::new(self, res))
    }
}

/// Input grid in lexicographic order (first coordinate varies slowest).
#[derive(Debug, Clone)]
pub struct InputGrid {
    points: Vec<Vec<f64>>,
    spacing: Vec<f64>,
    res: usize,
}

impl InputGrid {
    fn new(input_box: &InputBox, res: usize) -> Self {
        let m = input_box.dim();
        let spacing: Vec<f64> = (0..m)
            .map(|i| (input_box.upper[i] - input_box.lower[i]) / (res - 1) as f64)
            .collect();
        let axis = |i: usize, j: usize| {
            if j == res - 1 {
                input_box.upper[i]
            } else {
                input_box.lower[i] + j as f64 * spacing[i]
            }
        };
        let total = res.pow(m as u32);
        let points = (0..total)
            .map(|mut flat| {
                let mut p = vec![0.0; m];
                for i in (0..m).rev() {
                    p[i] = axis(i, flat % res);
                    flat /= res;
                }
                p
            })
            .collect();
        Self {
            points,
            spacing,
            res,
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn res(&self) -> usize {
        self.res
    }

    /// Half-diagonal of one grid cell.
    pub fn cell_half_diagonal(&self) -> f64 {
        0.5 * norm(&self.spacing)
    }
}

/// A control system `ẋ = f(x, u)`, `u ∈ input_box`.
#[derive(Clone)]
pub struct ControlSystem {
    name: String,
    state_dim: usize,
    input_box: InputBox,
    field: Arc<FieldFn>,
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("input_box", &self.input_box)
            .finish_non_exhaustive()
    }
}

impl ControlSystem {
    /// `field(x, u, out)` must write `f(x, u)` into `out` and be a pure function.
    pub fn new<F>(name: impl Into<String>, state_dim: usize, input_box: InputBox, field: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if state_dim == 0 {
            return Err(Error::invalid("state dimension must be positive"));
        }
        Ok(Self {
            name: name.into(),
            state_dim,
            input_box,
            field: Arc::new(field),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_box.dim()
    }

    pub fn input_box(&self) -> &InputBox {
        &self.input_box
    }

    pub fn eval_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.state_dim);
        debug_assert_eq!(u.len(), self.input_dim());
        (self.field)(x, u, out)
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.state_dim];
        self.eval_into(x, u, &mut out);
        out
    }
}

/// `ẋ = (u₁, u₂, x₁u₂ − x₂u₁)` with `u ∈ [−1, 1]²`.
pub fn nonholonomic_integrator() -> ControlSystem {
    ControlSystem::new(
        "nonholonomic",
        3,
        InputBox::symmetric(2, 1.0).expect("static box"),
        |x, u, out| {
            out[0] = u[0];
            out[1] = u[1];
            out[2] = x[0] * u[1] - x[1] * u[0];
        },
    )
    .expect("static system")
}

/// `ẋ = u` in `ℝ^dim` with `u ∈ [−1, 1]^dim`.
pub fn single_integrator(dim: usize) -> ControlSystem {
    let name = match dim {
        1 => "scalar".to_string(),
        2 => "quadratic-test".to_string(),
        n => format!("single-integrator-{n}"),
    };
    ControlSystem::new(
        name,
        dim,
        InputBox::symmetric(dim, 1.0).expect("static box"),
        |_, u, out| out.copy_from_slice(u),
    )
    .expect("positive dimension")
}

/// `ẋ = A x + B u`. `a` is `n×n`, `b` is `n×m` (row-major, one row per state).
pub fn linear_system(
    name: impl Into<String>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    input_box: InputBox,
) -> Result<ControlSystem> {
    let n = a.len();
    let m = input_box.dim();
    if a.iter().any(|row| row.len() != n) || b.len() != n || b.iter().any(|row| row.len() != m) {
        return Err(Error::invalid("linear system matrices have inconsistent shapes"));
    }
    ControlSystem::new(name, n, input_box, move |x, u, out| {
        for i in 0..n {
            out[i] = a[i].iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>()
                + b[i].iter().zip(u).map(|(bij, uj)| bij * uj).sum::<f64>();
        }
    })
}

/// Looks up a benchmark system by its config name.
pub fn system_by_name(name: &str) -> Result<ControlSystem> {
    match name {
        "nonholonomic" => Ok(nonholonomic_integrator()),
        "quadratic-test" => Ok(single_integrator(2)),
        "scalar" => Ok(single_integrator(1)),
        other => Err(Error::UnknownName {
            kind: "system",
            name: other.to_string(),
        }),
    }
}

/// Lipschitz constant and velocity bound of `f` over a ball × the input box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConstants {
    pub lipschitz_l_f: f64,
    pub f_bar: f64,
    pub ball_radius: f64,
}

/// Estimates `L_f` and `f̄` over `B(0, ball_radius) × U` from a deterministic quasi-random
/// sample, inflating both maxima by [`SAFETY_FACTOR`].
pub fn estimate_constants(
    sys: &ControlSystem,
    ball_radius: f64,
    sample_count: usize,
    seed: u64,
) -> Result<SystemConstants> {
    if !(ball_radius > 0.0 && ball_radius.is_finite()) {
        return Err(Error::invalid(format!("ball radius must be positive, got {ball_radius}")));
    }
    if sample_count < 2 {
        return Err(Error::invalid(format!("sample_count must be at least 2, got {sample_count}")));
    }
    let n = sys.state_dim();
    let grid = sys.input_box().grid(ESTIMATE_INPUT_RES)?;
    let mut sampler = QuasiSampler::new(n, seed);
    let points: Vec<Vec<f64>> = (0..sample_count)
        .map(|i| {
            let d = if i % 2 == 0 {
                sampler.next_in_unit_ball()
            } else {
                sampler.next_on_unit_sphere()
            };
            d.into_iter().map(|v| v * ball_radius).collect()
        })
        .collect();

    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut f_max: f64 = 0.0;
    let mut l_max: f64 = 0.0;
    let mut quotient = |x: &[f64], y: &[f64], u: &[f64], fx: &mut [f64], fy: &mut [f64]| {
        let d = dist(x, y);
        if d > 0.0 {
            sys.eval_into(x, u, fx);
            sys.eval_into(y, u, fy);
            l_max = l_max.max(dist(fx, fy) / d);
        }
    };
    for (i, x) in points.iter().enumerate() {
        let far = &points[(i + 1) % sample_count];
        // a short chord toward the next sample probes the local constant
        let near: Vec<f64> = x.iter().zip(far).map(|(a, b)| a + 1e-3 * (b - a)).collect();
        for u in grid.points() {
            sys.eval_into(x, u, &mut fx);
            f_max = f_max.max(norm(&fx));
            quotient(x, far, u, &mut fx, &mut fy);
            quotient(x, &near, u, &mut fx, &mut fy);
        }
    }
    Ok(SystemConstants {
        lipschitz_l_f: SAFETY_FACTOR * l_max,
        f_bar: SAFETY_FACTOR * f_max,
        ball_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonholonomic_vector_field_values() {
        let sys = nonholonomic_integrator();
        assert_eq!(sys.eval(&[1.0, 0.5, -0.1], &[1.0, 1.0]), vec![1.0, 1.0, 0.5]);
        assert_eq!(sys.eval(&[0.0; 3], &[0.0, 0.0]), vec![0.0; 3]);
        let v = sys.eval(&[2.0, -1.0, 5.0], &[0.3, -0.7]);
        assert_eq!(v[0], 0.3);
        assert_eq!(v[1], -0.7);
        assert!((v[2] - (-1.1)).abs() < 1e-15);
        assert_eq!(sys.state_dim(), 3);
        assert_eq!(sys.input_box(), &InputBox::symmetric(2, 1.0).unwrap());
    }

    #[test]
    fn vector_field_is_pure() {
        let sys = nonholonomic_integrator();
        let a = sys.eval(&[0.3, -0.2, 0.9], &[0.1, -0.4]);
        let b = sys.eval(&[0.3, -0.2, 0.9], &[0.1, -0.4]);
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn input_box_validation() {
        assert!(InputBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(InputBox::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(InputBox::new(vec![], vec![]).is_err());
        let b = InputBox::symmetric(2, 1.0).unwrap();
        assert!(b.grid(1).is_err());
        assert_eq!(b.vertices()[0], vec![-1.0, -1.0]);
        assert_eq!(b.vertices()[1], vec![-1.0, 1.0]);
    }

    #[test]
    fn grid_is_lexicographic_and_hits_endpoints() {
        let b = InputBox::symmetric(2, 1.0).unwrap();
        let g = b.grid(21).unwrap();
        assert_eq!(g.points().len(), 441);
        assert_eq!(g.points()[0], vec![-1.0, -1.0]);
        assert_eq!(g.points()[1][0], -1.0);
        assert!((g.points()[1][1] + 0.9).abs() < 1e-15);
        assert_eq!(g.points()[440], vec![1.0, 1.0]);
        assert!(g.points().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn estimate_rejects_bad_arguments() {
        let sys = nonholonomic_integrator();
        assert!(estimate_constants(&sys, 1.0, 1, 0).is_err());
        assert!(estimate_constants(&sys, 0.0, 10, 0).is_err());
        assert!(estimate_constants(&sys, -1.0, 10, 0).is_err());
    }

    #[test]
    fn nonholonomic_f_bar_matches_euclidean_ball_sup() {
        // sup over ‖x‖ ≤ 2, u ∈ [−1,1]²: |x₁u₂ − x₂u₁| ≤ ‖x‖·‖u‖ = 2√2, so ‖f‖² ≤ 2 + 8
        let sys = nonholonomic_integrator();
        let c = estimate_constants(&sys, 2.0, 10_000, 1).unwrap();
        let exact = 10f64.sqrt();
        assert!(c.f_bar >= 0.95 * exact && c.f_bar <= SAFETY_FACTOR * exact + 1e-12, "{}", c.f_bar);
    }

    #[test]
    fn linear_lipschitz_is_operator_norm() {
        let sys = linear_system(
            "twice-identity",
            vec![vec![2.0, 0.0], vec![0.0, 2.0]],
            vec![vec![0.0], vec![0.0]],
            InputBox::symmetric(1, 1.0).unwrap(),
        )
        .unwrap();
        let c = estimate_constants(&sys, 1.5, 200, 4).unwrap();
        assert!((2.0..=2.2 + 1e-12).contains(&c.lipschitz_l_f), "{}", c.lipschitz_l_f);
    }

    #[test]
    fn estimate_is_reproducible() {
        let sys = nonholonomic_integrator();
        let a = estimate_constants(&sys, 1.0, 500, 9).unwrap();
        let b = estimate_constants(&sys, 1.0, 500, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn system_lookup() {
        assert_eq!(system_by_name("nonholonomic").unwrap().state_dim(), 3);
        assert_eq!(system_by_name("quadratic-test").unwrap().state_dim(), 2);
        assert!(matches!(system_by_name("pendulum"), Err(Error::UnknownName { .. })));
    }
}
