//! Fixed-step classical Runge–Kutta.

/// Reusable RK4 stepper for `ẋ = f(t, x)`.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `x` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, f: &mut F, t: f64, x: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = x.len();
        f(t, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates from `t0` to `t1` with `steps` equal steps.
pub fn integrate<F>(mut f: F, t0: f64, x0: &[f64], t1: f64, steps: usize) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    assert!(steps >= 1, "need at least one step");
    let h = (t1 - t0) / steps as f64;
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x.len());
    for j in 0..steps {
        rk.step(&mut f, t0 + j as f64 * h, &mut x, h);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_is_exact() {
        let x = integrate(|_, _, out| out[0] = -1.0, 0.0, &[1.0], 0.5, 7);
        assert!((x[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cubic_in_time_is_exact() {
        // x' = 4t³ integrates to t⁴; Simpson-type weights are exact for cubics
        let x = integrate(|t, _, out| out[0] = 4.0 * t * t * t, 0.0, &[0.0], 1.0, 1);
        assert!((x[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fourth_order_on_exponential() {
        let err = |n| (integrate(|_, x, out| out[0] = x[0], 0.0, &[1.0], 1.0, n)[0] - 1f64.exp()).abs();
        let ratio = err(10) / err(20);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }
}
