//! Fixed-step classical Runge-Kutta for complex state vectors.

use crate::linalg::C64;

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` in `steps` equal RK4 steps.
pub fn rk4<F>(f: F, y0: &[C64], t0: f64, t1: f64, steps: usize) -> Vec<C64>
where
    F: Fn(f64, &[C64]) -> Vec<C64>,
{
    let mut y = y0.to_vec();
    if steps == 0 || t1 == t0 {
        return y;
    }
    let h = (t1 - t0) / steps as f64;
    let axpy = |y: &[C64], k: &[C64], a: f64| -> Vec<C64> {
        y.iter().zip(k).map(|(&yi, &ki)| yi + ki * a).collect()
    };
    for step in 0..steps {
        let t = t0 + step as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    y
}
