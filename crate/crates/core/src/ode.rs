//! Fixed-step explicit integrators over small fixed-size state vectors.

/// One classical fourth-order Runge–Kutta step of `dx/dt = f(t, x)`.
pub fn rk4_step<const N: usize, F>(f: F, t: f64, x: [f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let half = 0.5 * h;
    let k1 = f(t, &x);
    let k2 = f(t + half, &axpy(&x, half, &k1));
    let k3 = f(t + half, &axpy(&x, half, &k2));
    let k4 = f(t + h, &axpy(&x, h, &k3));
    let mut out = x;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(x: &[f64; N], a: f64, y: &[f64; N]) -> [f64; N] {
    let mut out = *x;
    for i in 0..N {
        out[i] += a * y[i];
    }
    out
}
