/// One classical Runge–Kutta step for a system of fixed size.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let add = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        let mut o = *y;
        for i in 0..N {
            o[i] += s * k[i];
        }
        o
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Fixed-step RK4 driver that records the state at every node.
pub struct Rk4;

impl Rk4 {
    /// Integrate from `ts[0]` through the given nodes, taking `sub` equal
    /// substeps between consecutive nodes. Stops early (returning the prefix)
    /// if the state turns non-finite.
    pub fn integrate<const N: usize, F>(f: &mut F, ts: &[f64], y0: [f64; N], sub: usize) -> Vec<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let mut out = Vec::with_capacity(ts.len());
        out.push(y0);
        let mut y = y0;
        for w in ts.windows(2) {
            let h = (w[1] - w[0]) / sub as f64;
            for k in 0..sub {
                y = rk4_step(f, w[0] + h * k as f64, &y, h);
            }
            if y.iter().any(|v| !v.is_finite()) {
                break;
            }
            out.push(y);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        let mut f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut err = |n: usize| {
            let ts: Vec<f64> = (0..=n).map(|i| i as f64 * 2.0 / n as f64).collect();
            let y = Rk4::integrate(&mut f, &ts, [0.0, 1.0], 1);
            (y[n][0] - 2f64.sin()).abs()
        };
        let e1 = err(20);
        let e2 = err(40);
        assert!(e1 < 1e-5);
        assert!((e1 / e2).log2() > 3.8);
    }
}
