#![allow(dead_code)]

/// Dormand-Prince 5(4) with step-size control on the Euclidean norm of the
/// local error estimate relative to the state norm.
pub fn dopri5<F>(f: F, y0: [f64; 2], t1: f64, rtol: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let norm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let mut t = 0.0;
    let mut y = y0;
    let mut h = 1e-3_f64.min(t1);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s] = f(t + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut err = [0.0; 2];
        for s in 0..7 {
            for d in 0..2 {
                y5[d] += h * B5[s] * k[s][d];
                err[d] += h * (B5[s] - B4[s]) * k[s][d];
            }
        }
        let scale = rtol * norm(y).max(norm(y5)).max(1e-300);
        let ratio = norm(err) / scale;
        if ratio <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// `max |a - b| / max |a|`.
pub fn rel_max(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let s = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    d / s
}
