//! Gauss-Legendre quadrature. Nodes and weights are computed by Newton
//! iteration on the Legendre recurrence, so any order works.

/// Nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    assert!(order >= 1);
    let mut out = Vec::with_capacity(order);
    let n = order as f64;
    for i in 0..order {
        // Tricomi-style initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integral over [a, b].
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: &[(f64, f64)]) -> f64 {
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    nodes.iter().map(|&(x, w)| w * f(half * x + mid)).sum::<f64>() * half
}

/// Tensor-product integral over a rectangle.
pub fn integrate2(
    f: impl Fn(f64, f64) -> f64,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    nodes: &[(f64, f64)],
) -> f64 {
    let hx = (bx - ax) / 2.0;
    let mx = (ax + bx) / 2.0;
    let hy = (by - ay) / 2.0;
    let my = (ay + by) / 2.0;
    let mut acc = 0.0;
    for &(x, wx) in nodes {
        for &(y, wy) in nodes {
            acc += wx * wy * f(hx * x + mx, hy * y + my);
        }
    }
    acc * hx * hy
}

/// Integral over an oriented affine triangle (Duffy transform from the
/// square); the sign of the vertex orientation is part of the result.
pub fn integrate_triangle(
    f: impl Fn(f64, f64) -> f64,
    verts: [[f64; 2]; 3],
    nodes: &[(f64, f64)],
) -> f64 {
    let [a, b, c] = verts;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let mut acc = 0.0;
    for &(xu, wu) in nodes {
        let u = (xu + 1.0) / 2.0;
        for &(xv, wv) in nodes {
            let v = (xv + 1.0) / 2.0;
            // Duffy: (u, v) in [0,1]^2 -> barycentric (u, u v) with Jacobian u
            let s = u;
            let t = u * v;
            let x = a[0] + (b[0] - a[0]) * (s - t) + (c[0] - a[0]) * t;
            let y = a[1] + (b[1] - a[1]) * (s - t) + (c[1] - a[1]) * t;
            acc += wu * wv * f(x, y) * s;
        }
    }
    // the quarter from mapping [-1,1]^2 to [0,1]^2
    acc * det / 4.0
}
