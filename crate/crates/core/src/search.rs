//! One-dimensional golden-section search on a bracket.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Argmin and minimum of `f` on `[a, b]`, assuming unimodality there.
/// The endpoints are compared too, so a monotone `f` returns its end value.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let (a0, b0) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let x = 0.5 * (a + b);
    let mut best = (x, f(x));
    for cand in [a0, b0, c, d] {
        let v = f(cand);
        if v < best.1 {
            best = (cand, v);
        }
    }
    best
}

pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(|t| -f(t), a, b, tol);
    (x, -v)
}

/// Minimum of `f` over a uniform grid of `n` points on `[a, b]`, polished
/// by golden section around the best sample.
pub fn grid_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, tol: f64) -> (f64, f64) {
    let h = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    let mut bi = 0;
    for i in 1..n {
        let x = if i == n - 1 { b } else { a + i as f64 * h };
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            bi = i;
        }
    }
    let lo = a + (bi.saturating_sub(1)) as f64 * h;
    let hi = (a + (bi + 1) as f64 * h).min(b);
    let polished = golden_min(&f, lo, hi, tol);
    if polished.1 < best.1 {
        polished
    } else {
        best
    }
}

pub fn grid_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, tol: f64) -> (f64, f64) {
    let (x, v) = grid_min(|t| -f(t), a, b, n, tol);
    (x, -v)
}

/// Rectangle `[t0, t1] × [u0, u1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Rect {
    pub t: (f64, f64),
    pub u: (f64, f64),
}

impl Rect {
    fn clamp(&self, x: [f64; 2]) -> [f64; 2] {
        [x[0].clamp(self.t.0, self.t.1), x[1].clamp(self.u.0, self.u.1)]
    }
}

/// Nelder–Mead on a box, with points projected back into the box.
pub fn nelder_mead_box<F: Fn(f64, f64) -> f64>(f: F, rect: &Rect, start: [f64; 2], max_iter: usize) -> ([f64; 2], f64) {
    let eval = |x: [f64; 2]| f(x[0], x[1]);
    let dt = 0.05 * (rect.t.1 - rect.t.0).max(1e-12);
    let du = 0.05 * (rect.u.1 - rect.u.0).max(1e-12);
    let mut simplex = [
        rect.clamp(start),
        rect.clamp([start[0] + dt, start[1]]),
        rect.clamp([start[0], start[1] + du]),
    ];
    // A clamped start on an edge can collapse the simplex; push inward instead.
    if simplex[1] == simplex[0] {
        simplex[1] = rect.clamp([start[0] - dt, start[1]]);
    }
    if simplex[2] == simplex[0] {
        simplex[2] = rect.clamp([start[0], start[1] - du]);
    }
    let mut vals = simplex.map(eval);
    for _ in 0..max_iter {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        if (vals[2] - vals[0]).abs() <= 1e-14 * vals[0].abs().max(1.0) {
            break;
        }
        let c = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along = |k: f64| rect.clamp([c[0] + k * (simplex[2][0] - c[0]), c[1] + k * (simplex[2][1] - c[1])]);
        let xr = along(-1.0);
        let fr = eval(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let xc = along(0.5);
            let fc = eval(xc);
            if fc < vals[2] {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    vals[k] = eval(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best], vals[best])
}

/// Minimum over a rectangle: `n × n` grid, then Nelder–Mead from the best
/// sample. Returns the minimiser and value.
pub fn rect_min<F: Fn(f64, f64) -> f64>(f: F, rect: &Rect, n: usize) -> ([f64; 2], f64) {
    let n = n.max(2);
    let mut best = ([rect.t.0, rect.u.0], f64::INFINITY);
    for i in 0..n {
        let t = rect.t.0 + (rect.t.1 - rect.t.0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let u = rect.u.0 + (rect.u.1 - rect.u.0) * j as f64 / (n - 1) as f64;
            let v = f(t, u);
            if v < best.1 || best.1.is_nan() {
                best = ([t, u], v);
            }
        }
    }
    let polished = nelder_mead_box(&f, rect, best.0, 400);
    if polished.1 < best.1 {
        polished
    } else {
        best
    }
}

pub fn rect_max<F: Fn(f64, f64) -> f64>(f: F, rect: &Rect, n: usize) -> ([f64; 2], f64) {
    let (x, v) = rect_min(|t, u| -f(t, u), rect, n);
    (x, -v)
}
