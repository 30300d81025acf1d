//! Slow, direct reference implementations used as test oracles. Each one is
//! independent of the kernel it checks.

#![allow(dead_code)]

use std::f64::consts::PI;

use lumen_rem::{MlpModel, Scene};

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(p: V3, s: f64, d: V3) -> V3 {
    [p[0] + s * d[0], p[1] + s * d[1], p[2] + s * d[2]]
}

struct Optics {
    area: f64,
    filter: f64,
    fov: f64,
    n: f64,
}

impl Optics {
    fn of(scene: &Scene) -> Self {
        let r = &scene.receiver;
        Optics {
            area: r.area_m2,
            filter: r.filter_gain,
            fov: r.fov_deg.to_radians(),
            n: r.refractive_index,
        }
    }

    /// Collected fraction for an arrival angle `psi` (radians from zenith).
    fn collect(&self, cos_psi: f64) -> f64 {
        if cos_psi < 0.0 || cos_psi.clamp(-1.0, 1.0).acos() > self.fov + 1e-15 {
            return 0.0;
        }
        let g = self.n * self.n / self.fov.sin().powi(2);
        self.area * self.filter * g * cos_psi
    }
}

fn order(hpa_deg: f64) -> f64 {
    -(2f64.ln()) / hpa_deg.to_radians().cos().ln()
}

/// Direct-path DC gain, straight from the Lambertian link formula.
pub fn naive_los_gain(scene: &Scene, tx: usize, rx: V3) -> f64 {
    let t = &scene.transmitters[tx];
    let tp = [t.position.x, t.position.y, t.position.z];
    let m = order(t.hpa_deg);
    let v = sub(rx, tp);
    let d = norm(v);
    let cos_phi = dot(v, [0.0, 0.0, -1.0]) / d;
    let cos_psi = dot(sub(tp, rx), [0.0, 0.0, 1.0]) / d;
    if cos_phi <= 0.0 {
        return 0.0;
    }
    (m + 1.0) / (2.0 * PI * d * d) * cos_phi.powf(m) * Optics::of(scene).collect(cos_psi)
}

struct Ctx<'a> {
    tx: V3,
    m: f64,
    rx: V3,
    optics: &'a Optics,
}

/// Midpoint value of the reflected-path integrand over one cell, or the sum
/// over its four quarters when the cell is large relative to its distance
/// from the detector.
fn cell(ctx: &Ctx, c: V3, eu: f64, ev: f64, normal: V3, u: V3, depth: u32) -> f64 {
    let d2 = norm(sub(ctx.rx, c));
    if depth < 12 && eu.max(ev) > 0.15 * d2 {
        let mut s = 0.0;
        for (su, sv) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            let cc = axpy(axpy(c, su * eu / 4.0, u), sv * ev / 4.0, [0.0, 0.0, 1.0]);
            s += cell(ctx, cc, eu / 2.0, ev / 2.0, normal, u, depth + 1);
        }
        return s;
    }
    let v1 = sub(c, ctx.tx);
    let d1 = norm(v1);
    let cos_phi = -v1[2] / d1;
    let cos_alpha = dot(sub(ctx.tx, c), normal) / d1;
    let w = sub(ctx.rx, c);
    let cos_beta = dot(w, normal) / d2;
    let cos_psi = (c[2] - ctx.rx[2]) / d2;
    if cos_phi < 0.0 || cos_alpha < 0.0 || cos_beta < 0.0 {
        return 0.0;
    }
    let da = eu * ev;
    (ctx.m + 1.0) / (2.0 * PI * d1 * d1 * d2 * d2)
        * cos_phi.powf(ctx.m)
        * cos_alpha
        * cos_beta
        * da
        * ctx.optics.collect(cos_psi)
}

/// Single-bounce wall gain of one LED by brute force over every wall cell.
pub fn naive_nlos_gain(scene: &Scene, tx: usize, rx: V3, patch_edge: f64) -> f64 {
    let (lx, ly, lz) = (scene.room.lx, scene.room.ly, scene.room.lz);
    let t = &scene.transmitters[tx];
    let optics = Optics::of(scene);
    let ctx = Ctx {
        tx: [t.position.x, t.position.y, t.position.z],
        m: order(t.hpa_deg),
        rx,
        optics: &optics,
    };
    let count = |extent: f64| ((extent / patch_edge - 1e-9).ceil() as usize).max(1);
    let nv = count(lz);
    let ev = lz / nv as f64;
    // (origin, inward normal, horizontal direction, horizontal extent)
    let walls: [(V3, V3, V3, f64); 4] = [
        ([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], lx),
        ([0.0, ly, 0.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0], lx),
        ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], ly),
        ([lx, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], ly),
    ];
    let mut total = 0.0;
    for (origin, normal, u, extent) in walls {
        let nu = count(extent);
        let eu = extent / nu as f64;
        for i in 0..nu {
            for j in 0..nv {
                let c = axpy(axpy(origin, (i as f64 + 0.5) * eu, u), (j as f64 + 0.5) * ev, [0.0, 0.0, 1.0]);
                total += cell(&ctx, c, eu, ev, normal, u, 0);
            }
        }
    }
    scene.wall_reflectance * total
}

/// Best CART split by enumerating every candidate and scoring both sides
/// with two-pass sums of squares. Returns `(feature, threshold, sse)`.
pub fn best_split(x: &[f64], y: &[f64], dim: usize) -> Option<(usize, f64, f64)> {
    let n = y.len();
    let sse = |idx: &[usize]| -> f64 {
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
    };
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..dim {
        let mut vals: Vec<f64> = (0..n).map(|i| x[i * dim + f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| x[i * dim + f] < t);
            let s = sse(&l) + sse(&r);
            let take = match best {
                None => true,
                Some((_, _, b)) => s < b - 1e-9 * b.abs().max(1e-300),
            };
            if take {
                best = Some((f, t, s));
            }
        }
    }
    best
}

/// Sum of squared deviations after splitting on `x[f] < t`.
pub fn split_sse(x: &[f64], y: &[f64], dim: usize, f: usize, t: f64) -> f64 {
    let (l, r): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| x[i * dim + f] < t);
    let sse = |idx: &[usize]| -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
    };
    sse(&l) + sse(&r)
}

/// Mean absolute error with the errors materialized first and summed in a
/// second pass using compensated summation.
pub fn two_pass_mae(p: &[f64], t: &[f64]) -> f64 {
    let errs: Vec<f64> = p.iter().zip(t).map(|(a, b)| (a - b).abs()).collect();
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for e in errs {
        let yk = e - c;
        let tk = s + yk;
        c = (tk - s) - yk;
        s = tk;
    }
    s / p.len() as f64
}

/// Adam on a scalar parameter, with bias corrections from `powi`.
pub fn adam_scalar(theta0: f64, grad: impl Fn(f64) -> f64, steps: usize, lr: f64, b1: f64, b2: f64, eps: f64) -> Vec<f64> {
    let (mut th, mut m, mut v) = (theta0, 0.0, 0.0);
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        let g = grad(th);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t as i32));
        let vh = v / (1.0 - b2.powi(t as i32));
        th -= lr * mh / (vh.sqrt() + eps);
        out.push(th);
    }
    out
}

/// Central finite differences of the batch loss with respect to every
/// parameter, in [`MlpModel::param_slices_mut`] order.
pub fn numeric_gradient(model: &MlpModel, x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let mut probe = model.clone();
    let shapes = probe.param_shapes();
    let mut out = Vec::new();
    for (k, &len) in shapes.iter().enumerate() {
        for i in 0..len {
            let orig = probe.param_slices_mut()[k][i];
            probe.param_slices_mut()[k][i] = orig + h;
            let up = probe.loss_and_gradients(x, y).unwrap().0;
            probe.param_slices_mut()[k][i] = orig - h;
            let down = probe.loss_and_gradients(x, y).unwrap().0;
            probe.param_slices_mut()[k][i] = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

/// `|a - b| / (|a| + |b|)` over whole vectors.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|p| p * p).sum::<f64>().sqrt();
    diff / (na + nb)
}
