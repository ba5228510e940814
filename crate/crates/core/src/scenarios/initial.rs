//! Initial data: random Fourier graphs, the rounded square, the S-fold and
//! the steep ramp.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Curve, GraphPatch, PatchDomain};
use crate::{Error, Result};

type Point = [f64; 2];

/// `f(x) = Σ a_k sin(ω_k·x + φ_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSum {
    pub modes: Vec<Mode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub amplitude: f64,
    pub omega: Vec<f64>,
    pub phase: f64,
}

impl FourierSum {
    pub const MODES: usize = 6;

    /// Draws `MODES` modes with frequencies in `[0.5, 3]` and random
    /// directions; amplitudes decay like `1/|ω|`.
    pub fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let modes = (0..Self::MODES)
            .map(|_| {
                let freq = rng.gen_range(0.5..3.0);
                let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
                dir.iter_mut().for_each(|d| *d *= freq / norm);
                Mode {
                    amplitude: rng.gen_range(-1.0..1.0) / freq,
                    omega: dir,
                    phase: rng.gen_range(0.0..2.0 * PI),
                }
            })
            .collect();
        Self { modes }
    }

    /// `a sin(ω x₁)`.
    pub fn single(n: usize, amplitude: f64, omega: f64) -> Self {
        let mut w = vec![0.0; n];
        w[0] = omega;
        Self {
            modes: vec![Mode {
                amplitude,
                omega: w,
                phase: 0.0,
            }],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * (dot(&m.omega, x) + m.phase).sin())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for m in &self.modes {
            let c = m.amplitude * (dot(&m.omega, x) + m.phase).cos();
            g.iter_mut().zip(&m.omega).for_each(|(gi, w)| *gi += c * w);
        }
        g
    }

    fn scale_amplitudes(&mut self, s: f64) {
        self.modes.iter_mut().for_each(|m| m.amplitude *= s);
    }

    fn scale_frequencies(&mut self, s: f64) {
        for m in &mut self.modes {
            m.omega.iter_mut().for_each(|w| *w *= s);
        }
    }

    /// Rescales so that `max |Df| = lip` over `points` exactly, raising all
    /// frequencies by 1.5 until `max |f| ≤ height` as well.
    pub fn fit(&mut self, points: &[Vec<f64>], lip: f64, height: f64) -> Result<()> {
        if lip == 0.0 {
            self.scale_amplitudes(0.0);
            return Ok(());
        }
        for _ in 0..40 {
            let g = points
                .iter()
                .map(|p| norm(&self.gradient(p)))
                .fold(0.0, f64::max);
            if g == 0.0 {
                return Err(Error::invalid("fourier sum", "vanishing gradient"));
            }
            self.scale_amplitudes(lip / g);
            let sup = points.iter().map(|p| self.eval(p).abs()).fold(0.0, f64::max);
            if sup <= height {
                return Ok(());
            }
            self.scale_frequencies(1.5);
        }
        Err(Error::invalid("fourier sum", "no rescaling meets the height bound"))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Spacing `4/resolution` over `B^n(0, 2)`.
pub fn ball_patch(n: usize, resolution: usize, f: impl Fn(&[f64]) -> f64) -> Result<GraphPatch> {
    GraphPatch::from_fn(vec![0.0; n], 2.0, 4.0 / resolution as f64, PatchDomain::Ball, f)
}

/// Positions of the active nodes of `B^n(0, 2)` at this resolution.
pub fn ball_nodes(n: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    let p = ball_patch(n, resolution, |_| 0.0)?;
    Ok(p.active_nodes().map(|i| p.node_position(i)).collect())
}

/// Appends points from `a` to `b` at spacing at most `h`, excluding `a`.
fn push_segment(out: &mut Vec<Point>, a: Point, b: Point, h: f64) {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let k = (len / h).ceil().max(1.0) as usize;
    for i in 1..=k {
        let s = i as f64 / k as f64;
        out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
    }
}

/// Appends the arc around `c` from angle `a0` to `a1`, excluding the start.
fn push_arc(out: &mut Vec<Point>, c: Point, r: f64, a0: f64, a1: f64, h: f64) {
    let k = ((a1 - a0).abs() * r / h).ceil().max(2.0) as usize;
    for i in 1..=k {
        let a = a0 + (a1 - a0) * i as f64 / k as f64;
        out.push([c[0] + r * a.cos(), c[1] + r * a.sin()]);
    }
}

/// Boundary of `[−(2+ε), 2+ε] × [0, 2+ε]` with corners rounded at radius
/// `ε`, counter-clockwise from `(0, 0)`, then redistributed to `m`
/// vertices of equal spacing.
pub fn rounded_square(epsilon: f64, m: usize) -> Result<Curve> {
    let (x1, y1, r) = (2.0 + epsilon, 2.0 + epsilon, epsilon);
    let h = 0.25 * r.min(4.0 * (x1 + y1) / m as f64);
    let mut v = vec![[0.0, 0.0]];
    push_segment(&mut v, [0.0, 0.0], [x1 - r, 0.0], h);
    push_arc(&mut v, [x1 - r, r], r, -FRAC_PI_2, 0.0, h);
    push_segment(&mut v, [x1, r], [x1, y1 - r], h);
    push_arc(&mut v, [x1 - r, y1 - r], r, 0.0, FRAC_PI_2, h);
    push_segment(&mut v, [x1 - r, y1], [-x1 + r, y1], h);
    push_arc(&mut v, [-x1 + r, y1 - r], r, FRAC_PI_2, PI, h);
    push_segment(&mut v, [-x1, y1 - r], [-x1, r], h);
    push_arc(&mut v, [-x1 + r, r], r, PI, 1.5 * PI, h);
    push_segment(&mut v, [-x1 + r, 0.0], [0.0, 0.0], h);
    v.pop();
    let fine = Curve::new_unchecked_simplicity(v, true)?;
    resample_closed(&fine, m)
}

/// `m` vertices at equal arclength along a closed curve, starting at its
/// first vertex.
fn resample_closed(c: &Curve, m: usize) -> Result<Curve> {
    let total = c.length();
    let step = total / m as f64;
    let mut out = Vec::with_capacity(m);
    let (mut edge, mut acc) = (0usize, 0.0);
    for k in 0..m {
        let s = k as f64 * step;
        while acc + c.edge_length(edge) < s {
            acc += c.edge_length(edge);
            edge += 1;
        }
        let (a, b) = c.edge(edge);
        let u = (s - acc) / c.edge_length(edge);
        out.push([a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]);
    }
    Curve::new(out, true)
}

/// The S-fold over `E = [−w/2, w/2]`: a lower sheet `F·W − s` on the
/// left, an upper sheet `F·W + s` on the right, joined inside `E` by
/// three horizontal layers at heights `−s, 0, s` and two semicircular caps
/// of radius `s/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fold {
    pub width: f64,
    pub s: f64,
    pub sheets: FourierSum,
}

impl Fold {
    /// Layer separation `s = γ/4`; the sheets get `|F| ≤ γ/2` and
    /// `lip(F·W) = lip` on the graph parts.
    pub fn new(rng: &mut ChaCha8Rng, lip: f64, gamma: f64, width: f64) -> Result<Self> {
        let s = gamma / 4.0;
        let mut f = FourierSum::random(rng, 1);
        let fold = Self {
            width,
            s,
            sheets: f.clone(),
        };
        if lip == 0.0 {
            f.scale_amplitudes(0.0);
            return Ok(Self { sheets: f, ..fold });
        }
        // fit the windowed product on 64 points per shortest wavelength
        for _ in 0..60 {
            let omega = f.modes.iter().map(|m| m.omega[0].abs()).fold(0.0, f64::max);
            let k = ((4.0 * 64.0 * omega / (2.0 * PI)).ceil() as usize).max(4000);
            let xs: Vec<f64> = (0..=k).map(|i| -2.0 + 4.0 * i as f64 / k as f64).collect();
            let probe = Self { sheets: f.clone(), ..fold.clone() };
            let g = xs.iter().map(|&x| probe.sheet_slope(x).abs()).fold(0.0, f64::max);
            f.scale_amplitudes(lip / g);
            let probe = Self { sheets: f.clone(), ..fold.clone() };
            let sup = xs.iter().map(|&x| probe.sheet(x).abs()).fold(0.0, f64::max);
            if sup <= 0.5 * gamma {
                return Ok(probe);
            }
            f.scale_frequencies(1.5);
        }
        Err(Error::config("params.gamma", "no sheet of this Lipschitz constant fits the slab"))
    }

    /// Quintic step from 0 on `|x| ≤ 3w/4` to 1 on
    /// `|x| ≥ 3w/4 + max(w, 0.05)`, and its derivative.
    fn window(&self, x: f64) -> (f64, f64) {
        let a = 0.75 * self.width;
        let b = a + self.width.max(0.05);
        let u = ((x.abs() - a) / (b - a)).clamp(0.0, 1.0);
        let w = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let dw = 30.0 * u * u * (1.0 - u) * (1.0 - u) / (b - a) * x.signum();
        if self.width == 0.0 {
            (1.0, 0.0)
        } else {
            (w, dw)
        }
    }

    /// `F·W` without the layer offset.
    pub fn sheet(&self, x: f64) -> f64 {
        self.sheets.eval(&[x]) * self.window(x).0
    }

    fn sheet_slope(&self, x: f64) -> f64 {
        let (w, dw) = self.window(x);
        self.sheets.gradient(&[x])[0] * w + self.sheets.eval(&[x]) * dw
    }

    /// Length of the part inside `E × R`: three layers and two caps.
    pub fn fold_measure(&self) -> f64 {
        if self.width == 0.0 {
            return 0.0;
        }
        self.width + 2.0 * (self.width / 2.0) + PI * self.s
    }

    /// The open polyline from `x = −2` to `x = 2`: graph parts at spacing
    /// at most `h` and 1/32 of the shortest wavelength, the fold at
    /// spacing `s/16`.
    pub fn curve(&self, h: f64) -> Result<Curve> {
        let omega = self
            .sheets
            .modes
            .iter()
            .map(|m| m.omega[0].abs())
            .fold(0.0, f64::max);
        let h = if omega > 0.0 { h.min(2.0 * PI / (32.0 * omega)) } else { h };
        if self.width == 0.0 {
            let k = (4.0 / h).round() as usize;
            let v = (0..=k)
                .map(|i| {
                    let x = -2.0 + 4.0 * i as f64 / k as f64;
                    [x, self.sheet(x)]
                })
                .collect();
            return Curve::new(v, false);
        }
        let (w, s) = (self.width, self.s);
        let hf = s / 16.0;
        let (xl, xr) = (-w / 4.0, w / 4.0);
        let mut v = Vec::new();
        let graph = |v: &mut Vec<Point>, a: f64, b: f64, off: f64, first: bool| {
            let k = ((b - a) / h).ceil().max(1.0) as usize;
            for i in usize::from(!first)..=k {
                let x = a + (b - a) * i as f64 / k as f64;
                v.push([x, self.sheet(x) + off]);
            }
        };
        graph(&mut v, -2.0, -w / 2.0, -s, true);
        push_segment(&mut v, [-w / 2.0, -s], [xr, -s], hf);
        push_arc(&mut v, [xr, -s / 2.0], s / 2.0, -FRAC_PI_2, FRAC_PI_2, hf);
        push_segment(&mut v, [xr, 0.0], [xl, 0.0], hf);
        push_arc(&mut v, [xl, s / 2.0], s / 2.0, -FRAC_PI_2, -1.5 * PI, hf);
        push_segment(&mut v, [xl, s], [w / 2.0, s], hf);
        graph(&mut v, w / 2.0, 2.0, s, false);
        Curve::new(v, false)
    }
}

/// `f(x) = (lip/k) tanh(k x₁)` with the steepest `k ≤ 4` whose graph has
/// `max |A| ≤ kmax` on `B^n(0, 2)`.
pub fn steep_ramp(lip: f64, kmax: f64) -> (f64, impl Fn(&[f64]) -> f64) {
    let max_a = |k: f64| {
        (0..=4000)
            .map(|i| {
                let x = -2.0 + 4.0 * i as f64 / 4000.0;
                let th = (k * x).tanh();
                let d1 = lip * (1.0 - th * th);
                let d2 = -2.0 * lip * k * th * (1.0 - th * th);
                d2.abs() / (1.0 + d1 * d1).powf(1.5)
            })
            .fold(0.0, f64::max)
    };
    let (mut lo, mut hi) = (0.0, 4.0);
    if max_a(hi) <= kmax {
        lo = hi;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if max_a(mid) <= kmax {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let k = lo;
    let f = move |x: &[f64]| if k == 0.0 { lip * x[0] } else { lip / k * (k * x[0]).tanh() };
    (k, f)
}
