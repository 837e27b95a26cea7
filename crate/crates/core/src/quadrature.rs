//! Deterministic adaptive quadrature.
//!
//! Every integral in the analytical path goes through this module: the
//! nearest-distance tables, serving-distance normalisation, the interference
//! Laplace exponents and the outer serving-distance integral. The core rule is
//! a 15-point Gauss–Kronrod pair with QUADPACK-style error rescaling, bisected
//! globally on the interval with the largest (tolerance-normalised) error.
//!
//! The `_multi` variants integrate a vector-valued integrand sharing one set of
//! nodes, which is how the Laplace exponent and all of its `s`-derivatives are
//! obtained from a single pass over the interferer field.

use std::f64::consts::PI;

/// Tolerances for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    /// Inner (interference Laplace exponent) integrals.
    pub const INNER: Tolerance = Tolerance {
        rel: 1e-7,
        abs: 1e-12,
        max_subdivisions: 200,
    };

    /// Outer serving-distance integral of the outage probability.
    pub const OUTER: Tolerance = Tolerance {
        rel: 1e-5,
        abs: 1e-10,
        max_subdivisions: 200,
    };

    pub const fn new(rel: f64, abs: f64) -> Self {
        Tolerance {
            rel,
            abs,
            max_subdivisions: 500,
        }
    }

    fn admits(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }

    fn budget(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs()).max(f64::MIN_POSITIVE)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::INNER
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadratureResult {
    pub const ZERO: QuadratureResult = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    };

    /// Sum of two independent integrals (e.g. adjacent panels).
    pub fn combine(self, other: QuadratureResult) -> QuadratureResult {
        QuadratureResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

/// Result of a vector-valued integration.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiQuadrature {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

impl MultiQuadrature {
    pub fn zeros(dim: usize) -> Self {
        MultiQuadrature {
            values: vec![0.0; dim],
            errors: vec![0.0; dim],
            evaluations: 0,
            converged: true,
        }
    }

    pub fn accumulate(&mut self, other: &MultiQuadrature) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += o;
        }
        for (e, o) in self.errors.iter_mut().zip(&other.errors) {
            *e += o;
        }
        self.evaluations += other.evaluations;
        self.converged &= other.converged;
    }

    pub fn component(&self, i: usize) -> QuadratureResult {
        QuadratureResult {
            value: self.values[i],
            error_estimate: self.errors[i],
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }
}

/// How the half-line `[a, ∞)` is mapped onto a finite interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// `z = a + t / (1 - t)`; needs no knowledge of the integrand.
    Algebraic,
    /// `z = a + scale * (x^(-β) - 1)` with `β = 2 / (exponent - 1)`, chosen so
    /// an integrand decaying like `z^(-exponent)` becomes `O(x)` at `x → 0`.
    PowerLaw { exponent: f64, scale: f64 },
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// One 15-point Kronrod panel for a vector integrand.
struct Kronrod<'a> {
    dim: usize,
    fv: Vec<f64>,
    scratch: &'a mut [f64],
}

impl<'a> Kronrod<'a> {
    fn panel<F>(&mut self, f: &mut F, a: f64, b: f64, value: &mut [f64], error: &mut [f64])
    where
        F: FnMut(f64, &mut [f64]),
    {
        let dim = self.dim;
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        // fv layout: node-major, 15 nodes: [center, (x_j-, x_j+) for j in 0..7]
        f(center, &mut self.fv[0..dim]);
        for j in 0..7 {
            let dx = half * XGK[j];
            let base = dim * (1 + 2 * j);
            f(center - dx, &mut self.fv[base..base + dim]);
            f(center + dx, &mut self.fv[base + dim..base + 2 * dim]);
        }
        let mean = &mut self.scratch[..dim];
        for i in 0..dim {
            let fc = self.fv[i];
            let mut res_k = fc * WGK[7];
            let mut res_g = fc * WG[3];
            let mut res_abs = fc.abs() * WGK[7];
            for j in 0..7 {
                let base = dim * (1 + 2 * j);
                let f1 = self.fv[base + i];
                let f2 = self.fv[base + dim + i];
                res_k += WGK[j] * (f1 + f2);
                res_abs += WGK[j] * (f1.abs() + f2.abs());
                if j % 2 == 1 {
                    res_g += WG[j / 2] * (f1 + f2);
                }
            }
            let m = res_k * 0.5;
            mean[i] = m;
            let mut res_asc = WGK[7] * (fc - m).abs();
            for j in 0..7 {
                let base = dim * (1 + 2 * j);
                res_asc +=
                    WGK[j] * ((self.fv[base + i] - m).abs() + (self.fv[base + dim + i] - m).abs());
            }
            let h = half.abs();
            value[i] = res_k * half;
            error[i] = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
            if !value[i].is_finite() || !error[i].is_finite() {
                error[i] = f64::INFINITY;
            }
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    splittable: bool,
}

/// Adaptive integration of a vector integrand over `[a, b]`.
///
/// `f(x, out)` must write `dim` values into `out`. For `a > b` the orientation
/// is reversed (`∫_a^b = -∫_b^a`); `a == b` returns exact zeros.
pub fn integrate_finite_multi<F>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> MultiQuadrature
where
    F: FnMut(f64, &mut [f64]),
{
    if a == b || dim == 0 {
        return MultiQuadrature::zeros(dim);
    }
    if a > b {
        let mut r = integrate_finite_multi(f, dim, b, a, tol);
        r.values.iter_mut().for_each(|v| *v = -*v);
        return r;
    }

    let mut scratch = vec![0.0; dim];
    let mut kr = Kronrod {
        dim,
        fv: vec![0.0; 15 * dim],
        scratch: &mut scratch,
    };
    let mut panels: Vec<Panel> = Vec::with_capacity(32);
    let mut value = vec![0.0; dim];
    let mut error = vec![0.0; dim];
    kr.panel(&mut f, a, b, &mut value, &mut error);
    panels.push(Panel {
        a,
        b,
        value,
        error,
        splittable: true,
    });
    let mut evaluations = 15;

    let mut totals = vec![0.0; dim];
    let mut total_err = vec![0.0; dim];
    loop {
        sum_panels(&panels, &mut totals, &mut total_err);
        let done = totals
            .iter()
            .zip(&total_err)
            .all(|(v, e)| tol.admits(*v, *e));
        if done {
            return MultiQuadrature {
                values: totals,
                errors: total_err,
                evaluations,
                converged: true,
            };
        }
        if panels.len() >= tol.max_subdivisions {
            break;
        }
        // Largest error relative to the per-component budget.
        let budgets: Vec<f64> = totals.iter().map(|v| tol.budget(*v)).collect();
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .map(|(idx, p)| {
                let score = p
                    .error
                    .iter()
                    .zip(&budgets)
                    .map(|(e, bgt)| e / bgt)
                    .fold(0.0_f64, f64::max);
                (idx, score)
            })
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        let Some((idx, score)) = worst else { break };
        if score == 0.0 {
            break;
        }
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) || (p.b - p.a) <= 1e3 * f64::EPSILON * mid.abs().max(1e-300) {
            panels.push(Panel {
                splittable: false,
                ..p
            });
            continue;
        }
        let mut lv = vec![0.0; dim];
        let mut le = vec![0.0; dim];
        let mut rv = vec![0.0; dim];
        let mut re = vec![0.0; dim];
        kr.panel(&mut f, p.a, mid, &mut lv, &mut le);
        kr.panel(&mut f, mid, p.b, &mut rv, &mut re);
        evaluations += 30;
        panels.push(Panel {
            a: p.a,
            b: mid,
            value: lv,
            error: le,
            splittable: true,
        });
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: rv,
            error: re,
            splittable: true,
        });
    }
    sum_panels(&panels, &mut totals, &mut total_err);
    MultiQuadrature {
        values: totals,
        errors: total_err,
        evaluations,
        converged: false,
    }
}

fn sum_panels(panels: &[Panel], totals: &mut [f64], errors: &mut [f64]) {
    // Panels are summed in order of their left endpoint so the result does not
    // depend on the bisection history.
    let mut order: Vec<usize> = (0..panels.len()).collect();
    order.sort_by(|&i, &j| panels[i].a.total_cmp(&panels[j].a));
    for (i, (t, e)) in totals.iter_mut().zip(errors.iter_mut()).enumerate() {
        let mut sum = Neumaier::default();
        let mut err = 0.0;
        for &k in &order {
            sum.add(panels[k].value[i]);
            err += panels[k].error[i];
        }
        *t = sum.total();
        *e = err;
    }
}

/// Adaptive integration of a vector integrand over `[a, ∞)`.
pub fn integrate_semi_infinite_multi<F>(
    mut f: F,
    dim: usize,
    a: f64,
    tol: Tolerance,
    tail: Tail,
) -> MultiQuadrature
where
    F: FnMut(f64, &mut [f64]),
{
    match tail {
        Tail::Algebraic => integrate_finite_multi(
            |t, out| {
                let one_minus = 1.0 - t;
                let z = a + t / one_minus;
                f(z, out);
                let jac = 1.0 / (one_minus * one_minus);
                out.iter_mut().for_each(|v| *v *= jac);
            },
            dim,
            0.0,
            1.0,
            tol,
        ),
        Tail::PowerLaw { exponent, scale } => {
            let beta = 2.0 / (exponent - 1.0).max(1e-3);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let mut mapped = |x: f64, out: &mut [f64]| {
                let xb = x.powf(-beta);
                let z = a + scale * (xb - 1.0);
                if !z.is_finite() {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                f(z, out);
                let jac = scale * beta * xb / x;
                out.iter_mut().for_each(|v| *v *= jac);
            };
            let mut result = integrate_finite_multi(&mut mapped, dim, 0.0, 1.0, tol);
            // The mapped integrand must vanish at x → 0 if the decay hint holds.
            let mut near = vec![0.0; dim];
            let mut nearer = vec![0.0; dim];
            mapped(1e-6, &mut near);
            mapped(1e-9, &mut nearer);
            let growing = near
                .iter()
                .zip(&nearer)
                .zip(&result.values)
                .any(|((n, nn), v)| nn.abs() > n.abs() && nn.abs() > tol.budget(*v));
            if growing {
                log::debug!("semi-infinite integrand does not decay like z^-{exponent}");
                result.converged = false;
            }
            result
        }
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate_finite<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> QuadratureResult
where
    F: FnMut(f64) -> f64,
{
    integrate_finite_multi(|x, out| out[0] = f(x), 1, a, b, tol).component(0)
}

/// Adaptive integration of `f` over `[a, ∞)`.
///
/// With `decay_hint = Some(p)` the integrand is assumed to decay at least like
/// `z^(-p)`, `p > 1`, and a power-law map is used; otherwise the algebraic map.
/// The whole half-line is mapped, so there is no truncated tail: the quadrature
/// error estimate covers it.
pub fn integrate_semi_infinite<F>(
    mut f: F,
    a: f64,
    tol: Tolerance,
    decay_hint: Option<f64>,
) -> QuadratureResult
where
    F: FnMut(f64) -> f64,
{
    let tail = match decay_hint {
        Some(p) => Tail::PowerLaw {
            exponent: p,
            scale: a.abs().max(1.0),
        },
        None => Tail::Algebraic,
    };
    integrate_semi_infinite_multi(|x, out| out[0] = f(x), 1, a, tol, tail).component(0)
}

/// Integrate over consecutive panels `[p0, p1], [p1, p2], ...`; kinks of the
/// integrand belong on panel edges. Non-increasing neighbours are skipped.
pub fn integrate_panels_multi<F>(
    mut f: F,
    dim: usize,
    points: &[f64],
    tol: Tolerance,
) -> MultiQuadrature
where
    F: FnMut(f64, &mut [f64]),
{
    let mut total = MultiQuadrature::zeros(dim);
    for w in points.windows(2) {
        if w[1] > w[0] {
            let part = integrate_finite_multi(&mut f, dim, w[0], w[1], tol);
            total.accumulate(&part);
        }
    }
    total
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}
