//! Aggregate interference: decomposition of each tier into four alignment
//! cases, the conditional Laplace transform and its derivatives, and the
//! coverage probability under integer-shape Gamma fading.
//!
//! Derivatives are carried in scaled form, `s^n · dⁿ/dsⁿ`, which keeps all
//! orders O(1) so one relative tolerance serves the whole vector integrand.

use std::f64::consts::PI;

use crate::channel::{link_probability, AntennaPattern, ChannelParams, LinkType};
use crate::error::{Error, Result};
use crate::geometry::{
    equivalent_distance, projection_region, ProjectionRegion, Radius, ServingContext,
};
use crate::network::{AssociationScheme, NetworkConfig};
use crate::quadrature::{
    integrate_finite_multi, integrate_semi_infinite_multi, MultiQuadrature, QuadratureResult, Tail,
    Tolerance,
};

/// Probability that a uniformly oriented UAV points its main lobe at the UE.
pub fn mainlobe_probability(uav_pattern: &AntennaPattern) -> f64 {
    (uav_pattern.width_azimuth * uav_pattern.width_elevation / (PI * PI)).min(1.0)
}

/// Beam alignment between an interfering (or serving) UAV and the UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignmentCase {
    /// Main lobe at both ends.
    A1,
    /// UAV main lobe, UE side lobe.
    A2,
    /// UAV side lobe, UE main lobe.
    A3,
    /// Side lobe at both ends.
    A4,
}

impl AlignmentCase {
    pub const ALL: [AlignmentCase; 4] = [
        AlignmentCase::A1,
        AlignmentCase::A2,
        AlignmentCase::A3,
        AlignmentCase::A4,
    ];

    pub fn from_lobes(uav_main: bool, ue_main: bool) -> Self {
        match (uav_main, ue_main) {
            (true, true) => AlignmentCase::A1,
            (true, false) => AlignmentCase::A2,
            (false, true) => AlignmentCase::A3,
            (false, false) => AlignmentCase::A4,
        }
    }

    pub fn index(self) -> usize {
        match self {
            AlignmentCase::A1 => 0,
            AlignmentCase::A2 => 1,
            AlignmentCase::A3 => 2,
            AlignmentCase::A4 => 3,
        }
    }

    pub fn uav_main(self) -> bool {
        matches!(self, AlignmentCase::A1 | AlignmentCase::A2)
    }

    pub fn ue_main(self) -> bool {
        matches!(self, AlignmentCase::A1 | AlignmentCase::A3)
    }

    pub fn gain(self, uav: &AntennaPattern, ue: &AntennaPattern) -> f64 {
        let v = if self.uav_main() {
            uav.main_gain
        } else {
            uav.side_gain
        };
        let u = if self.ue_main() {
            ue.main_gain
        } else {
            ue.side_gain
        };
        v * u
    }
}

/// One of the four thinned interferer processes of a tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposedProcess {
    pub tier_index: usize,
    pub case: AlignmentCase,
    pub density: f64,
    /// `true` for processes living inside the UE main-lobe footprint.
    pub inside_projection: bool,
}

pub fn decomposed_processes(network: &NetworkConfig, tier_index: usize) -> [DecomposedProcess; 4] {
    let tier = &network.tiers[tier_index];
    let ptm = mainlobe_probability(&tier.pattern());
    AlignmentCase::ALL.map(|case| DecomposedProcess {
        tier_index,
        case,
        density: if case.uav_main() { ptm } else { 1.0 - ptm } * tier.density,
        inside_projection: case.ue_main(),
    })
}

/// `(m / (m + s·A·P·G·d^(-α)))^m` for an interferer of `tier` in `case` at
/// horizontal distance `z`.
pub fn fading_laplace_factor(
    network: &NetworkConfig,
    tier_index: usize,
    case: AlignmentCase,
    link: LinkType,
    z: f64,
    s: f64,
) -> f64 {
    let tier = &network.tiers[tier_index];
    let params = &network.channel;
    let gain = case.gain(&tier.pattern(), &network.ue_pattern());
    let d = (z * z + tier.height * tier.height).sqrt();
    let u = params.attenuation(link) * tier.tx_power * gain * d.powf(-params.alpha(link));
    let m = params.nakagami_m(link) as f64;
    (m / (m + s * u)).powi(params.nakagami_m(link) as i32)
}

/// Scaled derivatives `c^n · dⁿ/dsⁿ (1 − (m/(m+su))^m)` for `n = 0..out.len()`.
///
/// `scale` is usually `s` itself; pass 1 to get raw derivatives.
pub fn one_minus_mgf_derivatives(m: u32, u: f64, s: f64, scale: f64, out: &mut [f64]) {
    let mf = m as f64;
    let x = s * u;
    let denom = mf + x;
    let q = mf / denom;
    let mut mgf = 1.0;
    let mut geometric = 0.0;
    for _ in 0..m {
        geometric += mgf;
        mgf *= q;
    }
    if let Some(first) = out.first_mut() {
        // 1 − q^m = (1 − q)(1 + q + … + q^(m−1)), exact for small s·u
        *first = (x / denom) * geometric;
    }
    let t = scale * u / denom;
    let mut c = mgf;
    let mut sign = 1.0;
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        c *= (mf + (n - 1) as f64) * t;
        sign = -sign;
        *slot = -sign * c;
    }
}

/// Scaled derivatives of the log-Laplace transform at several arguments.
///
/// `value(i, n)` is `s_i^n · Q^(n)(s_i)`, or the raw derivative when `s_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLaplaceDerivatives {
    pub s: Vec<f64>,
    pub orders: usize,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub converged: bool,
}

impl LogLaplaceDerivatives {
    fn zeros(s: &[f64], max_order: usize) -> Self {
        let dim = s.len() * (max_order + 1);
        LogLaplaceDerivatives {
            s: s.to_vec(),
            orders: max_order + 1,
            values: vec![0.0; dim],
            errors: vec![0.0; dim],
            converged: true,
        }
    }

    fn add(&mut self, part: &MultiQuadrature) {
        for (i, (v, e)) in part.values.iter().zip(&part.errors).enumerate() {
            self.values[i] += v;
            self.errors[i] += e;
        }
        self.converged &= part.converged;
    }

    pub fn scale(&self, i: usize) -> f64 {
        scale_of(self.s[i])
    }

    pub fn value(&self, i: usize, n: usize) -> f64 {
        self.values[i * self.orders + n]
    }

    pub fn error(&self, i: usize, n: usize) -> f64 {
        self.errors[i * self.orders + n]
    }

    /// Unscaled `Q^(n)(s_i)`.
    pub fn raw(&self, i: usize, n: usize) -> f64 {
        self.value(i, n) / self.scale(i).powi(n as i32)
    }

    /// Sum of two evaluations on the same arguments.
    pub fn combined(&self, other: &LogLaplaceDerivatives) -> LogLaplaceDerivatives {
        let mut out = self.clone();
        for i in 0..out.values.len() {
            out.values[i] += other.values[i];
            out.errors[i] += other.errors[i];
        }
        out.converged &= other.converged;
        out
    }
}

fn scale_of(s: f64) -> f64 {
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
struct TierTerms {
    height: f64,
    density: f64,
    ptm: f64,
    /// `A_η · P · G_j` indexed by `[link][case]`.
    coefficient: [[f64; 4]; 2],
}

/// Which part of the interference integral to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    /// Whole plane outside the exclusion disc, with UE side-lobe gains.
    Base,
    /// Correction inside the UE main-lobe footprint (main minus side gains).
    Ring,
}

/// Conditional Laplace transform of the aggregate interference for one
/// network and association scheme.
///
/// The exponent splits as `Q = Q_base + Q_ring`: the base part depends on
/// the serving tier, link and distance only, the ring part also on the UE
/// elevation error. Callers averaging over that error reuse the base part.
#[derive(Debug, Clone)]
pub struct LaplaceEvaluator {
    params: ChannelParams,
    scheme: AssociationScheme,
    ue: AntennaPattern,
    tiers: Vec<TierTerms>,
    heights: Vec<f64>,
    tol: Tolerance,
    alpha_min: f64,
}

impl LaplaceEvaluator {
    pub fn new(network: &NetworkConfig, scheme: AssociationScheme) -> Self {
        let ue = network.ue_pattern();
        let params = network.channel.clone();
        let tiers = network
            .tiers
            .iter()
            .map(|t| {
                let uav = t.pattern();
                let mut coefficient = [[0.0; 4]; 2];
                for link in LinkType::ALL {
                    for case in AlignmentCase::ALL {
                        coefficient[link.index()][case.index()] =
                            params.attenuation(link) * t.tx_power * case.gain(&uav, &ue);
                    }
                }
                TierTerms {
                    height: t.height,
                    density: t.density,
                    ptm: mainlobe_probability(&uav),
                    coefficient,
                }
            })
            .collect();
        LaplaceEvaluator {
            alpha_min: params.alpha_los.min(params.alpha_nlos),
            params,
            scheme,
            ue,
            tiers,
            heights: network.tiers.iter().map(|t| t.height).collect(),
            tol: Tolerance::INNER,
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn scheme(&self) -> AssociationScheme {
        self.scheme
    }

    /// Exclusion radius for `link` interferers on tier `k`.
    pub fn exclusion_radius(&self, ctx: &ServingContext, k: usize, link: LinkType) -> f64 {
        equivalent_distance(
            self.scheme,
            ctx.distance,
            ctx.link,
            link,
            self.heights[k],
            &self.params,
        )
    }

    pub fn region(&self, ctx: &ServingContext, k: usize) -> ProjectionRegion {
        projection_region(ctx, self.heights[k], &self.ue)
    }

    /// `s^n Q^(n)(s)` for every `s` in `s_values` and `n ≤ max_order`.
    pub fn log_laplace(
        &self,
        ctx: &ServingContext,
        s_values: &[f64],
        max_order: usize,
    ) -> LogLaplaceDerivatives {
        self.base(ctx, s_values, max_order)
            .combined(&self.ring(ctx, s_values, max_order))
    }

    /// Part of the exponent that does not depend on the UE elevation error.
    pub fn base(
        &self,
        ctx: &ServingContext,
        s_values: &[f64],
        max_order: usize,
    ) -> LogLaplaceDerivatives {
        let mut out = LogLaplaceDerivatives::zeros(s_values, max_order);
        for k in 0..self.tiers.len() {
            let zeq = [
                self.exclusion_radius(ctx, k, LinkType::Los),
                self.exclusion_radius(ctx, k, LinkType::Nlos),
            ];
            let lo = zeq[0].min(zeq[1]);
            let part = self.integrate(
                k,
                Part::Base,
                zeq,
                lo,
                Radius::Unbounded,
                s_values,
                max_order,
            );
            out.add(&part);
        }
        out
    }

    /// Correction from interferers inside the UE main-lobe footprint.
    pub fn ring(
        &self,
        ctx: &ServingContext,
        s_values: &[f64],
        max_order: usize,
    ) -> LogLaplaceDerivatives {
        let mut out = LogLaplaceDerivatives::zeros(s_values, max_order);
        for k in 0..self.tiers.len() {
            let region = self.region(ctx, k);
            let Radius::Finite(zin) = region.inner_radius else {
                continue;
            };
            let zeq = [
                self.exclusion_radius(ctx, k, LinkType::Los),
                self.exclusion_radius(ctx, k, LinkType::Nlos),
            ];
            let lo = zin.max(zeq[0].min(zeq[1]));
            if !region.outer_radius.exceeds(lo) {
                continue;
            }
            let part = self.integrate(
                k,
                Part::Ring,
                zeq,
                lo,
                region.outer_radius,
                s_values,
                max_order,
            );
            out.add(&part);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn integrate(
        &self,
        k: usize,
        part: Part,
        zeq: [f64; 2],
        lo: f64,
        hi: Radius,
        s_values: &[f64],
        max_order: usize,
    ) -> MultiQuadrature {
        let orders = max_order + 1;
        let dim = s_values.len() * orders;
        let mut scratch = vec![0.0; orders];
        let mut f = |z: f64, out: &mut [f64]| {
            self.integrand(k, part, zeq, z, s_values, orders, &mut scratch, out);
        };
        let mut edges: Vec<f64> = vec![lo];
        for e in zeq {
            if e > lo && hi.exceeds(e) {
                edges.push(e);
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut total = MultiQuadrature::zeros(dim);
        match hi {
            Radius::Finite(end) => {
                edges.push(end);
                for w in edges.windows(2) {
                    if w[1] > w[0] {
                        total
                            .accumulate(&integrate_finite_multi(&mut f, dim, w[0], w[1], self.tol));
                    }
                }
            }
            Radius::Unbounded => {
                for w in edges.windows(2) {
                    if w[1] > w[0] {
                        total
                            .accumulate(&integrate_finite_multi(&mut f, dim, w[0], w[1], self.tol));
                    }
                }
                let start = *edges.last().unwrap();
                let tail = Tail::PowerLaw {
                    exponent: self.alpha_min - 1.0,
                    scale: start.max(self.tiers[k].height),
                };
                total.accumulate(&integrate_semi_infinite_multi(
                    &mut f, dim, start, self.tol, tail,
                ));
            }
        }
        total
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn integrand(
        &self,
        k: usize,
        part: Part,
        zeq: [f64; 2],
        z: f64,
        s_values: &[f64],
        orders: usize,
        scratch: &mut [f64],
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let tier = &self.tiers[k];
        let d2 = z * z + tier.height * tier.height;
        let ptm = tier.ptm;
        for link in LinkType::ALL {
            let li = link.index();
            if z < zeq[li] {
                continue;
            }
            let p = link_probability(link, z, tier.height, &self.params);
            let path = d2.powf(-0.5 * self.params.alpha(link));
            let m = self.params.nakagami_m(link);
            let c = &tier.coefficient[li];
            let (weight, terms): (f64, [(usize, f64); 4]) = match part {
                Part::Base => (2.0 * PI, [(1, ptm), (3, 1.0 - ptm), (0, 0.0), (2, 0.0)]),
                Part::Ring => (
                    self.ue.width_azimuth,
                    [(0, ptm), (1, -ptm), (2, 1.0 - ptm), (3, -(1.0 - ptm))],
                ),
            };
            let pref = -tier.density * weight * p * z;
            for (i, &s) in s_values.iter().enumerate() {
                let scale = scale_of(s);
                let slot = &mut out[i * orders..(i + 1) * orders];
                for &(case, w) in &terms {
                    if w == 0.0 {
                        continue;
                    }
                    one_minus_mgf_derivatives(m, c[case] * path, s, scale, scratch);
                    for (o, d) in slot.iter_mut().zip(scratch.iter()) {
                        *o += pref * w * d;
                    }
                }
            }
        }
    }
}

/// `s^t F^(t)(s)` for `t ≤ q.len() - 1`, where `F = exp(Q_tot)` and `q[n]`
/// holds `s^n Q_tot^(n)(s)`.
pub fn exp_derivatives(q: &[f64]) -> Vec<f64> {
    let mut f = Vec::with_capacity(q.len());
    f.push(q[0].exp());
    for t in 1..q.len() {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..t {
            acc += binom * q[t - i] * f[i];
            binom = binom * (t - 1 - i) as f64 / (i + 1) as f64;
        }
        f.push(acc);
    }
    f
}

/// Adds the noise term to scaled log-Laplace derivatives at argument `s`.
pub fn with_noise(q: &[f64], s: f64, noise_power: f64) -> Vec<f64> {
    let scale = scale_of(s);
    let mut out = q.to_vec();
    out[0] -= s * noise_power;
    if out.len() > 1 {
        out[1] -= scale * noise_power;
    }
    out
}

/// `Σ_t (−s)^t/t! · F^(t)(s)` from scaled derivatives of `Q_tot`.
///
/// Every partial sum must stay within `[−1e-6, 1 + 1e-6]`; leaving that
/// range means the quadrature behind `q_tot` cannot be trusted.
pub fn coverage_from_scaled(q_tot: &[f64], s: f64) -> Result<f64> {
    let f = exp_derivatives(q_tot);
    let mut sum: f64 = 0.0;
    let mut factorial = 1.0;
    let sign_unit: f64 = if s > 0.0 { -1.0 } else { 0.0 };
    for (t, ft) in f.iter().enumerate() {
        if t > 0 {
            factorial *= t as f64;
        }
        let term = if t == 0 {
            *ft
        } else {
            sign_unit.powi(t as i32) * ft / factorial
        };
        sum += term;
        if !(-1e-6..=1.0 + 1e-6).contains(&sum) || !sum.is_finite() {
            return Err(Error::CoverageOutOfRange {
                value: sum,
                order: t,
                s,
            });
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Log of the conditional Laplace transform of the aggregate interference.
pub fn log_laplace(
    s: f64,
    ctx: &ServingContext,
    network: &NetworkConfig,
    scheme: AssociationScheme,
) -> QuadratureResult {
    let q = LaplaceEvaluator::new(network, scheme).log_laplace(ctx, &[s], 0);
    QuadratureResult {
        value: q.value(0, 0),
        error_estimate: q.error(0, 0),
        evaluations: 1,
        converged: q.converged,
    }
}

/// Raw derivatives `dᵗ/dsᵗ [exp(−sσ²) L(s)]` for `t ≤ max_order`.
pub fn laplace_derivatives(
    s: f64,
    max_order: usize,
    ctx: &ServingContext,
    network: &NetworkConfig,
    scheme: AssociationScheme,
) -> Vec<f64> {
    let q = LaplaceEvaluator::new(network, scheme).log_laplace(ctx, &[s], max_order);
    let scaled: Vec<f64> = (0..=max_order).map(|n| q.value(0, n)).collect();
    let f = exp_derivatives(&with_noise(&scaled, s, network.channel.noise_power));
    let scale = scale_of(s);
    f.iter()
        .enumerate()
        .map(|(t, v)| v / scale.powi(t as i32))
        .collect()
}

/// Conditional coverage probability given the serving state in `ctx`.
pub fn coverage_derivative_sum(
    s: f64,
    t_max: usize,
    ctx: &ServingContext,
    network: &NetworkConfig,
    scheme: AssociationScheme,
) -> Result<f64> {
    let q = LaplaceEvaluator::new(network, scheme).log_laplace(ctx, &[s], t_max);
    let scaled: Vec<f64> = (0..=t_max).map(|n| q.value(0, n)).collect();
    coverage_from_scaled(&with_noise(&scaled, s, network.channel.noise_power), s)
}

/// Term-by-term evaluation of the log-Laplace transform: one integral per
/// tier, alignment case, link type and region segment, with the segment
/// limits taken literally and `∫_a^b = 0` whenever `a ≥ b`. Much slower than
/// [`LaplaceEvaluator`]; kept as an independent cross-check.
pub mod reference {
    use super::*;
    use crate::quadrature::{integrate_finite, integrate_semi_infinite};

    pub fn log_laplace(
        s: f64,
        ctx: &ServingContext,
        network: &NetworkConfig,
        scheme: AssociationScheme,
    ) -> f64 {
        let params = &network.channel;
        let ue = network.ue_pattern();
        let theta = ue.width_azimuth;
        let tol = Tolerance::new(1e-9, 1e-14);
        let mut total = 0.0;
        for (k, tier) in network.tiers.iter().enumerate() {
            let region = projection_region(ctx, tier.height, &ue);
            for process in decomposed_processes(network, k) {
                for link in LinkType::ALL {
                    let zeq = equivalent_distance(
                        scheme,
                        ctx.distance,
                        ctx.link,
                        link,
                        tier.height,
                        params,
                    );
                    let gain = process.case.gain(&network.uav_pattern(k), &ue);
                    let m = params.nakagami_m(link) as f64;
                    let integrand = |z: f64| {
                        let d = (z * z + tier.height * tier.height).sqrt();
                        let su = s
                            * params.attenuation(link)
                            * tier.tx_power
                            * gain
                            * d.powf(-params.alpha(link));
                        // 1 − (1 + su/m)^(−m) without cancellation
                        -(-m * (su / m).ln_1p()).exp_m1()
                            * link_probability(link, z, tier.height, params)
                            * z
                    };
                    let segment = |a: f64, b: Radius| -> f64 {
                        match b {
                            Radius::Finite(b) if a >= b => 0.0,
                            Radius::Finite(b) => integrate_finite(integrand, a, b, tol).value,
                            Radius::Unbounded => {
                                integrate_semi_infinite(
                                    integrand,
                                    a,
                                    tol,
                                    Some(params.alpha(link) - 1.0),
                                )
                                .value
                            }
                        }
                    };
                    let (zin, zout) = match region.inner_radius {
                        Radius::Finite(zin) => (zin, region.outer_radius),
                        // empty footprint: the ring segments vanish
                        Radius::Unbounded => (f64::INFINITY, Radius::Finite(f64::INFINITY)),
                    };
                    let exponent = if process.inside_projection {
                        if zin.is_infinite() {
                            0.0
                        } else {
                            theta * segment(zin.max(zeq), zout.max_with(zeq))
                        }
                    } else {
                        let full = (2.0 * PI - theta) * segment(zeq, Radius::Unbounded);
                        let inner = if zin.is_infinite() {
                            theta * segment(zeq, Radius::Unbounded)
                        } else {
                            theta * segment(zin.min(zeq), Radius::Finite(zin))
                        };
                        let outer = match zout {
                            Radius::Finite(b) if b.is_infinite() => 0.0,
                            _ if zin.is_infinite() => 0.0,
                            Radius::Finite(b) => theta * segment(b.max(zeq), Radius::Unbounded),
                            Radius::Unbounded => 0.0,
                        };
                        full + inner + outer
                    };
                    total -= process.density * exponent;
                }
            }
        }
        total
    }
}
