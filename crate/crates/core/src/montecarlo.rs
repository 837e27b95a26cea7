//! Monte Carlo engine. Samples finite-window network realizations with exact
//! antenna geometry and evaluates the SINR of the typical UE.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::channel::{link_probability, sample_fading, AntennaPattern, LinkType};
use crate::error::{Error, Result};
use crate::geometry::{equivalent_distance, ServingContext};
use crate::interference::AlignmentCase;
use crate::network::{AssociationScheme, MisalignmentModel, NetworkConfig};
use crate::outage::Alignment;

pub const DEFAULT_WINDOW_RADIUS: f64 = 5000.0;
pub const DEFAULT_DROPS: u64 = 100_000;

/// Attempts at drawing a non-empty realization before giving up.
const MAX_RESAMPLES: usize = 1000;

/// How the simulated UE picks its serving UAV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssociationMode {
    /// Minimum 3-D distance.
    Cdas,
    /// Maximum `A·d^(-α)`, transmit power ignored.
    MapasStrict,
    /// Maximum `P·A·d^(-α)`.
    MapasFullPower,
}

impl AssociationMode {
    pub fn label(self) -> &'static str {
        match self {
            AssociationMode::Cdas => "cdas",
            AssociationMode::MapasStrict => "mapas-strict",
            AssociationMode::MapasFullPower => "mapas-full-power",
        }
    }
}

impl From<AssociationScheme> for AssociationMode {
    fn from(s: AssociationScheme) -> Self {
        match s {
            AssociationScheme::Cdas => AssociationMode::Cdas,
            AssociationScheme::Mapas => AssociationMode::MapasStrict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavRecord {
    pub x: f64,
    pub y: f64,
    pub link: LinkType,
    pub fading: f64,
    /// Boresight azimuth in `[0, 2π)`.
    pub boresight_azimuth: f64,
    /// Boresight depression below the horizon in `[0, π/2)`.
    pub boresight_elevation: f64,
}

/// Errors on the typical link, all in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TypicalErrors {
    pub ue_azimuth: f64,
    pub ue_elevation: f64,
    pub uav_azimuth: f64,
    pub uav_elevation: f64,
}

impl TypicalErrors {
    pub fn sample(model: &MisalignmentModel, rng: &mut dyn RngCore) -> Self {
        TypicalErrors {
            ue_azimuth: model.ue_azimuth.sample(rng),
            ue_elevation: model.ue_elevation.sample(rng),
            uav_azimuth: model.uav_azimuth.sample(rng),
            uav_elevation: model.uav_elevation.sample(rng),
        }
    }

    pub fn case(&self, uav: &AntennaPattern, ue: &AntennaPattern) -> AlignmentCase {
        let uav_main = self.uav_azimuth.abs() <= 0.5 * uav.width_azimuth
            && self.uav_elevation.abs() <= 0.5 * uav.width_elevation;
        let ue_main = self.ue_azimuth.abs() <= 0.5 * ue.width_azimuth
            && self.ue_elevation.abs() <= 0.5 * ue.width_elevation;
        AlignmentCase::from_lobes(uav_main, ue_main)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub tiers: Vec<Vec<UavRecord>>,
    pub errors: TypicalErrors,
}

impl NetworkRealization {
    pub fn is_empty(&self) -> bool {
        self.tiers.iter().all(Vec::is_empty)
    }

    pub fn len(&self) -> usize {
        self.tiers.iter().map(Vec::len).sum()
    }
}

fn sample_uav<R: Rng>(
    x: f64,
    y: f64,
    height: f64,
    network: &NetworkConfig,
    rng: &mut R,
) -> UavRecord {
    let z = x.hypot(y);
    let link = if rng.gen::<f64>() < link_probability(LinkType::Los, z, height, &network.channel) {
        LinkType::Los
    } else {
        LinkType::Nlos
    };
    UavRecord {
        x,
        y,
        link,
        fading: sample_fading(link, &network.channel, rng),
        boresight_azimuth: rng.gen_range(0.0..TAU),
        boresight_elevation: rng.gen_range(0.0..FRAC_PI_2),
    }
}

fn sample_disk<R: Rng>(
    count: u64,
    radius: f64,
    rng: &mut R,
) -> impl Iterator<Item = (f64, f64)> + '_ {
    (0..count).map(move |_| {
        let rho = radius * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..TAU);
        (rho * phi.cos(), rho * phi.sin())
    })
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

/// One realization of every tier inside a disk of `window_radius` around the
/// typical UE, plus the typical-link error draw.
pub fn sample_realization<R: Rng>(
    network: &NetworkConfig,
    window_radius: f64,
    rng: &mut R,
) -> NetworkRealization {
    let area = PI * window_radius * window_radius;
    let tiers = network
        .tiers
        .iter()
        .map(|tier| {
            let n = poisson_count(tier.density * area, rng);
            let positions: Vec<(f64, f64)> = sample_disk(n, window_radius, rng).collect();
            positions
                .into_iter()
                .map(|(x, y)| sample_uav(x, y, tier.height, network, rng))
                .collect()
        })
        .collect();
    let errors = TypicalErrors::sample(&network.misalignment, rng);
    NetworkRealization { tiers, errors }
}

/// Outcome of one SINR evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropRecord {
    pub sinr: f64,
    pub tier: usize,
    pub link: LinkType,
    /// 3-D serving distance.
    pub distance: f64,
    pub case: AlignmentCase,
}

fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

/// Circular distance between two angles of period `period`.
fn cyclic_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Whether the UE at the origin falls in the main lobe of a UAV at horizontal
/// offset `(x, y)` and height `height`.
pub fn uav_sees_main_lobe(uav: &UavRecord, height: f64, pattern: &AntennaPattern) -> bool {
    let azimuth_to_ue = (-uav.y).atan2(-uav.x);
    let depression = height.atan2(uav.x.hypot(uav.y));
    wrap_angle(azimuth_to_ue - uav.boresight_azimuth).abs() <= 0.5 * pattern.width_azimuth
        && cyclic_gap(depression, uav.boresight_elevation, FRAC_PI_2)
            <= 0.5 * pattern.width_elevation
}

/// UE boresight as (azimuth, elevation) with the elevation kept in `[.., π/2]`
/// by reflecting through the zenith.
fn ue_boresight(azimuth: f64, elevation: f64) -> (f64, f64) {
    if elevation > FRAC_PI_2 {
        (azimuth + PI, PI - elevation)
    } else {
        (azimuth, elevation)
    }
}

fn ue_sees_main_lobe(
    azimuth: f64,
    elevation: f64,
    boresight: (f64, f64),
    pattern: &AntennaPattern,
) -> bool {
    wrap_angle(azimuth - boresight.0).abs() <= 0.5 * pattern.width_azimuth
        && (elevation - boresight.1).abs() <= 0.5 * pattern.width_elevation
}

/// Geometry of a realization that does not depend on the association rule.
struct Prepared<'a> {
    realization: &'a NetworkRealization,
    /// Per UAV: tier, 3-D distance, `A·d^(-α)`, azimuth and elevation seen
    /// from the UE, and the UAV-side main-lobe flag.
    uavs: Vec<(usize, f64, f64, f64, f64, bool)>,
}

impl<'a> Prepared<'a> {
    fn new(realization: &'a NetworkRealization, network: &NetworkConfig) -> Self {
        let p = &network.channel;
        let mut uavs = Vec::with_capacity(realization.len());
        for (k, tier) in realization.tiers.iter().enumerate() {
            let h = network.tiers[k].height;
            let pattern = network.uav_pattern(k);
            for u in tier {
                let z = u.x.hypot(u.y);
                let d = z.hypot(h);
                let gain = p.attenuation(u.link) * d.powf(-p.alpha(u.link));
                uavs.push((
                    k,
                    d,
                    gain,
                    u.y.atan2(u.x),
                    h.atan2(z),
                    uav_sees_main_lobe(u, h, &pattern),
                ));
            }
        }
        Prepared { realization, uavs }
    }

    fn record(&self, i: usize) -> &UavRecord {
        let mut i = i;
        for tier in &self.realization.tiers {
            if i < tier.len() {
                return &tier[i];
            }
            i -= tier.len();
        }
        unreachable!("index within realization")
    }

    fn evaluate(
        &self,
        network: &NetworkConfig,
        errors: &TypicalErrors,
        mode: AssociationMode,
    ) -> Result<DropRecord> {
        let metric = |u: &(usize, f64, f64, f64, f64, bool)| match mode {
            AssociationMode::Cdas => -u.1,
            AssociationMode::MapasStrict => u.2,
            AssociationMode::MapasFullPower => network.tiers[u.0].tx_power * u.2,
        };
        let (serving, best) = self
            .uavs
            .iter()
            .enumerate()
            .max_by(|a, b| metric(a.1).total_cmp(&metric(b.1)))
            .ok_or(Error::EmptyRealization)?;
        let serving_rec = self.record(serving);
        let ue = network.ue_pattern();
        let case = errors.case(&network.uav_pattern(best.0), &ue);
        let signal = network.tiers[best.0].tx_power
            * best.2
            * case.gain(&network.uav_pattern(best.0), &ue)
            * serving_rec.fading;

        let boresight = ue_boresight(best.3 + errors.ue_azimuth, best.4 + errors.ue_elevation);
        let patterns: Vec<AntennaPattern> = (0..network.tiers.len())
            .map(|k| network.uav_pattern(k))
            .collect();
        let mut interference = 0.0;
        for (i, u) in self.uavs.iter().enumerate() {
            if i == serving {
                continue;
            }
            let ue_main = ue_sees_main_lobe(u.3, u.4, boresight, &ue);
            let g = AlignmentCase::from_lobes(u.5, ue_main).gain(&patterns[u.0], &ue);
            interference += network.tiers[u.0].tx_power * u.2 * g * self.record(i).fading;
        }
        Ok(DropRecord {
            sinr: signal / (interference + network.channel.noise_power),
            tier: best.0,
            link: serving_rec.link,
            distance: best.1,
            case,
        })
    }
}

/// Evaluates one drop with the errors drawn in the realization.
pub fn run_drop(
    realization: &NetworkRealization,
    network: &NetworkConfig,
    mode: AssociationMode,
) -> Result<DropRecord> {
    Prepared::new(realization, network).evaluate(network, &realization.errors, mode)
}

/// One association mode and alignment to evaluate on every drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Probe {
    pub mode: AssociationMode,
    pub alignment: Alignment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub drops: u64,
    pub seed: u64,
    pub window_radius: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            drops: DEFAULT_DROPS,
            seed: 0,
            window_radius: DEFAULT_WINDOW_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub estimate: f64,
    /// 95% normal-approximation half-width.
    pub ci_halfwidth: f64,
    pub drops: u64,
    pub seed: u64,
}

impl OutageEstimate {
    pub fn from_counts(failures: u64, drops: u64, seed: u64) -> Self {
        let p = if drops == 0 {
            0.0
        } else {
            failures as f64 / drops as f64
        };
        OutageEstimate {
            estimate: p,
            ci_halfwidth: 1.96 * (p * (1.0 - p) / drops.max(1) as f64).sqrt(),
            drops,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub probe: Probe,
    pub records: Vec<DropRecord>,
    pub seed: u64,
}

impl ProbeResult {
    pub fn outage(&self, threshold: f64) -> OutageEstimate {
        let failures = self.records.iter().filter(|r| r.sinr < threshold).count() as u64;
        OutageEstimate::from_counts(failures, self.records.len() as u64, self.seed)
    }

    /// Drop counts per tier, indexed by link.
    pub fn association_counts(&self, tiers: usize) -> Vec<[u64; 2]> {
        let mut out = vec![[0u64; 2]; tiers];
        for r in &self.records {
            out[r.tier][r.link.index()] += 1;
        }
        out
    }
}

fn drop_rng(seed: u64, drop: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(drop);
    rng
}

fn validate_options(network: &NetworkConfig, opts: &McOptions) -> Result<()> {
    network.validate()?;
    if opts.drops == 0 {
        return Err(Error::InvalidArgument {
            name: "drops",
            value: 0.0,
            reason: "at least one drop is required",
        });
    }
    if !(opts.window_radius > 0.0 && opts.window_radius.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "window_radius",
            value: opts.window_radius,
            reason: "window radius must be positive and finite",
        });
    }
    if network.tiers.iter().all(|t| t.density == 0.0) {
        return Err(Error::EmptyRealization);
    }
    Ok(())
}

/// Runs `opts.drops` drops and evaluates every probe on each of them. Drop
/// `i` always uses RNG stream `i`, so the output does not depend on the
/// number of worker threads.
pub fn simulate(
    network: &NetworkConfig,
    probes: &[Probe],
    opts: &McOptions,
) -> Result<Vec<ProbeResult>> {
    validate_options(network, opts)?;
    log_tail_bound(network, opts.window_radius);
    let per_drop: Vec<Result<Vec<DropRecord>>> = (0..opts.drops)
        .into_par_iter()
        .map(|d| {
            let mut rng = drop_rng(opts.seed, d);
            let mut realization = sample_realization(network, opts.window_radius, &mut rng);
            let mut tries = 1;
            while realization.is_empty() {
                if tries == MAX_RESAMPLES {
                    return Err(Error::EmptyRealization);
                }
                realization = sample_realization(network, opts.window_radius, &mut rng);
                tries += 1;
            }
            let prepared = Prepared::new(&realization, network);
            probes
                .iter()
                .map(|p| {
                    let errors = match p.alignment {
                        Alignment::Imperfect => realization.errors,
                        Alignment::Perfect => TypicalErrors::default(),
                    };
                    prepared.evaluate(network, &errors, p.mode)
                })
                .collect()
        })
        .collect();

    let mut results: Vec<ProbeResult> = probes
        .iter()
        .map(|&probe| ProbeResult {
            probe,
            records: Vec::with_capacity(opts.drops as usize),
            seed: opts.seed,
        })
        .collect();
    for drop in per_drop {
        for (res, rec) in results.iter_mut().zip(drop?) {
            res.records.push(rec);
        }
    }
    Ok(results)
}

/// Outage estimate at the network's SINR threshold, imperfect alignment.
pub fn estimate_outage(
    network: &NetworkConfig,
    mode: AssociationMode,
    opts: &McOptions,
) -> Result<OutageEstimate> {
    let probe = Probe {
        mode,
        alignment: Alignment::Imperfect,
    };
    let res = simulate(network, &[probe], opts)?;
    Ok(res[0].outage(network.sinr_threshold))
}

/// Mean interference beyond the window from LoS main-lobe transmitters, an
/// upper bound on what the truncation discards.
pub fn tail_interference_bound(network: &NetworkConfig, window_radius: f64) -> f64 {
    let p = &network.channel;
    let ue = network.ue_pattern();
    let alpha = p.alpha_los.min(p.alpha_nlos);
    let atten = p.atten_los.max(p.atten_nlos);
    network
        .tiers
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let g = network.uav_pattern(k).main_gain * ue.main_gain;
            let d2 = window_radius * window_radius + t.height * t.height;
            TAU * t.density * t.tx_power * atten * g * d2.powf(1.0 - 0.5 * alpha) / (alpha - 2.0)
        })
        .sum()
}

fn log_tail_bound(network: &NetworkConfig, window_radius: f64) {
    let bound = tail_interference_bound(network, window_radius);
    log::info!(
        "window {window_radius} m: interference beyond window bounded by {bound:e} W ({:.3e} x noise)",
        bound / network.channel.noise_power
    );
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Empirical `E[exp(-s I)]` conditioned on the serving state in `ctx`: the
/// serving UAV sits at azimuth 0 and interferers closer than the association
/// exclusion radius are removed.
pub fn empirical_laplace(
    network: &NetworkConfig,
    scheme: AssociationScheme,
    ctx: &ServingContext,
    s_values: &[f64],
    samples: u64,
    window_radius: f64,
    seed: u64,
) -> Vec<LaplaceEstimate> {
    let ue = network.ue_pattern();
    let boresight = ue_boresight(0.0, ctx.boresight_elevation());
    let area = PI * window_radius * window_radius;
    let sums = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(seed, i);
            let mut interference = 0.0;
            for (k, tier) in network.tiers.iter().enumerate() {
                let pattern = network.uav_pattern(k);
                let excl = [LinkType::Los, LinkType::Nlos].map(|l| {
                    equivalent_distance(
                        scheme,
                        ctx.distance,
                        ctx.link,
                        l,
                        tier.height,
                        &network.channel,
                    )
                });
                let n = poisson_count(tier.density * area, &mut rng);
                let positions: Vec<(f64, f64)> = sample_disk(n, window_radius, &mut rng).collect();
                for (x, y) in positions {
                    let u = sample_uav(x, y, tier.height, network, &mut rng);
                    let z = x.hypot(y);
                    if z < excl[u.link.index()] {
                        continue;
                    }
                    let d = z.hypot(tier.height);
                    let ue_main =
                        ue_sees_main_lobe(y.atan2(x), tier.height.atan2(z), boresight, &ue);
                    let uav_main = uav_sees_main_lobe(&u, tier.height, &pattern);
                    let g = AlignmentCase::from_lobes(uav_main, ue_main).gain(&pattern, &ue);
                    let p = &network.channel;
                    interference += tier.tx_power
                        * p.attenuation(u.link)
                        * d.powf(-p.alpha(u.link))
                        * g
                        * u.fading;
                }
            }
            s_values
                .iter()
                .map(|s| (-s * interference).exp())
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>();
    let n = samples as f64;
    (0..s_values.len())
        .map(|i| {
            let mean = sums.iter().map(|row| row[i]).sum::<f64>() / n;
            let var =
                sums.iter().map(|row| (row[i] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            LaplaceEstimate {
                mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect()
}

/// Fraction of random UAV placements and boresights for which the UE lies in
/// the UAV main lobe.
pub fn mainlobe_fraction(pattern: &AntennaPattern, height: f64, draws: u64, seed: u64) -> f64 {
    let mut rng = drop_rng(seed, 0);
    let mut hits = 0u64;
    for _ in 0..draws {
        let rho = DEFAULT_WINDOW_RADIUS * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..TAU);
        let uav = UavRecord {
            x: rho * phi.cos(),
            y: rho * phi.sin(),
            link: LinkType::Los,
            fading: 1.0,
            boresight_azimuth: rng.gen_range(0.0..TAU),
            boresight_elevation: rng.gen_range(0.0..FRAC_PI_2),
        };
        hits += uav_sees_main_lobe(&uav, height, pattern) as u64;
    }
    hits as f64 / draws as f64
}
