//! Cross-validation of the analytical engine against Monte Carlo.

use std::fmt;

use uav_outage::channel::LinkType;
use uav_outage::geometry::ServingContext;
use uav_outage::interference::{AlignmentCase, LaplaceEvaluator};
use uav_outage::montecarlo::{empirical_laplace, simulate, McOptions, Probe, ProbeResult};
use uav_outage::network::{AssociationScheme, NetworkConfig};
use uav_outage::outage::{case_probabilities, Alignment, OutageModel};
use uav_outage::quadrature::{integrate_finite, Tolerance};
use uav_outage::serving::ServingModel;

use crate::config::ExperimentSpec;
use crate::CliError;

pub const OUTAGE_TOL: f64 = 0.03;
pub const SERVING_TV_TOL: f64 = 0.02;
pub const SERVING_BINS: usize = 50;
pub const LAPLACE_TOL: f64 = 0.01;
pub const CASE_TOL: f64 = 0.01;
/// Slack added to the 3σ association bound for quadrature and window effects.
pub const ASSOCIATION_SLACK: f64 = 0.002;
const MAX_LAPLACE_SAMPLES: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Sampling noise alone could exceed the tolerance.
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub simulated: f64,
    pub analytical: f64,
    /// Distance between the two; absolute difference unless the check says otherwise.
    pub discrepancy: f64,
    pub tolerance: f64,
    /// 95% sampling noise of the simulated side.
    pub noise: f64,
    pub status: Status,
}

/// How sampling noise enters the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gate {
    /// `noise` is a symmetric 95% interval. A noisy check still fails when
    /// the miss exceeds the tolerance by twice the noise.
    Interval,
    /// `noise` is the expected value of the statistic itself under sampling
    /// alone, so a noisy run never fails.
    Bias,
}

impl Check {
    fn new(
        name: String,
        simulated: f64,
        analytical: f64,
        discrepancy: f64,
        tolerance: f64,
        noise: f64,
        gate: Gate,
    ) -> Self {
        let status = if gate == Gate::Interval && discrepancy - 2.0 * noise > tolerance {
            Status::Fail
        } else if noise > 0.5 * tolerance {
            Status::Inconclusive
        } else if discrepancy <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Check {
            name,
            simulated,
            analytical,
            discrepancy,
            tolerance,
            noise,
            status,
        }
    }

    fn absolute(name: String, simulated: f64, analytical: f64, tolerance: f64, noise: f64) -> Self {
        Check::new(
            name,
            simulated,
            analytical,
            (simulated - analytical).abs(),
            tolerance,
            noise,
            Gate::Interval,
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<12} {:<40} mc={:.5} analytical={:.5} diff={:.5} tol={:.4} margin={:+.5} noise={:.5}",
            self.status.to_string(),
            self.name,
            self.simulated,
            self.analytical,
            self.discrepancy,
            self.tolerance,
            self.tolerance - self.discrepancy,
            self.noise
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn passed(&self) -> bool {
        self.count(Status::Fail) == 0
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(
            f,
            "{} passed, {} failed, {} inconclusive",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Inconclusive)
        )
    }
}

fn binomial_noise(p: f64, n: usize) -> f64 {
    1.96 * (p * (1.0 - p) / n.max(1) as f64).sqrt()
}

/// Bin masses of the analytical serving-distance density on `edges`; the
/// last bin also takes everything beyond the last edge.
pub fn serving_histogram(
    model: &ServingModel,
    scheme: AssociationScheme,
    tiers: usize,
    edges: &[f64],
) -> Vec<f64> {
    let density = |r: f64| -> f64 {
        (0..tiers)
            .flat_map(|k| LinkType::ALL.map(|l| (k, l)))
            .map(|(k, l)| model.pdf(scheme, k, l, r))
            .sum()
    };
    let mut masses: Vec<f64> = edges
        .windows(2)
        .map(|w| integrate_finite(density, w[0], w[1], Tolerance::new(1e-8, 1e-12)).value)
        .collect();
    let inside: f64 = masses.iter().sum();
    if let Some(last) = masses.last_mut() {
        *last += (1.0 - inside).max(0.0);
    }
    masses
}

/// Total-variation distance between the simulated serving distances and the
/// analytical density on `bins` equal-width bins. Also returns the expected
/// distance from sampling noise alone.
pub fn serving_tv(
    network: &NetworkConfig,
    scheme: AssociationScheme,
    records: &ProbeResult,
    bins: usize,
) -> (f64, f64) {
    let mut d: Vec<f64> = records.records.iter().map(|r| r.distance).collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let lo = network
        .tiers
        .iter()
        .map(|t| t.height)
        .fold(f64::INFINITY, f64::min);
    let hi = d[((n as f64 * 0.999) as usize).min(n - 1)].max(lo * 1.5);
    let edges: Vec<f64> = (0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect();
    let model = ServingModel::new(&network.with_scheme(scheme));
    let want = serving_histogram(&model, scheme, network.tiers.len(), &edges);
    let mut got = vec![0.0; bins];
    for x in d {
        let i = (((x - lo) / (hi - lo)) * bins as f64)
            .floor()
            .clamp(0.0, (bins - 1) as f64) as usize;
        got[i] += 1.0 / n as f64;
    }
    let tv = 0.5
        * got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    let noise = 0.5
        * want
            .iter()
            .map(|p| (2.0 * p / (std::f64::consts::PI * n as f64)).sqrt())
            .sum::<f64>();
    (tv, noise)
}

/// Runs the whole battery on the base network of `spec`.
pub fn validate(spec: &ExperimentSpec) -> Result<Report, CliError> {
    spec.validate()?;
    let network = spec.network.build()?;
    let mc_network = spec.mc_overrides.apply(&network);
    let opts = McOptions {
        drops: spec.run.drops,
        seed: spec.run.seed,
        window_radius: spec.run.window_m,
    };
    let schemes = [AssociationScheme::Mapas, AssociationScheme::Cdas];
    let alignments = [Alignment::Imperfect, Alignment::Perfect];
    let probes: Vec<Probe> = schemes
        .iter()
        .flat_map(|&s| {
            alignments.iter().map(move |&alignment| Probe {
                mode: spec.run.mode(s),
                alignment,
            })
        })
        .collect();
    let sims = simulate(&mc_network, &probes, &opts)?;
    let mut report = Report::default();
    let t = network.sinr_threshold;

    for (i, probe) in probes.iter().enumerate() {
        let scheme = schemes[i / alignments.len()];
        let model = OutageModel::new(&network.with_scheme(scheme))?;
        let analytical = model.outage_with(probe.alignment)?.outage;
        let e = sims[i].outage(t);
        report.checks.push(Check::absolute(
            format!("outage {scheme} {}", probe.alignment.label()),
            e.estimate,
            analytical,
            OUTAGE_TOL,
            e.ci_halfwidth,
        ));
    }

    for (j, &scheme) in schemes.iter().enumerate() {
        let res = &sims[j * alignments.len()];
        let (tv, noise) = serving_tv(&network, scheme, res, SERVING_BINS);
        report.checks.push(Check::new(
            format!("serving-distance TV {scheme}"),
            tv,
            0.0,
            tv,
            SERVING_TV_TOL,
            noise,
            Gate::Bias,
        ));

        let model = ServingModel::new(&network.with_scheme(scheme));
        let counts = res.association_counts(network.tiers.len());
        let n = res.records.len();
        for (k, row) in counts.iter().enumerate() {
            for link in LinkType::ALL {
                let p = model.association_probability(scheme, k, link).value;
                let f = row[link.index()] as f64 / n as f64;
                let sigma = (p * (1.0 - p) / n as f64).sqrt();
                report.checks.push(Check::new(
                    format!("association {scheme} tier {k} {}", link.label()),
                    f,
                    p,
                    (f - p).abs(),
                    3.0 * sigma + ASSOCIATION_SLACK,
                    0.0,
                    Gate::Interval,
                ));
            }
        }
    }

    // typical-link alignment cases under MAPAS with steering errors
    let res = &sims[0];
    let n = res.records.len();
    let serving = ServingModel::new(&network);
    let mut expected = [0.0; 4];
    for k in 0..network.tiers.len() {
        let share: f64 = LinkType::ALL
            .iter()
            .map(|&l| serving.association_probability(network.scheme, k, l).value)
            .sum();
        let p = case_probabilities(
            &network.misalignment,
            &network.ue_pattern(),
            &network.uav_pattern(k),
        );
        for j in 0..4 {
            expected[j] += share * p[j];
        }
    }
    for case in AlignmentCase::ALL {
        let f = res.records.iter().filter(|r| r.case == case).count() as f64 / n as f64;
        let p = expected[case.index()];
        report.checks.push(Check::absolute(
            format!("case probability {case:?}"),
            f,
            p,
            CASE_TOL,
            binomial_noise(p, n),
        ));
    }

    let samples = spec.run.drops.clamp(2, MAX_LAPLACE_SAMPLES);
    let spots = [
        (0usize, LinkType::Los, 220.0, 0.0),
        (1, LinkType::Los, 280.0, 0.1),
    ];
    for &scheme in &schemes {
        let evaluator = LaplaceEvaluator::new(&network, scheme);
        for &(k, link, r, delta) in &spots {
            let tier = &network.tiers[k];
            let ctx = ServingContext::new(k, link, r, tier.height, delta);
            let gain = AlignmentCase::A1.gain(&network.uav_pattern(k), &network.ue_pattern());
            let p = &network.channel;
            let s = p.nakagami_m(link) as f64 * t * r.powf(p.alpha(link))
                / (tier.tx_power * p.attenuation(link) * gain);
            let analytical = evaluator.log_laplace(&ctx, &[s], 0).value(0, 0).exp();
            let emp = empirical_laplace(
                &mc_network,
                scheme,
                &ctx,
                &[s],
                samples,
                spec.run.window_m,
                spec.run.seed,
            )[0];
            report.checks.push(Check::absolute(
                format!("laplace {scheme} tier {k} r={r} delta={delta}"),
                emp.mean,
                analytical,
                LAPLACE_TOL,
                1.96 * emp.std_error,
            ));
        }
    }
    Ok(report)
}
