//! Outage probability: typical-link alignment cases, averaging over the
//! beamsteering errors, and the sum over serving tiers and link types.

use std::cell::RefCell;
use std::f64::consts::FRAC_PI_2;

use crate::channel::{AntennaPattern, LinkType};
use crate::error::{Error, Result};
use crate::geometry::ServingContext;
use crate::interference::{
    coverage_from_scaled, with_noise, AlignmentCase, LaplaceEvaluator, LogLaplaceDerivatives,
};
use crate::network::{AssociationScheme, ErrorDistribution, MisalignmentModel, NetworkConfig};
use crate::quadrature::{gauss_legendre, integrate_panels_multi, Tolerance};
use crate::serving::ServingModel;

/// Gauss–Legendre nodes per panel of the UE elevation-error integral.
pub const DEFAULT_ERROR_NODES: usize = 16;

/// Probability that an error stays inside a main lobe of `width`.
pub fn omega(dist: &dyn ErrorDistribution, width: f64) -> f64 {
    (dist.cdf(0.5 * width) - dist.cdf(-0.5 * width) + atom_at(dist, -0.5 * width)).clamp(0.0, 1.0)
}

/// Mass sitting exactly at `x`, which a right-continuous CDF difference misses
/// at the left window edge.
fn atom_at(dist: &dyn ErrorDistribution, x: f64) -> f64 {
    match dist.atom() {
        Some(a) if a == x => 1.0,
        _ => 0.0,
    }
}

/// Probabilities of the four alignment cases on the typical link.
pub fn case_probabilities(
    model: &MisalignmentModel,
    ue: &AntennaPattern,
    uav: &AntennaPattern,
) -> [f64; 4] {
    let uav_in = omega(model.uav_azimuth.as_ref(), uav.width_azimuth)
        * omega(model.uav_elevation.as_ref(), uav.width_elevation);
    let ue_in = omega(model.ue_azimuth.as_ref(), ue.width_azimuth)
        * omega(model.ue_elevation.as_ref(), ue.width_elevation);
    [
        uav_in * ue_in,
        uav_in * (1.0 - ue_in),
        (1.0 - uav_in) * ue_in,
        (1.0 - uav_in) * (1.0 - ue_in),
    ]
}

/// Whether the typical link suffers beamsteering errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alignment {
    Imperfect,
    Perfect,
}

impl Alignment {
    pub fn label(self) -> &'static str {
        match self {
            Alignment::Imperfect => "imperfect",
            Alignment::Perfect => "perfect",
        }
    }
}

/// Contribution of one serving cell (tier, link).
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub tier: usize,
    pub link: LinkType,
    pub association: f64,
    /// Joint probability of this association and coverage.
    pub coverage: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageResult {
    pub outage: f64,
    /// Sum of the quadrature error estimates of the serving-distance integrals.
    pub error_estimate: f64,
    pub converged: bool,
    pub cells: Vec<CellResult>,
}

/// A quadrature node of the UE elevation error with its probability weight.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ErrorNode {
    delta: f64,
    weight: f64,
    main: bool,
}

/// Analytical outage evaluator for one network and scheme.
#[derive(Debug, Clone)]
pub struct OutageModel {
    network: NetworkConfig,
    scheme: AssociationScheme,
    serving: ServingModel,
    laplace: LaplaceEvaluator,
    error_nodes: usize,
    tolerance: Tolerance,
}

impl OutageModel {
    pub fn new(network: &NetworkConfig) -> Result<Self> {
        network.validate()?;
        Ok(OutageModel {
            scheme: network.scheme,
            serving: ServingModel::new(network),
            laplace: LaplaceEvaluator::new(network, network.scheme),
            network: network.clone(),
            error_nodes: DEFAULT_ERROR_NODES,
            tolerance: Tolerance::OUTER,
        })
    }

    pub fn with_error_nodes(mut self, n: usize) -> Self {
        self.error_nodes = n.max(1);
        self
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn serving(&self) -> &ServingModel {
        &self.serving
    }

    /// Laplace argument for the typical link. The factor `m` turns the
    /// unit-mean Gamma fading into the unit-scale form the derivative
    /// expansion assumes.
    fn s_for(&self, tier: usize, link: LinkType, r: f64, case: AlignmentCase) -> f64 {
        let t = &self.network.tiers[tier];
        let gain = case.gain(&t.pattern(), &self.network.ue_pattern());
        let p = &self.network.channel;
        let m = p.nakagami_m(link) as f64;
        m * self.network.sinr_threshold * r.powf(p.alpha(link))
            / (t.tx_power * p.attenuation(link) * gain)
    }

    fn coverage_at(&self, q: &LogLaplaceDerivatives, i: usize) -> Result<f64> {
        let scaled: Vec<f64> = (0..q.orders).map(|n| q.value(i, n)).collect();
        let s = q.s[i];
        coverage_from_scaled(&with_noise(&scaled, s, self.network.channel.noise_power), s)
    }

    /// Nodes and weights over the UE elevation error, split at window edges
    /// and at the errors where the footprint geometry changes branch.
    fn error_nodes(&self, beta: f64) -> Vec<ErrorNode> {
        let dist = self.network.misalignment.ue_elevation.as_ref();
        let half = 0.5 * self.network.ue_pattern().width_elevation;
        if let Some(delta) = dist.atom() {
            return vec![ErrorNode {
                delta,
                weight: 1.0,
                main: delta.abs() <= half,
            }];
        }
        let (lo, hi) = dist.support();
        let (gl_x, gl_w) = gauss_legendre(self.error_nodes);
        let mut nodes = Vec::new();
        let main_lo = lo.max(-half);
        let main_hi = hi.min(half);
        let kinks = [FRAC_PI_2 - half - beta, half - beta, -half - beta];
        let mut windows = vec![(main_lo, main_hi, true)];
        windows.push((lo, lo.max(-half), false));
        windows.push((hi.min(half), hi, false));
        for (a, b, main) in windows {
            if b <= a {
                continue;
            }
            let mut edges = vec![a, b];
            edges.extend(kinks.iter().copied().filter(|k| *k > a && *k < b));
            edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for w in edges.windows(2) {
                let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (x, wt) in gl_x.iter().zip(&gl_w) {
                    let delta = c + h * x;
                    nodes.push(ErrorNode {
                        delta,
                        weight: wt * h * dist.pdf(delta),
                        main,
                    });
                }
            }
        }
        nodes
    }

    /// Coverage probability given association with `tier` over `link` at
    /// serving distance `r`, averaged over the beamsteering errors.
    pub fn conditional_coverage(
        &self,
        tier: usize,
        link: LinkType,
        r: f64,
        alignment: Alignment,
    ) -> Result<f64> {
        let height = self.network.tiers[tier].height;
        if r < height {
            return Err(Error::InvalidArgument {
                name: "r",
                value: r,
                reason: "serving distance below the tier height",
            });
        }
        let order = self.network.channel.nakagami_m(link) as usize - 1;
        let ctx = ServingContext::new(tier, link, r, height, 0.0);

        if alignment == Alignment::Perfect {
            let s = [self.s_for(tier, link, r, AlignmentCase::A1)];
            let q = self.laplace.log_laplace(&ctx, &s, order);
            return self.coverage_at(&q, 0);
        }

        let model = &self.network.misalignment;
        let uav = self.network.uav_pattern(tier);
        let ue = self.network.ue_pattern();
        let omega_v = omega(model.uav_azimuth.as_ref(), uav.width_azimuth)
            * omega(model.uav_elevation.as_ref(), uav.width_elevation);
        let omega_ua = omega(model.ue_azimuth.as_ref(), ue.width_azimuth);

        // weights of each case inside the main window and in the tails
        let main_w = [
            omega_v * omega_ua,
            omega_v * (1.0 - omega_ua),
            (1.0 - omega_v) * omega_ua,
            (1.0 - omega_v) * (1.0 - omega_ua),
        ];
        let tail_w = [0.0, omega_v, 0.0, 1.0 - omega_v];
        let nodes = self.error_nodes(ctx.elevation_angle);
        let has_tail = nodes.iter().any(|n| !n.main);

        let mut cases = Vec::new();
        for case in AlignmentCase::ALL {
            let j = case.index();
            if main_w[j] > 0.0 || (has_tail && tail_w[j] > 0.0) {
                cases.push(case);
            }
        }
        let s: Vec<f64> = cases
            .iter()
            .map(|&c| self.s_for(tier, link, r, c))
            .collect();
        let base = self.laplace.base(&ctx, &s, order);

        let mut total = 0.0;
        for node in &nodes {
            if node.weight == 0.0 {
                continue;
            }
            let q = base.combined(&self.laplace.ring(&ctx.with_error(node.delta), &s, order));
            for (i, case) in cases.iter().enumerate() {
                let w = if node.main {
                    main_w[case.index()]
                } else {
                    tail_w[case.index()]
                };
                if w > 0.0 {
                    total += node.weight * w * self.coverage_at(&q, i)?;
                }
            }
        }
        Ok(total.clamp(0.0, 1.0))
    }

    pub fn outage(&self) -> Result<OutageResult> {
        self.outage_with(Alignment::Imperfect)
    }

    pub fn perfect_alignment_outage(&self) -> Result<OutageResult> {
        self.outage_with(Alignment::Perfect)
    }

    pub fn outage_with(&self, alignment: Alignment) -> Result<OutageResult> {
        let mut cells = Vec::new();
        let mut covered = 0.0;
        let mut error = 0.0;
        let mut converged = true;
        for tier in 0..self.network.tiers.len() {
            for link in LinkType::ALL {
                let edges = self.serving.panel_edges(self.scheme, tier, link);
                let failure: RefCell<Option<Error>> = RefCell::new(None);
                let part = integrate_panels_multi(
                    |r, out| {
                        let f = self.serving.pdf(self.scheme, tier, link, r);
                        out[1] = f;
                        out[0] = if f > 0.0 && failure.borrow().is_none() {
                            match self.conditional_coverage(tier, link, r, alignment) {
                                Ok(p) => p * f,
                                Err(e) => {
                                    *failure.borrow_mut() = Some(e);
                                    0.0
                                }
                            }
                        } else {
                            0.0
                        };
                    },
                    2,
                    &edges,
                    self.tolerance,
                );
                if let Some(e) = failure.into_inner() {
                    return Err(e);
                }
                covered += part.values[0];
                error += part.errors[0];
                converged &= part.converged;
                cells.push(CellResult {
                    tier,
                    link,
                    association: part.values[1],
                    coverage: part.values[0],
                    error_estimate: part.errors[0],
                });
            }
        }
        if !converged {
            log::warn!("outage quadrature did not reach tolerance; error bound {error:e}");
        }
        Ok(OutageResult {
            outage: (1.0 - covered).clamp(0.0, 1.0),
            error_estimate: error,
            converged,
            cells,
        })
    }
}

/// Overall outage probability under the network's association scheme.
pub fn outage_probability(network: &NetworkConfig) -> Result<OutageResult> {
    OutageModel::new(network)?.outage()
}

/// Outage probability when every beam is perfectly aligned.
pub fn perfect_alignment_outage(network: &NetworkConfig) -> Result<OutageResult> {
    OutageModel::new(network)?.perfect_alignment_outage()
}

pub fn conditional_coverage_given_r(
    tier: usize,
    link: LinkType,
    r: f64,
    network: &NetworkConfig,
) -> Result<f64> {
    OutageModel::new(network)?.conditional_coverage(tier, link, r, Alignment::Imperfect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::antenna_from_count;
    use std::f64::consts::PI;

    fn net() -> NetworkConfig {
        NetworkConfig::dense_urban()
    }

    #[test]
    fn case_probabilities_default_errors() {
        let n = net();
        let p = case_probabilities(&n.misalignment, &n.ue_pattern(), &n.uav_pattern(0));
        // Ω_v = (√3/3)/(π/4) per plane, Ω_u = 1
        let omega_v = (3f64.sqrt() / 3.0) / (PI / 4.0);
        assert!((omega_v - 0.7351).abs() < 1e-4);
        assert!((p[0] - omega_v * omega_v).abs() < 1e-12);
        assert!((p[0] - 0.540379646).abs() < 1e-8);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[3], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_errors_always_main_lobe() {
        let model = MisalignmentModel::uniform(0.1, 0.1).unwrap();
        let p = case_probabilities(
            &model,
            &antenna_from_count(4).unwrap(),
            &antenna_from_count(9).unwrap(),
        );
        assert_eq!(p, [1.0, 0.0, 0.0, 0.0]);
        let p = case_probabilities(
            &MisalignmentModel::perfect(),
            &antenna_from_count(64).unwrap(),
            &antenna_from_count(64).unwrap(),
        );
        assert_eq!(p, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn case_probabilities_partition_under_random_models() {
        for (ue, uav, nu, nv) in [(0.3, 0.5, 16, 25), (1.0, 1.2, 64, 4), (0.0, 0.9, 9, 64)] {
            let model = MisalignmentModel::uniform(ue, uav).unwrap();
            let p = case_probabilities(
                &model,
                &antenna_from_count(nu).unwrap(),
                &antenna_from_count(nv).unwrap(),
            );
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn zero_width_errors_reduce_to_perfect_alignment() {
        let network = net().perfectly_aligned();
        let model = OutageModel::new(&network).unwrap();
        for (tier, link, r) in [
            (0, LinkType::Los, 200.0),
            (1, LinkType::Nlos, 260.0),
            (0, LinkType::Los, 900.0),
        ] {
            let a = model
                .conditional_coverage(tier, link, r, Alignment::Imperfect)
                .unwrap();
            let b = model
                .conditional_coverage(tier, link, r, Alignment::Perfect)
                .unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn uav_errors_only_mix_cases_one_and_three() {
        let mut network = net();
        network.misalignment = MisalignmentModel::uniform(0.0, PI / 8.0).unwrap();
        let p = case_probabilities(
            &network.misalignment,
            &network.ue_pattern(),
            &network.uav_pattern(0),
        );
        assert_eq!(p[1], 0.0);
        assert_eq!(p[3], 0.0);
        let model = OutageModel::new(&network).unwrap();
        let r = 300.0;
        let got = model
            .conditional_coverage(0, LinkType::Los, r, Alignment::Imperfect)
            .unwrap();
        let ctx = ServingContext::new(0, LinkType::Los, r, 150.0, 0.0);
        let s = [
            model.s_for(0, LinkType::Los, r, AlignmentCase::A1),
            model.s_for(0, LinkType::Los, r, AlignmentCase::A3),
        ];
        let q = model.laplace.log_laplace(&ctx, &s, 2);
        let want =
            p[0] * model.coverage_at(&q, 0).unwrap() + p[2] * model.coverage_at(&q, 1).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!(model.coverage_at(&q, 1).unwrap() < model.coverage_at(&q, 0).unwrap());
    }

    #[test]
    fn coverage_vanishes_with_threshold() {
        let mut network = net();
        network.sinr_threshold = 1e-12;
        let model = OutageModel::new(&network).unwrap();
        let p = model
            .conditional_coverage(0, LinkType::Los, 300.0, Alignment::Imperfect)
            .unwrap();
        assert!(p > 1.0 - 1e-6);
    }

    #[test]
    fn error_nodes_integrate_density() {
        let model = OutageModel::new(&net()).unwrap();
        for beta in [0.05, 0.4, 1.2, 1.5] {
            let nodes = model.error_nodes(beta);
            let mass: f64 = nodes.iter().map(|n| n.weight).sum();
            assert!((mass - 1.0).abs() < 1e-12);
            assert!(nodes.iter().all(|n| n.main));
        }
    }

    #[test]
    fn rejects_serving_distance_below_height() {
        let model = OutageModel::new(&net()).unwrap();
        assert!(model
            .conditional_coverage(1, LinkType::Los, 150.0, Alignment::Imperfect)
            .is_err());
    }
}
