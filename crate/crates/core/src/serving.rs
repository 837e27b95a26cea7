//! Serving-distance distributions under both association schemes.

use std::f64::consts::PI;

use crate::channel::{link_probability, ChannelParams, LinkType};
use crate::geometry::{equivalent_distance_cdas, equivalent_distance_mapas};
use crate::network::{AssociationScheme, NetworkConfig, TierConfig};
use crate::quadrature::{
    gauss_legendre, integrate_finite, integrate_panels_multi, QuadratureResult, Tolerance,
};

/// `-ln` of the void factor at which serving-distance integrals are truncated.
const TRUNCATION_EXPONENT: f64 = 27.631_021_115_928_547; // -ln(1e-12)

const GRID_GROWTH: f64 = 0.02;
const GRID_LIMIT: f64 = 2e5;

/// `I(x) = ∫_0^x z·p_η(z) dz` for one tier and link type, tabulated on a
/// geometric grid and interpolated with cubic Hermite polynomials.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    height: f64,
    link: LinkType,
    params: ChannelParams,
    scale: f64,
    grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CumulativeTable {
    pub fn new(height: f64, link: LinkType, params: &ChannelParams) -> Self {
        let scale = 0.5 * height;
        let n = ((GRID_LIMIT / scale + 1.0).ln() / GRID_GROWTH).ceil() as usize;
        let grid: Vec<f64> = (0..=n)
            .map(|i| scale * ((i as f64 * GRID_GROWTH).exp() - 1.0))
            .collect();
        let (nodes, weights) = gauss_legendre(10);
        let integrand = |z: f64| z * link_probability(link, z, height, params);
        let mut values = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        values.push(0.0);
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            acc += h * nodes
                .iter()
                .zip(&weights)
                .map(|(x, wt)| wt * integrand(c + h * x))
                .sum::<f64>();
            values.push(acc);
        }
        let slopes = grid.iter().map(|&z| integrand(z)).collect();
        CumulativeTable {
            height,
            link,
            params: params.clone(),
            scale,
            grid,
            values,
            slopes,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let last = self.grid.len() - 1;
        if x >= self.grid[last] {
            let tail = integrate_finite(
                |z| z * link_probability(self.link, z, self.height, &self.params),
                self.grid[last],
                x,
                Tolerance::INNER,
            );
            return self.values[last] + tail.value;
        }
        let mut i = (((x / self.scale) + 1.0).ln() / GRID_GROWTH).floor() as usize;
        i = i.min(last - 1);
        while i > 0 && self.grid[i] > x {
            i -= 1;
        }
        while i + 1 < last && self.grid[i + 1] <= x {
            i += 1;
        }
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

/// Serving-distance densities for one network, with cached cumulative tables.
#[derive(Debug, Clone)]
pub struct ServingModel {
    tiers: Vec<TierConfig>,
    params: ChannelParams,
    /// `tables[k][link.index()]`
    tables: Vec<[CumulativeTable; 2]>,
}

impl ServingModel {
    pub fn new(network: &NetworkConfig) -> Self {
        let tables = network
            .tiers
            .iter()
            .map(|t| {
                [
                    CumulativeTable::new(t.height, LinkType::Los, &network.channel),
                    CumulativeTable::new(t.height, LinkType::Nlos, &network.channel),
                ]
            })
            .collect();
        ServingModel {
            tiers: network.tiers.clone(),
            params: network.channel.clone(),
            tables,
        }
    }

    pub fn cumulative(&self, tier: usize, link: LinkType, x: f64) -> f64 {
        self.tables[tier][link.index()].eval(x)
    }

    /// Sum of the exclusion exponents, so that the density is
    /// `2πλ r p(√(r²−H²)) · exp(-exponent)`.
    pub fn void_exponent(
        &self,
        scheme: AssociationScheme,
        tier: usize,
        link: LinkType,
        r: f64,
    ) -> f64 {
        let serving = &self.tiers[tier];
        match scheme {
            AssociationScheme::Mapas => {
                let z0 = equivalent_distance_cdas(r, serving.height);
                let mut exponent = 2.0 * PI * serving.density * self.cumulative(tier, link, z0);
                let other = link.other();
                for (k, t) in self.tiers.iter().enumerate() {
                    let z = equivalent_distance_mapas(r, link, other, t.height, &self.params);
                    if z > 0.0 {
                        exponent += 2.0 * PI * t.density * self.cumulative(k, other, z);
                    }
                    if k != tier {
                        let z = equivalent_distance_mapas(r, link, link, t.height, &self.params);
                        if z > 0.0 {
                            exponent += 2.0 * PI * t.density * self.cumulative(k, link, z);
                        }
                    }
                }
                exponent
            }
            AssociationScheme::Cdas => self
                .tiers
                .iter()
                .map(|t| {
                    let z = equivalent_distance_cdas(r, t.height);
                    PI * t.density * z * z
                })
                .sum(),
        }
    }

    /// Density of the serving distance `r` jointly with association to
    /// `tier` over `link`.
    pub fn pdf(&self, scheme: AssociationScheme, tier: usize, link: LinkType, r: f64) -> f64 {
        let serving = &self.tiers[tier];
        if r < serving.height {
            return 0.0;
        }
        let z0 = equivalent_distance_cdas(r, serving.height);
        let p = link_probability(link, z0, serving.height, &self.params);
        2.0 * PI * serving.density * r * p * (-self.void_exponent(scheme, tier, link, r)).exp()
    }

    /// Radius beyond which the void factor is below 1e-12.
    pub fn truncation_radius(&self, scheme: AssociationScheme, tier: usize, link: LinkType) -> f64 {
        let h = self.tiers[tier].height;
        let mut lo = h;
        let mut hi = 2.0 * h;
        while self.void_exponent(scheme, tier, link, hi) < TRUNCATION_EXPONENT {
            lo = hi;
            hi *= 2.0;
            if hi > 1e9 {
                return hi;
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.void_exponent(scheme, tier, link, mid) < TRUNCATION_EXPONENT {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-6 * hi {
                break;
            }
        }
        hi
    }

    /// Sorted panel edges for integrals over the serving distance: the tier
    /// height, every radius where an exclusion distance leaves zero, and the
    /// truncation radius.
    pub fn panel_edges(&self, scheme: AssociationScheme, tier: usize, link: LinkType) -> Vec<f64> {
        let h = self.tiers[tier].height;
        let end = self.truncation_radius(scheme, tier, link);
        let mut edges = vec![h, end];
        for t in &self.tiers {
            edges.push(t.height);
            if scheme == AssociationScheme::Mapas {
                edges.push(self.cross_link_onset(link, t.height));
            }
        }
        edges.retain(|e| e.is_finite() && *e >= h && *e <= end);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
        edges
    }

    /// Serving distance at which the cross-link exclusion radius on a tier
    /// at `height` becomes positive.
    fn cross_link_onset(&self, serving_link: LinkType, height: f64) -> f64 {
        let p = &self.params;
        let (coef, power) = match serving_link {
            LinkType::Los => (
                (p.atten_los / p.atten_nlos).powf(-2.0 / p.alpha_nlos),
                2.0 * p.alpha_los / p.alpha_nlos,
            ),
            LinkType::Nlos => (
                (p.atten_nlos / p.atten_los).powf(-2.0 / p.alpha_los),
                2.0 * p.alpha_nlos / p.alpha_los,
            ),
        };
        (height * height / coef).powf(1.0 / power)
    }

    /// Probability of associating with `tier` over `link`.
    pub fn association_probability(
        &self,
        scheme: AssociationScheme,
        tier: usize,
        link: LinkType,
    ) -> QuadratureResult {
        let edges = self.panel_edges(scheme, tier, link);
        integrate_panels_multi(
            |r, out| out[0] = self.pdf(scheme, tier, link, r),
            1,
            &edges,
            Tolerance::OUTER,
        )
        .component(0)
    }
}

/// Density of the distance to the nearest `link`-type UAV of a single tier.
pub fn nearest_distance_pdf(
    tier: &TierConfig,
    link: LinkType,
    r: f64,
    params: &ChannelParams,
) -> f64 {
    nearest_distance_pdf_with(tier.height, tier.density, r, |z| {
        link_probability(link, z, tier.height, params)
    })
}

/// Nearest-distance density for an arbitrary thinning probability `p(z)`.
pub fn nearest_distance_pdf_with<P>(height: f64, density: f64, r: f64, p: P) -> f64
where
    P: Fn(f64) -> f64,
{
    if r < height {
        return 0.0;
    }
    let z0 = equivalent_distance_cdas(r, height);
    let inner = integrate_finite(|z| z * p(z), 0.0, z0, Tolerance::INNER).value;
    2.0 * PI * density * r * p(z0) * (-2.0 * PI * density * inner).exp()
}

/// One-off evaluation of the serving-distance density; builds the tables on
/// each call, so prefer [`ServingModel`] in loops.
pub fn serving_pdf(
    scheme: AssociationScheme,
    tier: usize,
    link: LinkType,
    r: f64,
    network: &NetworkConfig,
) -> f64 {
    ServingModel::new(network).pdf(scheme, tier, link, r)
}

pub fn association_probability(
    scheme: AssociationScheme,
    tier: usize,
    link: LinkType,
    network: &NetworkConfig,
) -> QuadratureResult {
    ServingModel::new(network).association_probability(scheme, tier, link)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_semi_infinite;

    fn net() -> NetworkConfig {
        NetworkConfig::dense_urban()
    }

    #[test]
    fn table_matches_direct_quadrature() {
        let params = ChannelParams::default();
        for link in LinkType::ALL {
            let table = CumulativeTable::new(150.0, link, &params);
            for x in [0.0, 0.3, 7.0, 149.0, 600.0, 3333.3, 45_000.0, 250_000.0] {
                let direct = integrate_finite(
                    |z| z * link_probability(link, z, 150.0, &params),
                    0.0,
                    x,
                    Tolerance::new(1e-12, 0.0),
                )
                .value;
                let got = table.eval(x);
                assert!(
                    (got - direct).abs() <= 1e-6 * direct + 1e-7,
                    "{link:?} x={x}: {got} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn density_at_tier_height() {
        let params = ChannelParams::default();
        let tier = &net().tiers[0];
        let f = nearest_distance_pdf(tier, LinkType::Los, tier.height, &params);
        let expected = 2.0
            * PI
            * tier.density
            * tier.height
            * crate::channel::los_probability(0.0, tier.height, &params);
        assert!((f - expected).abs() < 1e-15);
        assert_eq!(
            nearest_distance_pdf(tier, LinkType::Los, 100.0, &params),
            0.0
        );
    }

    #[test]
    fn nearest_distance_densities_normalize_per_link() {
        let params = ChannelParams::default();
        let tier = &net().tiers[0];
        for link in LinkType::ALL {
            let mass = integrate_semi_infinite(
                |r| nearest_distance_pdf(tier, link, r, &params),
                tier.height,
                Tolerance::OUTER,
                None,
            );
            assert!((mass.value - 1.0).abs() < 1e-3, "{link:?}: {}", mass.value);
        }
    }

    #[test]
    fn pure_ppp_median_scales_with_density() {
        let median = |density: f64| {
            // closed form of the horizontal nearest distance: √(ln 2 / (πλ))
            let cdf = |z: f64| {
                integrate_finite(
                    |x| {
                        let r = (x * x + 1.0).sqrt();
                        nearest_distance_pdf_with(1.0, density, r, |_| 1.0) * x / r
                    },
                    0.0,
                    z,
                    Tolerance::INNER,
                )
                .value
            };
            let (mut lo, mut hi) = (0.0, 1e4);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let m1 = median(1e-5);
        let m2 = median(2e-5);
        assert!((m1 - (2f64.ln() / (PI * 1e-5)).sqrt()).abs() < 1e-3 * m1);
        assert!((m2 / m1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn association_probabilities_sum_to_one() {
        let network = net();
        let model = ServingModel::new(&network);
        for scheme in [AssociationScheme::Mapas, AssociationScheme::Cdas] {
            let mut total = 0.0;
            for k in 0..network.tiers.len() {
                for link in LinkType::ALL {
                    total += model.association_probability(scheme, k, link).value;
                }
            }
            assert!((total - 1.0).abs() < 1e-3, "{scheme}: {total}");
        }
    }

    #[test]
    fn single_tier_all_los_cdas_closed_form() {
        let mut network = net();
        network.tiers.truncate(1);
        // b → ∞ pushes p_L to 1 at every finite elevation above a
        network.channel.env_b = 1e3;
        network.channel.env_a = 1e-3;
        let model = ServingModel::new(&network);
        let tier = &network.tiers[0];
        for r in [150.0, 160.0, 300.0, 700.0] {
            let got = model.pdf(AssociationScheme::Cdas, 0, LinkType::Los, r);
            let want = 2.0
                * PI
                * tier.density
                * r
                * (-PI * tier.density * (r * r - tier.height * tier.height)).exp();
            assert!((got - want).abs() < 1e-9 * want, "r={r}");
        }
    }

    #[test]
    fn mapas_collapses_to_cdas_with_equal_links() {
        let mut network = net();
        network.channel.alpha_nlos = network.channel.alpha_los;
        network.channel.atten_nlos = network.channel.atten_los;
        let model = ServingModel::new(&network);
        for k in 0..2 {
            for link in LinkType::ALL {
                for r in [200.0, 250.0, 400.0, 900.0] {
                    let a = model.pdf(AssociationScheme::Mapas, k, link, r);
                    let b = model.pdf(AssociationScheme::Cdas, k, link, r);
                    assert!(
                        (a - b).abs() <= 1e-9 * b.max(1e-300),
                        "k={k} {link:?} r={r}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn higher_second_tier_loses_cdas_share() {
        let low = net();
        let mut high = net();
        high.tiers[1].height = 260.0;
        let share = |n: &NetworkConfig| {
            let m = ServingModel::new(n);
            LinkType::ALL
                .iter()
                .map(|&l| {
                    m.association_probability(AssociationScheme::Cdas, 1, l)
                        .value
                })
                .sum::<f64>()
        };
        assert!(share(&high) < share(&low));
    }

    #[test]
    fn single_tier_probabilities_sum_to_one() {
        let mut network = net();
        network.tiers.truncate(1);
        let model = ServingModel::new(&network);
        for scheme in [AssociationScheme::Mapas, AssociationScheme::Cdas] {
            let total: f64 = LinkType::ALL
                .iter()
                .map(|&l| model.association_probability(scheme, 0, l).value)
                .sum();
            assert!((total - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn mapas_exclusion_grows_with_distance() {
        let network = net();
        let model = ServingModel::new(&network);
        for k in 0..2 {
            for link in LinkType::ALL {
                let mut prev = 0.0;
                for i in 0..200 {
                    let r = 200.0 + 20.0 * i as f64;
                    let e = model.void_exponent(AssociationScheme::Mapas, k, link, r);
                    assert!(e >= prev);
                    prev = e;
                }
            }
        }
    }

    #[test]
    fn pdf_vanishes_below_height_and_is_nonnegative() {
        let network = net();
        let model = ServingModel::new(&network);
        for scheme in [AssociationScheme::Mapas, AssociationScheme::Cdas] {
            assert_eq!(model.pdf(scheme, 1, LinkType::Los, 199.0), 0.0);
            for i in 0..500 {
                let r = 150.0 + 10.0 * i as f64;
                assert!(model.pdf(scheme, 0, LinkType::Nlos, r) >= 0.0);
            }
        }
    }
}
