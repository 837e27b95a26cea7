//! Footprint of the UE main lobe on a UAV tier and the exclusion radii
//! implied by each association rule.

use std::f64::consts::FRAC_PI_2;

use crate::channel::{AntennaPattern, ChannelParams, LinkType};
use crate::network::AssociationScheme;

/// A horizontal radius that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    Finite(f64),
    Unbounded,
}

impl Radius {
    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(x) => Some(x),
            Radius::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Radius::Unbounded)
    }

    /// `true` if `z` lies strictly below this radius.
    pub fn exceeds(self, z: f64) -> bool {
        match self {
            Radius::Finite(x) => z < x,
            Radius::Unbounded => true,
        }
    }

    pub fn max_with(self, z: f64) -> Radius {
        match self {
            Radius::Finite(x) => Radius::Finite(x.max(z)),
            Radius::Unbounded => Radius::Unbounded,
        }
    }
}

impl PartialOrd for Radius {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering;
        match (self, other) {
            (Radius::Finite(a), Radius::Finite(b)) => a.partial_cmp(b),
            (Radius::Finite(_), Radius::Unbounded) => Some(Ordering::Less),
            (Radius::Unbounded, Radius::Finite(_)) => Some(Ordering::Greater),
            (Radius::Unbounded, Radius::Unbounded) => Some(Ordering::Equal),
        }
    }
}

/// Ring-sector approximation of the UE main-lobe footprint on one tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionRegion {
    /// `Unbounded` only when the whole main lobe points below the horizon,
    /// in which case the region is empty.
    pub inner_radius: Radius,
    pub outer_radius: Radius,
    /// Opening angle of the sector, the UE azimuth beamwidth.
    pub angle: f64,
}

impl ProjectionRegion {
    pub fn is_empty(&self) -> bool {
        self.inner_radius >= self.outer_radius
    }

    pub fn contains(&self, z: f64) -> bool {
        match self.inner_radius {
            Radius::Finite(zin) => z >= zin && self.outer_radius.exceeds(z),
            Radius::Unbounded => false,
        }
    }
}

/// State of the typical link the interference is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServingContext {
    pub tier_index: usize,
    pub link: LinkType,
    /// 3-D serving distance in metres.
    pub distance: f64,
    /// Elevation of the serving UAV seen from the UE, `asin(H / r)`.
    pub elevation_angle: f64,
    pub ue_elevation_error: f64,
}

impl ServingContext {
    /// `distance` below the tier height is clamped to the overhead position.
    pub fn new(
        tier_index: usize,
        link: LinkType,
        distance: f64,
        tier_height: f64,
        ue_elevation_error: f64,
    ) -> Self {
        let distance = distance.max(tier_height);
        ServingContext {
            tier_index,
            link,
            distance,
            elevation_angle: (tier_height / distance).min(1.0).asin(),
            ue_elevation_error,
        }
    }

    pub fn with_error(self, ue_elevation_error: f64) -> Self {
        ServingContext {
            ue_elevation_error,
            ..self
        }
    }

    /// Elevation of the perturbed UE boresight.
    pub fn boresight_elevation(&self) -> f64 {
        self.elevation_angle + self.ue_elevation_error
    }
}

/// Ring sector covered by the UE main lobe on a tier at `target_height`.
pub fn projection_region(
    ctx: &ServingContext,
    target_height: f64,
    ue_pattern: &AntennaPattern,
) -> ProjectionRegion {
    let psi = ctx.boresight_elevation();
    let width = ue_pattern.width_elevation;
    let half = 0.5 * width;
    let angle = ue_pattern.width_azimuth;

    if psi + half <= 0.0 {
        // Entire main lobe below the horizon: it never reaches the tier.
        return ProjectionRegion {
            inner_radius: Radius::Unbounded,
            outer_radius: Radius::Unbounded,
            angle,
        };
    }

    let below_zenith_edge = psi < FRAC_PI_2 - half;
    let inner = if below_zenith_edge {
        target_height / (psi + half).tan()
    } else {
        0.0
    };
    let outer = if half < psi && below_zenith_edge {
        Radius::Finite(target_height / (psi - half).tan())
    } else if !below_zenith_edge {
        let lowest = FRAC_PI_2 - width;
        if lowest > 0.0 {
            Radius::Finite(target_height / lowest.tan())
        } else {
            Radius::Unbounded
        }
    } else {
        Radius::Unbounded
    };
    ProjectionRegion {
        inner_radius: Radius::Finite(inner),
        outer_radius: outer,
        angle,
    }
}

/// Closest horizontal distance of an `other_link` interferer on a tier at
/// `target_height` when the UE is served over `serving_link` at 3-D distance
/// `r`, ranking UAVs by `A·d^(-α)`.
pub fn equivalent_distance_mapas(
    r: f64,
    serving_link: LinkType,
    other_link: LinkType,
    target_height: f64,
    params: &ChannelParams,
) -> f64 {
    let h2 = target_height * target_height;
    let d2 = match (serving_link, other_link) {
        (LinkType::Los, LinkType::Nlos) => {
            (params.atten_los / params.atten_nlos).powf(-2.0 / params.alpha_nlos)
                * r.powf(2.0 * params.alpha_los / params.alpha_nlos)
        }
        (LinkType::Nlos, LinkType::Los) => {
            (params.atten_nlos / params.atten_los).powf(-2.0 / params.alpha_los)
                * r.powf(2.0 * params.alpha_nlos / params.alpha_los)
        }
        _ => r * r,
    };
    (d2 - h2).max(0.0).sqrt()
}

/// Closest horizontal distance of any interferer under closest-distance
/// association.
pub fn equivalent_distance_cdas(r: f64, target_height: f64) -> f64 {
    (r * r - target_height * target_height).max(0.0).sqrt()
}

pub fn equivalent_distance(
    scheme: AssociationScheme,
    r: f64,
    serving_link: LinkType,
    other_link: LinkType,
    target_height: f64,
    params: &ChannelParams,
) -> f64 {
    match scheme {
        AssociationScheme::Mapas => {
            equivalent_distance_mapas(r, serving_link, other_link, target_height, params)
        }
        AssociationScheme::Cdas => equivalent_distance_cdas(r, target_height),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::antenna_from_count;
    use std::f64::consts::FRAC_PI_4;

    fn pattern_with_width(width: f64) -> AntennaPattern {
        AntennaPattern {
            main_gain: 4.0,
            side_gain: 0.5,
            width_azimuth: width,
            width_elevation: width,
        }
    }

    fn ctx_at(psi: f64) -> ServingContext {
        ServingContext {
            tier_index: 0,
            link: LinkType::Los,
            distance: 1000.0,
            elevation_angle: psi,
            ue_elevation_error: 0.0,
        }
    }

    #[test]
    fn ring_sector_first_branch() {
        let region = projection_region(&ctx_at(FRAC_PI_4), 150.0, &pattern_with_width(0.5));
        let zin = region.inner_radius.finite().unwrap();
        let zout = region.outer_radius.finite().unwrap();
        // 150 / tan(π/4 ± 0.25)
        assert!((zin - 88.978_716).abs() < 1e-5, "{zin}");
        assert!((zout - 252.869_463).abs() < 1e-5, "{zout}");
        assert_eq!(region.angle, 0.5);
    }

    #[test]
    fn ring_sector_overhead_branch() {
        let width = 0.5;
        let region = projection_region(&ctx_at(FRAC_PI_2 - 0.2), 150.0, &pattern_with_width(width));
        assert_eq!(region.inner_radius, Radius::Finite(0.0));
        let zout = region.outer_radius.finite().unwrap();
        assert!((zout - 150.0 / (FRAC_PI_2 - width).tan()).abs() < 1e-9);
    }

    #[test]
    fn ring_sector_horizon_branch() {
        let region = projection_region(&ctx_at(0.1), 150.0, &pattern_with_width(0.5));
        assert!(region.outer_radius.is_unbounded());
        let zin = region.inner_radius.finite().unwrap();
        assert!((zin - 150.0 / 0.35f64.tan()).abs() < 1e-9);
    }

    #[test]
    fn wide_beam_overhead_is_unbounded() {
        let pattern = antenna_from_count(1).unwrap();
        let region = projection_region(&ctx_at(1.4), 150.0, &pattern);
        assert!(region.outer_radius.is_unbounded());
        assert_eq!(region.inner_radius, Radius::Finite(0.0));
    }

    #[test]
    fn beam_below_horizon_is_empty() {
        let region = projection_region(&ctx_at(-0.4), 150.0, &pattern_with_width(0.5));
        assert!(region.is_empty());
        assert!(!region.contains(1e4));
    }

    #[test]
    fn wider_beam_widens_ring() {
        for psi in [0.5, 0.7, 0.9] {
            let mut prev_in = f64::INFINITY;
            let mut prev_out = 0.0;
            for i in 1..10 {
                let w = 0.05 * i as f64;
                if !(psi > w / 2.0 && psi < FRAC_PI_2 - w / 2.0) {
                    continue;
                }
                let region = projection_region(&ctx_at(psi), 200.0, &pattern_with_width(w));
                let zin = region.inner_radius.finite().unwrap();
                let zout = region.outer_radius.finite().unwrap();
                assert!(zin <= prev_in && zout >= prev_out);
                prev_in = zin;
                prev_out = zout;
            }
        }
    }

    #[test]
    fn ordering_holds_on_all_branches() {
        for i in 0..200 {
            let psi = -0.5 + 2.2 * i as f64 / 199.0;
            for w in [0.2, 0.6, 1.0, 1.7] {
                let region = projection_region(&ctx_at(psi), 150.0, &pattern_with_width(w));
                if let Radius::Finite(zin) = region.inner_radius {
                    assert!(zin >= 0.0);
                }
                assert!(
                    region.inner_radius <= region.outer_radius,
                    "psi={psi} w={w}"
                );
            }
        }
    }

    #[test]
    fn serving_context_elevation() {
        let ctx = ServingContext::new(0, LinkType::Los, 300.0, 150.0, 0.1);
        assert!((ctx.elevation_angle - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
        assert!((ctx.boresight_elevation() - (std::f64::consts::FRAC_PI_6 + 0.1)).abs() < 1e-12);
        let overhead = ServingContext::new(0, LinkType::Los, 100.0, 150.0, 0.0);
        assert_eq!(overhead.distance, 150.0);
        assert!((overhead.elevation_angle - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn equivalent_distance_examples() {
        let params = ChannelParams::default();
        let same = equivalent_distance_mapas(250.0, LinkType::Nlos, LinkType::Nlos, 150.0, &params);
        assert!((same - 200.0).abs() < 1e-12);
        // 100^(-1/2) · 300^1.25 ≈ 124.85, far below 150²
        let cross = equivalent_distance_mapas(300.0, LinkType::Los, LinkType::Nlos, 150.0, &params);
        assert_eq!(cross, 0.0);
        assert_eq!(
            equivalent_distance_mapas(150.0, LinkType::Los, LinkType::Los, 150.0, &params),
            0.0
        );
        assert!((equivalent_distance_cdas(250.0, 150.0) - 200.0).abs() < 1e-12);
        assert_eq!(equivalent_distance_cdas(100.0, 150.0), 0.0);
        assert_eq!(equivalent_distance_cdas(150.0, 150.0), 0.0);
    }

    #[test]
    fn nlos_serving_pushes_los_interferers_out() {
        let params = ChannelParams::default();
        // 0.01^(-0.8) · 300^3.2 - 150²
        let z = equivalent_distance_mapas(300.0, LinkType::Nlos, LinkType::Los, 150.0, &params);
        let expected = (0.01f64.powf(-0.8) * 300f64.powf(3.2) - 22_500.0).sqrt();
        assert!((z - expected).abs() < 1e-6 * expected);
        assert!(z > 1e4);
    }

    #[test]
    fn equal_link_parameters_collapse_to_cdas() {
        let params = ChannelParams {
            alpha_nlos: 2.5,
            atten_nlos: 1.0,
            ..ChannelParams::default()
        };
        for r in [150.0, 180.0, 400.0, 2000.0] {
            for a in LinkType::ALL {
                for b in LinkType::ALL {
                    let z = equivalent_distance_mapas(r, a, b, 120.0, &params);
                    assert!((z - equivalent_distance_cdas(r, 120.0)).abs() < 1e-9 * r);
                }
            }
        }
    }
}
