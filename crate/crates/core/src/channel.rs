//! Air-to-ground channel primitives.
//!
//! All gains and powers are linear. Conversions from dB happen at the CLI
//! boundary only.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

/// Propagation state of one UAV-to-UE link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkType {
    Los,
    Nlos,
}

impl LinkType {
    pub const ALL: [LinkType; 2] = [LinkType::Los, LinkType::Nlos];

    pub fn other(self) -> LinkType {
        match self {
            LinkType::Los => LinkType::Nlos,
            LinkType::Nlos => LinkType::Los,
        }
    }

    pub fn index(self) -> usize {
        match self {
            LinkType::Los => 0,
            LinkType::Nlos => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LinkType::Los => "los",
            LinkType::Nlos => "nlos",
        }
    }
}

/// Path loss, attenuation, Nakagami shape and environment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    /// Additional attenuation of LoS links (linear).
    pub atten_los: f64,
    pub atten_nlos: f64,
    pub m_los: u32,
    pub m_nlos: u32,
    /// Environment parameter `a` of the elevation-angle LoS model.
    pub env_a: f64,
    /// Environment parameter `b` of the elevation-angle LoS model.
    pub env_b: f64,
    /// Noise power in watts.
    pub noise_power: f64,
}

impl Default for ChannelParams {
    /// Dense-urban defaults.
    fn default() -> Self {
        ChannelParams {
            alpha_los: 2.5,
            alpha_nlos: 4.0,
            atten_los: 1.0,
            atten_nlos: 0.01,
            m_los: 3,
            m_nlos: 1,
            env_a: 11.95,
            env_b: 0.136,
            noise_power: 1e-13,
        }
    }
}

impl ChannelParams {
    pub fn alpha(&self, link: LinkType) -> f64 {
        match link {
            LinkType::Los => self.alpha_los,
            LinkType::Nlos => self.alpha_nlos,
        }
    }

    pub fn attenuation(&self, link: LinkType) -> f64 {
        match link {
            LinkType::Los => self.atten_los,
            LinkType::Nlos => self.atten_nlos,
        }
    }

    pub fn nakagami_m(&self, link: LinkType) -> u32 {
        match link {
            LinkType::Los => self.m_los,
            LinkType::Nlos => self.m_nlos,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, alpha) in [
            ("alpha_los", self.alpha_los),
            ("alpha_nlos", self.alpha_nlos),
        ] {
            if !(alpha > 2.0 && alpha.is_finite()) {
                return Err(Error::config(
                    name,
                    format!("path-loss exponent must exceed 2, got {alpha}"),
                ));
            }
        }
        for (name, att) in [
            ("atten_los", self.atten_los),
            ("atten_nlos", self.atten_nlos),
        ] {
            if !(att > 0.0 && att <= 1.0) {
                return Err(Error::config(
                    name,
                    format!("attenuation must lie in (0, 1], got {att}"),
                ));
            }
        }
        for (name, m) in [("m_los", self.m_los), ("m_nlos", self.m_nlos)] {
            if m == 0 {
                return Err(Error::config(
                    name,
                    "Nakagami shape must be a positive integer",
                ));
            }
        }
        if !(self.env_a.is_finite()
            && self.env_b.is_finite()
            && self.env_a > 0.0
            && self.env_b > 0.0)
        {
            return Err(Error::config(
                "env_a/env_b",
                "environment parameters must be positive",
            ));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::config("noise_power", "noise power must be positive"));
        }
        Ok(())
    }
}

/// LoS probability at horizontal distance `z` from a UAV at `height`.
///
/// `atan2(H, z)` gives the elevation angle, including the exact limit π/2
/// at `z = 0`.
pub fn los_probability(z: f64, height: f64, params: &ChannelParams) -> f64 {
    let elevation_deg = height.atan2(z).to_degrees();
    1.0 / (1.0 + params.env_a * (-params.env_b * (elevation_deg - params.env_a)).exp())
}

pub fn nlos_probability(z: f64, height: f64, params: &ChannelParams) -> f64 {
    1.0 - los_probability(z, height, params)
}

pub fn link_probability(link: LinkType, z: f64, height: f64, params: &ChannelParams) -> f64 {
    match link {
        LinkType::Los => los_probability(z, height, params),
        LinkType::Nlos => nlos_probability(z, height, params),
    }
}

/// Two-level sectorized antenna pattern of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    pub main_gain: f64,
    pub side_gain: f64,
    /// Half-power beamwidth in azimuth (radians).
    pub width_azimuth: f64,
    /// Half-power beamwidth in elevation (radians).
    pub width_elevation: f64,
}

impl AntennaPattern {
    pub fn new(
        main_gain: f64,
        side_gain: f64,
        width_azimuth: f64,
        width_elevation: f64,
    ) -> Result<Self> {
        let p = AntennaPattern {
            main_gain,
            side_gain,
            width_azimuth,
            width_elevation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_gain > 0.0 && self.side_gain <= self.main_gain && self.main_gain.is_finite())
        {
            return Err(Error::config(
                "antenna",
                format!(
                    "need 0 < side gain ≤ main gain, got {} / {}",
                    self.side_gain, self.main_gain
                ),
            ));
        }
        for w in [self.width_azimuth, self.width_elevation] {
            if !(w > 0.0 && w <= PI) {
                return Err(Error::config(
                    "antenna",
                    format!("beamwidth {w} outside (0, π]"),
                ));
            }
        }
        Ok(())
    }
}

/// Sectorized pattern of an `n`-element uniform planar square array with
/// half-wavelength spacing.
pub fn antenna_from_count(n_antennas: u32) -> Result<AntennaPattern> {
    if n_antennas == 0 {
        return Err(Error::InvalidArgument {
            name: "n_antennas",
            value: 0.0,
            reason: "an array needs at least one element",
        });
    }
    let n = n_antennas as f64;
    let sqrt_n = n.sqrt();
    let c = 3f64.sqrt() / (2.0 * PI);
    let sine = (3f64.sqrt() / (2.0 * sqrt_n)).sin();
    let side = (sqrt_n - c * n * sine) / (sqrt_n - c * sine);
    let width = 3f64.sqrt() / sqrt_n;
    Ok(AntennaPattern {
        main_gain: n,
        side_gain: side,
        width_azimuth: width,
        width_elevation: width,
    })
}

/// Mean path gain `A_η d^(-α_η)`.
pub fn path_gain(distance: f64, link: LinkType, params: &ChannelParams) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::InvalidArgument {
            name: "distance",
            value: distance,
            reason: "distance must be positive",
        });
    }
    Ok(params.attenuation(link) * distance.powf(-params.alpha(link)))
}

/// Nakagami-m power gain: Gamma(m, 1/m), drawn as the mean of `m` unit
/// exponentials.
pub fn sample_fading<R: Rng + ?Sized>(link: LinkType, params: &ChannelParams, rng: &mut R) -> f64 {
    let m = params.nakagami_m(link);
    let mut sum = 0.0;
    for _ in 0..m {
        let e: f64 = rng.sample(Exp1);
        sum += e;
    }
    sum / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table() -> ChannelParams {
        ChannelParams::default()
    }

    #[test]
    fn los_probability_overhead_limit() {
        let p = los_probability(0.0, 150.0, &table());
        assert!((p - 0.99971).abs() < 1e-4, "{p}");
    }

    #[test]
    fn los_probability_far_limit() {
        let params = table();
        let limit = 1.0 / (1.0 + params.env_a * (params.env_a * params.env_b).exp());
        assert!((limit - 0.01621).abs() < 1e-5);
        let p = los_probability(1e9, 150.0, &params);
        assert!((p - limit).abs() < 1e-6);
    }

    #[test]
    fn los_nlos_complementary() {
        let params = table();
        for z in [0.0, 1.0, 50.0, 300.0, 1e4] {
            let s = los_probability(z, 200.0, &params) + nlos_probability(z, 200.0, &params);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn los_probability_monotone_on_grids() {
        let params = table();
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let p = los_probability(i as f64 * 20.0, 150.0, &params);
            assert!(p < prev);
            prev = p;
        }
        let mut prev = 0.0;
        for i in 1..=100 {
            let p = los_probability(300.0, i as f64 * 5.0, &params);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn antenna_single_element_is_isotropic() {
        let p = antenna_from_count(1).unwrap();
        assert_eq!(p.main_gain, 1.0);
        assert!((p.side_gain - 1.0).abs() < 1e-15);
        assert!((p.width_azimuth - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn antenna_four_and_nine() {
        let p = antenna_from_count(4).unwrap();
        assert_eq!(p.main_gain, 4.0);
        assert!((p.side_gain - 0.8158).abs() < 1e-4, "{}", p.side_gain);
        assert!((p.width_elevation - 0.8660).abs() < 1e-4);
        let p = antenna_from_count(9).unwrap();
        assert_eq!(p.main_gain, 9.0);
        assert!((p.width_azimuth - 0.5774).abs() < 1e-4);
    }

    #[test]
    fn antenna_rejects_zero() {
        assert!(antenna_from_count(0).is_err());
    }

    #[test]
    fn antenna_energy_concentration() {
        let mut prev_spread = 0.0;
        for n in 2..=256u32 {
            let p = antenna_from_count(n).unwrap();
            assert!(p.side_gain < 1.0 && p.main_gain > 1.0, "n={n}");
            // G·θ² = 3 for every n, so the main-lobe energy share stays bounded
            let spread = p.main_gain * p.width_azimuth * p.width_elevation;
            assert!((spread - 3.0).abs() < 1e-12);
            assert!(spread >= prev_spread - 1e-12);
            prev_spread = spread;
        }
    }

    #[test]
    fn path_gain_values() {
        let params = table();
        assert_eq!(path_gain(1.0, LinkType::Los, &params).unwrap(), 1.0);
        let g = path_gain(100.0, LinkType::Nlos, &params).unwrap();
        assert!((g - 1e-10).abs() < 1e-22);
        assert!(path_gain(0.0, LinkType::Los, &params).is_err());
        assert!(path_gain(-1.0, LinkType::Los, &params).is_err());
        assert!(
            path_gain(10.0, LinkType::Los, &params).unwrap()
                > path_gain(11.0, LinkType::Los, &params).unwrap()
        );
    }

    #[test]
    fn exponential_fading_mean() {
        let params = table();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_fading(LinkType::Nlos, &params, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn gamma_fading_variance_and_support() {
        let params = table();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_fading(LinkType::Los, &params, &mut rng))
            .collect();
        assert!(draws.iter().all(|h| *h > 0.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0 / 3.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn validation_rejects_bad_channel() {
        let mut p = table();
        p.alpha_los = 2.0;
        assert!(p.validate().is_err());
        let mut p = table();
        p.m_los = 0;
        assert!(p.validate().is_err());
        let mut p = table();
        p.atten_nlos = 1.5;
        assert!(p.validate().is_err());
        assert!(table().validate().is_ok());
    }
}
