//! Network-wide configuration: tiers, beamsteering-error model and the
//! default dense-urban parameter set.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::channel::{antenna_from_count, AntennaPattern, ChannelParams};
use crate::error::{Error, Result};

/// One horizontal tier of UAVs.
#[derive(Debug, Clone, PartialEq)]
pub struct TierConfig {
    /// Altitude in metres.
    pub height: f64,
    /// Density of the tier's PPP in UAVs per square metre.
    pub density: f64,
    /// Transmit power in watts.
    pub tx_power: f64,
    pub uav_antennas: u32,
}

impl TierConfig {
    pub fn validate(&self, index: usize) -> Result<()> {
        let field = |name: &str| format!("tiers[{index}].{name}");
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::config(
                field("height"),
                format!("must be positive, got {}", self.height),
            ));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::config(
                field("density"),
                format!("must be positive, got {}", self.density),
            ));
        }
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return Err(Error::config(
                field("tx_power"),
                format!("must be positive, got {}", self.tx_power),
            ));
        }
        if self.uav_antennas == 0 {
            return Err(Error::config(
                field("uav_antennas"),
                "need at least one antenna element",
            ));
        }
        Ok(())
    }

    pub fn pattern(&self) -> AntennaPattern {
        antenna_from_count(self.uav_antennas).expect("validated antenna count")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssociationScheme {
    /// Maximum average received power (path loss and attenuation only).
    Mapas,
    /// Closest 3-D distance.
    Cdas,
}

impl AssociationScheme {
    pub fn label(self) -> &'static str {
        match self {
            AssociationScheme::Mapas => "mapas",
            AssociationScheme::Cdas => "cdas",
        }
    }
}

impl fmt::Display for AssociationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A bounded beamsteering-error distribution on `[min, max]`.
pub trait ErrorDistribution: fmt::Debug + Send + Sync {
    fn support(&self) -> (f64, f64);
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// Location of a point mass, for degenerate (zero-width) distributions.
    fn atom(&self) -> Option<f64> {
        let (lo, hi) = self.support();
        (lo == hi).then_some(lo)
    }
}

/// Uniform error on `[min, max]`; `min == max` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub min: f64,
    pub max: f64,
}

impl Uniform {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min <= 0.0 && 0.0 <= max) {
            return Err(Error::config(
                "misalignment",
                format!("support [{min}, {max}] must be finite and contain 0"),
            ));
        }
        if max - min > PI {
            return Err(Error::config(
                "misalignment",
                format!("support [{min}, {max}] wider than π"),
            ));
        }
        Ok(Uniform { min, max })
    }

    pub fn symmetric(half_width: f64) -> Result<Self> {
        Uniform::new(-half_width, half_width)
    }

    pub fn zero() -> Self {
        Uniform { min: 0.0, max: 0.0 }
    }
}

impl ErrorDistribution for Uniform {
    fn support(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    fn pdf(&self, x: f64) -> f64 {
        if self.max > self.min && x >= self.min && x <= self.max {
            1.0 / (self.max - self.min)
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.min {
            0.0
        } else if x >= self.max {
            1.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        if self.max > self.min {
            rng.gen_range(self.min..self.max)
        } else {
            self.min
        }
    }
}

/// Independent beamsteering errors of the UE and the serving UAV, per plane.
#[derive(Debug, Clone)]
pub struct MisalignmentModel {
    pub ue_azimuth: Arc<dyn ErrorDistribution>,
    pub ue_elevation: Arc<dyn ErrorDistribution>,
    pub uav_azimuth: Arc<dyn ErrorDistribution>,
    pub uav_elevation: Arc<dyn ErrorDistribution>,
}

impl MisalignmentModel {
    /// Uniform errors, symmetric about zero, with the same half-width in both planes.
    pub fn uniform(ue_half_width: f64, uav_half_width: f64) -> Result<Self> {
        Ok(MisalignmentModel {
            ue_azimuth: Arc::new(Uniform::symmetric(ue_half_width)?),
            ue_elevation: Arc::new(Uniform::symmetric(ue_half_width)?),
            uav_azimuth: Arc::new(Uniform::symmetric(uav_half_width)?),
            uav_elevation: Arc::new(Uniform::symmetric(uav_half_width)?),
        })
    }

    /// No beamsteering error at all.
    pub fn perfect() -> Self {
        let zero: Arc<dyn ErrorDistribution> = Arc::new(Uniform::zero());
        MisalignmentModel {
            ue_azimuth: zero.clone(),
            ue_elevation: zero.clone(),
            uav_azimuth: zero.clone(),
            uav_elevation: zero,
        }
    }

    pub fn slots(&self) -> [(&'static str, &dyn ErrorDistribution); 4] {
        [
            ("ue_azimuth", self.ue_azimuth.as_ref()),
            ("ue_elevation", self.ue_elevation.as_ref()),
            ("uav_azimuth", self.uav_azimuth.as_ref()),
            ("uav_elevation", self.uav_elevation.as_ref()),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, dist) in self.slots() {
            let (lo, hi) = dist.support();
            if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && hi >= 0.0) {
                return Err(Error::config(
                    format!("misalignment.{name}"),
                    format!("support [{lo}, {hi}] must be finite and contain 0"),
                ));
            }
        }
        Ok(())
    }
}

impl PartialEq for MisalignmentModel {
    /// Compares the supports and a handful of CDF values, which is exact for
    /// the uniform family and sufficient for configuration equality.
    fn eq(&self, other: &Self) -> bool {
        self.slots()
            .iter()
            .zip(other.slots().iter())
            .all(|((_, a), (_, b))| {
                let (lo, hi) = a.support();
                a.support() == b.support()
                    && (0..=8).all(|i| {
                        let x = lo + (hi - lo) * i as f64 / 8.0;
                        a.cdf(x) == b.cdf(x)
                    })
            })
    }
}

/// Complete description of the network under study.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Tiers ordered by non-decreasing height.
    pub tiers: Vec<TierConfig>,
    pub channel: ChannelParams,
    pub ue_antennas: u32,
    pub misalignment: MisalignmentModel,
    /// SINR threshold, linear.
    pub sinr_threshold: f64,
    pub scheme: AssociationScheme,
}

impl NetworkConfig {
    /// Two-tier dense-urban defaults with MAPAS and misalignment.
    pub fn dense_urban() -> Self {
        let dbw = |x: f64| 10f64.powf(x / 10.0);
        NetworkConfig {
            tiers: vec![
                TierConfig {
                    height: 150.0,
                    density: 1e-5,
                    tx_power: dbw(0.0),
                    uav_antennas: 9,
                },
                TierConfig {
                    height: 200.0,
                    density: 1e-5,
                    tx_power: dbw(2.0),
                    uav_antennas: 9,
                },
            ],
            channel: ChannelParams::default(),
            ue_antennas: 4,
            misalignment: MisalignmentModel::uniform(PI / 12.0, PI / 8.0)
                .expect("default supports are valid"),
            sinr_threshold: 1.0,
            scheme: AssociationScheme::Mapas,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tiers.is_empty() {
            return Err(Error::config("tiers", "at least one tier is required"));
        }
        for (i, tier) in self.tiers.iter().enumerate() {
            tier.validate(i)?;
        }
        for (i, w) in self.tiers.windows(2).enumerate() {
            if w[1].height < w[0].height {
                return Err(Error::config(
                    format!("tiers[{}].height", i + 1),
                    "tier heights must be non-decreasing",
                ));
            }
        }
        self.channel.validate()?;
        if self.ue_antennas == 0 {
            return Err(Error::config(
                "ue_antennas",
                "need at least one antenna element",
            ));
        }
        self.misalignment.validate()?;
        if !(self.sinr_threshold > 0.0 && self.sinr_threshold.is_finite()) {
            return Err(Error::config(
                "sinr_threshold",
                "must be positive and finite",
            ));
        }
        Ok(())
    }

    pub fn ue_pattern(&self) -> AntennaPattern {
        antenna_from_count(self.ue_antennas).expect("validated antenna count")
    }

    pub fn uav_pattern(&self, tier: usize) -> AntennaPattern {
        self.tiers[tier].pattern()
    }

    /// Same network with every beamsteering error removed.
    pub fn perfectly_aligned(&self) -> Self {
        NetworkConfig {
            misalignment: MisalignmentModel::perfect(),
            ..self.clone()
        }
    }

    pub fn with_scheme(&self, scheme: AssociationScheme) -> Self {
        NetworkConfig {
            scheme,
            ..self.clone()
        }
    }

    pub fn with_uav_antennas(&self, n: u32) -> Self {
        let mut out = self.clone();
        out.tiers.iter_mut().for_each(|t| t.uav_antennas = n);
        out
    }

    pub fn with_density(&self, density: f64) -> Self {
        let mut out = self.clone();
        out.tiers.iter_mut().for_each(|t| t.density = density);
        out
    }
}
