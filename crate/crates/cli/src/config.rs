//! Experiment files. Every key carries its unit; defaults reproduce the
//! two-tier dense-urban reference network.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use uav_outage::channel::ChannelParams;
use uav_outage::montecarlo::{AssociationMode, DEFAULT_DROPS, DEFAULT_WINDOW_RADIUS};
use uav_outage::network::{AssociationScheme, MisalignmentModel, NetworkConfig, TierConfig};
use uav_outage::outage::Alignment;

use crate::CliError;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TierSpec {
    pub height_m: f64,
    pub density_per_m2: f64,
    pub power_dbw: f64,
    pub uav_antennas: u32,
}

impl Default for TierSpec {
    fn default() -> Self {
        TierSpec {
            height_m: 150.0,
            density_per_m2: 1e-5,
            power_dbw: 0.0,
            uav_antennas: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    /// Linear attenuation factors.
    pub attenuation_los: f64,
    pub attenuation_nlos: f64,
    pub nakagami_m_los: u32,
    pub nakagami_m_nlos: u32,
    pub env_a: f64,
    pub env_b: f64,
    pub noise_power_dbw: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            alpha_los: 2.5,
            alpha_nlos: 4.0,
            attenuation_los: 1.0,
            attenuation_nlos: 0.01,
            nakagami_m_los: 3,
            nakagami_m_nlos: 1,
            env_a: 11.95,
            env_b: 0.136,
            noise_power_dbw: -130.0,
        }
    }
}

impl ChannelSpec {
    fn params(&self) -> ChannelParams {
        ChannelParams {
            alpha_los: self.alpha_los,
            alpha_nlos: self.alpha_nlos,
            atten_los: self.attenuation_los,
            atten_nlos: self.attenuation_nlos,
            m_los: self.nakagami_m_los,
            m_nlos: self.nakagami_m_nlos,
            env_a: self.env_a,
            env_b: self.env_b,
            noise_power: db_to_linear(self.noise_power_dbw),
        }
    }
}

/// Symmetric uniform steering errors, half-widths in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MisalignmentSpec {
    pub ue_half_width_rad: f64,
    pub uav_half_width_rad: f64,
}

impl Default for MisalignmentSpec {
    fn default() -> Self {
        MisalignmentSpec {
            ue_half_width_rad: PI / 12.0,
            uav_half_width_rad: PI / 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Mapas,
    Cdas,
}

impl From<SchemeName> for AssociationScheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Mapas => AssociationScheme::Mapas,
            SchemeName::Cdas => AssociationScheme::Cdas,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSpec {
    pub scheme: SchemeName,
    pub threshold_db: f64,
    pub ue_antennas: u32,
    pub tiers: Vec<TierSpec>,
    pub channel: ChannelSpec,
    pub misalignment: MisalignmentSpec,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            scheme: SchemeName::Mapas,
            threshold_db: 0.0,
            ue_antennas: 4,
            tiers: vec![
                TierSpec::default(),
                TierSpec {
                    height_m: 200.0,
                    power_dbw: 2.0,
                    ..TierSpec::default()
                },
            ],
            channel: ChannelSpec::default(),
            misalignment: MisalignmentSpec::default(),
        }
    }
}

impl NetworkSpec {
    pub fn build(&self) -> Result<NetworkConfig, CliError> {
        let m = &self.misalignment;
        let misalignment = MisalignmentModel::uniform(m.ue_half_width_rad, m.uav_half_width_rad)
            .map_err(|e| CliError::config("network.misalignment", e.to_string()))?;
        let network = NetworkConfig {
            tiers: self
                .tiers
                .iter()
                .map(|t| TierConfig {
                    height: t.height_m,
                    density: t.density_per_m2,
                    tx_power: db_to_linear(t.power_dbw),
                    uav_antennas: t.uav_antennas,
                })
                .collect(),
            channel: self.channel.params(),
            ue_antennas: self.ue_antennas,
            misalignment,
            sinr_threshold: db_to_linear(self.threshold_db),
            scheme: self.scheme.into(),
        };
        network.validate().map_err(|e| match e {
            uav_outage::Error::InvalidConfig { field, reason } => {
                CliError::config(format!("network.{field}"), reason)
            }
            other => CliError::config("network", other.to_string()),
        })?;
        Ok(network)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SinrThresholdDb,
    UavAntennas,
    TierDensityPerM2,
    /// Height of the lowest tier; higher tiers keep their spacing.
    TierHeightM,
    /// Half-width of the UAV steering errors in both planes.
    MisalignmentRangeRad,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::SinrThresholdDb => "sinr_threshold_db",
            SweepAxis::UavAntennas => "uav_antennas",
            SweepAxis::TierDensityPerM2 => "tier_density_per_m2",
            SweepAxis::TierHeightM => "tier_height_m",
            SweepAxis::MisalignmentRangeRad => "misalignment_range_rad",
        }
    }

    /// Network spec at one sweep value.
    pub fn apply(self, base: &NetworkSpec, value: f64) -> NetworkSpec {
        let mut out = base.clone();
        match self {
            SweepAxis::SinrThresholdDb => out.threshold_db = value,
            SweepAxis::UavAntennas => out
                .tiers
                .iter_mut()
                .for_each(|t| t.uav_antennas = value as u32),
            SweepAxis::TierDensityPerM2 => {
                out.tiers.iter_mut().for_each(|t| t.density_per_m2 = value)
            }
            SweepAxis::TierHeightM => {
                if let Some(first) = base.tiers.first() {
                    let shift = value - first.height_m;
                    out.tiers.iter_mut().for_each(|t| t.height_m += shift);
                }
            }
            SweepAxis::MisalignmentRangeRad => out.misalignment.uav_half_width_rad = value,
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentName {
    Imperfect,
    Perfect,
}

impl From<AlignmentName> for Alignment {
    fn from(a: AlignmentName) -> Self {
        match a {
            AlignmentName::Imperfect => Alignment::Imperfect,
            AlignmentName::Perfect => Alignment::Perfect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<SchemeName>,
    #[serde(default = "all_alignments")]
    pub alignments: Vec<AlignmentName>,
}

fn all_schemes() -> Vec<SchemeName> {
    vec![SchemeName::Mapas, SchemeName::Cdas]
}

fn all_alignments() -> Vec<AlignmentName> {
    vec![AlignmentName::Imperfect, AlignmentName::Perfect]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytical,
    Mc,
    Both,
}

impl Engine {
    pub fn analytical(self) -> bool {
        matches!(self, Engine::Analytical | Engine::Both)
    }

    pub fn mc(self) -> bool {
        matches!(self, Engine::Mc | Engine::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapasMode {
    /// Rank by attenuation and path loss only, as the analysis does.
    Strict,
    /// Include the tier transmit power in the ranking.
    FullPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub engine: Engine,
    pub drops: u64,
    pub seed: u64,
    pub window_m: f64,
    pub mapas_mode: MapasMode,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            engine: Engine::Analytical,
            drops: DEFAULT_DROPS,
            seed: 1,
            window_m: DEFAULT_WINDOW_RADIUS,
            mapas_mode: MapasMode::Strict,
        }
    }
}

impl RunSpec {
    pub fn mode(&self, scheme: AssociationScheme) -> AssociationMode {
        match (scheme, self.mapas_mode) {
            (AssociationScheme::Cdas, _) => AssociationMode::Cdas,
            (AssociationScheme::Mapas, MapasMode::Strict) => AssociationMode::MapasStrict,
            (AssociationScheme::Mapas, MapasMode::FullPower) => AssociationMode::MapasFullPower,
        }
    }
}

/// Channel values that replace the network's in the Monte Carlo engine only.
/// Meant for sensitivity studies and for checking that validation notices a
/// model mismatch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attenuation_los: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attenuation_nlos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_los: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_nlos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nakagami_m_los: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nakagami_m_nlos: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power_dbw: Option<f64>,
}

impl McOverrides {
    pub fn is_empty(&self) -> bool {
        *self == McOverrides::default()
    }

    pub fn apply(&self, network: &NetworkConfig) -> NetworkConfig {
        let mut out = network.clone();
        let c = &mut out.channel;
        if let Some(a) = self.attenuation_los {
            c.atten_los = a;
        }
        if let Some(a) = self.attenuation_nlos {
            c.atten_nlos = a;
        }
        if let Some(a) = self.alpha_los {
            c.alpha_los = a;
        }
        if let Some(a) = self.alpha_nlos {
            c.alpha_nlos = a;
        }
        if let Some(m) = self.nakagami_m_los {
            c.m_los = m;
        }
        if let Some(m) = self.nakagami_m_nlos {
            c.m_nlos = m;
        }
        if let Some(n) = self.noise_power_dbw {
            c.noise_power = db_to_linear(n);
        }
        out
    }
}

/// Provenance written next to every dataset. Ignored when a manifest is read
/// back as an experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub tool: String,
    pub version: String,
    pub command: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub network: NetworkSpec,
    pub run: RunSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(skip_serializing_if = "McOverrides::is_empty")]
    pub mc_overrides: McOverrides,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    /// Checks everything that can be checked before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.network.build()?;
        let run = &self.run;
        if run.drops == 0 {
            return Err(CliError::config("run.drops", "must be at least 1"));
        }
        if !(run.window_m > 0.0 && run.window_m.is_finite()) {
            return Err(CliError::config(
                "run.window_m",
                "must be positive and finite",
            ));
        }
        if !self.mc_overrides.is_empty() {
            let base = self.network.build()?;
            self.mc_overrides
                .apply(&base)
                .channel
                .validate()
                .map_err(|e| CliError::config("mc_overrides", e.to_string()))?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(CliError::config(
                    "sweep.values",
                    "sweep needs at least one value",
                ));
            }
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(CliError::config(
                    "sweep.values",
                    format!("non-finite value {v}"),
                ));
            }
            if sweep.axis == SweepAxis::UavAntennas {
                if let Some(v) = sweep.values.iter().find(|v| v.fract() != 0.0 || **v < 0.0) {
                    return Err(CliError::config(
                        "sweep.values",
                        format!("antenna count {v} is not a whole number"),
                    ));
                }
            }
            if sweep.schemes.is_empty() {
                return Err(CliError::config(
                    "sweep.schemes",
                    "need at least one scheme",
                ));
            }
            if sweep.alignments.is_empty() {
                return Err(CliError::config(
                    "sweep.alignments",
                    "need at least one alignment",
                ));
            }
        }
        Ok(())
    }
}
