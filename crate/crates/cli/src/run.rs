//! Sweep execution and CSV/manifest output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use uav_outage::montecarlo::{simulate, McOptions, Probe, ProbeResult};
use uav_outage::network::{AssociationScheme, NetworkConfig};
use uav_outage::outage::{Alignment, OutageModel};

use crate::config::{Engine, ExperimentSpec, ManifestInfo, SweepAxis};
use crate::CliError;

pub const CSV_HEADER: [&str; 8] = [
    "sweep_value",
    "scheme",
    "alignment",
    "engine",
    "outage",
    "ci_halfwidth",
    "quad_error",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub outage: f64,
    pub ci_halfwidth: Option<f64>,
    pub quad_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_value: Option<f64>,
    pub scheme: AssociationScheme,
    pub alignment: Alignment,
    pub engine: &'static str,
    /// Engine failures keep their message; the row is still written.
    pub result: Result<Estimate, String>,
    pub wall_time_s: f64,
}

impl Row {
    fn fields(&self, timings: bool) -> [String; 8] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let (outage, ci, quad) = match &self.result {
            Ok(e) => (e.outage.to_string(), opt(e.ci_halfwidth), opt(e.quad_error)),
            Err(_) => ("ERROR".to_string(), String::new(), String::new()),
        };
        [
            opt(self.sweep_value),
            self.scheme.label().to_string(),
            self.alignment.label().to_string(),
            self.engine.to_string(),
            outage,
            ci,
            quad,
            if timings {
                format!("{:.3}", self.wall_time_s)
            } else {
                String::new()
            },
        ]
    }
}

struct Layout {
    points: Vec<Option<f64>>,
    schemes: Vec<AssociationScheme>,
    alignments: Vec<Alignment>,
}

impl Layout {
    fn new(spec: &ExperimentSpec) -> Self {
        match &spec.sweep {
            Some(s) => Layout {
                points: s.values.iter().map(|v| Some(*v)).collect(),
                schemes: s.schemes.iter().map(|&x| x.into()).collect(),
                alignments: s.alignments.iter().map(|&x| x.into()).collect(),
            },
            None => Layout {
                points: vec![None],
                schemes: vec![spec.network.scheme.into()],
                alignments: vec![Alignment::Imperfect, Alignment::Perfect],
            },
        }
    }

    fn probes(&self, spec: &ExperimentSpec) -> Vec<Probe> {
        self.schemes
            .iter()
            .flat_map(|&s| {
                self.alignments.iter().map(move |&alignment| Probe {
                    mode: spec.run.mode(s),
                    alignment,
                })
            })
            .collect()
    }
}

fn network_at(spec: &ExperimentSpec, value: Option<f64>) -> Result<NetworkConfig, String> {
    let net_spec = match (&spec.sweep, value) {
        (Some(sweep), Some(v)) => sweep.axis.apply(&spec.network, v),
        _ => spec.network.clone(),
    };
    net_spec.build().map_err(|e| e.to_string())
}

fn mc_options(spec: &ExperimentSpec) -> McOptions {
    McOptions {
        drops: spec.run.drops,
        seed: spec.run.seed,
        window_radius: spec.run.window_m,
    }
}

fn run_mc(
    spec: &ExperimentSpec,
    network: &NetworkConfig,
    probes: &[Probe],
) -> (Result<Vec<ProbeResult>, String>, f64) {
    let start = Instant::now();
    let res = simulate(&spec.mc_overrides.apply(network), probes, &mc_options(spec))
        .map_err(|e| e.to_string());
    (res, start.elapsed().as_secs_f64())
}

fn analytical_rows(
    value: Option<f64>,
    network: &Result<NetworkConfig, String>,
    layout: &Layout,
) -> Vec<Row> {
    let mut rows = Vec::new();
    for &scheme in &layout.schemes {
        let model = network
            .clone()
            .and_then(|n| OutageModel::new(&n.with_scheme(scheme)).map_err(|e| e.to_string()));
        for &alignment in &layout.alignments {
            let start = Instant::now();
            let result = model.clone().and_then(|m| {
                m.outage_with(alignment)
                    .map_err(|e| e.to_string())
                    .map(|r| Estimate {
                        outage: r.outage,
                        ci_halfwidth: None,
                        quad_error: Some(r.error_estimate),
                    })
            });
            rows.push(Row {
                sweep_value: value,
                scheme,
                alignment,
                engine: "analytical",
                result,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    rows
}

fn mc_rows(
    value: Option<f64>,
    threshold: Result<f64, String>,
    sims: &(Result<Vec<ProbeResult>, String>, f64),
    layout: &Layout,
) -> Vec<Row> {
    let mut rows = Vec::new();
    let mut i = 0;
    for &scheme in &layout.schemes {
        for &alignment in &layout.alignments {
            let result = match (&sims.0, &threshold) {
                (Ok(res), Ok(t)) => {
                    let e = res[i].outage(*t);
                    Ok(Estimate {
                        outage: e.estimate,
                        ci_halfwidth: Some(e.ci_halfwidth),
                        quad_error: None,
                    })
                }
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            rows.push(Row {
                sweep_value: value,
                scheme,
                alignment,
                engine: "mc",
                result,
                wall_time_s: sims.1,
            });
            i += 1;
        }
    }
    rows
}

/// Evaluates every (sweep value, scheme, alignment, engine) combination.
/// Rows come back in sweep order whatever the degree of parallelism.
pub fn run_experiment(spec: &ExperimentSpec, engine: Engine) -> Vec<Row> {
    let layout = Layout::new(spec);
    let probes = layout.probes(spec);
    let threshold_axis = matches!(&spec.sweep, Some(s) if s.axis == SweepAxis::SinrThresholdDb);

    // Drops do not depend on the threshold, so a threshold sweep simulates once.
    let shared = (engine.mc() && threshold_axis).then(|| match network_at(spec, None) {
        Ok(n) => run_mc(spec, &n, &probes),
        Err(e) => (Err(e), 0.0),
    });

    let per_point: Vec<Vec<Row>> = layout
        .points
        .par_iter()
        .map(|&value| {
            let network = network_at(spec, value);
            let mut rows = Vec::new();
            let analytical = if engine.analytical() {
                analytical_rows(value, &network, &layout)
            } else {
                Vec::new()
            };
            let mc = if engine.mc() {
                let threshold = network
                    .as_ref()
                    .map(|n| n.sinr_threshold)
                    .map_err(|e| e.clone());
                match &shared {
                    Some(sims) => mc_rows(value, threshold, sims, &layout),
                    None => {
                        let sims = match &network {
                            Ok(n) => run_mc(spec, n, &probes),
                            Err(e) => (Err(e.clone()), 0.0),
                        };
                        mc_rows(value, threshold, &sims, &layout)
                    }
                }
            } else {
                Vec::new()
            };
            // interleave engines per (scheme, alignment)
            let (mut a, mut m) = (analytical.into_iter(), mc.into_iter());
            for _ in 0..layout.schemes.len() * layout.alignments.len() {
                rows.extend(a.next());
                rows.extend(m.next());
            }
            rows
        })
        .collect();
    let rows: Vec<Row> = per_point.into_iter().flatten().collect();
    for r in &rows {
        if let Err(e) = &r.result {
            log::error!(
                "{} engine failed at sweep value {:?} ({}, {}): {e}",
                r.engine,
                r.sweep_value,
                r.scheme,
                r.alignment.label()
            );
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[Row], timings: bool, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.fields(timings))?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: PathBuf::from("<csv>"),
        source: e,
    })?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.toml");
    PathBuf::from(name)
}

/// The resolved experiment, loadable again with `--config`.
pub fn manifest(spec: &ExperimentSpec, engine: Engine, command: &str) -> ExperimentSpec {
    let mut m = spec.clone();
    m.run.engine = engine;
    m.manifest = Some(ManifestInfo {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
    });
    m
}

pub fn write_outputs(
    rows: &[Row],
    spec: &ExperimentSpec,
    engine: Engine,
    command: &str,
    timings: bool,
    out: &Path,
) -> Result<(), CliError> {
    let io = |e| CliError::Io {
        path: out.to_path_buf(),
        source: e,
    };
    let file = std::fs::File::create(out).map_err(io)?;
    write_csv(rows, timings, std::io::BufWriter::new(file))?;
    let mpath = manifest_path(out);
    std::fs::write(&mpath, manifest(spec, engine, command).to_toml()).map_err(|e| {
        CliError::Io {
            path: mpath,
            source: e,
        }
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlignmentName, SchemeName, SweepSpec};

    fn spec(axis: SweepAxis, values: Vec<f64>) -> ExperimentSpec {
        let mut s = ExperimentSpec::default();
        s.run.drops = 40;
        s.run.window_m = 1500.0;
        s.sweep = Some(SweepSpec {
            axis,
            values,
            schemes: vec![SchemeName::Mapas],
            alignments: vec![AlignmentName::Perfect],
        });
        s
    }

    #[test]
    fn rows_follow_sweep_order() {
        let rows = run_experiment(
            &spec(SweepAxis::SinrThresholdDb, vec![5.0, -5.0]),
            Engine::Both,
        );
        let order: Vec<(Option<f64>, &str)> =
            rows.iter().map(|r| (r.sweep_value, r.engine)).collect();
        assert_eq!(
            order,
            vec![
                (Some(5.0), "analytical"),
                (Some(5.0), "mc"),
                (Some(-5.0), "analytical"),
                (Some(-5.0), "mc")
            ]
        );
        let out = |i: usize| rows[i].result.as_ref().unwrap().outage;
        assert!(out(2) <= out(0));
    }

    #[test]
    fn engine_failure_marks_row() {
        let rows = run_experiment(
            &spec(SweepAxis::UavAntennas, vec![0.0, 4.0]),
            Engine::Analytical,
        );
        assert!(rows[0].result.is_err());
        assert!(rows[1].result.is_ok());
        let mut buf = Vec::new();
        write_csv(&rows, false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("ERROR"));
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("out/a.csv")),
            PathBuf::from("out/a.csv.manifest.toml")
        );
    }
}
