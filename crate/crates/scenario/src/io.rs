use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use netcore::{Link, Network, Node, OdMatrix, Scalar};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::dataset::{Dataset, Manifest, Sample, SampleMeta, SCHEMA_VERSION};
use crate::error::ScenarioError;

/// JSON formatter writing every float in scientific notation with 17
/// significant digits, enough for `f64` values to round-trip exactly.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{:.16e}", value as f64)
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigRecord {
    od_scale_low: f64,
    od_scale_high: f64,
    disruption_level: String,
    mask_ratio: f64,
    seed: u64,
    samples: usize,
}

#[derive(Serialize, Deserialize)]
struct ManifestRecord {
    schema_version: u32,
    config: ConfigRecord,
    n_samples: usize,
    split_index: usize,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct LinkRecord {
    from: usize,
    to: usize,
    t0: f64,
    cap: f64,
    b: f64,
    power: f64,
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    level: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    nodes: Vec<NodeRecord>,
    links: Vec<LinkRecord>,
    od_true: Vec<(usize, usize, f64)>,
    mask: Vec<(usize, usize)>,
    flows: Vec<f64>,
    ratios: Vec<f64>,
    meta: MetaRecord,
    #[serde(default)]
    first_thru: usize,
}

fn to_json_line<S: Serialize>(value: &S) -> Result<String, ScenarioError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| ScenarioError::Integrity(format!("serialization failed: {e}")))?;
    String::from_utf8(buf)
        .map_err(|e| ScenarioError::Integrity(format!("serialized non-UTF-8 output: {e}")))
}

fn config_record(config: &ScenarioConfig) -> ConfigRecord {
    ConfigRecord {
        od_scale_low: config.od_scale_low,
        od_scale_high: config.od_scale_high,
        disruption_level: config.disruption_level.to_string(),
        mask_ratio: config.mask_ratio,
        seed: config.seed,
        samples: config.samples,
    }
}

fn sample_record<T: Scalar>(sample: &Sample<T>) -> SampleRecord {
    let f = |v: T| v.to_f64().unwrap();
    SampleRecord {
        nodes: sample
            .network
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                x: f(n.x),
                y: f(n.y),
            })
            .collect(),
        links: sample
            .network
            .links()
            .iter()
            .map(|l| LinkRecord {
                from: l.from,
                to: l.to,
                t0: f(l.free_flow_time),
                cap: f(l.capacity),
                b: f(l.bpr_b),
                power: f(l.bpr_power),
            })
            .collect(),
        od_true: sample.od_true.iter().map(|(o, d, q)| (o, d, f(q))).collect(),
        mask: sample.mask.clone(),
        flows: sample.flows.iter().map(|&v| f(v)).collect(),
        ratios: sample.ratios.iter().map(|&v| f(v)).collect(),
        meta: MetaRecord {
            level: sample.meta.level.to_string(),
            seed: sample.meta.seed,
        },
        first_thru: sample.network.first_thru_node(),
    }
}

/// Serializes a dataset to JSON lines: one manifest line followed by one
/// line per sample, floats written with 17 significant digits.
pub fn dataset_to_string<T: Scalar>(dataset: &Dataset<T>) -> Result<String, ScenarioError> {
    let manifest = ManifestRecord {
        schema_version: dataset.manifest.schema_version,
        config: config_record(&dataset.manifest.config),
        n_samples: dataset.manifest.n_samples,
        split_index: dataset.manifest.split_index,
    };
    let mut out = to_json_line(&manifest)?;
    out.push('\n');
    for sample in &dataset.samples {
        out.push_str(&to_json_line(&sample_record(sample))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_dataset<T: Scalar>(
    dataset: &Dataset<T>,
    path: impl AsRef<Path>,
) -> Result<(), ScenarioError> {
    fs::write(path, dataset_to_string(dataset)?)?;
    Ok(())
}

fn parse_line<'a, R: Deserialize<'a>>(text: &'a str, line: usize) -> Result<R, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line,
        msg: e.to_string(),
    })
}

fn from_scalar<T: Scalar>(v: f64, what: &str, line: usize) -> Result<T, ScenarioError> {
    T::from_f64(v).ok_or_else(|| ScenarioError::Parse {
        line,
        msg: format!("{what} value {v} is not representable"),
    })
}

fn restore_sample<T: Scalar>(
    record: SampleRecord,
    line: usize,
) -> Result<Sample<T>, ScenarioError> {
    let s = |v: f64, what: &str| from_scalar::<T>(v, what, line);
    let nodes: Vec<Node<T>> = record
        .nodes
        .iter()
        .map(|n| {
            Ok(Node {
                id: n.id,
                x: s(n.x, "node coordinate")?,
                y: s(n.y, "node coordinate")?,
            })
        })
        .collect::<Result<_, ScenarioError>>()?;
    let links: Vec<Link<T>> = record
        .links
        .iter()
        .map(|l| {
            Ok(Link {
                from: l.from,
                to: l.to,
                free_flow_time: s(l.t0, "free-flow time")?,
                capacity: s(l.cap, "capacity")?,
                bpr_b: s(l.b, "BPR coefficient")?,
                bpr_power: s(l.power, "BPR power")?,
            })
        })
        .collect::<Result<_, ScenarioError>>()?;
    let link_count = links.len();
    let network = Network::with_first_thru(nodes, links, record.first_thru)?;

    let mut od_true = OdMatrix::new();
    for &(o, d, q) in &record.od_true {
        od_true.set(o, d, s(q, "demand")?)?;
    }
    let masked: BTreeSet<(usize, usize)> = record.mask.iter().copied().collect();
    for &(o, d) in &masked {
        if od_true.get(o, d) <= T::zero() {
            return Err(ScenarioError::Integrity(format!(
                "line {line}: masked pair ({o}, {d}) has no demand entry"
            )));
        }
    }
    let od_observed = OdMatrix::from_entries(
        od_true.iter().filter(|&(o, d, _)| !masked.contains(&(o, d))),
    )?;

    if record.flows.len() != link_count || record.ratios.len() != link_count {
        return Err(ScenarioError::Integrity(format!(
            "line {line}: {} flows and {} ratios for {link_count} links",
            record.flows.len(),
            record.ratios.len()
        )));
    }
    let flows = record
        .flows
        .iter()
        .map(|&v| s(v, "flow"))
        .collect::<Result<_, _>>()?;
    let ratios = record
        .ratios
        .iter()
        .map(|&v| s(v, "ratio"))
        .collect::<Result<_, _>>()?;

    let level = record.meta.level.parse().map_err(|_| ScenarioError::Parse {
        line,
        msg: format!("unknown disruption level {:?}", record.meta.level),
    })?;
    Ok(Sample {
        network,
        od_true,
        od_observed,
        mask: masked.into_iter().collect(),
        flows,
        ratios,
        meta: SampleMeta {
            level,
            seed: record.meta.seed,
        },
    })
}

/// Parses a dataset from its JSON-lines form, rejecting unknown schema
/// versions, malformed lines, and samples whose parts disagree.
pub fn dataset_from_str<T: Scalar>(text: &str) -> Result<Dataset<T>, ScenarioError> {
    let mut lines = text.lines();
    let first = lines
        .next()
        .filter(|l| !l.trim().is_empty())
        .ok_or_else(|| ScenarioError::Integrity("dataset file is empty".to_string()))?;

    let header: serde_json::Value = parse_line(first, 1)?;
    let found = header
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| ScenarioError::Parse {
            line: 1,
            msg: "manifest has no schema_version".to_string(),
        })? as u32;
    if found != SCHEMA_VERSION {
        return Err(ScenarioError::Schema {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let manifest: ManifestRecord =
        serde_json::from_value(header).map_err(|e| ScenarioError::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
    let level = manifest
        .config
        .disruption_level
        .parse()
        .map_err(|_| ScenarioError::Parse {
            line: 1,
            msg: format!(
                "unknown disruption level {:?}",
                manifest.config.disruption_level
            ),
        })?;
    let config = ScenarioConfig {
        od_scale_low: manifest.config.od_scale_low,
        od_scale_high: manifest.config.od_scale_high,
        disruption_level: level,
        mask_ratio: manifest.config.mask_ratio,
        seed: manifest.config.seed,
        samples: manifest.config.samples,
    };

    let mut samples = Vec::with_capacity(manifest.n_samples);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = parse_line(line, i + 2)?;
        samples.push(restore_sample(record, i + 2)?);
    }
    if samples.len() != manifest.n_samples {
        return Err(ScenarioError::Integrity(format!(
            "manifest promises {} samples but the file holds {}",
            manifest.n_samples,
            samples.len()
        )));
    }
    if manifest.split_index > manifest.n_samples {
        return Err(ScenarioError::Integrity(format!(
            "split index {} exceeds sample count {}",
            manifest.split_index, manifest.n_samples
        )));
    }
    Ok(Dataset {
        manifest: Manifest {
            schema_version: manifest.schema_version,
            config,
            n_samples: manifest.n_samples,
            split_index: manifest.split_index,
        },
        samples,
    })
}

pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>, ScenarioError> {
    dataset_from_str(&fs::read_to_string(path)?)
}
