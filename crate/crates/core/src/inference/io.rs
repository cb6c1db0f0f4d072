//! Columnar text output for kept draws and latent snapshots.
//!
//! Draw files have one row per kept draw:
//! `iteration, <parameters>, latent_sum_<tag>..., log_posterior`. The
//! parameter columns describe the model shape, so a draw file can be read
//! back without any other input.

use std::io::{Read, Write};

use super::params::{layout, Body, BodyKind, ForceParams, ModelParams};
use super::sampler::{Draw, LatentSnapshot};
use crate::data::Side;
use crate::error_model::{ObservationModel, ObservationVariant};
use crate::{Error, Result};

pub fn draws_header(names: &[String], sides: &[Side]) -> Vec<String> {
    let mut h = vec!["iteration".to_string()];
    h.extend(names.iter().cloned());
    h.extend(sides.iter().map(|s| format!("latent_sum_{}", s.tag())));
    h.push("log_posterior".into());
    h
}

pub fn write_draws<W: Write>(names: &[String], sides: &[Side], draws: &[Draw], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(draws_header(names, sides))?;
    for d in draws {
        let mut row = vec![d.iteration.to_string()];
        row.extend(d.params.values().iter().map(|v| v.to_string()));
        row.extend(d.latent_sums.iter().map(|v| v.to_string()));
        row.push(d.log_posterior.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<draws>", e))?;
    Ok(())
}

/// Draws read back from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    pub sides: Vec<Side>,
    pub names: Vec<String>,
    pub draws: Vec<Draw>,
}

fn side_from_tag(tag: &str) -> Option<Side> {
    Side::ALL.into_iter().find(|s| s.tag() == tag)
}

/// Rebuild the per-force shape from parameter column names.
fn template_from_names(names: &[String]) -> Result<ModelParams> {
    let mut sides: Vec<Side> = Vec::new();
    for n in names {
        let tag = n.rsplit('_').next().unwrap_or("");
        let side = side_from_tag(tag).ok_or_else(|| Error::data(format!("draw column '{n}' has no side tag")))?;
        if !sides.contains(&side) {
            sides.push(side);
        }
    }
    let has = |base: &str, side: Side| names.iter().any(|n| *n == format!("{base}_{}", side.tag()));
    let forces = sides
        .into_iter()
        .map(|side| {
            let body = if has("meanlog", side) {
                Body::LogNormal { meanlog: 0.0, sdlog: 1.0 }
            } else {
                Body::PowerLaw { alpha: 2.0 }
            };
            let variant = if has("eta", side) {
                ObservationVariant::ExponentialQuadratic
            } else if has("lambda", side) {
                ObservationVariant::ExponentialLinear
            } else {
                ObservationVariant::Logistic
            };
            ForceParams {
                side,
                body,
                obs: ObservationModel {
                    variant,
                    lambda: 0.0,
                    mu: 0.0,
                    eta: 0.0,
                },
                p: 0.0,
            }
        })
        .collect();
    let t = ModelParams { forces };
    if t.names() != names {
        return Err(Error::data(format!("unrecognised draw columns: {}", names.join(","))));
    }
    Ok(t)
}

pub fn read_draws<R: Read>(mut reader: R, name: &str) -> Result<DrawTable> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(name, e))?;
    // every row the writer emits ends in a newline; a cut inside the last
    // field would otherwise still parse
    if bytes.last().is_some_and(|&b| b != b'\n') {
        return Err(Error::data(format!("{name} is truncated (no final newline)")));
    }
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header.len() < 4 || header[0] != "iteration" || header.last().map(String::as_str) != Some("log_posterior") {
        return Err(Error::data(format!("{name} is not a draw file")));
    }
    let sum_cols: Vec<&String> = header.iter().filter(|h| h.starts_with("latent_sum_")).collect();
    let n_param = header.len() - 2 - sum_cols.len();
    let names: Vec<String> = header[1..1 + n_param].to_vec();
    let template = template_from_names(&names)?;
    let sides: Vec<Side> = template.forces.iter().map(|f| f.side).collect();
    let expected_sums: Vec<String> = sides.iter().map(|s| format!("latent_sum_{}", s.tag())).collect();
    if header[1 + n_param..header.len() - 1] != expected_sums[..] {
        return Err(Error::data(format!("{name}: latent sum columns do not match the parameters")));
    }

    let mut draws = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::data(format!("{name} row {}: {e}", i + 2)))?;
        let bad = |what: &str| Error::data(format!("{name} row {}: bad {what}", i + 2));
        if row.len() != header.len() {
            return Err(bad("field count"));
        }
        let iteration = row[0].parse().map_err(|_| bad("iteration"))?;
        let values: Vec<f64> = (1..=n_param)
            .map(|j| row[j].parse::<f64>().map_err(|_| bad(&header[j])))
            .collect::<Result<_>>()?;
        let latent_sums: Vec<u64> = (0..sides.len())
            .map(|k| row[1 + n_param + k].parse::<u64>().map_err(|_| bad("latent sum")))
            .collect::<Result<_>>()?;
        let log_posterior = row[header.len() - 1].parse().map_err(|_| bad("log_posterior"))?;
        draws.push(Draw {
            iteration,
            params: template.with_values(&values),
            log_posterior,
            latent_sums,
        });
    }
    if draws.is_empty() {
        return Err(Error::data(format!("{name} contains no draws")));
    }
    Ok(DrawTable { sides, names, draws })
}

/// Long format: `iteration,side,index,x`.
pub fn write_latents<W: Write>(sides: &[Side], snapshots: &[LatentSnapshot], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "side", "index", "x"])?;
    for s in snapshots {
        for (side, xs) in sides.iter().zip(&s.latents) {
            for (i, x) in xs.iter().enumerate() {
                w.write_record([s.iteration.to_string(), side.to_string(), i.to_string(), x.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<latents>", e))?;
    Ok(())
}

/// Column names for a model of the given shape.
pub fn parameter_names(forces: &[(Side, BodyKind, ObservationVariant)]) -> Vec<String> {
    forces
        .iter()
        .flat_map(|&(s, b, v)| layout(s, b, v).into_iter().map(|(n, _)| n))
        .collect()
}
