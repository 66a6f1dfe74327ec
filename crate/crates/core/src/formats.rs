//! On-disk formats. Every file is one line of JSON header terminated by
//! `\n`, followed immediately by a raw voxel payload in x-fastest order.
//!
//! | magic   | payload                         |
//! |---------|---------------------------------|
//! | `CAPV1` | one `u8` label code per voxel   |
//! | `CAPF1` | one little-endian `f32` per voxel (mm) |
//! | `CAPP1` | one `u8` zone code per voxel    |
//!
//! Writers emit a canonical header (fixed key order, compact JSON), so a
//! file produced here reloads and re-saves byte for byte.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::plan::{ShellParams, Zone, ZoneCounts, ZonePlan};
use crate::volume::{GridSpec, LabelVolume};

pub const VOLUME_MAGIC: &str = "CAPV1";
pub const FIELD_MAGIC: &str = "CAPF1";
pub const PLAN_MAGIC: &str = "CAPP1";

#[derive(Serialize, Deserialize)]
struct VolumeHeader {
    version: String,
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    origin_mm: [f64; 3],
    palette: BTreeMap<u8, String>,
}

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    version: String,
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    origin_mm: [f64; 3],
    structure_name: String,
    #[serde(default)]
    sources: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct PlanHeader {
    version: String,
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    origin_mm: [f64; 3],
    params: ShellParams,
    counts: ZoneCounts,
}

fn read_header<H: DeserializeOwned>(reader: &mut impl BufRead, magic: &'static str) -> Result<H> {
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.pop() != Some(b'\n') {
        return Err(Error::MalformedHeader("missing header line terminator".into()));
    }
    let value: serde_json::Value = serde_json::from_slice(&line)
        .map_err(|e| Error::MalformedHeader(format!("header is not JSON: {e}")))?;
    match value.get("version").and_then(|v| v.as_str()) {
        Some(v) if v == magic => {}
        Some(v) => {
            return Err(Error::UnknownVersion {
                expected: magic,
                found: v.to_string(),
            })
        }
        None => return Err(Error::MalformedHeader("missing version".into())),
    }
    serde_json::from_value(value).map_err(|e| Error::MalformedHeader(e.to_string()))
}

fn write_header<H: Serialize>(writer: &mut impl Write, header: &H) -> Result<()> {
    serde_json::to_writer(&mut *writer, header).map_err(std::io::Error::from)?;
    writer.write_all(b"\n")?;
    Ok(())
}

fn read_payload(reader: &mut impl Read, expected: usize) -> Result<Vec<u8>> {
    let mut payload = Vec::with_capacity(expected);
    reader.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: payload.len(),
        });
    }
    Ok(payload)
}

fn grid(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<GridSpec> {
    GridSpec::new(dims, spacing, origin).map_err(|e| Error::MalformedHeader(e.to_string()))
}

pub fn read_volume(mut reader: impl BufRead) -> Result<LabelVolume> {
    let h: VolumeHeader = read_header(&mut reader, VOLUME_MAGIC)?;
    let spec = grid(h.dims, h.spacing_mm, h.origin_mm)?;
    let labels = read_payload(&mut reader, spec.len())?;
    LabelVolume::new(spec, labels, h.palette)
}

pub fn write_volume(mut writer: impl Write, volume: &LabelVolume) -> Result<()> {
    let spec = volume.spec();
    write_header(
        &mut writer,
        &VolumeHeader {
            version: VOLUME_MAGIC.into(),
            dims: spec.dims,
            spacing_mm: spec.spacing,
            origin_mm: spec.origin,
            palette: volume.palette().clone(),
        },
    )?;
    writer.write_all(volume.labels())?;
    Ok(())
}

pub fn read_field(mut reader: impl BufRead) -> Result<DistanceField> {
    let h: FieldHeader = read_header(&mut reader, FIELD_MAGIC)?;
    let spec = grid(h.dims, h.spacing_mm, h.origin_mm)?;
    let payload = read_payload(&mut reader, spec.len() * 4)?;
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let mut field = DistanceField::new(spec, values, h.structure_name)?;
    field.sources = h.sources;
    Ok(field)
}

pub fn write_field(mut writer: impl Write, field: &DistanceField) -> Result<()> {
    let spec = field.spec;
    write_header(
        &mut writer,
        &FieldHeader {
            version: FIELD_MAGIC.into(),
            dims: spec.dims,
            spacing_mm: spec.spacing,
            origin_mm: spec.origin,
            structure_name: field.structure_name.clone(),
            sources: field.sources.clone(),
        },
    )?;
    let mut buf = Vec::with_capacity(field.values.len() * 4);
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    writer.write_all(&buf)?;
    Ok(())
}

pub fn read_plan(mut reader: impl BufRead) -> Result<ZonePlan> {
    let h: PlanHeader = read_header(&mut reader, PLAN_MAGIC)?;
    let spec = grid(h.dims, h.spacing_mm, h.origin_mm)?;
    let payload = read_payload(&mut reader, spec.len())?;
    let zones = payload
        .iter()
        .map(|&c| {
            Zone::from_code(c).ok_or_else(|| Error::MalformedHeader(format!("bad zone code {c}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = ZonePlan::new(spec, zones, h.params)?;
    if plan.counts != h.counts {
        return Err(Error::MalformedHeader(
            "header counts disagree with the zone payload".into(),
        ));
    }
    Ok(plan)
}

pub fn write_plan(mut writer: impl Write, plan: &ZonePlan) -> Result<()> {
    let spec = plan.spec;
    write_header(
        &mut writer,
        &PlanHeader {
            version: PLAN_MAGIC.into(),
            dims: spec.dims,
            spacing_mm: spec.spacing,
            origin_mm: spec.origin,
            params: plan.params.clone(),
            counts: plan.counts,
        },
    )?;
    let bytes: Vec<u8> = plan.zones.iter().map(|z| z.code()).collect();
    writer.write_all(&bytes)?;
    Ok(())
}

fn load<T>(path: &Path, read: impl FnOnce(BufReader<File>) -> Result<T>) -> Result<T> {
    read(BufReader::new(File::open(path)?))
}

fn save(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<LabelVolume> {
    load(path.as_ref(), read_volume)
}

pub fn save_volume(path: impl AsRef<Path>, volume: &LabelVolume) -> Result<()> {
    save(path.as_ref(), |w| write_volume(w, volume))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<DistanceField> {
    load(path.as_ref(), read_field)
}

pub fn save_field(path: impl AsRef<Path>, field: &DistanceField) -> Result<()> {
    save(path.as_ref(), |w| write_field(w, field))
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<ZonePlan> {
    load(path.as_ref(), read_plan)
}

pub fn save_plan(path: impl AsRef<Path>, plan: &ZonePlan) -> Result<()> {
    save(path.as_ref(), |w| write_plan(w, plan))
}

pub fn volume_bytes(volume: &LabelVolume) -> Vec<u8> {
    let mut buf = Vec::new();
    write_volume(&mut buf, volume).expect("writing to a Vec cannot fail");
    buf
}

pub fn field_bytes(field: &DistanceField) -> Vec<u8> {
    let mut buf = Vec::new();
    write_field(&mut buf, field).expect("writing to a Vec cannot fail");
    buf
}

pub fn plan_bytes(plan: &ZonePlan) -> Vec<u8> {
    let mut buf = Vec::new();
    write_plan(&mut buf, plan).expect("writing to a Vec cannot fail");
    buf
}
