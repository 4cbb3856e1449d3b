//! On-disk dataset format, shared by the generator and the analysis
//! ingestion path (and suitable for lab exports with the same header).
//!
//! Layout: `#`-prefixed header lines carrying `key = value` generation
//! metadata, then one record per line with three whitespace-separated
//! columns: `lifetime_seconds censored cycle_index`.
//!
//! ```text
//! # cbjj dataset v1
//! # seed = 42
//! # ...
//! # columns: lifetime_seconds censored cycle_index
//! 7.001634e-3 0 0
//! 0.14 1 10
//! ```

use crate::error::{Error, Result};
use crate::junction::{JunctionParams, RfPulse};
use crate::protocol::{BiasWaveform, DatasetMeta, SwitchingDataset, SwitchingRecord};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

/// Serialize a dataset to the line format.
pub fn to_string(ds: &SwitchingDataset) -> String {
    let m = &ds.meta;
    let mut out = String::new();
    let _ = writeln!(out, "# cbjj dataset v{}", m.format_version);
    let _ = writeln!(out, "# seed = {}", m.seed);
    let _ = writeln!(out, "# events_target = {}", m.events_target);
    let _ = writeln!(out, "# critical_current_a = {}", m.params.critical_current);
    let _ = writeln!(out, "# capacitance_f = {}", m.params.capacitance);
    let _ = writeln!(out, "# shunt_resistance_ohm = {}", m.params.shunt_resistance);
    let _ = writeln!(out, "# temperature_k = {}", m.temperature);
    let _ = writeln!(out, "# ramp_s = {}", m.waveform.ramp_duration);
    let _ = writeln!(out, "# hold_current_a = {}", m.waveform.hold_current);
    let _ = writeln!(out, "# hold_s = {}", m.waveform.hold_duration);
    let _ = writeln!(out, "# reset_s = {}", m.waveform.reset_duration);
    let _ = writeln!(out, "# rf_delay_s = {}", m.rf_delay);
    let _ = writeln!(out, "# timeout_cycles = {}", m.timeout_cycles);
    let _ = writeln!(out, "# rf_efficiency = {}", m.rf_efficiency);
    if let Some(p) = &m.pulse {
        let _ = writeln!(out, "# rf_frequency_hz = {}", p.frequency);
        let _ = writeln!(out, "# rf_power_dbm = {}", p.power_dbm);
        let _ = writeln!(out, "# rf_width_s = {}", p.width);
    }
    let _ = writeln!(out, "# columns: lifetime_seconds censored cycle_index");
    for r in &ds.records {
        let _ = writeln!(
            out,
            "{} {} {}",
            r.lifetime,
            if r.censored { 1 } else { 0 },
            r.cycle_index
        );
    }
    out
}

pub fn write_file(ds: &SwitchingDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(ds))?;
    Ok(())
}

fn parse_kv(header: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    header
        .get(key)
        .ok_or_else(|| Error::DatasetFormat(format!("missing header key '{key}'")))?
        .parse::<f64>()
        .map_err(|e| Error::DatasetFormat(format!("bad value for '{key}': {e}")))
}

/// Parse the line format back into a dataset.
pub fn from_str(text: &str) -> Result<SwitchingDataset> {
    let mut header = BTreeMap::new();
    let mut records = Vec::new();
    let mut version: Option<u32> = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("cbjj dataset v") {
                version = Some(v.trim().parse().map_err(|_| {
                    Error::DatasetFormat(format!("bad version line: '{line}'"))
                })?);
            } else if let Some((key, value)) = rest.split_once('=') {
                header.insert(key.trim().to_string(), value.trim().to_string());
            }
            continue;
        }
        let mut cols = line.split_whitespace();
        let lifetime: f64 = cols
            .next()
            .ok_or_else(|| Error::DatasetFormat(format!("line {}: empty", line_no + 1)))?
            .parse()
            .map_err(|e| Error::DatasetFormat(format!("line {}: {e}", line_no + 1)))?;
        let censored: u8 = cols
            .next()
            .ok_or_else(|| {
                Error::DatasetFormat(format!("line {}: missing censored flag", line_no + 1))
            })?
            .parse()
            .map_err(|e| Error::DatasetFormat(format!("line {}: {e}", line_no + 1)))?;
        let cycle_index: u32 = cols
            .next()
            .ok_or_else(|| {
                Error::DatasetFormat(format!("line {}: missing cycle index", line_no + 1))
            })?
            .parse()
            .map_err(|e| Error::DatasetFormat(format!("line {}: {e}", line_no + 1)))?;
        if cols.next().is_some() {
            return Err(Error::DatasetFormat(format!(
                "line {}: expected exactly 3 columns",
                line_no + 1
            )));
        }
        records.push((lifetime, censored != 0, cycle_index));
    }
    let version =
        version.ok_or_else(|| Error::DatasetFormat("missing 'cbjj dataset v...' line".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::DatasetFormat(format!(
            "unsupported format version {version}"
        )));
    }

    let params = JunctionParams::new(
        parse_kv(&header, "critical_current_a")?,
        parse_kv(&header, "capacitance_f")?,
        parse_kv(&header, "shunt_resistance_ohm")?,
    )?;
    let waveform = BiasWaveform::new(
        parse_kv(&header, "ramp_s")?,
        parse_kv(&header, "hold_current_a")?,
        parse_kv(&header, "hold_s")?,
        parse_kv(&header, "reset_s")?,
    )?;
    let rf_delay = parse_kv(&header, "rf_delay_s")?;
    let pulse = if header.contains_key("rf_frequency_hz") {
        Some(RfPulse::new(
            parse_kv(&header, "rf_frequency_hz")?,
            parse_kv(&header, "rf_power_dbm")?,
            parse_kv(&header, "rf_width_s")?,
            rf_delay,
        )?)
    } else {
        None
    };
    let timeout_cycles = parse_kv(&header, "timeout_cycles")? as u32;
    let meta = DatasetMeta {
        format_version: version,
        seed: parse_kv(&header, "seed")? as u64,
        events_target: parse_kv(&header, "events_target")? as usize,
        params,
        temperature: parse_kv(&header, "temperature_k")?,
        waveform,
        rf_delay,
        timeout_cycles,
        rf_efficiency: parse_kv(&header, "rf_efficiency")?,
        pulse,
    };
    let pulse_width = meta.pulse.map(|p| p.width).unwrap_or(0.0);
    let cycle = meta.waveform.cycle_period();
    let records = records
        .into_iter()
        .map(|(lifetime, censored, cycle_index)| {
            let in_cycle = lifetime - cycle_index as f64 * cycle;
            SwitchingRecord {
                lifetime,
                censored,
                switched_in_rf_window: !censored
                    && in_cycle >= meta.rf_delay
                    && in_cycle <= meta.rf_delay + pulse_width,
                cycle_index,
            }
        })
        .collect();
    Ok(SwitchingDataset { meta, records })
}

pub fn read_file(path: &Path) -> Result<SwitchingDataset> {
    from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::escape::{temperature_for_rate, ThermalEnvironment};
    use crate::protocol::{sample_dataset, ProtocolConfig};

    fn sample() -> SwitchingDataset {
        let p = JunctionParams::new(3.156e-6, 1.6e-12, 50.0).unwrap();
        let env: ThermalEnvironment = temperature_for_rate(&p, 2.899e-6, 65.0).unwrap();
        let wf = BiasWaveform::default_cycle(2.899e-6).unwrap();
        let pulse = RfPulse::new(8e9, -91.58, 10e-9, 7e-3).unwrap();
        let proto = ProtocolConfig {
            events_target: 200,
            seed: 5,
            ..ProtocolConfig::default()
        };
        sample_dataset(&p, &env, &wf, Some(&pulse), &proto, 0.5).unwrap()
    }

    #[test]
    fn round_trip_preserves_records_and_meta() {
        let ds = sample();
        let text = to_string(&ds);
        let back = from_str(&text).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn serialization_is_byte_stable() {
        let ds = sample();
        assert_eq!(to_string(&ds), to_string(&ds));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(from_str("1.0 0 0\n").is_err()); // no header
        let ds = sample();
        let mut text = to_string(&ds);
        text.push_str("not a number 0 0\n");
        assert!(from_str(&text).is_err());
        let truncated = to_string(&ds).replace("# rf_efficiency = 0.5\n", "");
        assert!(from_str(&truncated).is_err());
    }
}
