//! RFC-4180 CSV emission and parsing for trajectories.
//!
//! Values are written with 17 significant digits so that parsing recovers
//! every f64 bit for bit. Vector channels emit one column per component,
//! suffixed `_1` .. `_w`.

use crate::error::{Error, Result};
use crate::numerics::Trajectory;
use std::fmt::Write as _;
use std::path::Path;

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a trajectory as CSV text: `t` column first, then the channels.
pub fn to_csv_string(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push('t');
    for ch in &traj.channels {
        if ch.width == 1 {
            let _ = write!(out, ",{}", ch.name);
        } else {
            for i in 1..=ch.width {
                let _ = write!(out, ",{}_{i}", ch.name);
            }
        }
    }
    out.push_str("\r\n");
    for k in 0..traj.len() {
        let _ = write!(out, "{}", format_value(traj.times[k]));
        for ch in &traj.channels {
            for v in ch.sample(k) {
                let _ = write!(out, ",{}", format_value(*v));
            }
        }
        out.push_str("\r\n");
    }
    out
}

pub fn emit_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(traj))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Parse CSV text emitted by [`to_csv_string`] back into a trajectory.
///
/// Runs of columns named `base_1` .. `base_w` regroup into one channel.
pub fn from_csv_string(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(Error::Io("first CSV column must be t".into()));
    }

    // regroup suffixed columns into vector channels
    let mut channels: Vec<(String, usize)> = Vec::new();
    let mut i = 1;
    while i < cols.len() {
        let name = cols[i];
        if let Some((base, idx)) = split_suffix(name) {
            if idx == 1 {
                let mut width = 1;
                while i + width < cols.len()
                    && split_suffix(cols[i + width]) == Some((base, width + 1))
                {
                    width += 1;
                }
                if width > 1 {
                    channels.push((base.to_string(), width));
                    i += width;
                    continue;
                }
            }
        }
        channels.push((name.to_string(), 1));
        i += 1;
    }

    let spec: Vec<(&str, usize)> = channels.iter().map(|(n, w)| (n.as_str(), *w)).collect();
    let mut traj = Trajectory::new(&spec);
    let expected = 1 + channels.iter().map(|(_, w)| w).sum::<usize>();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Io(format!("line {}: {e}", lineno + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != expected {
            return Err(Error::Io(format!(
                "line {}: {} fields, expected {expected}",
                lineno + 2,
                values.len()
            )));
        }
        let mut offset = 1;
        let slices: Vec<&[f64]> = channels
            .iter()
            .map(|(_, w)| {
                let s = &values[offset..offset + w];
                offset += w;
                s
            })
            .collect();
        traj.push_sample(values[0], &slices);
    }
    Ok(traj)
}

pub fn parse_csv(path: &Path) -> Result<Trajectory> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_csv_string(&text)
}

/// "name_3" -> ("name", 3).
fn split_suffix(col: &str) -> Option<(&str, usize)> {
    let (base, suffix) = col.rsplit_once('_')?;
    if base.is_empty() || suffix.is_empty() || !suffix.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((base, suffix.parse().ok()?))
}
