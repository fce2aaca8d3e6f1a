//! Parsing of unit-suffixed quantities used by the config file and flags.

use crate::{Error, Result};

fn split_number(text: &str) -> Option<(f64, &str)> {
    let text = text.trim();
    let end = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && i > 0 && text[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let value = text[..end].parse().ok()?;
    Some((value, text[end..].trim()))
}

/// Length in meters from text such as `2.2A`, `2.2Å`, `5nm`, `3um`,
/// `3μm`, `2mm` or `1m`. A unit suffix is mandatory.
pub fn parse_length(text: &str) -> Result<f64> {
    let (value, unit) = split_number(text).ok_or_else(|| Error::Value(format!("not a length: {text:?}")))?;
    let scale = match unit {
        "A" | "Å" | "angstrom" => 1e-10,
        "nm" => 1e-9,
        "um" | "μm" | "µm" => 1e-6,
        "mm" => 1e-3,
        "m" => 1.0,
        "" => return Err(Error::Value(format!("length {text:?} needs a unit (A, nm, um, mm)"))),
        _ => return Err(Error::Value(format!("unknown length unit {unit:?} in {text:?}"))),
    };
    let meters = value * scale;
    if !meters.is_finite() {
        return Err(Error::Value(format!("length out of range: {text:?}")));
    }
    Ok(meters)
}

/// Accelerating voltage in volts: `120kV`, `300 kV` or `120000V`.
pub fn parse_voltage(text: &str) -> Result<f64> {
    let (value, unit) = split_number(text).ok_or_else(|| Error::Value(format!("not a voltage: {text:?}")))?;
    match unit {
        "kV" | "kv" => Ok(value * 1e3),
        "V" | "v" => Ok(value),
        _ => Err(Error::Value(format!("voltage {text:?} needs a kV or V suffix"))),
    }
}

/// Spatial frequency in cycles per meter: `2/nm`, `0.5/A`, or a bare
/// number read as inverse nanometers.
pub fn parse_frequency(text: &str) -> Result<f64> {
    let (value, unit) = split_number(text).ok_or_else(|| Error::Value(format!("not a frequency: {text:?}")))?;
    let scale = match unit {
        "" | "/nm" => 1e9,
        "/A" | "/Å" => 1e10,
        "/um" | "/μm" => 1e6,
        "/m" => 1.0,
        _ => return Err(Error::Value(format!("unknown frequency unit {unit:?}"))),
    };
    Ok(value * scale)
}

/// Formats meters in micrometers for reports and curve files.
pub fn micrometers(meters: f64) -> f64 {
    meters * 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert!((parse_length("2.2A").unwrap() - 2.2e-10).abs() < 1e-22);
        assert!((parse_length("2.2 Å").unwrap() - 2.2e-10).abs() < 1e-22);
        assert!((parse_length("5nm").unwrap() - 5e-9).abs() < 1e-21);
        assert!((parse_length("3.67um").unwrap() - 3.67e-6).abs() < 1e-18);
        assert!((parse_length("3μm").unwrap() - 3e-6).abs() < 1e-18);
        assert!((parse_length("2mm").unwrap() - 2e-3).abs() < 1e-15);
        assert!((parse_length("1.5e1nm").unwrap() - 15e-9).abs() < 1e-21);
        assert!(parse_length("3").is_err());
        assert!(parse_length("3 furlongs").is_err());
        assert!(parse_length("nm").is_err());
    }

    #[test]
    fn voltages() {
        assert_eq!(parse_voltage("120kV").unwrap(), 120e3);
        assert_eq!(parse_voltage("300 kV").unwrap(), 300e3);
        assert_eq!(parse_voltage("200000V").unwrap(), 200e3);
        assert!(parse_voltage("120").is_err());
    }

    #[test]
    fn frequencies() {
        assert_eq!(parse_frequency("2/nm").unwrap(), 2e9);
        assert_eq!(parse_frequency("2").unwrap(), 2e9);
        assert_eq!(parse_frequency("0.5/A").unwrap(), 5e9);
    }
}
