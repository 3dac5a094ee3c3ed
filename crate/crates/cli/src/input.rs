//! Parsing of compound flag values and merging of JSON config files.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use martingale_bounds::{DiscreteDistribution, RangeSeq};
use serde_json::Value;

use crate::CliError;

/// Parses a comma-separated list of floats.
pub fn parse_list(name: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{name}: `{s}` is not a number")))
        })
        .collect()
}

/// Widths as `w` items separated by commas, where `wxk` repeats `w` k times:
/// `1x100`, `0.5,1,1`, `1x50,2x50`.
pub fn parse_widths(text: &str) -> Result<Vec<f64>, CliError> {
    let mut widths = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (value, count) = match item.split_once('x') {
            Some((w, k)) => {
                let k = k
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("--widths: bad repeat count in `{item}`")))?;
                (w, k)
            }
            None => (item, 1),
        };
        let w = value
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("--widths: `{value}` is not a number")))?;
        widths.extend(std::iter::repeat(w).take(count));
    }
    if widths.is_empty() {
        return Err(CliError::Usage("--widths: no widths given".into()));
    }
    Ok(widths)
}

pub fn ranges_from_widths(text: &str) -> Result<RangeSeq, CliError> {
    Ok(RangeSeq::centered(&parse_widths(text)?)?)
}

/// A distribution given inline (`0.7,0.3`) or as a path to a JSON array.
pub fn parse_distribution(name: &str, text: &str) -> Result<DiscreteDistribution, CliError> {
    let weights = if text.contains(',') || text.parse::<f64>().is_ok() {
        parse_list(name, text)?
    } else {
        let content = fs::read_to_string(text)
            .map_err(|e| CliError::Usage(format!("--{name}: cannot read `{text}`: {e}")))?;
        serde_json::from_str::<Vec<f64>>(&content)
            .map_err(|e| CliError::Usage(format!("--{name}: `{text}` is not a JSON array of numbers: {e}")))?
    };
    Ok(DiscreteDistribution::new(weights)?)
}

/// Converts a JSON config object into flag tokens (`{"n": 100, "adaptive":
/// true}` → `--n 100 --adaptive`). Arrays become comma-separated values.
pub fn config_tokens(path: &Path) -> Result<Vec<OsString>, CliError> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config: cannot read `{}`: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&content)
        .map_err(|e| CliError::Usage(format!("--config: `{}` is not valid JSON: {e}", path.display())))?;
    let Value::Object(entries) = value else {
        return Err(CliError::Usage("--config: expected a JSON object".into()));
    };
    let mut tokens = Vec::new();
    for (key, value) in entries {
        let flag = OsString::from(format!("--{}", key.replace('_', "-")));
        if key == "config" {
            continue;
        }
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => tokens.push(flag),
            Value::String(s) => tokens.extend([flag, s.into()]),
            Value::Number(n) => tokens.extend([flag, n.to_string().into()]),
            Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                tokens.extend([flag, joined.join(",").into()]);
            }
            Value::Object(_) => {
                return Err(CliError::Usage(format!("--config: `{key}` must not be an object")));
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_syntax() {
        assert_eq!(parse_widths("1x3").unwrap(), vec![1.0; 3]);
        assert_eq!(parse_widths("0.5,2x2").unwrap(), vec![0.5, 2.0, 2.0]);
        assert!(parse_widths("").is_err());
        assert!(parse_widths("1xq").is_err());
        assert!(parse_widths("a").is_err());
        assert!(ranges_from_widths("-1").is_err());
    }

    #[test]
    fn inline_distributions() {
        let d = parse_distribution("rho", "0.7,0.3").unwrap();
        assert_eq!(d.weights(), &[0.7, 0.3]);
        assert_eq!(parse_distribution("rho", "1").unwrap().weights(), &[1.0]);
        assert!(parse_distribution("rho", "0.7,0.4").is_err());
        assert!(parse_distribution("rho", "/definitely/not/here.json").is_err());
    }
}
