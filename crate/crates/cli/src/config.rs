//! Flat `key = value` run configuration.

use crate::registry::{find, Kind, ParamValue};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json-lines" | "jsonl" => Some(OutputFormat::JsonLines),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "json-lines",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: String,
    /// Every parameter of the experiment, defaults filled in.
    pub params: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Validation { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Validation { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

/// All problems found in one config, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn mentions(&self, needle: &str) -> bool {
        self.0.iter().any(|e| e.to_string().contains(needle))
    }
}

const RESERVED: [&str; 5] = ["experiment", "seed", "output_path", "output_format", "threads"];

/// Parses and validates a config. Collects every error rather than stopping
/// at the first.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            errors.push(ConfigError::Parse { line, message: format!("expected `key = value`, found `{body}`") });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.contains(char::is_whitespace) {
            errors.push(ConfigError::Parse { line, message: format!("invalid key `{k}`") });
            continue;
        }
        if let Some((first, _, _)) = pairs.iter().find(|(_, key, _)| key == k) {
            errors.push(ConfigError::Parse { line, message: format!("duplicate key `{k}` (first set on line {first})") });
            continue;
        }
        pairs.push((line, k.to_string(), v.to_string()));
    }
    let get = |key: &str| pairs.iter().find(|(_, k, _)| k == key);

    let experiment = match get("experiment") {
        Some((_, _, v)) => Some(v.clone()),
        None => {
            errors.push(validation("experiment", "experiment required"));
            None
        }
    };
    let seed = match get("seed") {
        Some((line, _, v)) => match v.parse::<u64>() {
            Ok(s) => Some(s),
            Err(_) => {
                errors.push(ConfigError::Parse { line: *line, message: format!("seed must be a non-negative integer, found `{v}`") });
                None
            }
        },
        None => {
            errors.push(validation("seed", "seed required"));
            None
        }
    };
    let output_format = match get("output_format") {
        Some((line, _, v)) => OutputFormat::parse(v).unwrap_or_else(|| {
            errors.push(ConfigError::Parse { line: *line, message: format!("output_format must be csv or json-lines, found `{v}`") });
            OutputFormat::JsonLines
        }),
        None => OutputFormat::JsonLines,
    };
    let threads = match get("threads") {
        Some((line, _, v)) => match v.parse::<usize>() {
            Ok(t) if t >= 1 => t,
            _ => {
                errors.push(ConfigError::Parse { line: *line, message: format!("threads must be a positive integer, found `{v}`") });
                1
            }
        },
        None => 1,
    };
    let output_path = get("output_path").map(|(_, _, v)| PathBuf::from(v));

    let mut params = BTreeMap::new();
    let entry = experiment.as_deref().and_then(|name| {
        let e = find(name);
        if e.is_none() {
            errors.push(validation("experiment", &format!("unknown experiment `{name}`")));
        }
        e
    });
    if let Some(entry) = entry {
        let before = errors.len();
        for (line, k, v) in &pairs {
            if RESERVED.contains(&k.as_str()) {
                continue;
            }
            match entry.params.iter().find(|p| p.name == k) {
                Some(p) => match ParamValue::parse(p.kind, v) {
                    Ok(val) => {
                        params.insert(k.clone(), val);
                    }
                    Err(m) => errors.push(ConfigError::Parse { line: *line, message: format!("{k}: {m}") }),
                },
                None => errors.push(ConfigError::Parse { line: *line, message: format!("unknown parameter `{k}` for experiment `{}`", entry.name) }),
            }
        }
        for p in entry.params {
            if params.contains_key(p.name) || pairs.iter().any(|(_, k, _)| k == p.name) {
                continue;
            }
            if p.required {
                errors.push(validation(p.name, &format!("{} required", p.name)));
            } else {
                params.insert(p.name.to_string(), ParamValue::parse(p.kind, p.default).expect("registry defaults parse"));
            }
        }
        // Cross-field checks need every parameter typed, but not the seed.
        if errors.len() == before {
            errors.extend((entry.validate)(&params));
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(RunConfig {
        experiment: experiment.expect("checked"),
        params,
        seed: seed.expect("checked"),
        output_path,
        output_format,
        threads,
    })
}

pub(crate) fn validation(field: &str, message: &str) -> ConfigError {
    ConfigError::Validation { field: field.to_string(), message: message.to_string() }
}

/// Default config text for `experiment`, accepted verbatim by [`parse_config`].
pub fn emit_default_config(experiment: &str) -> Option<String> {
    let entry = find(experiment)?;
    let mut s = format!("# {}\nexperiment = {}\nseed = 1\noutput_format = json-lines\nthreads = 1\n", entry.summary, entry.name);
    for p in entry.params {
        let kind = match p.kind {
            Kind::Int => "integer",
            Kind::Real => "real",
            Kind::RealList => "comma-separated reals",
        };
        s.push_str(&format!("\n# {} ({kind})\n{} = {}\n", p.doc, p.name, p.default));
    }
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HAPPY: &str = "experiment = separation\nk = 2\nL = 1.0\nt = 100\nM = 1.5\nn_samples = 100000\nseed = 42";

    #[test]
    fn happy_path() {
        let c = parse_config(HAPPY).unwrap();
        assert_eq!(c.experiment, "separation");
        assert_eq!(c.seed, 42);
        assert_eq!(c.params["M"], ParamValue::Real(1.5));
        assert_eq!(c.params["k"], ParamValue::Int(2));
        assert_eq!(c.output_format, OutputFormat::JsonLines);
        assert_eq!(c.threads, 1);
    }

    #[test]
    fn missing_seed() {
        let text = HAPPY.replace("seed = 42", "");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.0, vec![validation("seed", "seed required")]);
        let e = parse_config(&text.replace("M = 1.5", "M = 0.5")).unwrap_err();
        assert_eq!(e.0.len(), 2, "{e}");
    }

    #[test]
    fn m_below_sqrt_l() {
        let text = HAPPY.replace("M = 1.5", "M = 0.5");
        let e = parse_config(&text).unwrap_err();
        assert!(e.0.iter().any(|x| matches!(x, ConfigError::Validation { field, message } if field == "M" && message.contains("M >= sqrt(L)"))), "{e}");
    }

    #[test]
    fn collects_every_error_with_lines() {
        let text = "experiment = separation\nk = two\nnonsense\nL = 1\nbogus = 3\n";
        let e = parse_config(text).unwrap_err();
        assert!(e.0.contains(&ConfigError::Parse { line: 3, message: "expected `key = value`, found `nonsense`".into() }));
        assert!(e.0.iter().any(|x| matches!(x, ConfigError::Parse { line: 2, .. })));
        assert!(e.0.iter().any(|x| matches!(x, ConfigError::Parse { line: 5, .. })));
        assert!(e.mentions("seed required"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{HAPPY}  # trailing\noutput_format = csv\nthreads = 3\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.output_format, OutputFormat::Csv);
        assert_eq!(c.threads, 3);
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let e = parse_config(&format!("{HAPPY}\nk = 3")).unwrap_err();
        assert!(e.mentions("duplicate key `k`"));
    }

    #[test]
    fn unknown_experiment() {
        let e = parse_config("experiment = nope\nseed = 1").unwrap_err();
        assert!(e.mentions("unknown experiment `nope`"));
    }
}
