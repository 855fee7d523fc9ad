//! Flat `key = value` run configuration: defaults, then file, then flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use clap::Args;

use crate::CliError;

/// Every accepted key with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("model", "eh"),
    ("a", "1"),
    ("m", "2"),
    ("scale", "1"),
    ("model-file", "none"),
    ("radii", "auto"),
    ("topological", "auto"),
    ("epsilon", "0.05"),
    ("epsilons", "0.1,0.05,0.025,0.0125"),
    ("chart", "10000"),
    ("cutoff", "smoothstep9"),
    ("delta", "auto"),
    ("nodes", "512"),
    ("tol", "1e-8"),
    ("refine", "false"),
    ("certify", "false"),
    ("cap-factor", "16"),
    ("base-mass", "0"),
    ("target", "0"),
    ("eps0", "0.3"),
    ("safety", "0.9"),
    ("exact", "false"),
    ("kind", "epsilon"),
    ("rq", "10,30,100,300"),
    ("calibration-chart", "2"),
    ("export", "none"),
    ("per-octave", "16"),
    ("csv", "none"),
];

/// Per-run overrides; each flag mirrors a config key.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// eh | bs | flat | file
    #[arg(long)]
    pub model: Option<String>,
    /// Eguchi–Hanson scale.
    #[arg(long)]
    pub a: Option<String>,
    /// Complex dimension.
    #[arg(long)]
    pub m: Option<String>,
    /// Burns–Simanca scale.
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long)]
    pub model_file: Option<String>,
    /// Comma-separated extraction radii, or `auto`.
    #[arg(long)]
    pub radii: Option<String>,
    /// Expected topological mass, `auto` or `none`.
    #[arg(long)]
    pub topological: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Chart point `s_p` on the base, or `none` to glue into the base directly.
    #[arg(long)]
    pub chart: Option<String>,
    /// smoothstep9 | exponential
    #[arg(long)]
    pub cutoff: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long)]
    pub nodes: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub refine: Option<String>,
    #[arg(long)]
    pub certify: Option<String>,
    #[arg(long)]
    pub cap_factor: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub base_mass: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    #[arg(long)]
    pub eps0: Option<String>,
    #[arg(long)]
    pub safety: Option<String>,
    #[arg(long)]
    pub exact: Option<String>,
    /// epsilon | two-point
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub rq: Option<String>,
    #[arg(long)]
    pub calibration_chart: Option<String>,
    /// Write the model profile document here.
    #[arg(long)]
    pub export: Option<String>,
    #[arg(long)]
    pub per_octave: Option<String>,
    /// Write the sweep CSV here.
    #[arg(long)]
    pub csv: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("model", &self.model),
            ("a", &self.a),
            ("m", &self.m),
            ("scale", &self.scale),
            ("model-file", &self.model_file),
            ("radii", &self.radii),
            ("topological", &self.topological),
            ("epsilon", &self.epsilon),
            ("epsilons", &self.epsilons),
            ("chart", &self.chart),
            ("cutoff", &self.cutoff),
            ("delta", &self.delta),
            ("nodes", &self.nodes),
            ("tol", &self.tol),
            ("refine", &self.refine),
            ("certify", &self.certify),
            ("cap-factor", &self.cap_factor),
            ("base-mass", &self.base_mass),
            ("target", &self.target),
            ("eps0", &self.eps0),
            ("safety", &self.safety),
            ("exact", &self.exact),
            ("kind", &self.kind),
            ("rq", &self.rq),
            ("calibration-chart", &self.calibration_chart),
            ("export", &self.export),
            ("per-octave", &self.per_octave),
            ("csv", &self.csv),
        ]
    }
}

/// Merged configuration; every key is present.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("line {}: expected key = value", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if !DEFAULTS.iter().any(|(d, _)| *d == key) {
            return Err(config_error(format!("line {}: unknown key `{}`", n + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn merge(file: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            values.extend(parse_file(&text)?);
        }
        for (k, v) in flags.pairs() {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(Self { values })
    }

    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("every key has a default")
    }

    /// `None` for the literal values `auto` and `none`.
    pub fn optional(&self, key: &str) -> Option<&str> {
        match self.raw(key) {
            "auto" | "none" => None,
            v => Some(v),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.raw(key);
        v.parse().map_err(|_| config_error(format!("{key}: cannot parse `{v}`")))
    }

    pub fn get_optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.optional(key)
            .map(|v| v.parse().map_err(|_| config_error(format!("{key}: cannot parse `{v}`"))))
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.raw(key)
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| config_error(format!("{key}: cannot parse `{x}`"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_and_comments() {
        let m = parse_file("# header\nmodel = bs\nbase_mass = -0.5  # trailing\n\n").unwrap();
        assert_eq!(m["model"], "bs");
        assert_eq!(m["base-mass"], "-0.5");
        assert!(parse_file("colour = blue").is_err());
        assert!(parse_file("model bs").is_err());
    }

    #[test]
    fn flags_override_file_and_defaults() {
        let dir = std::env::temp_dir().join(format!("ale-glue-config-{}", std::process::id()));
        std::fs::write(&dir, "model = bs\nnodes = 256\n").unwrap();
        let flags = Overrides { nodes: Some("1024".into()), ..Default::default() };
        let c = RunConfig::merge(Some(&dir), &flags).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(c.raw("model"), "bs");
        assert_eq!(c.get::<usize>("nodes").unwrap(), 1024);
        assert_eq!(c.raw("safety"), "0.9");
        assert_eq!(c.echo().len(), DEFAULTS.len());
    }

    #[test]
    fn lists_and_optionals() {
        let c = RunConfig::merge(None, &Overrides::default()).unwrap();
        assert_eq!(c.list("rq").unwrap(), vec![10.0, 30.0, 100.0, 300.0]);
        assert_eq!(c.get_optional::<f64>("delta").unwrap(), None);
        assert!(c.get::<usize>("model").is_err());
    }
}
