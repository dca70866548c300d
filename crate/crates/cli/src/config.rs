//! Line-oriented `key = value` configuration with one section per
//! subcommand. Resolution order: built-in defaults, then top-level file
//! entries, then the subcommand's section, then command-line flags. Unknown
//! keys and sections are rejected. A `[meta]` section is skipped on load so
//! that run manifests can be fed back in as configs unchanged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const SUBCOMMANDS: &[&str] = &[
    "spectrum", "symmetry", "absorb1", "absorb2", "perturb", "photon", "disorder", "exact",
];

/// Keys every subcommand understands.
pub const GLOBAL_KEYS: &[&str] = &[
    "geometry",
    "side",
    "omega",
    "delta0",
    "sigma",
    "realizations",
    "seed",
    "ratio",
    "outdir",
];

pub fn section_keys(cmd: &str) -> &'static [&'static str] {
    match cmd {
        "spectrum" | "symmetry" => &[],
        "absorb1" => &["emin", "emax", "bins", "width"],
        "absorb2" => &["initial", "emin", "emax", "bins", "width"],
        "perturb" => &["kind", "omegas", "sides"],
        "photon" => &["mode", "theta_step", "phi_step", "beams", "quadrature", "window", "samples"],
        "disorder" => &["emin", "emax", "bins"],
        "exact" => &["count", "target", "t_final", "dt"],
        _ => &[],
    }
}

fn defaults(cmd: &str) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: &str| m.insert(k.to_string(), v.to_string());
    put("geometry", "square");
    put("side", "3");
    put("omega", "20");
    put("delta0", "1");
    put("sigma", "0");
    put("realizations", "500");
    put("seed", "1");
    put("ratio", "0.9");
    put("outdir", "out");
    match cmd {
        "absorb1" | "absorb2" => {
            if cmd == "absorb2" {
                put("initial", "auto");
            }
            put("emin", "auto");
            put("emax", "auto");
            put("bins", "400");
            put("width", "0.05");
        }
        "perturb" => {
            put("kind", "ground");
            put("omegas", "5,10,20,50");
            put("sides", "3,4,5,6,7,8,9");
        }
        "photon" => {
            put("mode", "auto");
            put("theta_step", "1");
            put("phi_step", "1");
            put("beams", "8");
            put("quadrature", "false");
            put("window", "200000");
            put("samples", "256");
        }
        "disorder" => {
            put("emin", "auto");
            put("emax", "auto");
            put("bins", "400");
        }
        "exact" => {
            put("count", "6");
            put("target", "1");
            put("t_final", "30");
            put("dt", "0.0005");
        }
        _ => {}
    }
    m
}

fn is_known(cmd: &str, key: &str) -> bool {
    GLOBAL_KEYS.contains(&key) || section_keys(cmd).contains(&key)
}

/// Raw parse of a config file: top-level entries plus named sections.
/// Only syntax and section names are validated here; key names are checked
/// against the active subcommand during resolution.
pub fn parse_file(text: &str) -> Result<
    (BTreeMap<String, String>, BTreeMap<String, BTreeMap<String, String>>),
    String,
> {
    let mut top = BTreeMap::new();
    let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if name != "meta" && !SUBCOMMANDS.contains(&name) {
                return Err(format!("line {}: unknown section [{name}]", lineno + 1));
            }
            current = Some(name.to_string());
            sections.entry(name.to_string()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`, got `{line}`", lineno + 1));
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(format!("line {}: empty key", lineno + 1));
        }
        match &current {
            None => {
                top.insert(key, value);
            }
            Some(sec) => {
                sections.get_mut(sec).unwrap().insert(key, value);
            }
        }
    }
    sections.remove("meta"); // manifests carry one; it is informational only
    Ok((top, sections))
}

/// Fully resolved configuration for one subcommand.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cmd: &'static str,
    pub values: BTreeMap<String, String>,
}

impl Resolved {
    pub fn build(
        cmd: &'static str,
        file_text: Option<&str>,
        flags: &[(&str, Option<String>)],
    ) -> Result<Self, String> {
        let mut values = defaults(cmd);
        if let Some(text) = file_text {
            let (top, sections) = parse_file(text)?;
            for (k, v) in top {
                if !is_known(cmd, &k) {
                    return Err(format!("unknown key `{k}` for subcommand {cmd}"));
                }
                values.insert(k, v);
            }
            for (name, entries) in sections {
                if name != cmd {
                    // sections for other subcommands are legal but inert
                    continue;
                }
                for (k, v) in entries {
                    if !is_known(cmd, &k) {
                        return Err(format!("unknown key `{k}` in section [{name}]"));
                    }
                    values.insert(k, v);
                }
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                debug_assert!(is_known(cmd, k), "flag {k} lacks a config key");
                values.insert((*k).to_string(), v.clone());
            }
        }
        Ok(Self { cmd, values })
    }

    /// Canonical text of the resolved configuration: one section holding
    /// every key in sorted order. Hashing and the manifest both use this.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[{}]", self.cmd);
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn raw(&self, key: &str) -> Result<&str, String> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| format!("missing key `{key}`"))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, String> {
        let raw = self.raw(key)?;
        raw.parse::<f64>()
            .map_err(|_| format!("key `{key}`: `{raw}` is not a number"))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("key `{key}` must be finite"))
                }
            })
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, String> {
        let raw = self.raw(key)?;
        raw.parse::<usize>()
            .map_err(|_| format!("key `{key}`: `{raw}` is not a non-negative integer"))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64, String> {
        let raw = self.raw(key)?;
        raw.parse::<u64>()
            .map_err(|_| format!("key `{key}`: `{raw}` is not a non-negative integer"))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, String> {
        match self.raw(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(format!("key `{key}`: `{other}` is not true/false")),
        }
    }

    pub fn get_str(&self, key: &str) -> Result<&str, String> {
        self.raw(key)
    }

    /// `auto` → None, anything else must parse as f64.
    pub fn get_auto_f64(&self, key: &str) -> Result<Option<f64>, String> {
        match self.raw(key)? {
            "auto" => Ok(None),
            _ => self.get_f64(key).map(Some),
        }
    }

    /// `auto` → None, anything else a 1-based index.
    pub fn get_auto_index(&self, key: &str) -> Result<Option<usize>, String> {
        match self.raw(key)? {
            "auto" => Ok(None),
            raw => {
                let v = raw
                    .parse::<usize>()
                    .map_err(|_| format!("key `{key}`: `{raw}` is not an index"))?;
                if v == 0 {
                    return Err(format!("key `{key}` is 1-based; 0 is invalid"));
                }
                Ok(Some(v))
            }
        }
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>, String> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("key `{key}`: `{s}` is not a number"))
            })
            .collect()
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Vec<usize>, String> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("key `{key}`: `{s}` is not an integer"))
            })
            .collect()
    }
}
