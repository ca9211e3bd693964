//! Experiment configuration: a flat, dotted-key text format
//! (`key = value` lines, `#` comments) with built-in defaults and
//! command-line overrides of the same `key=value` shape.
//!
//! Every resolved value is echoed into the CSV headers, so each output file
//! reproduces the run that made it.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{MfeError, Result};
use crate::modulation::{CoeffProfile, ModulationSpec, SourceKind, SourceSpec};

/// Key/value table with defaults, file entries and overrides kept apart so
/// validation can tell what the user actually supplied.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    defaults: BTreeMap<String, String>,
    user: BTreeMap<String, String>,
}

const DEFAULTS: &[(&str, &str)] = &[
    ("grid.m", "1000"),
    ("grid.a", "0"),
    ("grid.b", "1"),
    ("modulation.epsilon", "0.04"),
    ("modulation.rho", "0.4"),
    ("modulation.j", "1"),
    ("modulation.mu0", "constant:1"),
    ("modulation.muhat.1", "constant:1"),
    ("source.kind", "smooth_balanced"),
    ("source.t0", "1"),
    ("source.interior_support", "true"),
    ("mfe.k", "3"),
    // time.t defaults to 5 for `convergence` and 4 for the other commands.
    ("time.n", "256"),
    ("reference.n", "16384"),
    ("sweep.n", "32,64,128,256,512,1024"),
    ("sweep.epsilon", "0.1,0.05,0.025"),
    ("sweep.rho", "0.4,0.2,0.1"),
    ("sweep.k", "1,2,3"),
    ("output.dir", "out"),
    ("output.emit_svg", "false"),
    ("workers", "1"),
    ("laplace.samples", "100"),
    ("laplace.seed", "42"),
    ("laplace.s_re_offset", "0.5,2,8"),
    ("laplace.s_im", "-15,0,9"),
    ("energy.t_off", "2"),
];

/// Keys that may appear in a config beyond the defaults table.
const EXTRA_KEYS: &[&str] = &["time.t", "time.tau", "sweep.tau"];

fn known_key(key: &str) -> bool {
    DEFAULTS.iter().any(|(k, _)| *k == key)
        || EXTRA_KEYS.contains(&key)
        || key.starts_with("modulation.muhat.")
}

impl RawConfig {
    pub fn new() -> Self {
        RawConfig {
            defaults: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            user: BTreeMap::new(),
        }
    }

    /// Parses `key = value` lines; later entries win.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.set_line(line)
                .map_err(|e| MfeError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` assignment (used for both file lines and
    /// command-line overrides).
    pub fn set_line(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| MfeError::Config(format!("expected key=value, got `{assignment}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(MfeError::Config("empty key".into()));
        }
        if !known_key(key) {
            return Err(MfeError::Config(format!("unknown key `{key}`")));
        }
        self.user.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.user
            .get(key)
            .or_else(|| self.defaults.get(key))
            .map(String::as_str)
    }

    fn user_has(&self, key: &str) -> bool {
        self.user.contains_key(key)
    }

    fn f64_of(&self, key: &str) -> Result<f64> {
        let raw = self
            .get(key)
            .ok_or_else(|| MfeError::Config(format!("missing key `{key}`")))?;
        raw.parse()
            .map_err(|_| MfeError::Config(format!("`{key}` is not a number: `{raw}`")))
    }

    fn usize_of(&self, key: &str) -> Result<usize> {
        let raw = self
            .get(key)
            .ok_or_else(|| MfeError::Config(format!("missing key `{key}`")))?;
        raw.parse()
            .map_err(|_| MfeError::Config(format!("`{key}` is not a count: `{raw}`")))
    }

    fn bool_of(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(MfeError::Config(format!(
                "`{key}` must be true or false, got `{other}`"
            ))),
            None => Err(MfeError::Config(format!("missing key `{key}`"))),
        }
    }

    fn list_f64_of(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .get(key)
            .ok_or_else(|| MfeError::Config(format!("missing key `{key}`")))?;
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| MfeError::Config(format!("`{key}` has a bad entry `{p}`")))
            })
            .collect()
    }

    fn list_usize_of(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self
            .get(key)
            .ok_or_else(|| MfeError::Config(format!("missing key `{key}`")))?;
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| MfeError::Config(format!("`{key}` has a bad entry `{p}`")))
            })
            .collect()
    }
}

fn parse_profile(raw: &str) -> Result<CoeffProfile> {
    let (kind, args) = raw.split_once(':').unwrap_or((raw, ""));
    let nums = || -> Result<Vec<f64>> {
        args.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| MfeError::Config(format!("bad profile number `{p}`")))
            })
            .collect()
    };
    match kind.trim() {
        "constant" => {
            let v = nums()?;
            if v.len() != 1 {
                return Err(MfeError::Config("constant profile takes one value".into()));
            }
            Ok(CoeffProfile::Constant(v[0]))
        }
        "affine" => {
            let v = nums()?;
            if v.len() != 2 {
                return Err(MfeError::Config("affine profile takes offset,slope".into()));
            }
            Ok(CoeffProfile::Affine {
                offset: v[0],
                slope: v[1],
            })
        }
        "bump" => {
            let v = nums()?;
            if v.len() != 4 {
                return Err(MfeError::Config(
                    "bump profile takes baseline,amplitude,width,center".into(),
                ));
            }
            Ok(CoeffProfile::Bump {
                baseline: v[0],
                amplitude: v[1],
                width: v[2],
                center: v[3],
            })
        }
        "samples" => {
            let v = nums()?;
            if v.is_empty() {
                return Err(MfeError::Config("samples profile needs values".into()));
            }
            Ok(CoeffProfile::Samples {
                a: 0.0,
                b: 1.0,
                values: v,
            })
        }
        other => Err(MfeError::Config(format!("unknown profile kind `{other}`"))),
    }
}

fn profile_to_string(p: &CoeffProfile) -> String {
    match p {
        CoeffProfile::Constant(v) => format!("constant:{v}"),
        CoeffProfile::Affine { offset, slope } => format!("affine:{offset},{slope}"),
        CoeffProfile::Bump {
            baseline,
            amplitude,
            width,
            center,
        } => format!("bump:{baseline},{amplitude},{width},{center}"),
        CoeffProfile::Samples { values, .. } => {
            let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            format!("samples:{}", vals.join(","))
        }
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub grid_m: usize,
    pub grid_a: f64,
    pub grid_b: f64,
    pub modulation: ModulationSpec,
    pub source: SourceSpec,
    /// Expansion truncation index (mfe.k).
    pub truncation: usize,
    /// Final time; None means "use the subcommand default".
    pub t_final: Option<f64>,
    pub time_n: usize,
    pub reference_n: usize,
    pub sweep_n: Vec<usize>,
    pub sweep_epsilon: Vec<f64>,
    pub sweep_rho: Vec<f64>,
    pub sweep_k: Vec<usize>,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    pub workers: usize,
    pub laplace_samples: usize,
    pub laplace_seed: u64,
    pub laplace_s_re_offset: Vec<f64>,
    pub laplace_s_im: Vec<f64>,
    pub energy_t_off: f64,
    /// All resolved key/value pairs, for the CSV header echo.
    resolved: BTreeMap<String, String>,
    /// Keys the user actually supplied (file or override), as opposed to
    /// defaults; commands with their own defaults consult this.
    user_keys: std::collections::BTreeSet<String>,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let grid_m = raw.usize_of("grid.m")?;
        if grid_m < 1 {
            return Err(MfeError::Config("grid.m must be at least 1".into()));
        }
        let grid_a = raw.f64_of("grid.a")?;
        let grid_b = raw.f64_of("grid.b")?;
        if !(grid_a < grid_b) {
            return Err(MfeError::Config("grid.a must be below grid.b".into()));
        }

        let epsilon = raw.f64_of("modulation.epsilon")?;
        let rho = raw.f64_of("modulation.rho")?;
        let j = raw.usize_of("modulation.j")?;
        if j < 1 {
            return Err(MfeError::Config("modulation.j must be at least 1".into()));
        }
        let mu0 = parse_profile(raw.get("modulation.mu0").unwrap_or("constant:1"))?;
        let mut muhat = Vec::with_capacity(j);
        for idx in 1..=j {
            let key = format!("modulation.muhat.{idx}");
            let rawv = raw.get(&key).ok_or_else(|| {
                MfeError::Config(format!("modulation.j = {j} but `{key}` is missing"))
            })?;
            muhat.push(parse_profile(rawv)?);
        }
        // Positivity window of the static profile, sampled on a fine grid.
        let samples = 2048;
        let (mut c_mu, mut big_c_mu) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=samples {
            let x = grid_a + (grid_b - grid_a) * i as f64 / samples as f64;
            let v = mu0.eval(x);
            c_mu = c_mu.min(v);
            big_c_mu = big_c_mu.max(v);
        }
        if !(c_mu > 0.0) {
            return Err(MfeError::Config(
                "static profile modulation.mu0 must be positive".into(),
            ));
        }
        let modulation = ModulationSpec {
            epsilon,
            rho,
            mu0,
            muhat,
            c_mu,
            big_c_mu,
        };
        modulation
            .validate()
            .map_err(|e| MfeError::Config(e.to_string()))?;

        let kind = match raw.get("source.kind").unwrap_or("smooth_balanced") {
            "smooth_balanced" => SourceKind::SmoothBalanced,
            "low_regularity_step" => SourceKind::LowRegularityStep,
            "zero" => SourceKind::Zero,
            other => {
                return Err(MfeError::Config(format!(
                    "unknown source.kind `{other}` (smooth_balanced, low_regularity_step, zero)"
                )))
            }
        };
        let source = SourceSpec {
            kind,
            t0: raw.f64_of("source.t0")?,
            interior_support: raw.bool_of("source.interior_support")?,
        };

        let truncation = raw.usize_of("mfe.k")?;
        if truncation < 1 {
            return Err(MfeError::Config("mfe.k must be at least 1".into()));
        }

        let t_final = if raw.get("time.t").is_some() {
            Some(raw.f64_of("time.t")?)
        } else {
            None
        };
        if raw.user_has("time.n") && raw.user_has("time.tau") {
            return Err(MfeError::Config(
                "give exactly one of time.n and time.tau".into(),
            ));
        }
        if raw.user_has("sweep.n") && raw.user_has("sweep.tau") {
            return Err(MfeError::Config(
                "give exactly one of sweep.n and sweep.tau".into(),
            ));
        }

        let reference_n = raw.usize_of("reference.n")?;
        let sweep_n = raw.list_usize_of("sweep.n")?;
        let sweep_epsilon = raw.list_f64_of("sweep.epsilon")?;
        let sweep_rho = raw.list_f64_of("sweep.rho")?;
        let sweep_k = raw.list_usize_of("sweep.k")?;
        if sweep_n.is_empty() || sweep_epsilon.is_empty() || sweep_rho.is_empty() {
            return Err(MfeError::Config("sweep lists must be non-empty".into()));
        }

        let workers = raw.usize_of("workers")?.max(1);

        let mut cfg = ExperimentConfig {
            grid_m,
            grid_a,
            grid_b,
            modulation,
            source,
            truncation,
            t_final,
            time_n: raw.usize_of("time.n")?,
            reference_n,
            sweep_n,
            sweep_epsilon,
            sweep_rho,
            sweep_k,
            out_dir: PathBuf::from(raw.get("output.dir").unwrap_or("out")),
            emit_svg: raw.bool_of("output.emit_svg")?,
            workers,
            laplace_samples: raw.usize_of("laplace.samples")?,
            laplace_seed: raw.usize_of("laplace.seed")? as u64,
            laplace_s_re_offset: raw.list_f64_of("laplace.s_re_offset")?,
            laplace_s_im: raw.list_f64_of("laplace.s_im")?,
            energy_t_off: raw.f64_of("energy.t_off")?,
            resolved: BTreeMap::new(),
            user_keys: raw.user.keys().cloned().collect(),
        };

        // time.tau / sweep.tau are translated to step counts against the
        // final time at use sites; store them resolved here.
        if raw.user_has("time.tau") {
            let tau = raw.f64_of("time.tau")?;
            if !(tau > 0.0) {
                return Err(MfeError::Config("time.tau must be positive".into()));
            }
            let t = cfg.t_final.unwrap_or(4.0);
            cfg.time_n = (t / tau).round().max(1.0) as usize;
        }
        if raw.user_has("sweep.tau") {
            let taus = raw.list_f64_of("sweep.tau")?;
            let t = cfg.t_final.unwrap_or(5.0);
            cfg.sweep_n = taus
                .iter()
                .map(|&tau| (t / tau).round().max(1.0) as usize)
                .collect();
        }

        let mut resolved: BTreeMap<String, String> = raw.defaults.clone();
        for (k, v) in &raw.user {
            resolved.insert(k.clone(), v.clone());
        }
        resolved.insert("time.n".into(), cfg.time_n.to_string());
        resolved.remove("time.tau");
        resolved.remove("sweep.tau");
        resolved.insert(
            "sweep.n".into(),
            cfg.sweep_n
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        resolved.insert(
            "modulation.mu0".into(),
            profile_to_string(&cfg.modulation.mu0),
        );
        cfg.resolved = resolved;
        Ok(cfg)
    }

    /// Final time with the per-command default applied.
    pub fn t_final_or(&self, default: f64) -> f64 {
        self.t_final.unwrap_or(default)
    }

    /// Whether the user supplied this key (file entry or override).
    pub fn user_supplied(&self, key: &str) -> bool {
        self.user_keys.contains(key)
    }

    /// Sorted (key, value) pairs for the CSV header echo; the final time is
    /// substituted with the value the command actually used.
    pub fn resolved_entries(&self, t_final_used: f64) -> Vec<(String, String)> {
        let mut map = self.resolved.clone();
        map.insert("time.t".into(), format!("{t_final_used}"));
        map.into_iter().collect()
    }

    pub fn grid(&self) -> Result<crate::grid::Grid1D> {
        crate::grid::build_grid(self.grid_m, self.grid_a, self.grid_b)
    }
}

/// The default configuration, printed by the `defaults` subcommand; the
/// output parses back as a config file.
pub fn default_config_text() -> String {
    let mut out = String::new();
    out.push_str("# Default configuration. Keys are `key = value`; `#` starts a comment.\n");
    out.push_str("# time.t defaults to 5 for `convergence` and 4 for the other commands.\n");
    out.push_str("# time.tau may replace time.n; sweep.tau may replace sweep.n.\n");
    out.push_str("# Profiles: constant:v | affine:offset,slope | bump:base,amp,width,center\n");
    out.push_str("#           | samples:v0,v1,... (uniform over [grid.a, grid.b])\n");
    for (k, v) in DEFAULTS {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let raw = RawConfig::parse(&default_config_text()).unwrap();
        let cfg = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.grid_m, 1000);
        assert_eq!(cfg.truncation, 3);
        assert_eq!(cfg.time_n, 256);
        assert_eq!(cfg.modulation.epsilon, 0.04);
        assert!(cfg.t_final.is_none());
        assert_eq!(cfg.t_final_or(5.0), 5.0);
    }

    #[test]
    fn overrides_win_over_file_entries() {
        let mut raw = RawConfig::parse("grid.m = 100\nmodulation.rho = 0.2\n").unwrap();
        raw.set_line("grid.m=250").unwrap();
        let cfg = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.grid_m, 250);
        assert_eq!(cfg.modulation.rho, 0.2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RawConfig::parse("grid.size = 10\n").is_err());
        let mut raw = RawConfig::new();
        assert!(raw.set_line("nope=1").is_err());
    }

    #[test]
    fn time_n_and_tau_are_exclusive() {
        let raw = RawConfig::parse("time.n = 128\ntime.tau = 0.01\n").unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("time.t = 2\ntime.tau = 0.01\n").unwrap();
        let cfg = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.time_n, 200);
    }

    #[test]
    fn profiles_parse() {
        let raw = RawConfig::parse(
            "modulation.mu0 = affine:1.0,0.5\nmodulation.muhat.1 = bump:0,1,50,0.5\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.modulation.mu0.eval(0.0), 1.0);
        assert_eq!(cfg.modulation.mu0.eval(1.0), 1.5);
        assert!((cfg.modulation.muhat[0].eval(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn missing_harmonic_profile_is_reported() {
        let raw = RawConfig::parse("modulation.j = 2\n").unwrap();
        let err = ExperimentConfig::from_raw(&raw).unwrap_err();
        assert!(err.to_string().contains("muhat.2"));
    }

    #[test]
    fn nonpositive_mu0_is_rejected() {
        let raw = RawConfig::parse("modulation.mu0 = affine:0.1,-1\n").unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn samples_profile_interpolates() {
        let p = parse_profile("samples:1,2,4").unwrap();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(0.25), 1.5);
        assert_eq!(p.eval(1.0), 4.0);
    }
}
