//! Flat `section.key=value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are fixed (see
//! [`KEYS`]); serialization writes the set keys in that order, so
//! `serialize(parse(text))` is a fixed point.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use attrbounds::bounds::{Nonlinearity, ProblemParams, DEFAULT_MELAS_C};
use attrbounds::dynamics::{BundleInit, GrowthConfig, InitialData};
use attrbounds::geometry::{DomainSpec, Shape};
use attrbounds::spectral::{MethodChoice, SingularKind};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const KEYS: &[&str] = &[
    "task",
    "domain.kind",
    "domain.h",
    "domain.length",
    "domain.width",
    "domain.height",
    "domain.lengths",
    "domain.radius",
    "domain.inner",
    "domain.outer",
    "domain.vertices",
    "domain.path",
    "domain.centered",
    "domain.shift",
    "domain.scale",
    "domain.geometry",
    "params.nu",
    "params.delta",
    "params.potential",
    "params.f",
    "params.melas_c",
    "params.q",
    "params.c1",
    "spectrum.m",
    "spectrum.tol",
    "spectrum.method",
    "verify.m_max",
    "verify.k",
    "verify.c",
    "simulate.m",
    "simulate.t",
    "simulate.dt",
    "simulate.reorth",
    "simulate.burn_in",
    "simulate.init",
    "simulate.amplitude",
    "simulate.mode",
    "simulate.bundle",
    "simulate.tau_c",
    "lyapunov.m_max",
    "lyapunov.seeds",
    "sweep.axis1",
    "sweep.values1",
    "sweep.axis2",
    "sweep.values2",
    "output.dir",
    "output.format",
    "run.seed",
];

/// Keys that make sense as sweep axes.
fn sweepable(key: &str) -> bool {
    (key.starts_with("domain.") || key.starts_with("params."))
        && !matches!(
            key,
            "domain.kind"
                | "domain.path"
                | "domain.vertices"
                | "domain.lengths"
                | "domain.shift"
                | "domain.geometry"
                | "params.potential"
        )
}

/// Raw key/value pairs, validated against [`KEYS`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigText {
    entries: BTreeMap<usize, String>,
}

impl ConfigText {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ConfigText::default();
        let mut unknown = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected key=value, got `{line}`",
                    lineno + 1
                )));
            };
            let k = k.trim();
            match key_index(k) {
                Some(i) => {
                    if cfg.entries.insert(i, v.trim().to_string()).is_some() {
                        return Err(CliError::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
                    }
                }
                None => unknown.push(k.to_string()),
            }
        }
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        if cfg.entries.is_empty() {
            return Err(CliError::Config("config file is empty".into()));
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let i = key_index(key).ok_or_else(|| CliError::Config(format!("unknown keys: {key}")))?;
        self.entries.insert(i, value.into());
        Ok(())
    }

    /// `key=value` override as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        key_index(key).and_then(|i| self.entries.get(&i)).map(|s| s.as_str())
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (i, v) in &self.entries {
            out.push_str(KEYS[*i]);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of [`ConfigText::serialize`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }
}

impl fmt::Display for ConfigText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn key_index(key: &str) -> Option<usize> {
    KEYS.iter().position(|k| *k == key)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Geometry,
    Spectrum,
    Verify,
    Bounds,
    Simulate,
    Lyapunov,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Geometry => "geometry",
            Task::Spectrum => "spectrum",
            Task::Verify => "verify",
            Task::Bounds => "bounds",
            Task::Simulate => "simulate",
            Task::Lyapunov => "lyapunov",
            Task::Sweep => "sweep",
        }
    }
}

impl FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "geometry" => Task::Geometry,
            "spectrum" => Task::Spectrum,
            "verify" => Task::Verify,
            "bounds" => Task::Bounds,
            "simulate" => Task::Simulate,
            "lyapunov" => Task::Lyapunov,
            "sweep" => Task::Sweep,
            _ => return Err(CliError::Config(format!("unknown task `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub m: usize,
    pub tol: f64,
    pub method: MethodChoice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub m_max: usize,
    pub k: f64,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovOptions {
    pub m_max: usize,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

/// Typed view of a [`ConfigText`].
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub task: Task,
    pub domain: DomainSpec,
    /// Use closed-form volume and inertia in the bounds when available
    /// instead of grid quadrature.
    pub exact_geometry: bool,
    pub params: ProblemParams,
    pub spectrum: SpectrumOptions,
    pub verify: VerifyOptions,
    pub simulate: GrowthConfig,
    pub lyapunov: LyapunovOptions,
    pub axes: Vec<Axis>,
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
}

struct Reader<'a>(&'a ConfigText);

impl Reader<'_> {
    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.0.get(key) {
            None | Some("") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("{key}: cannot parse `{v}`"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.0.get(key) {
            None | Some("") => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("{key}: cannot parse `{s}`")))
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    fn str_or<'b>(&'b self, key: &str, default: &'b str) -> &'b str {
        match self.0.get(key) {
            None | Some("") => default,
            Some(v) => v,
        }
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &ConfigText) -> Result<Self, CliError> {
        let r = Reader(text);
        let task: Task = r.str_or("task", "bounds").parse()?;
        let domain = domain_spec(&r)?;
        let exact_geometry = match r.str_or("domain.geometry", "exact") {
            "exact" => true,
            "grid" => false,
            other => return Err(CliError::Config(format!("domain.geometry: unknown `{other}` (exact or grid)"))),
        };
        let dim = domain.dimension()?;

        let f = match r.list::<f64>("params.f")? {
            Some(c) => Nonlinearity::new(c)?,
            None => Nonlinearity::allen_cahn(),
        };
        let mut params = ProblemParams::new(dim, r.or("params.nu", 1.0)?, f)
            .with_melas_c(r.or("params.melas_c", DEFAULT_MELAS_C)?);
        let delta: f64 = r.or("params.delta", 0.0)?;
        match r.str_or("params.potential", "none") {
            "none" => params.delta = delta,
            kind => params = params.with_potential(kind.parse::<SingularKind>()?, delta),
        }
        params.q = r.parse("params.q")?;
        params.c1 = r.parse("params.c1")?;
        params.validate()?;

        let spectrum = SpectrumOptions {
            m: r.or("spectrum.m", 10)?,
            tol: r.or("spectrum.tol", 1e-8)?,
            method: match r.str_or("spectrum.method", "auto") {
                "auto" => MethodChoice::Auto,
                "dense" => MethodChoice::Dense,
                "lanczos" => MethodChoice::Lanczos,
                other => return Err(CliError::Config(format!("spectrum.method: unknown `{other}`"))),
            },
        };
        let verify = VerifyOptions {
            m_max: r.or("verify.m_max", 50)?,
            k: r.or("verify.k", 1.0)?,
            c: r.or("verify.c", params.melas_c)?,
        };

        let seed: u64 = r.or("run.seed", 1)?;
        let mut simulate = GrowthConfig::new(r.or("simulate.m", 2)?, r.or("simulate.t", 1.0)?, r.or("simulate.dt", 1e-3)?);
        simulate.reorth_interval = r.or("simulate.reorth", 10)?;
        simulate.burn_in = match r.str_or("simulate.burn_in", "auto") {
            "auto" => None,
            _ => r.parse("simulate.burn_in")?,
        };
        let amplitude = r.or("simulate.amplitude", 0.5)?;
        simulate.initial = match r.str_or("simulate.init", "random") {
            "zero" => InitialData::Zero,
            "random" => InitialData::Random { amplitude, seed },
            "mode" => InitialData::Mode {
                index: r.or("simulate.mode", 1)?,
                amplitude,
            },
            other => return Err(CliError::Config(format!("simulate.init: unknown `{other}`"))),
        };
        simulate.bundle = match r.str_or("simulate.bundle", "random") {
            "random" => BundleInit::Random,
            "modes" => BundleInit::Modes,
            other => return Err(CliError::Config(format!("simulate.bundle: unknown `{other}`"))),
        };
        simulate.bundle_seed = seed;
        simulate.tau_c = r.or("simulate.tau_c", 3.0)?;
        simulate.validate()?;

        let lyapunov = LyapunovOptions {
            m_max: r.or("lyapunov.m_max", 8)?,
            seeds: r.list("lyapunov.seeds")?.unwrap_or_else(|| (0..3).map(|i| seed + i).collect()),
        };
        if lyapunov.m_max == 0 || lyapunov.seeds.is_empty() {
            return Err(CliError::Config("lyapunov needs m_max >= 1 and at least one seed".into()));
        }

        let mut axes = Vec::new();
        for (k, v) in [("sweep.axis1", "sweep.values1"), ("sweep.axis2", "sweep.values2")] {
            match (text.get(k).filter(|s| !s.is_empty()), text.get(v).filter(|s| !s.is_empty())) {
                (None, None) => {}
                (Some(key), Some(values)) => {
                    if !sweepable(key) {
                        return Err(CliError::Config(format!("{k}: `{key}` is not a sweepable parameter")));
                    }
                    axes.push(Axis {
                        key: key.to_string(),
                        values: values.split(',').map(|s| s.trim().to_string()).collect(),
                    });
                }
                _ => return Err(CliError::Config(format!("{k} and {v} must be given together"))),
            }
        }
        if axes.len() == 2 && axes[0].key == axes[1].key {
            return Err(CliError::Config("sweep axes must differ".into()));
        }

        Ok(ExperimentConfig {
            task,
            domain,
            exact_geometry,
            params,
            spectrum,
            verify,
            simulate,
            lyapunov,
            axes,
            out: PathBuf::from(r.str_or("output.dir", ".")),
            format: r.str_or("output.format", "csv").parse()?,
            seed,
        })
    }
}

fn domain_spec(r: &Reader) -> Result<DomainSpec, CliError> {
    let scale: f64 = r.or("domain.scale", 1.0)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Config(format!("domain.scale must be > 0, got {scale}")));
    }
    let len = |key: &str, default: f64| -> Result<f64, CliError> { Ok(scale * r.or(key, default)?) };
    let kind = r.str_or("domain.kind", "square");
    let shape = match kind {
        "interval" => Shape::Interval {
            length: len("domain.length", 1.0)?,
        },
        "square" => {
            let l = len("domain.length", 1.0)?;
            Shape::Rectangle { width: l, height: l }
        }
        "rectangle" => Shape::Rectangle {
            width: len("domain.width", 2.0)?,
            height: len("domain.height", 1.0)?,
        },
        "cube" => {
            let l = len("domain.length", 1.0)?;
            Shape::Box { lengths: [l; 3] }
        }
        "box" => {
            let l: Vec<f64> = r.list("domain.lengths")?.unwrap_or_else(|| vec![1.0; 3]);
            if l.len() != 3 {
                return Err(CliError::Config("domain.lengths needs three values".into()));
            }
            Shape::Box {
                lengths: [scale * l[0], scale * l[1], scale * l[2]],
            }
        }
        "disk" => Shape::Disk {
            radius: len("domain.radius", 0.5)?,
        },
        "annulus" => Shape::Annulus {
            inner: len("domain.inner", 0.25)?,
            outer: len("domain.outer", 0.5)?,
        },
        "polygon" => {
            let text = r.str_or("domain.vertices", "");
            let mut vertices = Vec::new();
            for pair in text.split(';').filter(|s| !s.trim().is_empty()) {
                let xy: Vec<f64> = pair
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CliError::Config(format!("domain.vertices: cannot parse `{pair}`")))?;
                if xy.len() != 2 {
                    return Err(CliError::Config(format!("domain.vertices: `{pair}` is not x,y")));
                }
                vertices.push([scale * xy[0], scale * xy[1]]);
            }
            Shape::Polygon { vertices }
        }
        "mask" => {
            if scale != 1.0 {
                return Err(CliError::Config("domain.scale is not supported for masks".into()));
            }
            let path = r.str_or("domain.path", "");
            if path.is_empty() {
                return Err(CliError::Config("domain.path is required for masks".into()));
            }
            Shape::RasterMask { path: path.into() }
        }
        other => return Err(CliError::Config(format!("domain.kind: unknown `{other}`"))),
    };
    // the grid scales with the domain so discretizations stay similar
    let h = scale * r.or("domain.h", 1.0 / 32.0)?;
    let mut spec = DomainSpec::new(shape, h);
    if r.or("domain.centered", false)? {
        spec = spec.centered();
    }
    if let Some(shift) = r.list::<f64>("domain.shift")? {
        spec = spec.shifted(shift);
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_idempotent() {
        let text = "# comment\nparams.nu = 0.5\n\ndomain.kind=disk\ntask=bounds\n";
        let once = ConfigText::parse(text).unwrap().serialize();
        assert_eq!(once, "task=bounds\ndomain.kind=disk\nparams.nu=0.5\n");
        assert_eq!(ConfigText::parse(&once).unwrap().serialize(), once);
    }

    #[test]
    fn rejects_bad_text() {
        assert!(ConfigText::parse("").is_err());
        assert!(ConfigText::parse("# only a comment\n").is_err());
        let err = ConfigText::parse("params.nu=1\nfoo=2\nbar.baz=3\n").unwrap_err();
        assert!(err.to_string().contains("foo, bar.baz"), "{err}");
        assert!(ConfigText::parse("params.nu").is_err());
        assert!(ConfigText::parse("params.nu=1\nparams.nu=2").is_err());
    }

    #[test]
    fn typed_defaults() {
        let c = ExperimentConfig::from_text(&ConfigText::parse("task=bounds").unwrap()).unwrap();
        assert_eq!(c.params.dim, 2);
        assert_eq!(c.params.kappa(), 1.0);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.lyapunov.seeds, vec![1, 2, 3]);
        assert!(c.axes.is_empty());
    }

    #[test]
    fn scale_multiplies_lengths_and_grid() {
        let c = ExperimentConfig::from_text(&ConfigText::parse("domain.scale=2\ndomain.h=0.125").unwrap()).unwrap();
        assert_eq!(c.domain.h, 0.25);
        assert_eq!(c.domain.shape, Shape::Rectangle { width: 2.0, height: 2.0 });
    }

    #[test]
    fn sweep_axes_are_checked() {
        let ok = ConfigText::parse("sweep.axis1=params.nu\nsweep.values1=0.1,1").unwrap();
        assert_eq!(ExperimentConfig::from_text(&ok).unwrap().axes[0].values, vec!["0.1", "1"]);
        let bad = ConfigText::parse("sweep.axis1=run.seed\nsweep.values1=1").unwrap();
        assert!(ExperimentConfig::from_text(&bad).is_err());
        let half = ConfigText::parse("sweep.axis1=params.nu").unwrap();
        assert!(ExperimentConfig::from_text(&half).is_err());
    }

    #[test]
    fn potential_and_validation_errors() {
        let c = ExperimentConfig::from_text(
            &ConfigText::parse("domain.kind=cube\ndomain.centered=true\nparams.potential=inverse_square\nparams.delta=0.1").unwrap(),
        )
        .unwrap();
        assert_eq!(c.params.potential, Some(SingularKind::InverseSquare));
        assert!(ExperimentConfig::from_text(&ConfigText::parse("params.nu=-1").unwrap()).is_err());
        assert!(ExperimentConfig::from_text(&ConfigText::parse("params.potential=weird").unwrap()).is_err());
        assert!(ExperimentConfig::from_text(&ConfigText::parse("params.delta=1").unwrap()).is_err());
    }
}
