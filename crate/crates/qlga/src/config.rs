//! Run configuration: a flat, versioned TOML dialect plus the string
//! mini-languages for potentials and initial conditions shared by the file
//! format and the command-line flags.
//!
//! Potential specs: `none`, `const:<V0>`, `expr:<formula in x0..x{d-1}>`,
//! `file:<path>` (one value per line, site-major).
//! Init specs: `plane:<l0,l1,...>`, `gaussian:<c0,..>;<width>[;<k0,..>]`,
//! `delta:<x0,..>[;<channel>]`, `file:<path>` (lines `re,im`, site-major,
//! channel-minor).

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::ModelParams;
use crate::engine::{delta_field, gaussian_packet, init_plane_wave, PotentialField, WaveField};
use crate::error::{QlgaError, Result};

/// Version tag written into every config file.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    pub dim: usize,
    /// lattice extent per axis
    pub extents: Vec<usize>,
    /// complex literal like `0.6+0.8i`; exactly one of `mu`/`theta` is set
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub steps: u64,
    #[serde(default = "spec_none")]
    pub potential: String,
    #[serde(default = "spec_plane_zero")]
    pub init: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// snapshot stride in steps; 0 writes only the final state
    #[serde(default)]
    pub snapshot_every: u64,
    /// number of particles for the many-body subcommand
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<u32>,
    #[serde(default)]
    pub seed: u64,
}

fn spec_none() -> String {
    "none".into()
}

fn spec_plane_zero() -> String {
    "plane:0".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            config_version: CONFIG_VERSION,
            dim: 1,
            extents: vec![64],
            mu: None,
            theta: Some(-std::f64::consts::FRAC_PI_2),
            steps: 0,
            potential: spec_none(),
            init: spec_plane_zero(),
            output: None,
            snapshot_every: 0,
            particles: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| QlgaError::InvalidParams(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| QlgaError::InvalidParams(format!("config serialize error: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(QlgaError::InvalidParams(format!(
                "config_version {} not supported (expected {CONFIG_VERSION})",
                self.config_version
            )));
        }
        if self.extents.len() != self.dim {
            return Err(QlgaError::InvalidParams(format!(
                "{} extents given for dim = {}",
                self.extents.len(),
                self.dim
            )));
        }
        if self.mu.is_some() && self.theta.is_some() {
            return Err(QlgaError::InvalidParams(
                "give either mu or theta, not both".into(),
            ));
        }
        if self.mu.is_none() && self.theta.is_none() {
            return Err(QlgaError::InvalidParams("one of mu or theta is required".into()));
        }
        Ok(())
    }

    pub fn mu(&self) -> Result<Complex64> {
        match (&self.mu, self.theta) {
            (Some(text), None) => parse_complex(text),
            (None, Some(theta)) => Ok(Complex64::from_polar(1.0, theta)),
            _ => Err(QlgaError::InvalidParams("one of mu or theta is required".into())),
        }
    }

    /// Model parameters with `eps = 1 / max extent`.
    pub fn params(&self) -> Result<ModelParams> {
        let n = *self.extents.iter().max().unwrap_or(&1);
        ModelParams::new(self.dim, self.mu()?, 1.0 / n as f64)
    }

    pub fn build_potential(&self) -> Result<Option<PotentialField>> {
        parse_potential(&self.potential, &self.extents)
    }

    pub fn build_field(&self) -> Result<WaveField> {
        parse_init(&self.init, &self.extents, self.dim)
    }
}

/// Parse a complex literal: `1`, `-0.5`, `i`, `-i`, `2i`, `0.6+0.8i`,
/// `1e-3-2.5e-2i`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || QlgaError::InvalidParams(format!("cannot parse complex literal {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('I')) {
        // find the split between real and imaginary parts: the last +/- that
        // is not a leading sign and not an exponent sign
        let chars: Vec<char> = body.chars().collect();
        let mut split = None;
        for p in (1..chars.len()).rev() {
            if (chars[p] == '+' || chars[p] == '-')
                && chars[p - 1] != 'e'
                && chars[p - 1] != 'E'
            {
                split = Some(p);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(p) => (&body[..p], &body[p..]),
            None => ("0", body),
        };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse().map_err(|_| bad())?,
        };
        let re = if re_str.is_empty() {
            0.0
        } else {
            re_str.parse().map_err(|_| bad())?
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(s.parse().map_err(|_| bad())?, 0.0))
    }
}

/// Render a complex number in the same literal form `parse_complex` reads.
pub fn format_complex(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{:.17e}+{:.17e}i", z.re, z.im)
    } else {
        format!("{:.17e}{:.17e}i", z.re, z.im)
    }
}

/// Build a potential field from its string spec (see module docs).
pub fn parse_potential(spec: &str, extents: &[usize]) -> Result<Option<PotentialField>> {
    let spec = spec.trim();
    if spec == "none" || spec.is_empty() {
        return Ok(None);
    }
    if let Some(v) = spec.strip_prefix("const:") {
        let v0: f64 = v
            .trim()
            .parse()
            .map_err(|_| QlgaError::InvalidParams(format!("bad potential constant {v:?}")))?;
        return Ok(Some(PotentialField::constant(extents, v0)?));
    }
    if let Some(formula) = spec.strip_prefix("expr:") {
        let expr: meval::Expr = formula
            .parse()
            .map_err(|e| QlgaError::InvalidParams(format!("bad potential expression: {e}")))?;
        let names: Vec<String> = (0..extents.len()).map(|a| format!("x{a}")).collect();
        let dim = extents.len();
        let field = PotentialField::from_fn(extents, |x| {
            let mut ctx = meval::Context::new();
            for a in 0..dim {
                ctx.var(names[a].clone(), x[a]);
            }
            expr.eval_with_context(ctx).unwrap_or(f64::NAN)
        })?;
        return Ok(Some(field));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path.trim())?;
        let values: Vec<f64> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|_| QlgaError::InvalidParams(format!("bad potential sample {l:?}")))
            })
            .collect::<Result<_>>()?;
        let expected: usize = extents.iter().product();
        if values.len() != expected {
            return Err(QlgaError::InvalidParams(format!(
                "potential file has {} samples, lattice has {expected} sites",
                values.len()
            )));
        }
        return Ok(Some(PotentialField::from_values(values)?));
    }
    Err(QlgaError::InvalidParams(format!("unknown potential spec {spec:?}")))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| QlgaError::InvalidParams(format!("bad {what} component {s:?}")))
        })
        .collect()
}

/// Build an initial field from its string spec (see module docs).
pub fn parse_init(spec: &str, extents: &[usize], dim: usize) -> Result<WaveField> {
    let spec = spec.trim();
    if let Some(body) = spec.strip_prefix("plane:") {
        let l: Vec<i64> = parse_list(body, "plane-wave index")?;
        if l.len() != dim {
            return Err(QlgaError::InvalidParams(format!(
                "plane-wave index has {} components for dim = {dim}",
                l.len()
            )));
        }
        return init_plane_wave(extents, dim, &l);
    }
    if let Some(body) = spec.strip_prefix("gaussian:") {
        let parts: Vec<&str> = body.split(';').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(QlgaError::InvalidParams(
                "gaussian spec is center;width[;momentum]".into(),
            ));
        }
        let center: Vec<f64> = parse_list(parts[0], "gaussian center")?;
        let width: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| QlgaError::InvalidParams(format!("bad gaussian width {:?}", parts[1])))?;
        let momentum: Vec<f64> = if parts.len() == 3 {
            parse_list(parts[2], "gaussian momentum")?
        } else {
            vec![0.0; dim]
        };
        return gaussian_packet(extents, dim, &center, width, &momentum);
    }
    if let Some(body) = spec.strip_prefix("delta:") {
        let parts: Vec<&str> = body.split(';').collect();
        let coords: Vec<usize> = parse_list(parts[0], "delta position")?;
        let channel: usize = if parts.len() > 1 {
            parts[1].trim().parse().map_err(|_| {
                QlgaError::InvalidParams(format!("bad delta channel {:?}", parts[1]))
            })?
        } else {
            0
        };
        if coords.len() != dim || channel >= 2 * dim {
            return Err(QlgaError::InvalidParams(format!("bad delta spec {spec:?}")));
        }
        return Ok(delta_field(extents, 2 * dim, &coords, channel));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path.trim())?;
        let mut field = WaveField::zeros(extents, 2 * dim);
        let amps = field.amplitudes_mut();
        let mut count = 0usize;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (re, im) = line.split_once(',').ok_or_else(|| {
                QlgaError::InvalidParams(format!("bad amplitude line {line:?}"))
            })?;
            if count >= amps.len() {
                return Err(QlgaError::InvalidParams("init file has too many amplitudes".into()));
            }
            amps[count] = Complex64::new(
                re.trim().parse().map_err(|_| {
                    QlgaError::InvalidParams(format!("bad amplitude line {line:?}"))
                })?,
                im.trim().parse().map_err(|_| {
                    QlgaError::InvalidParams(format!("bad amplitude line {line:?}"))
                })?,
            );
            count += 1;
        }
        if count != amps.len() {
            return Err(QlgaError::InvalidParams(format!(
                "init file has {count} amplitudes, field needs {}",
                amps.len()
            )));
        }
        return Ok(field);
    }
    Err(QlgaError::InvalidParams(format!("unknown init spec {spec:?}")))
}

/// Worker-thread cap: an explicit flag wins, else `QLGA_THREADS`, else none.
pub fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("QLGA_THREADS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    })
}
