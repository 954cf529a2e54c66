//! Study configuration and its flat `key = value` file format.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::problems::Geometry;
use crate::solver::SolverMethod;

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub geometry: Geometry,
    pub order: usize,
    /// Number of mesh levels, `L = 0..levels`.
    pub levels: usize,
    pub deformation: bool,
    pub lambda_scale: f64,
    pub gamma_scale: f64,
    /// Overrides the default quadrature order `2k + 2`.
    pub quad_order: Option<usize>,
    pub solver: SolverMethod,
    pub tol: f64,
    pub out_dir: Option<PathBuf>,
    /// Translation of the problem data.
    pub shift: [f64; 2],
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::Ring,
            order: 2,
            levels: 3,
            deformation: true,
            lambda_scale: 10.0,
            gamma_scale: 0.2,
            quad_order: None,
            solver: SolverMethod::Auto,
            tol: 1e-8,
            out_dir: None,
            shift: [0.0, 0.0],
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidArgument(format!("bad value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("bad value '{value}' for '{key}' (expected on|off)"))),
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::basis::MAX_ORDER).contains(&self.order) {
            return Err(Error::InvalidArgument(format!("order must be in 1..={}, got {}", crate::basis::MAX_ORDER, self.order)));
        }
        if self.levels == 0 {
            return Err(Error::InvalidArgument("levels must be at least 1".into()));
        }
        if !(self.lambda_scale > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda scale must be positive, got {}", self.lambda_scale)));
        }
        if !(self.gamma_scale > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma scale must be positive, got {}", self.gamma_scale)));
        }
        if let Some(q) = self.quad_order {
            if q == 0 || q > 32 {
                return Err(Error::InvalidArgument(format!("quadrature order must be in 1..=32, got {q}")));
            }
        }
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!("solver tolerance must lie in (0, 1e-6], got {:e}", self.tol)));
        }
        Ok(())
    }

    /// Set one option by its file/flag name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "geometry" => self.geometry = value.parse()?,
            "order" | "k" => self.order = parse(&key, value)?,
            "levels" => self.levels = parse(&key, value)?,
            "deformation" => self.deformation = parse_bool(&key, value)?,
            "lambda_scale" => self.lambda_scale = parse(&key, value)?,
            "gamma_scale" => self.gamma_scale = parse(&key, value)?,
            "quad_order" => self.quad_order = Some(parse(&key, value)?),
            "solver" => self.solver = value.parse()?,
            "tol" => self.tol = parse(&key, value)?,
            "out" | "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "shift_x" => self.shift[0] = parse(&key, value)?,
            "shift_y" => self.shift[1] = parse(&key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown option '{key}'"))),
        }
        Ok(())
    }

    /// Apply a `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v).map_err(|e| e.context(format!("line {}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(c)
    }

    /// File stem used for reports, e.g. `ring_k2` or `ring_k2_nodef`.
    pub fn tag(&self) -> String {
        format!("{}_k{}{}", self.geometry, self.order, if self.deformation { "" } else { "_nodef" })
    }
}
