use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vekua_core::field::Shape;
use vekua_core::schrod::ProblemSources;
use vekua_core::{Domain, Error, Result, SchrodingerProblem, C64};

/// Environment variable that overrides the output directory of the config file.
pub const OUT_ENV: &str = "VEKUA_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Registry(String),
    Custom {
        #[serde(default = "custom_name")]
        name: String,
        nu: String,
        f0: String,
        rho: String,
    },
}

fn custom_name() -> String {
    "custom".into()
}

/// Solution handed to `expand`: a real Schrodinger solution `u`, or with
/// `complex` set, a solution `W` of the main Vekua equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub expr: String,
    #[serde(default)]
    pub complex: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub params: BTreeMap<String, f64>,
    pub domain: Option<Shape>,
    pub z0: Option<[f64; 2]>,
    #[serde(rename = "N")]
    pub order: usize,
    /// Half-width of output grids and radius of fitting discs around `z0`.
    pub radius: f64,
    pub radii: Vec<f64>,
    /// Bound on basis residuals in the manifest.
    pub tolerance: f64,
    /// Bound on finite-difference residuals of quadrature-backed fields.
    pub fd_tolerance: f64,
    pub quadrature_tolerance: f64,
    pub grid: usize,
    pub samples: usize,
    pub seed: u64,
    pub target: Option<Target>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemSpec::Registry("example1".into()),
            params: BTreeMap::new(),
            domain: None,
            z0: None,
            order: 2,
            radius: 0.5,
            radii: vec![0.4, 0.2, 0.1, 0.05],
            tolerance: 1e-6,
            fd_tolerance: 1e-4,
            quadrature_tolerance: 1e-10,
            grid: 41,
            samples: 200,
            seed: 0,
            target: None,
            out_dir: PathBuf::from("vekua-out"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("tolerance", self.tolerance),
            ("fd_tolerance", self.fd_tolerance),
            ("quadrature_tolerance", self.quadrature_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid < 2 {
            return Err(Error::InvalidArgument(format!("grid must be at least 2, got {}", self.grid)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be positive".into()));
        }
        if self.radii.iter().any(|r| !(*r > 0.0)) || self.radii.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidArgument("radii must be positive and strictly decreasing".into()));
        }
        Ok(())
    }

    pub fn problem_name(&self) -> &str {
        match &self.problem {
            ProblemSpec::Registry(name) => name,
            ProblemSpec::Custom { name, .. } => name,
        }
    }

    pub fn quadrature(&self) -> vekua_core::Quadrature {
        vekua_core::Quadrature { tolerance: self.quadrature_tolerance, ..Default::default() }
    }

    /// Builds the problem, applying domain and `z0` overrides.
    pub fn build_problem(&self) -> Result<SchrodingerProblem> {
        let params: HashMap<String, f64> = self.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let (name, sources, default_domain) = match &self.problem {
            ProblemSpec::Registry(name) => {
                let p = SchrodingerProblem::registry(name, &params)?;
                if self.domain.is_none() && self.z0.is_none() {
                    return Ok(p);
                }
                let sources = p.sources.clone().expect("registry problems keep their sources");
                // registry expressions refer to alpha/beta; make the defaults explicit
                let mut full = params.clone();
                full.entry("alpha".into()).or_insert(2.0);
                full.entry("beta".into()).or_insert(2.0);
                return SchrodingerProblem::from_expressions(
                    name.clone(),
                    sources,
                    &full,
                    self.domain_or(*p.domain())?,
                    self.z0_or(p.z0),
                );
            }
            ProblemSpec::Custom { name, nu, f0, rho } => {
                (name.clone(), ProblemSources { nu: nu.clone(), f0: f0.clone(), rho: rho.clone() }, Domain::unit_disc())
            }
        };
        let domain = self.domain_or(default_domain)?;
        SchrodingerProblem::from_expressions(name, sources, &params, domain, self.z0_or(domain.center()))
    }

    fn domain_or(&self, fallback: Domain) -> Result<Domain> {
        match self.domain {
            None => Ok(fallback),
            Some(Shape::Disc { center, radius }) => Domain::disc(center, radius),
            Some(Shape::Rectangle { center, half_width, half_height }) => Domain::rectangle(center, half_width, half_height),
        }
    }

    fn z0_or(&self, fallback: C64) -> C64 {
        self.z0.map_or(fallback, |[x, y]| C64::new(x, y))
    }
}
