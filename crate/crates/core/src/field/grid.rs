//! Uniform-grid fields with bilinear interpolation, and their on-disk form:
//! a CSV of `x,y,re,im` rows plus a JSON descriptor
//! `{domain, nx, ny, data_path}`.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Codomain, Domain, FieldFn, ScalarField, C64};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GridField {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    data: Vec<C64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    pub data_path: PathBuf,
    #[serde(default)]
    pub codomain: Option<Codomain>,
}

#[derive(Debug, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    re: f64,
    #[serde(default)]
    im: f64,
}

impl GridField {
    /// `data[j * nx + i]` is the value at `(x0 + i dx, y0 + j dy)`.
    pub fn new(bounds: (f64, f64, f64, f64), nx: usize, ny: usize, data: Vec<C64>) -> Result<Self> {
        let (x0, x1, y0, y1) = bounds;
        if nx < 2 || ny < 2 {
            return Err(Error::InsufficientSamples { got: nx.min(ny), needed: 2 });
        }
        if data.len() != nx * ny {
            return Err(Error::invalid(format!("grid expects {} values, got {}", nx * ny, data.len())));
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::invalid("grid bounds are empty"));
        }
        Ok(GridField { x0, x1, y0, y1, nx, ny, data })
    }

    /// Samples `field` on an `nx x ny` grid spanning the bounding box of its domain.
    pub fn sample(field: &ScalarField, nx: usize, ny: usize) -> Result<Self> {
        let (x0, x1, y0, y1) = field.domain().bounding_box();
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(field.value(Self::node(x0, x1, nx, i, y0, y1, ny, j)));
            }
        }
        Self::new((x0, x1, y0, y1), nx, ny, data)
    }

    #[allow(clippy::too_many_arguments)]
    fn node(x0: f64, x1: f64, nx: usize, i: usize, y0: f64, y1: f64, ny: usize, j: usize) -> C64 {
        let x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
        let y = y0 + (y1 - y0) * j as f64 / (ny - 1) as f64;
        C64::new(x, y)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn into_field(self, domain: Domain, codomain: Codomain) -> ScalarField {
        ScalarField::new(domain, codomain, self)
    }

    fn locate(t: f64, lo: f64, hi: f64, n: usize) -> (usize, f64) {
        let s = ((t - lo) / (hi - lo) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        (k, s - k as f64)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y", "re", "im"])?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let z = Self::node(self.x0, self.x1, self.nx, i, self.y0, self.y1, self.ny, j);
                let v = self.data[j * self.nx + i];
                w.write_record([
                    format!("{:.16e}", z.re),
                    format!("{:.16e}", z.im),
                    format!("{:.16e}", v.re),
                    format!("{:.16e}", v.im),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `x,y,re,im` rows (any order) lying on a uniform tensor grid.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let rows: Vec<Row> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        let axis = |vals: Vec<f64>| -> Vec<f64> {
            let mut v = vals;
            v.sort_by(|a, b| a.total_cmp(b));
            let span = (v[v.len() - 1] - v[0]).abs().max(1.0);
            v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * span);
            v
        };
        if rows.len() < 4 {
            return Err(Error::InsufficientSamples { got: rows.len(), needed: 4 });
        }
        let xs = axis(rows.iter().map(|r| r.x).collect());
        let ys = axis(rows.iter().map(|r| r.y).collect());
        let (nx, ny) = (xs.len(), ys.len());
        if nx * ny != rows.len() {
            return Err(Error::invalid(format!("{} rows do not form a {nx}x{ny} grid", rows.len())));
        }
        let (x0, x1, y0, y1) = (xs[0], xs[nx - 1], ys[0], ys[ny - 1]);
        let mut data = vec![C64::new(f64::NAN, f64::NAN); nx * ny];
        for r in &rows {
            let i = ((r.x - x0) / (x1 - x0) * (nx - 1) as f64).round() as usize;
            let j = ((r.y - y0) / (y1 - y0) * (ny - 1) as f64).round() as usize;
            data[j.min(ny - 1) * nx + i.min(nx - 1)] = C64::new(r.re, r.im);
        }
        if data.iter().any(|v| v.re.is_nan()) {
            return Err(Error::invalid("grid rows are not uniformly spaced"));
        }
        Self::new((x0, x1, y0, y1), nx, ny, data)
    }

    /// Writes the CSV next to the descriptor and the descriptor itself.
    pub fn save(&self, descriptor: &Path, domain: Domain, codomain: Codomain) -> Result<()> {
        let data_path = descriptor.with_extension("csv");
        self.write_csv(&data_path)?;
        let desc = GridDescriptor {
            domain,
            nx: self.nx,
            ny: self.ny,
            data_path: PathBuf::from(data_path.file_name().expect("csv file name")),
            codomain: Some(codomain),
        };
        serde_json::to_writer_pretty(File::create(descriptor)?, &desc)?;
        Ok(())
    }

    /// Loads a descriptor; `data_path` is resolved relative to the descriptor.
    pub fn load(descriptor: &Path) -> Result<ScalarField> {
        let desc: GridDescriptor = serde_json::from_reader(File::open(descriptor)?)?;
        let data_path = match descriptor.parent() {
            Some(dir) if desc.data_path.is_relative() => dir.join(&desc.data_path),
            _ => desc.data_path.clone(),
        };
        let grid = Self::read_csv(&data_path)?;
        if grid.dims() != (desc.nx, desc.ny) {
            return Err(Error::invalid(format!(
                "descriptor says {}x{}, data is {}x{}",
                desc.nx, desc.ny, grid.nx, grid.ny
            )));
        }
        Ok(grid.into_field(desc.domain, desc.codomain.unwrap_or(Codomain::Complex)))
    }
}

impl FieldFn for GridField {
    fn value(&self, z: C64) -> C64 {
        let (i, s) = Self::locate(z.re, self.x0, self.x1, self.nx);
        let (j, t) = Self::locate(z.im, self.y0, self.y1, self.ny);
        let at = |i: usize, j: usize| self.data[j * self.nx + i];
        (1.0 - t) * ((1.0 - s) * at(i, j) + s * at(i + 1, j)) + t * ((1.0 - s) * at(i, j + 1) + s * at(i + 1, j + 1))
    }

    fn sampled(&self) -> bool {
        true
    }
}
