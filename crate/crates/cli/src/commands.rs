use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use vekua_core::approx::{order_estimate, write_convergence_csv, ConvergenceRow};
use vekua_core::field::{halton, square_grid, I};
use vekua_core::schrod::ConditionSSummary;
use vekua_core::vekua::{factorized_operator, op_h, op_p, op_s, GeneratingPair};
use vekua_core::{
    check_condition_s, Codomain, ConditionSOptions, Error, Expr, GeneratingSequence, Result, ScalarField,
    SchrodingerProblem, C64,
};

use crate::config::RunConfig;

/// Whether every check of a command passed.
pub type Verdict = bool;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    UToV,
    VToU,
}

pub struct Context {
    pub config: RunConfig,
    pub problem: SchrodingerProblem,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
}

impl Context {
    fn provenance<'a>(&'a self, command: &'a str) -> Provenance<'a> {
        Provenance { tool: "vekua", version: env!("CARGO_PKG_VERSION"), command, config: &self.config }
    }

    fn z0(&self) -> [f64; 2] {
        [self.problem.z0.re, self.problem.z0.im]
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    fn sequence(&self) -> Result<Arc<GeneratingSequence>> {
        GeneratingSequence::from_problem(&self.problem, self.config.quadrature())
    }

    /// Tensor grid of half-width `radius` around `z0`, clipped to the domain.
    fn grid(&self) -> Vec<C64> {
        let d = self.problem.domain();
        square_grid(self.problem.z0, self.config.radius, self.config.grid).into_iter().filter(|&z| d.contains(z)).collect()
    }

    fn samples(&self) -> Vec<C64> {
        self.problem.verification_samples(self.config.samples)
    }

    fn field(&self, src: &str, codomain: Codomain) -> Result<ScalarField> {
        let params = self.config.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        Ok(Expr::parse_with(src, &params)?.field(*self.problem.domain(), codomain))
    }
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_values_csv(path: &Path, points: &[C64], field: &ScalarField) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "value"])?;
    for &z in points {
        w.write_record([sci(z.re), sci(z.im), sci(field.value(z).re)])?;
    }
    w.flush()?;
    Ok(())
}

fn a_label(a: C64) -> &'static str {
    if a == I {
        "i"
    } else {
        "1"
    }
}

pub fn check_s(ctx: &Context) -> Result<Verdict> {
    #[derive(Serialize)]
    struct Report<'a> {
        problem: &'a str,
        z0: [f64; 2],
        condition_s: ConditionSSummary,
        provenance: Provenance<'a>,
    }
    let rho = ctx.problem.rho.as_ref().ok_or_else(|| Error::InvalidArgument("problem has no rho".into()))?;
    let report = check_condition_s(rho, &ConditionSOptions { z0: Some(ctx.problem.z0), ..Default::default() })?;
    let summary = report.summary();
    println!("problem: {}", ctx.problem.name);
    println!("verdict: {}", summary.verdict);
    println!("harmonic: {}", summary.harmonic);
    println!("residual: {}", sci(summary.residual));
    println!("tolerance: {}", sci(summary.tolerance));
    println!("rho range: [{}, {}]", sci(summary.rho_range.0), sci(summary.rho_range.1));
    if summary.verdict {
        for row in summary.table.iter().step_by((summary.table.len() / 5).max(1)) {
            println!("  rho {}  s {}  S {}", sci(row[0]), sci(row[1]), sci(row[2]));
        }
    }
    let verdict = summary.verdict;
    let path = ctx.write_json(
        "condition_s.json",
        &Report { problem: &ctx.problem.name, z0: ctx.z0(), condition_s: summary, provenance: ctx.provenance("check-s") },
    )?;
    println!("wrote {}", path.display());
    Ok(verdict)
}

pub fn basis(ctx: &Context) -> Result<Verdict> {
    #[derive(Serialize)]
    struct Entry {
        n: usize,
        a: &'static str,
        file: String,
        residual: f64,
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        problem: &'a str,
        z0: [f64; 2],
        #[serde(rename = "N")]
        order: usize,
        tolerance: f64,
        pass: bool,
        residuals: Vec<Entry>,
        provenance: Provenance<'a>,
    }
    let seq = ctx.sequence()?;
    let elements = seq.basis(ctx.problem.z0, ctx.config.order)?;
    let points = ctx.grid();
    let samples = ctx.samples();
    let mut entries = Vec::new();
    for e in &elements {
        let file = format!("basis_n{}_{}.csv", e.n, a_label(e.a));
        write_values_csv(&ctx.path(&file)?, &points, &e.field)?;
        let residual = ctx.problem.residual_schrodinger(&e.field, &samples)?;
        println!("Re Z^({})({}) residual {}  -> {}", e.n, a_label(e.a), sci(residual), file);
        entries.push(Entry { n: e.n, a: a_label(e.a), file, residual });
    }
    let tolerance = ctx.config.tolerance;
    let pass = entries.iter().all(|e| e.residual <= tolerance);
    let manifest = Manifest {
        problem: &ctx.problem.name,
        z0: ctx.z0(),
        order: ctx.config.order,
        tolerance,
        pass,
        residuals: entries,
        provenance: ctx.provenance("basis"),
    };
    let path = ctx.write_json("manifest.json", &manifest)?;
    println!("wrote {}", path.display());
    Ok(pass)
}

/// `W` for a target: complex targets are used as given, real ones are
/// completed by their Darboux image.
fn target_w(ctx: &Context, expr: &str, complex: bool) -> Result<ScalarField> {
    if complex {
        return ctx.field(expr, Codomain::Complex);
    }
    let u = ctx.field(expr, Codomain::Real)?;
    let v = ctx.problem.darboux_v(&u, &ctx.config.quadrature())?;
    Ok(u.add(&v.scale(I)))
}

pub fn expand(ctx: &Context) -> Result<Verdict> {
    #[derive(Serialize)]
    struct Expansion<'a> {
        problem: &'a str,
        z0: [f64; 2],
        #[serde(rename = "N")]
        order: usize,
        target: &'a str,
        coefficients: Vec<[f64; 2]>,
        slopes: Vec<Option<f64>>,
        provenance: Provenance<'a>,
    }
    let target = ctx
        .config
        .target
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("expand needs a target solution (--target EXPR)".into()))?;
    let w = target_w(ctx, &target.expr, target.complex)?;
    let seq = ctx.sequence()?;
    let quad = ctx.config.quadrature();
    let expansion = seq.taylor_coefficients(&w, ctx.problem.z0, ctx.config.order)?;
    for (n, a) in expansion.coefficients.iter().enumerate() {
        println!("a_{n} = {} + {} i", sci(a.re), sci(a.im));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut slopes = Vec::new();
    let mut pass = true;
    for n in 0..=ctx.config.order {
        match order_estimate(&w, &expansion, n, &ctx.config.radii, &quad) {
            Ok(e) => {
                let ok = e.slope >= n as f64 + 0.8;
                pass &= ok;
                println!("N = {n}: remainder slope {} ({})", sci(e.slope), if ok { "ok" } else { "below N + 0.8" });
                slopes.push(Some(e.slope));
                rows.extend(e.rows);
            }
            Err(Error::NoiseFloorReached { radius, remainder, .. }) => {
                println!("N = {n}: remainder {} at radius {} is at the noise floor", sci(remainder), sci(radius));
                slopes.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let csv_path = ctx.path("convergence.csv")?;
    write_convergence_csv(&rows, fs::File::create(&csv_path)?)?;
    let json_path = ctx.write_json(
        "expansion.json",
        &Expansion {
            problem: &ctx.problem.name,
            z0: ctx.z0(),
            order: ctx.config.order,
            target: &target.expr,
            coefficients: expansion.coefficients.iter().map(|a| [a.re, a.im]).collect(),
            slopes,
            provenance: ctx.provenance("expand"),
        },
    )?;
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(pass)
}

pub fn darboux(ctx: &Context, field: &str, direction: Direction) -> Result<Verdict> {
    let quad = ctx.config.quadrature();
    let input = ctx.field(field, Codomain::Real)?;
    let samples = ctx.samples();
    let (output, residual, name) = match direction {
        Direction::UToV => {
            let v = ctx.problem.darboux_v(&input, &quad)?;
            let r = ctx.problem.residual_darboux(&v, &samples)?;
            (v, r, "darboux_v.csv")
        }
        Direction::VToU => {
            let u = ctx.problem.darboux_u(&input, &quad)?;
            let r = ctx.problem.residual_schrodinger(&u, &samples)?;
            (u, r, "darboux_u.csv")
        }
    };
    let path = ctx.path(name)?;
    write_values_csv(&path, &ctx.grid(), &output)?;
    let pass = residual <= ctx.config.fd_tolerance;
    println!("transformed field residual {} (tolerance {})", sci(residual), sci(ctx.config.fd_tolerance));
    println!("wrote {}", path.display());
    Ok(pass)
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
    Check { name: name.into(), value, tolerance, pass: value <= tolerance }
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Deterministic smooth real test functions indexed by `k`.
fn test_function(ctx: &Context, k: u64) -> ScalarField {
    let base = (ctx.config.seed * 10 + k) as usize * 8 + 1;
    let c: Vec<f64> = (0..6).map(|j| 2.0 * halton(base + j, 3) - 1.0).collect();
    ScalarField::from_fn(*ctx.problem.domain(), Codomain::Real, move |z| {
        let (x, y) = (z.re, z.im);
        C64::new(c[0] * (c[1] * x + c[2] * y).sin() + c[3] * (c[4] * x - c[5] * y).exp() + c[5] * x * x * y, 0.0)
    })
}

fn sup(points: &[C64], mut f: impl FnMut(C64) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &z in points {
        let v = f(z)?;
        worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
    }
    Ok(worst)
}

pub fn verify(ctx: &Context) -> Result<Verdict> {
    let p = &ctx.problem;
    let quad = ctx.config.quadrature();
    let seq = ctx.sequence()?;
    let samples = ctx.samples();
    let st = *p.stencil();
    let z0 = p.z0;
    let top = ctx.config.order.min(3);
    let fd_tol = ctx.config.fd_tolerance;
    let mut checks = Vec::new();

    // (d_zbar + (f0_z/f0) C)(d_z - f0_z/f0) = Laplacian - nu
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let phi = test_function(ctx, k);
        let lhs = factorized_operator(&phi, &p.f0, &st);
        worst = worst.max(sup(&samples, |z| Ok((lhs.eval(z)? - (st.laplacian(&phi, z)? - p.nu.value(z) * phi.value(z))).norm()))?);
    }
    checks.push(check("factorization identity", worst, fd_tol));

    // S P f = f + c f0
    let f = test_function(ctx, 10);
    let spf = op_s(&op_p(&f, &p.f0, &st), &p.f0, z0, &quad)?;
    let grid = ctx.grid();
    let ratios: Vec<f64> = grid.iter().map(|&z| ((spf.value(z) - f.value(z)) / p.f0.value(z)).re).collect();
    checks.push(check("SPf = f + c f0 (spread of c)", spread(&ratios), 1e-6));

    let powers = |m: i32, n: usize, a: C64| seq.formal_power(m, n, a, z0);
    let a = C64::new(0.7, -1.3);

    // Property 1: Z_m^(n) solves the Vekua equation of pair m
    let mut worst: f64 = 0.0;
    for n in 0..=top {
        for m in 0..2 {
            let z = powers(m, n, a)?.field();
            worst = worst.max(seq.pair(m)?.vekua_residual(&z, &samples));
        }
    }
    checks.push(check("property 1: formal powers are pseudoanalytic", worst, 1e-5));

    // Property 2: real linearity in a
    let probe: Vec<C64> = samples.iter().step_by(10).cloned().collect();
    let mut worst: f64 = 0.0;
    for n in 0..=top {
        let (za, z1, zi) = (powers(0, n, a)?, powers(0, n, C64::new(1.0, 0.0))?, powers(0, n, I)?);
        worst = worst.max(sup(&probe, |z| {
            let v = za.value_at(z)?;
            Ok((v - (a.re * z1.value_at(z)? + a.im * zi.value_at(z)?)).norm() / (1.0 + v.norm()))
        })?);
    }
    checks.push(check("property 2: real linearity in a", worst, 1e-10));

    // Property 3: (F_m, G_m)-derivative lowers the exponent
    let mut worst: f64 = 0.0;
    for n in 1..=top.max(1) {
        let lhs = seq.pair(0)?.fg_derivative(&powers(0, n, a)?.field());
        let rhs = powers(1, n - 1, a)?;
        worst = worst.max(sup(&probe, |z| {
            let r = rhs.value_at(z)? * n as f64;
            Ok((lhs.value(z) - r).norm() / (1.0 + r.norm()))
        })?);
    }
    checks.push(check("property 3: Zdot^(n) = n Z_1^(n-1)", worst, 1e-6));

    // Property 4: Z^(n)(a, z0; z) ~ a ((z - z0)/2)^n
    let mut worst: f64 = 0.0;
    for n in 0..=top {
        let zp = powers(0, n, a)?;
        for k in 0..8 {
            let z = z0 + C64::from_polar(1e-3, k as f64 * 0.785);
            let e = a * ((z - z0) / 2.0).powi(n as i32);
            worst = worst.max((zp.value_at(z)? - e).norm() / e.norm());
        }
    }
    checks.push(check("property 4: local behaviour a((z-z0)/2)^n at r = 1e-3 (relative)", worst, 1e-2));

    // Darboux split of formal powers
    let (mut wu, mut wv) = (0.0f64, 0.0f64);
    for n in 0..=top {
        for b in [C64::new(1.0, 0.0), I] {
            let z = powers(0, n, b)?.field();
            wu = wu.max(p.residual_schrodinger(&z.re(), &samples)?);
            wv = wv.max(p.residual_darboux(&z.im(), &samples)?);
        }
    }
    checks.push(check("Re Z^(n) solves the Schrodinger equation", wu, fd_tol));
    checks.push(check("Im Z^(n) solves the Darboux-transformed equation", wv, fd_tol));

    // H C Wdot agrees with the (F,G)-integral up to c1 f0 + i c2 / f0
    let pair = GeneratingPair::main(&p.f0)?;
    let w = powers(0, 1, C64::new(1.0, 0.0))?.field().add(&powers(0, 2, I)?.field());
    let wdot = pair.fg_derivative(&w);
    let hc = op_h(&wdot.conj(), &p.f0, z0, &quad)?;
    let coarse: Vec<C64> = grid.iter().step_by((grid.len() / 12).max(1)).cloned().collect();
    let (mut c1, mut c2, mut anti) = (Vec::new(), Vec::new(), 0.0f64);
    let (phi0, psi0) = pair.decompose_at(w.value(z0), z0)?;
    for &z in &coarse {
        let integral = pair.fg_integral(&wdot, z0, z, &quad)?;
        let expected = w.value(z) - phi0 * pair.f().value(z) - psi0 * pair.g().value(z);
        anti = anti.max((integral - expected).norm());
        let (a1, a2) = pair.decompose_at(hc.value(z) - integral, z)?;
        c1.push(a1);
        c2.push(a2);
    }
    checks.push(check("(F,G)-integral of Wdot recovers W", anti, 1e-5));
    checks.push(check("H C Wdot - (F,G)-integral in span{f0, i/f0}", spread(&c1).max(spread(&c2)), 1e-6));

    if p.name == "example2" {
        let alpha = ctx.config.params.get("alpha").copied().unwrap_or(2.0);
        let beta = ctx.config.params.get("beta").copied().unwrap_or(2.0);
        let s = alpha * alpha + beta * beta;
        let closed = [
            ("lambda1", alpha.sqrt() / (beta.sqrt() * s)),
            ("mu1", -(alpha * beta.powi(3)).sqrt() / s),
            ("lambda2", beta.sqrt() / (alpha.sqrt() * s)),
            ("mu2", (alpha.powi(3) * beta).sqrt() / s),
        ];
        let (l1, m1) = powers(0, 1, C64::new(1.0, 0.0))?.zeroth_coefficients();
        let (l2, m2) = powers(0, 1, I)?.zeroth_coefficients();
        for ((name, exact), computed) in closed.iter().zip([l1, m1, l2, m2]) {
            println!("{name} = {} (closed form {})", sci(computed), sci(*exact));
            checks.push(check(format!("{name} matches closed form"), (computed - exact).abs(), 1e-10));
        }
    }

    println!("{:<66} {:>24} {:>10}  result", "check", "value", "tolerance");
    for c in &checks {
        println!("{:<66} {:>24} {:>10.1e}  {}", c.name, sci(c.value), c.tolerance, if c.pass { "PASS" } else { "FAIL" });
    }
    let pass = checks.iter().all(|c| c.pass);

    #[derive(Serialize)]
    struct Report<'a> {
        problem: &'a str,
        z0: [f64; 2],
        pass: bool,
        checks: Vec<Check>,
        provenance: Provenance<'a>,
    }
    let path = ctx.write_json(
        "verify.json",
        &Report { problem: &p.name, z0: ctx.z0(), pass, checks, provenance: ctx.provenance("verify") },
    )?;
    println!("wrote {}", path.display());
    Ok(pass)
}
