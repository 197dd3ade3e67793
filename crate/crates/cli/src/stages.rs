//! Stage definitions, parameter resolution and artifact rendering.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use onsager_core::duality::{change_to_z, fbar_series, solve_z_ansatz, ChangeOfVariable};
use onsager_core::exactmath::{scalar, ExactScalar, TruncSeries, UniPoly};
use onsager_core::guess::{
    guess_rational, onsager_free_energy, onsager_g_reference, ratios, rescale, verify_closed_form, ClosedFormRow,
    GuessOutcome,
};
use onsager_core::isingcore::{brute_partition, partition_to_z, GridSpec, LaurentTable};
use onsager_core::isingpoly::{assemble_f, GridPolicy};
use onsager_core::relation::{
    candidate_relations, estimate_magnetization, magnetization_ode_oracle, magnetization_reference, minimal_ode,
    oracle_points, oracle_problem, IntegerRelation, MagnetizationOde, VALIDATION_POINTS,
};
use onsager_core::transfer::{numeric_free_energy, z_series};

use crate::cache::{Cache, Lookup};
use crate::{exit, CliError, CliResult};

/// Highest truncation order the polynomial stages accept. Order 24 needs
/// width 13 and takes minutes; beyond that the run is hours.
pub const MAX_ORDER: usize = 24;
pub const DEFAULT_ORDER: usize = 20;
/// Largest rational degree tried for the coefficient ratios.
pub const GUESS_MAX_DEG: usize = 3;
pub const EXPECTED_RATIO: &str = "r*(2*r+1)^2/(r+1)^3";
pub const DEFAULT_MAGNETIZE_WIDTH: usize = 12;
pub const DEFAULT_FIELD_STEP: f64 = 0.04;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_PRECISION: u32 = 30;
pub const MAX_PRECISION: u32 = 200;
/// Degree of `a` and `b` in the magnetization ansatz.
pub const ODE_DEGREE: usize = 10;
pub const MAX_COEFF_DIGITS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Brute,
    Zseries,
    IsingPolys,
    AssembleF,
    GuessG,
    VerifyOnsager,
    Magnetize,
    Relation,
    FullDerivation,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Brute => "brute",
            Stage::Zseries => "zseries",
            Stage::IsingPolys => "ising-polys",
            Stage::AssembleF => "assemble-f",
            Stage::GuessG => "guess-g",
            Stage::VerifyOnsager => "verify-onsager",
            Stage::Magnetize => "magnetize",
            Stage::Relation => "relation",
            Stage::FullDerivation => "full-derivation",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    #[default]
    Text,
}

/// Parameters as given; `None` means "stage default".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub order: Option<usize>,
    pub precision: Option<u32>,
    pub tol: Option<f64>,
    /// Ansatz constant as a rational literal.
    pub c: Option<String>,
    pub allow_nonstandard_c: bool,
    /// Evaluation points for `magnetize`.
    pub x: Vec<f64>,
    /// Field step for `magnetize`.
    pub h: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct JobConfig {
    pub stage: Stage,
    pub params: Params,
    pub cache_dir: PathBuf,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageOutput {
    /// Rendered artifact, newline-terminated.
    pub artifact: String,
    pub code: i32,
    /// Cache events, for stderr.
    pub log: Vec<String>,
}

struct Ctx {
    cache: Cache,
    log: Vec<String>,
}

impl Ctx {
    /// Returns the cached payload for `stage|params`, or computes, stores
    /// and returns it. Corrupt or stale entries are reported and replaced.
    fn cached<T, F>(&mut self, stage: Stage, params: &str, compute: F) -> CliResult<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce(&mut Ctx) -> CliResult<T>,
    {
        let key = format!("{}|{params}", stage.name());
        match self.cache.load(&key) {
            Lookup::Hit(payload) => match serde_json::from_str(&payload) {
                Ok(v) => {
                    self.log.push(format!("cache hit: {key}"));
                    return Ok(v);
                }
                Err(e) => self.log.push(format!("cache entry for {key} does not decode ({e}); recomputing")),
            },
            Lookup::Miss => self.log.push(format!("cache miss: {key}")),
            Lookup::Corrupt(why) => self.log.push(format!("cache entry for {key} is corrupt ({why}); recomputing")),
            Lookup::Stale { found } => self.log.push(format!(
                "cache entry for {key} was written by version {found}, current is {}; recomputing",
                self.cache.version()
            )),
        }
        let value = compute(self)?;
        let payload = serde_json::to_string(&value).map_err(|e| CliError::internal(e.to_string()))?;
        self.cache.store(&key, &payload)?;
        Ok(value)
    }
}

fn strings(v: &[ExactScalar]) -> Vec<String> {
    v.iter().map(scalar::to_string).collect()
}

fn parse_all(v: &[String]) -> CliResult<Vec<ExactScalar>> {
    v.iter().map(|s| scalar::parse(s).map_err(CliError::from)).collect()
}

fn grid_args(p: &Params) -> CliResult<(usize, usize)> {
    match (p.n1, p.n2) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(CliError::usage("this stage needs --n1 and --n2")),
    }
}

fn order_arg(p: &Params) -> CliResult<usize> {
    let order = p.order.unwrap_or(DEFAULT_ORDER);
    if order < 4 || order % 2 == 1 {
        return Err(CliError::usage(format!("order must be even and >= 4, got {order}")));
    }
    if order > MAX_ORDER {
        return Err(CliError::resource(format!("order {order} exceeds the cap {MAX_ORDER}")));
    }
    Ok(order)
}

fn change_of_variable(p: &Params) -> CliResult<ChangeOfVariable> {
    let Some(raw) = &p.c else { return Ok(ChangeOfVariable::default()) };
    let c = scalar::parse(raw)?;
    if c != scalar::int(2) && !p.allow_nonstandard_c {
        return Err(CliError::usage(format!(
            "--c {raw} differs from the value 2 fixed by the w -> z normalization; pass --allow-nonstandard-c to use it anyway"
        )));
    }
    Ok(ChangeOfVariable::new(c)?)
}

// ---- artifacts ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BruteArtifact {
    pub grid: GridSpec,
    pub partition: LaurentTable,
    pub z: UniPoly,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZSeriesArtifact {
    pub grid: GridSpec,
    pub series: TruncSeries,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyRow {
    pub e: usize,
    pub p: String,
    /// Ascending coefficients in `N`.
    pub coefficients: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsingPolysArtifact {
    pub order: usize,
    pub grids: Vec<GridSpec>,
    pub polynomials: Vec<PolyRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssembleFArtifact {
    pub order: usize,
    pub f: TruncSeries,
    pub fbar: TruncSeries,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnsatzReport {
    pub relation: String,
    pub family_dimension: usize,
    pub relation_parameters: usize,
    pub z_of_w: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessReport {
    /// `validated`, `underdetermined` or `not-found`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formula: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub needed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub available: Option<usize>,
}

impl GuessReport {
    fn from_outcome(o: &GuessOutcome) -> Self {
        match o {
            GuessOutcome::Validated(g) => {
                GuessReport { status: "validated".into(), formula: Some(g.canonical()), needed: None, available: None }
            }
            GuessOutcome::Underdetermined { needed, available } => GuessReport {
                status: "underdetermined".into(),
                formula: None,
                needed: Some(*needed),
                available: Some(*available),
            },
            GuessOutcome::NotFound => {
                GuessReport { status: "not-found".into(), formula: None, needed: None, available: None }
            }
        }
    }

    fn line(&self) -> String {
        match (&self.formula, self.needed, self.available) {
            (Some(f), _, _) => format!("b_{{2r+2}}/b_{{2r}} = {f}  (validated on held-out ratios)"),
            (None, Some(n), Some(a)) => {
                format!("ratio guess underdetermined: {a} ratios available, higher-degree candidates need at least {n}")
            }
            _ => "no rational ratio formula found".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GuessGArtifact {
    pub order: usize,
    pub c: String,
    pub ansatz: AnsatzReport,
    /// `w(z)`.
    pub reversion: TruncSeries,
    pub g: TruncSeries,
    pub b: Vec<String>,
    pub ratios: Vec<String>,
    pub guess: GuessReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyArtifact {
    pub order: usize,
    pub rows: Vec<ClosedFormRow>,
    /// Pipeline `G(z)` equals the reference series at `z/2` termwise.
    pub reference_match: bool,
    pub guess: GuessReport,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MagnetizeRow {
    pub x: f64,
    pub m: f64,
    pub m_error: f64,
    pub dm: f64,
    pub dm_error: f64,
    pub m_reference: f64,
    pub f_numeric: f64,
    pub f_reference: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MagnetizeArtifact {
    pub n1: usize,
    pub h: f64,
    pub tol: f64,
    pub rows: Vec<MagnetizeRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdeReport {
    pub a: String,
    pub b: String,
}

impl OdeReport {
    fn of(ode: &MagnetizationOde) -> Self {
        OdeReport { a: ode.a.render("x"), b: ode.b.render("x") }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationArtifact {
    pub precision: u32,
    pub points: Vec<String>,
    pub validation_points: usize,
    pub relation: Option<IntegerRelation>,
    pub ode: Option<OdeReport>,
    pub oracle: OdeReport,
    pub matches_oracle: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FullArtifact {
    pub order: usize,
    pub polynomials: Vec<PolyRow>,
    pub f: TruncSeries,
    pub fbar: TruncSeries,
    pub ansatz: AnsatzReport,
    pub g: TruncSeries,
    pub guess: GuessReport,
    pub closed_form: String,
    pub closed_form_rows: Vec<ClosedFormRow>,
    pub reference_match: bool,
    pub pass: bool,
}

// ---- stage bodies ----

fn brute(ctx: &mut Ctx, p: &Params) -> CliResult<BruteArtifact> {
    let (n1, n2) = grid_args(p)?;
    let grid = GridSpec::new(n1, n2)?;
    ctx.cached(Stage::Brute, &format!("n1={n1};n2={n2}"), |_| {
        let partition = brute_partition(grid)?;
        let z = partition_to_z(&partition.at_y_one(), grid)?;
        Ok(BruteArtifact { grid, partition, z })
    })
}

fn zseries(ctx: &mut Ctx, p: &Params) -> CliResult<ZSeriesArtifact> {
    let (n1, n2) = grid_args(p)?;
    let grid = GridSpec::new(n1, n2)?;
    let order = p.order.unwrap_or((2 * grid.sites()).min(DEFAULT_ORDER));
    ctx.cached(Stage::Zseries, &format!("n1={n1};n2={n2};order={order}"), |_| {
        Ok(ZSeriesArtifact { grid, series: z_series(n1, n2, order)? })
    })
}

fn ising_polys(ctx: &mut Ctx, order: usize) -> CliResult<IsingPolysArtifact> {
    ctx.cached(Stage::IsingPolys, &format!("order={order}"), |_| {
        let policy = GridPolicy::for_order(order);
        let f = assemble_f(order, &policy)?;
        let polynomials = f
            .polynomials
            .iter()
            .map(|p| PolyRow { e: p.edge_count, p: p.render(), coefficients: strings(p.poly.coeffs()) })
            .collect();
        Ok(IsingPolysArtifact { order, grids: policy.grids(), polynomials })
    })
}

fn assemble(ctx: &mut Ctx, order: usize) -> CliResult<AssembleFArtifact> {
    ctx.cached(Stage::AssembleF, &format!("order={order}"), |ctx| {
        let polys = ising_polys(ctx, order)?;
        let mut coeffs = vec![scalar::int(0); order + 1];
        for row in &polys.polynomials {
            let c = parse_all(&row.coefficients)?;
            coeffs[row.e] = c.get(1).cloned().unwrap_or_else(|| scalar::int(0));
        }
        let f = TruncSeries::new(order, coeffs)?;
        let fbar = fbar_series(&f)?;
        Ok(AssembleFArtifact { order, f, fbar })
    })
}

fn ansatz_report(cov: &ChangeOfVariable) -> CliResult<AnsatzReport> {
    let sol = solve_z_ansatz()?;
    let c = scalar::to_string(cov.c());
    Ok(AnsatzReport {
        relation: sol.relation(),
        family_dimension: sol.family_dimension,
        relation_parameters: sol.relation_parameters(),
        z_of_w: format!("z = {c}*w*(1-w^2)/(1+w^2)^2"),
    })
}

fn guess_g(ctx: &mut Ctx, order: usize, cov: &ChangeOfVariable) -> CliResult<GuessGArtifact> {
    let c = scalar::to_string(cov.c());
    ctx.cached(Stage::GuessG, &format!("order={order};c={c}"), |ctx| {
        let f = assemble(ctx, order)?;
        let g = change_to_z(&f.fbar, cov)?;
        let bs = g.bs();
        let rs = ratios(&bs)?;
        let outcome = guess_rational(&rs, GUESS_MAX_DEG);
        Ok(GuessGArtifact {
            order,
            c: c.clone(),
            ansatz: ansatz_report(cov)?,
            reversion: cov.reversion(order)?,
            g: g.series,
            b: strings(&bs),
            ratios: strings(&rs),
            guess: GuessReport::from_outcome(&outcome),
        })
    })
}

fn verdict(order: usize, g: &TruncSeries, guess: &GuessReport) -> CliResult<(Vec<ClosedFormRow>, bool, bool)> {
    let gs = onsager_core::duality::GSeries { series: g.clone() };
    let report = verify_closed_form(&gs);
    let reference = rescale(&onsager_g_reference(order)?, &scalar::frac(1, 2));
    let reference_match = &reference == g;
    let guess_ok = guess.formula.as_deref().is_none_or(|f| f == EXPECTED_RATIO);
    let pass = report.all_match() && reference_match && guess_ok;
    Ok((report.rows, reference_match, pass))
}

fn verify(ctx: &mut Ctx, order: usize, cov: &ChangeOfVariable) -> CliResult<VerifyArtifact> {
    let g = guess_g(ctx, order, cov)?;
    let (rows, reference_match, pass) = verdict(order, &g.g, &g.guess)?;
    Ok(VerifyArtifact { order, rows, reference_match, guess: g.guess, pass })
}

fn full(ctx: &mut Ctx, order: usize, cov: &ChangeOfVariable) -> CliResult<FullArtifact> {
    if order < 12 {
        return Err(CliError::usage(format!("full-derivation needs order >= 12, got {order}")));
    }
    let polys = ising_polys(ctx, order)?;
    let f = assemble(ctx, order)?;
    let g = guess_g(ctx, order, cov)?;
    let (rows, reference_match, pass) = verdict(order, &g.g, &g.guess)?;
    Ok(FullArtifact {
        order,
        polynomials: polys.polynomials,
        f: f.f,
        fbar: f.fbar,
        ansatz: g.ansatz,
        g: g.g,
        guess: g.guess,
        closed_form: "b_{2r} = -C(2r,r)^2/(r*4^(r+1))".into(),
        closed_form_rows: rows,
        reference_match,
        pass,
    })
}

fn magnetize(ctx: &mut Ctx, p: &Params) -> CliResult<MagnetizeArtifact> {
    let n1 = p.n1.unwrap_or(DEFAULT_MAGNETIZE_WIDTH);
    let h = p.h.unwrap_or(DEFAULT_FIELD_STEP);
    let tol = p.tol.unwrap_or(DEFAULT_TOL);
    let xs = if p.x.is_empty() { vec![1.5, 2.0, 3.0] } else { p.x.clone() };
    let canon: Vec<String> = xs.iter().map(|x| format!("{x:e}")).collect();
    ctx.cached(Stage::Magnetize, &format!("n1={n1};h={h:e};tol={tol:e};x={}", canon.join(",")), |_| {
        let rows = xs
            .iter()
            .map(|&x| {
                let e = estimate_magnetization(x, n1, h)?;
                let f_reference = match onsager_free_energy(x, tol) {
                    Ok(v) => Some(v.value),
                    Err(onsager_core::Error::Domain(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                Ok(MagnetizeRow {
                    x,
                    m: e.m,
                    m_error: e.m_error,
                    dm: e.dm,
                    dm_error: e.dm_error,
                    m_reference: magnetization_reference(x)?,
                    f_numeric: numeric_free_energy(n1, x, 1.0, tol)?.value,
                    f_reference,
                })
            })
            .collect::<CliResult<_>>()?;
        Ok(MagnetizeArtifact { n1, h, tol, rows })
    })
}

fn relation(ctx: &mut Ctx, p: &Params) -> CliResult<RelationArtifact> {
    let precision = p.precision.unwrap_or(DEFAULT_PRECISION);
    if precision < 2 {
        return Err(CliError::usage(format!("precision must be >= 2, got {precision}")));
    }
    if precision > MAX_PRECISION {
        return Err(CliError::resource(format!("precision {precision} exceeds the cap {MAX_PRECISION}")));
    }
    ctx.cached(Stage::Relation, &format!("precision={precision}"), |_| {
        let points = oracle_points();
        let problem = oracle_problem(&points, precision, ODE_DEGREE, VALIDATION_POINTS)?;
        let candidates = candidate_relations(&problem, MAX_COEFF_DIGITS)?;
        let ode = minimal_ode(&candidates);
        let oracle = magnetization_ode_oracle();
        Ok(RelationArtifact {
            precision,
            points: strings(&points),
            validation_points: VALIDATION_POINTS,
            relation: candidates.into_iter().next(),
            matches_oracle: ode.as_ref() == Some(&oracle),
            ode: ode.as_ref().map(OdeReport::of),
            oracle: OdeReport::of(&oracle),
        })
    })
}

// ---- rendering ----

fn render_z(grid: GridSpec, s: &TruncSeries) -> String {
    format!("Z_{{{},{}}}(w) = {}\n", grid.n1, grid.n2, s.render("w"))
}

fn rows_table(rows: &[ClosedFormRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:>24} {:>24}  verdict", "coeff", "pipeline", "closed form");
    for r in rows {
        let verdict = if r.matches { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{:<6} {:>24} {:>24}  {verdict}",
            format!("b_{}", 2 * r.r),
            scalar::to_string(&r.computed),
            scalar::to_string(&r.expected)
        );
    }
    out
}

fn render_polys(rows: &[PolyRow]) -> String {
    rows.iter().map(|r| format!("p_{} = {}\n", r.e, r.p)).collect()
}

trait Artifact: Serialize {
    fn text(&self) -> String;
    fn code(&self) -> i32 {
        exit::OK
    }
}

impl Artifact for BruteArtifact {
    fn text(&self) -> String {
        let mut out = format!("P_{{{},{}}}(x,y) has {} monomials\n", self.grid.n1, self.grid.n2, self.partition.len());
        out += &format!("Z_{{{},{}}}(w) = {}\n", self.grid.n1, self.grid.n2, self.z.render("w"));
        out
    }
}

impl Artifact for ZSeriesArtifact {
    fn text(&self) -> String {
        render_z(self.grid, &self.series)
    }
}

impl Artifact for IsingPolysArtifact {
    fn text(&self) -> String {
        let grids: Vec<String> = self.grids.iter().map(|g| format!("{}x{}", g.n1, g.n2)).collect();
        format!("grids: {}\n{}", grids.join(" "), render_polys(&self.polynomials))
    }
}

impl Artifact for AssembleFArtifact {
    fn text(&self) -> String {
        format!("F(w) = {}\nFbar(w) = {}\n", self.f.render("w"), self.fbar.render("w"))
    }
}

impl Artifact for GuessGArtifact {
    fn text(&self) -> String {
        let mut out = format!("ansatz: {}\n", self.ansatz.relation);
        let _ = writeln!(out, "change of variable: {}", self.ansatz.z_of_w);
        let _ = writeln!(out, "w(z) = {}", self.reversion.render("z"));
        let _ = writeln!(out, "G(z) = {}", self.g.render("z"));
        for (r, b) in self.b.iter().enumerate() {
            let _ = writeln!(out, "b_{} = {b}", 2 * r + 2);
        }
        let _ = writeln!(out, "{}", self.guess.line());
        out
    }
}

impl Artifact for VerifyArtifact {
    fn text(&self) -> String {
        let mut out = rows_table(&self.rows);
        let _ = writeln!(out, "G(z) = G_ref(z/2) termwise: {}", if self.reference_match { "PASS" } else { "FAIL" });
        let _ = writeln!(out, "{}", self.guess.line());
        let _ = writeln!(out, "verdict: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }

    fn code(&self) -> i32 {
        if self.pass {
            exit::OK
        } else {
            exit::MISMATCH
        }
    }
}

impl Artifact for MagnetizeArtifact {
    fn text(&self) -> String {
        let mut out = format!("n1 = {}, h = {}, tol = {:e}\n", self.n1, self.h, self.tol);
        let _ = writeln!(
            out,
            "{:>8} {:>12} {:>10} {:>12} {:>10} {:>12} {:>14} {:>14}",
            "x", "m", "±", "m'", "±", "m exact", "f numeric", "f exact"
        );
        for r in &self.rows {
            let fr = r.f_reference.map_or("critical".to_string(), |v| format!("{v:.10}"));
            let _ = writeln!(
                out,
                "{:>8} {:>12.8} {:>10.1e} {:>12.8} {:>10.1e} {:>12.8} {:>14.10} {:>14}",
                r.x, r.m, r.m_error, r.dm, r.dm_error, r.m_reference, r.f_numeric, fr
            );
        }
        out
    }
}

impl Artifact for RelationArtifact {
    fn text(&self) -> String {
        let mut out = format!(
            "{} digits, {} fit points + {} validation points\n",
            self.precision,
            self.points.len() - self.validation_points,
            self.validation_points
        );
        match &self.relation {
            None => out += "no integer relation passes the gates\n",
            Some(r) => {
                let coeffs: Vec<String> = r.coeffs.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "relation: [{}]  residual {:e}", coeffs.join(", "), r.residual);
            }
        }
        if let Some(ode) = &self.ode {
            let _ = writeln!(out, "({}) m(x) + ({}) m'(x) = 0", ode.a, ode.b);
        }
        let _ = writeln!(out, "matches the closed-form equation: {}", if self.matches_oracle { "yes" } else { "no" });
        out
    }
}

impl Artifact for FullArtifact {
    fn text(&self) -> String {
        let mut out = render_polys(&self.polynomials);
        let _ = writeln!(out, "F(w) = {}", self.f.render("w"));
        let _ = writeln!(out, "Fbar(w) = {}", self.fbar.render("w"));
        let _ = writeln!(out, "ansatz: {}", self.ansatz.relation);
        let _ = writeln!(out, "change of variable: {}", self.ansatz.z_of_w);
        let _ = writeln!(out, "G(z) = {}", self.g.render("z"));
        let _ = writeln!(out, "{}", self.guess.line());
        let _ = writeln!(out, "closed form: {}", self.closed_form);
        out += &rows_table(&self.closed_form_rows);
        let _ = writeln!(out, "G(z) = G_ref(z/2) termwise: {}", if self.reference_match { "PASS" } else { "FAIL" });
        let _ = writeln!(out, "verdict: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }

    fn code(&self) -> i32 {
        if self.pass {
            exit::OK
        } else {
            exit::MISMATCH
        }
    }
}

fn emit<A: Artifact>(a: &A, format: Format, log: Vec<String>) -> CliResult<StageOutput> {
    let artifact = match format {
        Format::Text => a.text(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(a).map_err(|e| CliError::internal(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    Ok(StageOutput { artifact, code: a.code(), log })
}

/// Runs one stage. Verification mismatches come back as an artifact with
/// exit code 4; every other failure is an `Err`.
pub fn run_stage(cfg: &JobConfig) -> CliResult<StageOutput> {
    run_stage_with(cfg, Cache::new(&cfg.cache_dir))
}

pub fn run_stage_with(cfg: &JobConfig, cache: Cache) -> CliResult<StageOutput> {
    let p = &cfg.params;
    let mut ctx = Ctx { cache, log: Vec::new() };
    let f = cfg.format;
    match cfg.stage {
        Stage::Brute => {
            let a = brute(&mut ctx, p)?;
            emit(&a, f, ctx.log)
        }
        Stage::Zseries => {
            let a = zseries(&mut ctx, p)?;
            emit(&a, f, ctx.log)
        }
        Stage::IsingPolys => {
            let a = ising_polys(&mut ctx, order_arg(p)?)?;
            emit(&a, f, ctx.log)
        }
        Stage::AssembleF => {
            let a = assemble(&mut ctx, order_arg(p)?)?;
            emit(&a, f, ctx.log)
        }
        Stage::GuessG => {
            let a = guess_g(&mut ctx, order_arg(p)?, &change_of_variable(p)?)?;
            emit(&a, f, ctx.log)
        }
        Stage::VerifyOnsager => {
            let a = verify(&mut ctx, order_arg(p)?, &change_of_variable(p)?)?;
            emit(&a, f, ctx.log)
        }
        Stage::Magnetize => {
            let a = magnetize(&mut ctx, p)?;
            emit(&a, f, ctx.log)
        }
        Stage::Relation => {
            let a = relation(&mut ctx, p)?;
            emit(&a, f, ctx.log)
        }
        Stage::FullDerivation => {
            let a = full(&mut ctx, order_arg(p)?, &change_of_variable(p)?)?;
            emit(&a, f, ctx.log)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(stage: Stage, params: Params, dir: &std::path::Path) -> JobConfig {
        JobConfig { stage, params, cache_dir: dir.to_path_buf(), format: Format::Json }
    }

    #[test]
    fn nonstandard_c_needs_the_override() {
        let dir = tempfile::tempdir().unwrap();
        let params = Params { c: Some("3".into()), order: Some(8), ..Default::default() };
        let err = run_stage(&job(Stage::GuessG, params.clone(), dir.path())).unwrap_err();
        assert_eq!(err.code, exit::USAGE);
        let params = Params { allow_nonstandard_c: true, ..params };
        let out = run_stage(&job(Stage::VerifyOnsager, params, dir.path())).unwrap();
        assert_eq!(out.code, exit::MISMATCH);
        let params = Params { c: Some("2".into()), order: Some(8), ..Default::default() };
        assert_eq!(run_stage(&job(Stage::VerifyOnsager, params, dir.path())).unwrap().code, exit::OK);
    }

    #[test]
    fn argument_errors_map_to_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let code = |stage, params| run_stage(&job(stage, params, dir.path())).unwrap_err().code;
        assert_eq!(code(Stage::Zseries, Params::default()), exit::USAGE);
        assert_eq!(code(Stage::IsingPolys, Params { order: Some(7), ..Default::default() }), exit::USAGE);
        assert_eq!(code(Stage::IsingPolys, Params { order: Some(26), ..Default::default() }), exit::RESOURCE);
        let big = Params { n1: Some(6), n2: Some(6), ..Default::default() };
        assert_eq!(code(Stage::Brute, big), exit::RESOURCE);
        assert_eq!(code(Stage::FullDerivation, Params { order: Some(10), ..Default::default() }), exit::USAGE);
        assert_eq!(code(Stage::Relation, Params { precision: Some(1), ..Default::default() }), exit::USAGE);
    }

    #[test]
    fn downstream_stages_reuse_upstream_entries() {
        let dir = tempfile::tempdir().unwrap();
        let params = Params { order: Some(8), ..Default::default() };
        let first = run_stage(&job(Stage::AssembleF, params.clone(), dir.path())).unwrap();
        assert!(first.log.iter().any(|l| l.starts_with("cache miss: ising-polys")));
        let out = run_stage(&job(Stage::GuessG, params, dir.path())).unwrap();
        assert!(out.log.iter().any(|l| l == "cache hit: assemble-f|order=8"), "{:?}", out.log);
    }
}
