use std::collections::BTreeSet;
use std::path::PathBuf;

use causal_kernels::adiabatic::decompose::{decompose_1d, Distribution1d, GaussianTest1d};
use causal_kernels::adiabatic::infrared::{
    classify_contribution, ir_l2_probe, psi_int_refinement, Contribution, PairingRule, PhotonTest, ProbeRule, PsiIntKernel,
};
use causal_kernels::adiabatic::{chain_family, ChainQuadrature, ChainSpec, RelativeRule, SpinorTest, VerdictRule};
use causal_kernels::causal::{
    singularity_degree_fit, split_retarded_advanced, vacuum_polarization_c0, vacuum_polarization_closed_form, CausalDistribution,
    Normalization, Prescription,
};
use causal_kernels::error::Error;
use causal_kernels::fock::SpinMomentumGrid;
use causal_kernels::gelfand::{
    conjugation_study, h1_spectrum, h1_spectrum_extrapolated, norm_sq, sphere_area, u_map, RadialExpression, RadialGrid,
};
use causal_kernels::kernels::TestFunctionSpec;
use causal_kernels::wick::dsl::{parse_monomial, SpeciesBinding};
use causal_kernels::wick::{composition_defect, polynomial_kernels, wick_decompose_product};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::report::{CliError, Run, Table};
use crate::Command;

pub struct Context {
    /// Directory that relative grid references resolve against.
    pub base: PathBuf,
    pub seed_override: Option<u64>,
    pub verbose: bool,
}

impl Context {
    fn progress(&self, command: &str, name: &str) {
        if self.verbose {
            eprintln!("{command}: {name}");
        }
    }
}

pub fn dispatch(command: Command, bytes: &[u8], ctx: &Context) -> Result<Run, CliError> {
    match command {
        Command::WickCheck => wick_check(parse(command, bytes)?, ctx),
        Command::Split => split(parse(command, bytes)?, ctx),
        Command::Vacpol => vacpol(parse(command, bytes)?, ctx),
        Command::Adiabatic => adiabatic(parse(command, bytes)?, ctx),
        Command::IrProbe => ir_probe(parse(command, bytes)?, ctx),
        Command::GelfandCheck => gelfand_check(parse(command, bytes)?, ctx),
        Command::Decompose1d => decompose(parse(command, bytes)?, ctx),
    }
}

fn parse<T: DeserializeOwned>(command: Command, bytes: &[u8]) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|source| CliError::Schema { command: command.name(), source })
}

/// Scenario list shared by the commands without extra top-level fields.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Batch<S> {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "Vec::new")]
    scenarios: Vec<S>,
}

fn check_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    for name in names {
        let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !ok {
            return Err(CliError::Input(format!("scenario name {name:?} must be non-empty ASCII letters, digits, '-', '_' or '.'")));
        }
        if !seen.insert(name) {
            return Err(CliError::Input(format!("duplicate scenario name {name:?}")));
        }
    }
    Ok(())
}

fn fail(scenario: &str, source: Error) -> CliError {
    match source {
        Error::Singular(_) => CliError::Singular { scenario: scenario.into(), source },
        _ => CliError::Library { scenario: scenario.into(), source },
    }
}

/// Refusals are outcomes worth reporting; every other library error aborts the run.
fn refused(scenario: &str, source: Error) -> Result<Value, CliError> {
    match source {
        Error::Refused(msg) => Ok(json!({ "name": scenario, "outcome": "refused", "reason": msg })),
        other => Err(fail(scenario, other)),
    }
}

fn seed_of(ctx: &Context, config: Option<u64>) -> u64 {
    ctx.seed_override.or(config).unwrap_or(0)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialise")
}

// ---- wick-check

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WickConfig {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    grid: Option<Value>,
    /// Path of a grid file, relative to the config.
    #[serde(default)]
    grid_ref: Option<PathBuf>,
    #[serde(default)]
    binding: SpeciesBinding,
    #[serde(default = "Vec::new")]
    scenarios: Vec<WickScenario>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WickScenario {
    name: String,
    left: String,
    right: String,
    left_tests: Vec<TestFunctionSpec>,
    right_tests: Vec<TestFunctionSpec>,
    #[serde(default = "half")]
    epsilon: f64,
    #[serde(default = "default_sectors")]
    n_max: Vec<usize>,
    #[serde(default = "wick_tolerance")]
    tolerance: f64,
}

fn half() -> f64 {
    0.5
}
fn default_sectors() -> Vec<usize> {
    vec![2, 3]
}
fn wick_tolerance() -> f64 {
    1e-10
}

fn load_grid(config: &WickConfig, ctx: &Context) -> Result<SpinMomentumGrid, CliError> {
    match (&config.grid, &config.grid_ref) {
        (Some(_), Some(_)) => Err(CliError::Input("give either grid or grid_ref, not both".into())),
        (Some(doc), None) => SpinMomentumGrid::from_json(&doc.to_string()).map_err(|e| CliError::Input(format!("grid: {e}"))),
        (None, Some(path)) => {
            let path = ctx.base.join(path);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::MissingGrid { path: path.clone(), reason: e.to_string() })?;
            SpinMomentumGrid::from_json(&text).map_err(|e| CliError::MissingGrid { path, reason: e.to_string() })
        }
        (None, None) => Err(CliError::Input("wick-check needs a grid or a grid_ref".into())),
    }
}

fn wick_check(config: WickConfig, ctx: &Context) -> Result<Run, CliError> {
    check_names(config.scenarios.iter().map(|s| s.name.as_str()))?;
    let mut run = Run { seed: seed_of(ctx, config.seed), ..Run::default() };
    if config.scenarios.is_empty() {
        return Ok(run);
    }
    let grid = load_grid(&config, ctx)?;
    for s in &config.scenarios {
        ctx.progress("wick-check", &s.name);
        let e = |err| fail(&s.name, err);
        let left = polynomial_kernels(&grid, &parse_monomial(&s.left, &grid, &config.binding).map_err(e)?, &s.left_tests).map_err(e)?;
        let right =
            polynomial_kernels(&grid, &parse_monomial(&s.right, &grid, &config.binding).map_err(e)?, &s.right_tests).map_err(e)?;
        let product = wick_decompose_product(&grid, &left, &right, s.epsilon).map_err(e)?;
        let mut table = Table::new(&s.name, &["n_max", "defect"]);
        let mut defects = vec![];
        for &n in &s.n_max {
            let d = composition_defect(&grid, &left, &right, &product, n).map_err(e)?;
            table.push(&[n as f64, d]);
            defects.push(json!({ "n_max": n, "defect": d }));
        }
        let worst = defects.iter().filter_map(|d| d["defect"].as_f64()).fold(0.0, f64::max);
        run.scenarios.push(json!({
            "name": s.name,
            "outcome": "ok",
            "left_kernels": left.len(),
            "right_kernels": right.len(),
            "product_kernels": product.len(),
            "defects": defects,
            "tolerance": s.tolerance,
            "passed": worst < s.tolerance,
        }));
        run.tables.push(table);
    }
    Ok(run)
}

// ---- split

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitScenario {
    name: String,
    distribution: CausalDistribution,
    /// Extra normalization coefficients in powers of `p²`.
    #[serde(default)]
    normalization: Vec<f64>,
    p_sq: Vec<f64>,
    #[serde(default = "one")]
    p0: f64,
}

fn one() -> f64 {
    1.0
}

fn split(config: Batch<SplitScenario>, ctx: &Context) -> Result<Run, CliError> {
    check_names(config.scenarios.iter().map(|s| s.name.as_str()))?;
    let mut run = Run { seed: seed_of(ctx, config.seed), ..Run::default() };
    for s in &config.scenarios {
        ctx.progress("split", &s.name);
        let e = |err| fail(&s.name, err);
        let parts = match split_retarded_advanced(&s.distribution, &s.normalization) {
            Ok(p) => p,
            Err(err) => {
                run.scenarios.push(refused(&s.name, err)?);
                continue;
            }
        };
        let fit = singularity_degree_fit(&s.distribution).map_err(e)?;
        let mut table = Table::new(&s.name, &["p_sq", "retarded_re", "retarded_im", "advanced_re", "advanced_im", "jump_re", "jump_im"]);
        let mut worst: f64 = 0.0;
        for &x in &s.p_sq {
            let r = parts.retarded.eval(x, s.p0).map_err(e)?;
            let a = parts.advanced.eval(x, s.p0).map_err(e)?;
            let d = s.distribution.discontinuity(x, s.p0);
            worst = worst.max((r - a - d).norm());
            table.push(&[x, r.re, r.im, a.re, a.im, d.re, d.im]);
        }
        run.scenarios.push(json!({
            "name": s.name,
            "outcome": "ok",
            "omega": parts.omega,
            "degree_fit": to_value(&fit),
            "normalization": parts.retarded.normalization,
            "max_jump_residual": worst,
        }));
        run.tables.push(table);
    }
    Ok(run)
}

// ---- vacpol

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VacpolScenario {
    name: String,
    #[serde(default = "one")]
    mass: f64,
    normalization: Normalization,
    p_sq: Vec<f64>,
    #[serde(default = "causal")]
    prescription: Prescription,
    #[serde(default = "one")]
    p0: f64,
}

fn causal() -> Prescription {
    Prescription::Causal
}

fn vacpol(config: Batch<VacpolScenario>, ctx: &Context) -> Result<Run, CliError> {
    check_names(config.scenarios.iter().map(|s| s.name.as_str()))?;
    let mut run = Run { seed: seed_of(ctx, config.seed), ..Run::default() };
    for s in &config.scenarios {
        ctx.progress("vacpol", &s.name);
        let e = |err| fail(&s.name, err);
        let mut table = Table::new(&s.name, &["p_sq", "re", "im"]);
        let rows: Result<Vec<_>, _> =
            s.p_sq.iter().map(|&x| vacuum_polarization_closed_form(x, s.mass, s.prescription, s.p0, &s.normalization)).collect();
        let rows = match rows {
            Ok(r) => r,
            Err(err) => {
                run.scenarios.push(refused(&s.name, err)?);
                continue;
            }
        };
        for (x, v) in s.p_sq.iter().zip(&rows) {
            table.push(&[*x, v.re, v.im]);
        }
        run.scenarios.push(json!({
            "name": s.name,
            "outcome": "ok",
            "mass": s.mass,
            "normalization": to_value(&s.normalization),
            "c0": vacuum_polarization_c0(s.mass).map_err(e)?,
            "rows": rows.len(),
        }));
        run.tables.push(table);
    }
    Ok(run)
}

// ---- adiabatic

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Expectation {
    Converged,
    Diverged,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdiabaticScenario {
    name: String,
    chain: ChainSpec,
    xi1: SpinorTest,
    xi2: SpinorTest,
    test_function: TestFunctionSpec,
    #[serde(default)]
    quadrature: Option<ChainQuadrature>,
    #[serde(default)]
    verdict_rule: VerdictRule,
    #[serde(default)]
    expect: Option<Expectation>,
}

fn adiabatic(config: Batch<AdiabaticScenario>, ctx: &Context) -> Result<Run, CliError> {
    check_names(config.scenarios.iter().map(|s| s.name.as_str()))?;
    let mut run = Run { seed: seed_of(ctx, config.seed), ..Run::default() };
    for s in &config.scenarios {
        ctx.progress("adiabatic", &s.name);
        let quad = s.quadrature.clone().unwrap_or(ChainQuadrature::Relative(RelativeRule::standard()));
        let family = chain_family(&s.chain, &s.xi1, &s.xi2, &s.test_function, &quad, &s.verdict_rule).map_err(|e| fail(&s.name, e))?;
        let converged = family.verdict.is_converged();
        let met = match s.expect {
            None => None,
            Some(want) => Some((want == Expectation::Converged) == converged),
        };
        if s.expect == Some(Expectation::Converged) && !converged {
            run.expectation_failed = true;
        }
        let mut table = Table::new(&s.name, &["epsilon", "re", "im"]);
        for (eps, v) in family.epsilons.iter().zip(&family.values) {
            table.push(&[*eps, v[0], v[1]]);
        }
        run.scenarios.push(json!({
            "name": s.name,
            "outcome": "ok",
            "chain": to_value(&s.chain),
            "quadrature": to_value(&quad),
            "family": to_value(&family),
            "expectation_met": met,
        }));
        run.tables.push(table);
    }
    Ok(run)
}

// ---- ir-probe

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairingBlock {
    photon: PhotonTest,
    electron: SpinorTest,
    #[serde(default)]
    rule: Option<PairingRule>,
    #[serde(default = "two")]
    levels: usize,
}

fn two() -> usize {
    2
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IrScenario {
    name: String,
    contribution: Contribution,
    cutoffs: Vec<f64>,
    #[serde(default)]
    probe_rule: Option<ProbeRule>,
    #[serde(default = "max_exponent")]
    max_exponent: f64,
    /// Smeared pairing refinement, only for the Dirac contribution.
    #[serde(default)]
    pairing: Option<PairingBlock>,
}

fn max_exponent() -> f64 {
    0.05
}

fn ir_probe(config: Batch<IrScenario>, ctx: &Context) -> Result<Run, CliError> {
    check_names(config.scenarios.iter().map(|s| s.name.as_str()))?;
    let mut run = Run { seed: seed_of(ctx, config.seed), ..Run::default() };
    for s in &config.scenarios {
        ctx.progress("ir-probe", &s.name);
        let e = |err| fail(&s.name, err);
        let kernel = s.contribution.kernel().map_err(e)?;
        let report = ir_l2_probe(kernel.as_ref(), &s.cutoffs, &s.probe_rule.unwrap_or_else(ProbeRule::standard)).map_err(e)?;
        let pairing = match (&s.pairing, &s.contribution) {
            (None, _) => None,
            (Some(p), Contribution::FirstOrderDirac { mass, branch, phi }) => {
                let k = PsiIntKernel::new(*branch, *mass, phi.clone()).map_err(e)?;
                let rule = p.rule.unwrap_or_else(PairingRule::standard);
                Some(psi_int_refinement(&k, &p.photon, &p.electron, &rule, p.levels).map_err(e)?)
            }
            (Some(_), _) => {
                return Err(CliError::Input(format!("scenario {}: a pairing block needs the first_order_dirac contribution", s.name)))
            }
        };
        let mut table = Table::new(&s.name, &["cutoff", "norm_sq"]);
        for (c, n) in report.cutoffs.iter().zip(&report.norms) {
            table.push(&[*c, *n]);
        }
        run.scenarios.push(json!({
            "name": s.name,
            "outcome": "ok",
            "probe": to_value(&report),
            "class": to_value(&classify_contribution(&report, s.max_exponent)),
            "pairing": pairing.as_ref().map(to_value),
        }));
        run.tables.push(table);
    }
    Ok(run)
}

// ---- gelfand-check

#[derive(Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
enum GelfandScenario {
    /// `‖U f‖²` against `∫|f|² dt` for `f(t) = exp(−(t − centre)²/(2 width²))`.
    Isometry { name: String, n: u32, r_max: f64, points: usize, centre: f64, width: f64 },
    /// Residual of a radial expression against the discrete conjugated
    /// oscillator on `g(r) = exp(−(r − centre)²)`.
    Conjugation { name: String, operator: RadialExpression, r_max: f64, window: (f64, f64), points: Vec<usize>, centre: f64 },
    /// Lowest eigenvalues of the one-dimensional oscillator.
    Spectrum {
        name: String,
        half_width: f64,
        intervals: usize,
        count: usize,
        #[serde(default)]
        extrapolate: bool,
    },
}

impl GelfandScenario {
    fn name(&self) -> &str {
        match self {
            GelfandScenario::Isometry { name, .. }
            | GelfandScenario::Conjugation { name, .. }
            | GelfandScenario::Spectrum { name, .. } => name,
        }
    }
}

fn gelfand_check(config: Batch<GelfandScenario>, ctx: &Context) -> Result<Run, CliError> {
    check_names(config.scenarios.iter().map(|s| s.name()))?;
    let mut run = Run { seed: seed_of(ctx, config.seed), ..Run::default() };
    for s in &config.scenarios {
        let name = s.name();
        ctx.progress("gelfand-check", name);
        let e = |err| fail(name, err);
        match s {
            GelfandScenario::Isometry { n, r_max, points, centre, width, .. } => {
                let grid = RadialGrid::<f64>::uniform(*n, *r_max, *points).map_err(e)?;
                let f = |t: f64| (-(t - centre).powi(2) / (2.0 * width * width)).exp();
                let image = u_map(&grid, f).map_err(e)?;
                let norm = norm_sq(&image, &grid.volume).map_err(e)?;
                let want = sphere_area::<f64>(*n) * width * std::f64::consts::PI.sqrt();
                let mut table = Table::new(name, &["r", "t", "u_f"]);
                for ((r, t), v) in grid.r.iter().zip(&grid.t).zip(&image) {
                    table.push(&[*r, *t, *v]);
                }
                run.scenarios.push(json!({
                    "name": name,
                    "outcome": "ok",
                    "norm_sq": norm,
                    "expected": want,
                    "relative_error": (norm - want).abs() / want,
                }));
                run.tables.push(table);
            }
            GelfandScenario::Conjugation { operator, r_max, window, points, centre, .. } => {
                let g = |r: f64| (-(r - centre).powi(2)).exp();
                let study = conjugation_study(*operator, g, *r_max, *window, points).map_err(e)?;
                let mut table = Table::new(name, &["step", "max_residual"]);
                for (h, res) in study.steps.iter().zip(&study.residuals) {
                    table.push(&[*h, *res]);
                }
                run.scenarios.push(json!({ "name": name, "outcome": "ok", "operator": to_value(operator), "study": to_value(&study) }));
                run.tables.push(table);
            }
            GelfandScenario::Spectrum { half_width, intervals, count, extrapolate, .. } => {
                let values = if *extrapolate {
                    h1_spectrum_extrapolated(*half_width, *intervals, *count)
                } else {
                    h1_spectrum(*half_width, *intervals, *count)
                }
                .map_err(e)?;
                let mut table = Table::new(name, &["k", "eigenvalue", "exact", "error"]);
                let mut worst: f64 = 0.0;
                for (k, v) in values.iter().enumerate() {
                    let exact = 2.0 * k as f64 + 2.0;
                    worst = worst.max((v - exact).abs());
                    table.push(&[k as f64, *v, exact, v - exact]);
                }
                run.scenarios.push(json!({
                    "name": name,
                    "outcome": "ok",
                    "eigenvalues": values,
                    "max_error": worst,
                    "extrapolated": extrapolate,
                }));
                run.tables.push(table);
            }
        }
    }
    Ok(run)
}

// ---- decompose-1d

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecomposeConfig {
    #[serde(default)]
    seed: Option<u64>,
    /// Number of seeded random Gaussian pairs to add to the scenarios.
    #[serde(default)]
    random_pairs: usize,
    #[serde(default = "Vec::new")]
    scenarios: Vec<DecomposeScenario>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecomposeScenario {
    name: String,
    distribution: Distribution1d,
    test: GaussianTest1d,
}

fn decompose(config: DecomposeConfig, ctx: &Context) -> Result<Run, CliError> {
    let seed = seed_of(ctx, config.seed);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut gauss = || GaussianTest1d {
        amplitude: [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
        centre: rng.gen_range(-2.0..2.0),
        width: rng.gen_range(0.3..2.0),
    };
    let mut scenarios: Vec<DecomposeScenario> = config.scenarios;
    for i in 0..config.random_pairs {
        let (g, f) = (gauss(), gauss());
        scenarios.push(DecomposeScenario { name: format!("random-{i}"), distribution: Distribution1d::Gaussian(g), test: f });
    }
    check_names(scenarios.iter().map(|s| s.name.as_str()))?;
    let mut run = Run { seed, ..Run::default() };
    let mut table = Table::new("decompose-1d", &["index", "direct_re", "direct_im", "spectral_re", "spectral_im", "defect"]);
    for (i, s) in scenarios.iter().enumerate() {
        ctx.progress("decompose-1d", &s.name);
        match decompose_1d(&s.distribution, &s.test) {
            Ok(d) => {
                table.push(&[i as f64, d.direct[0], d.direct[1], d.spectral[0], d.spectral[1], d.defect]);
                run.scenarios.push(json!({ "name": s.name, "outcome": "ok", "index": i, "decomposition": to_value(&d) }));
            }
            Err(err) => run.scenarios.push(refused(&s.name, err)?),
        }
    }
    if !scenarios.is_empty() {
        run.tables.push(table);
    }
    Ok(run)
}
