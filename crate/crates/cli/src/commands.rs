//! Subcommand implementations. Each reads its keys through a [`Resolver`],
//! runs, and writes its outputs into the run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use entropic_barriers::experiments::*;
use entropic_barriers::linalg::{norm, uniform_radius_point};
use entropic_barriers::measures::*;
use entropic_barriers::priors::PriorSpec;
use entropic_barriers::radial_model::{read_dataset, simulate_dataset, write_dataset, GSpec, RadialLikelihood, RegressionDataset, WParams};
use entropic_barriers::rng::{derive_seed, rng_from, streams};
use entropic_barriers::samplers::{run_chain, KernelConfig, KernelKind, Mala, MarkovKernel, Pcn, Posterior, RadialTarget};
use entropic_barriers::spiked_tensor::*;
use entropic_barriers::Error;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, Resolver};
use crate::svg::{render, PlotKind};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric fault: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_numeric_fault() => CliError::Numeric(e.to_string()),
            Error::Io(e) => CliError::Io(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Run directory, master seed and the list of files written so far.
pub struct Ctx {
    pub seed: u64,
    pub out: PathBuf,
    pub outputs: Vec<String>,
}

impl Ctx {
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    pub fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let p = self.path(name);
        std::fs::write(p, text)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, v: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// CSV text from a header and rows of preformatted fields.
fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn domain(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

struct Radial {
    model: RadialModelConfig,
    prior: PriorSpec,
    design: IsotropicHardnessDesign,
    params: HardnessParams,
}

fn design(r: &mut Resolver) -> CliResult<(IsotropicHardnessDesign, HardnessParams)> {
    let d0 = IsotropicHardnessDesign::default();
    let d = IsotropicHardnessDesign {
        kappa: r.f64("design.kappa", d0.kappa)?,
        nu: r.f64("design.nu", d0.nu)?,
        rho: r.f64("design.rho", d0.rho)?,
        sigma: r.f64("design.sigma", d0.sigma)?,
        eps: r.f64("design.eps", d0.eps)?,
        safety: r.f64("design.safety", d0.safety)?,
        margin: r.f64("design.margin", d0.margin)?,
        plateau: r.f64("design.plateau", d0.plateau)?,
    };
    let p = d.solve()?;
    Ok((d, p))
}

fn prior(r: &mut Resolver, dim: usize) -> CliResult<PriorSpec> {
    let p = match r.choice("prior.kind", &["isotropic", "alpha-regular"])?.as_str() {
        "isotropic" => PriorSpec::isotropic(dim)?,
        _ => PriorSpec::alpha_regular(dim, r.f64("prior.alpha", 1.0)?, r.usize("prior.d", 1)?)?,
    };
    Ok(p.with_rescale(r.f64("prior.rescale", 1.0)?)?)
}

fn w_params(r: &mut Resolver, design_w: WParams, n: usize) -> CliResult<WParams> {
    Ok(match r.choice("w.mode", &["design", "explicit"])?.as_str() {
        "design" => design_w,
        _ => {
            let (slope, knee, plateau, rho) = (r.req_f64("w.slope")?, r.req_f64("w.knee")?, r.req_f64("w.plateau")?, r.req_f64("w.rho")?);
            let b = r.f64("w.b", 0.0)?;
            if b > 0.0 {
                WParams::scaled(slope, knee, plateau, rho, b, n)?
            } else {
                WParams::new(slope, knee, plateau, rho)?
            }
        }
    })
}

fn radial(r: &mut Resolver, seed: u64) -> CliResult<Radial> {
    let (design, params) = design(r)?;
    let n = r.usize("model.n", 128)?;
    let dim = r.usize("model.dim", 128)?;
    let design_dim = r.usize("model.design_dim", 1)?;
    let g = GSpec::parse(&r.choice("model.g", &["constant-one", "affine"])?)?;
    let data_seed = r.u64("model.data_seed", seed)?;
    let w = w_params(r, params.w, n)?;
    let prior = prior(r, dim)?;
    Ok(Radial { model: RadialModelConfig { n, dim, design_dim, w, g, data_seed }, prior, design, params })
}

fn kernel(r: &mut Resolver, beta_default: f64, seed: u64) -> CliResult<KernelConfig> {
    let kind = match r.choice("kernel.kind", &["pcn", "mala"])?.as_str() {
        "pcn" => KernelKind::Pcn { beta: r.f64("kernel.beta", beta_default)? },
        _ => KernelKind::Mala { gamma: r.f64("kernel.gamma", 1e-6)? },
    };
    Ok(KernelConfig::new(kind, seed)?)
}

pub fn simulate(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let rad = radial(r, ctx.seed)?;
    let radius = r.f64("model.theta0_radius", 0.0)?;
    r.finish()?;
    let m = rad.model;
    let mut theta0 = vec![0.0; m.dim];
    theta0[0] = radius;
    let data = simulate_dataset(m.n, m.dim, m.design_dim, m.g, &theta0, &m.w, m.data_seed)?;
    let p = ctx.path("dataset.csv");
    ctx.outputs.push("dataset.json".into());
    write_dataset(&p, &data, &m.w, m.g)?;
    Ok(())
}

pub fn run_chain_cmd(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let (d, params) = design(r)?;
    // either a saved dataset or a freshly simulated one
    let (data, w, g, prior): (RegressionDataset, WParams, GSpec, PriorSpec) = match r.opt_str("model.data")? {
        Some(path) => {
            let (data, meta) = read_dataset(Path::new(&path))?;
            let p = prior(r, data.dim)?;
            (data, meta.w, meta.g, p)
        }
        None => {
            let n = r.usize("model.n", 128)?;
            let dim = r.usize("model.dim", 128)?;
            let design_dim = r.usize("model.design_dim", 1)?;
            let g = GSpec::parse(&r.choice("model.g", &["constant-one", "affine"])?)?;
            let data_seed = r.u64("model.data_seed", ctx.seed)?;
            let w = w_params(r, params.w, n)?;
            let p = prior(r, dim)?;
            let m = RadialModelConfig { n, dim, design_dim, w, g, data_seed };
            (m.simulate()?, w, g, p)
        }
    };
    let kern = kernel(r, params.beta_cap, ctx.seed)?;
    let steps = r.usize("chain.steps", 10_000)?;
    let init_radius = r.f64("chain.init_radius", d.sigma + 0.5 * d.eps)?;
    let stop_radius = r.f64("chain.stop_radius", 0.0)?;
    r.finish()?;
    if prior.dim() != data.dim {
        return Err(domain(format!("prior dimension {} differs from data dimension {}", prior.dim(), data.dim)));
    }
    let target = RadialTarget { lik: RadialLikelihood::new(&data, g), w };
    let x0 = uniform_radius_point(data.dim, init_radius, init_radius, &mut rng_from(ctx.seed, streams::INIT, 0));
    let stop = move |x: &[f64]| norm(x) <= stop_radius;
    let stop_rule: Option<&(dyn Fn(&[f64]) -> bool + Sync)> = if stop_radius > 0.0 { Some(&stop) } else { None };
    let radius = |x: &[f64]| norm(x);
    let chain_seed = derive_seed(ctx.seed, streams::CHAIN, 0);
    let k: Box<dyn MarkovKernel> = match kern.kind {
        KernelKind::Pcn { beta } => Box::new(Pcn { target, prior, beta }),
        KernelKind::Mala { gamma } => Box::new(Mala { target: Posterior { lik: target, prior }, gamma }),
        KernelKind::SphereRwmh { .. } => unreachable!("not offered for the radial model"),
    };
    let tr = run_chain(k.as_ref(), x0, steps, chain_seed, stop_rule, &radius, 0)?;
    let mut buf = Vec::new();
    tr.write_csv(&mut buf)?;
    ctx.write("trace.csv", &String::from_utf8(buf).expect("csv is utf-8"))?;
    let (lo, hi) = tr.summaries().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    let summary = json!({
        "steps": tr.records.len(),
        "acceptance_rate": tr.acceptance_rate(),
        "initial_radius": tr.initial_summary,
        "final_radius": norm(&tr.final_state),
        "min_radius": lo,
        "max_radius": hi,
        "hitting_time": tr.hitting_time,
    });
    ctx.write_json("chain.json", &summary)
}

pub fn hitting_time(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let rad = radial(r, ctx.seed)?;
    let (p, d) = (rad.params, rad.design);
    let kern = kernel(r, p.beta_cap, ctx.seed)?;
    let cold = d.sigma + 0.5 * d.eps;
    let cfg = HittingConfig {
        init_lo: r.f64("hitting.init_lo", cold)?,
        init_hi: r.f64("hitting.init_hi", cold)?,
        target_radius: r.f64("hitting.target_radius", p.s)?,
        budget: r.usize("hitting.budget", 100_000)?,
        n_replicas: r.usize("hitting.replicas", 32)?,
        eta: r.f64("hitting.eta", p.eta)?,
        inner_cells: r.usize("hitting.inner_cells", 2000)?,
        outer_cells: r.usize("hitting.outer_cells", 500)?,
        n_mc: r.usize("hitting.n_mc", 100_000)?,
        stop_at_target: r.bool("hitting.stop_at_target", true)?,
    };
    r.finish()?;
    let rep = hitting_time_experiment(&rad.model, &rad.prior, &kern, &cfg, ctx.seed)?;
    ctx.write_json("report.json", &rep)?;
    let rows = rep.replicas.iter().map(|o| {
        vec![
            o.index.to_string(),
            o.hitting_time.to_string(),
            o.censored.to_string(),
            num(o.initial_radius),
            num(o.min_radius),
            num(o.max_radius),
            num(o.final_radius),
            num(o.acceptance_rate),
            o.step_exceedances.to_string(),
            o.fault.clone().unwrap_or_default().replace(',', ";"),
        ]
    });
    let header = ["replica", "hitting_time", "censored", "initial_radius", "min_radius", "max_radius", "final_radius", "acceptance_rate", "step_exceedances", "fault"];
    ctx.write("replicas.csv", &csv_text(&header, rows))?;
    let points = 50.min(cfg.budget);
    let ks: Vec<usize> = (0..=points).map(|i| i * cfg.budget / points).collect();
    let surv = rep.survival(&ks);
    let text = csv_text(&["k", "survival"], ks.iter().zip(&surv).map(|(k, s)| vec![k.to_string(), num(*s)]));
    ctx.write("survival.csv", &text)?;
    let svg = render(PlotKind::Survival, &text).map_err(CliError::Config)?;
    ctx.write("survival.svg", &svg)
}

pub fn free_entropy(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    match r.choice("curve.kind", &["averaged", "radial"])?.as_str() {
        "averaged" => {
            let lambda = r.req_f64("curve.lambda")?;
            let p = r.usize("curve.p", 3)?;
            let q_min = r.f64("curve.q_min", if p % 2 == 1 { -0.99 } else { 0.0 })?;
            let q_max = r.f64("curve.q_max", 0.99)?;
            let points = r.usize("curve.points", 1999)?;
            r.finish()?;
            if points < 3 || !(q_min < q_max) {
                return Err(domain("curve needs q_min < q_max and at least 3 points"));
            }
            let grid: Vec<f64> = (0..points).map(|i| q_min + (q_max - q_min) * i as f64 / (points - 1) as f64).collect();
            let c = averaged_free_entropy_curve(lambda, p, &grid)?;
            let rows = (0..grid.len()).map(|j| vec![num(c.q[j]), num(c.f[j]), num(c.energy[j]), num(c.entropy[j])]);
            let text = csv_text(&["q", "F", "energy", "entropy"], rows);
            ctx.write("free_entropy.csv", &text)?;
            let crit = c.critical.iter().map(|cp| vec![num(cp.q), num(cp.f), format!("{:?}", cp.kind).to_lowercase()]);
            ctx.write("critical.csv", &csv_text(&["q", "F", "kind"], crit))?;
            let svg = render(PlotKind::Profile, &text).map_err(CliError::Config)?;
            ctx.write("free_entropy.svg", &svg)
        }
        _ => {
            let rad = radial(r, ctx.seed)?;
            let r_max = r.f64("profile.r_max", rad.model.w.plateau)?;
            let inner_radius = r.f64("profile.inner_radius", 4.0 * rad.params.s)?;
            let inner = r.usize("profile.inner_cells", 400)?;
            let outer = r.usize("profile.cells", 3000)?;
            let n_mc = r.usize("profile.n_mc", 100_000)?;
            r.finish()?;
            let data = rad.model.simulate()?;
            let lik = RadialLikelihood::new(&data, rad.model.g);
            let grid = GridSpec::piecewise(&[(0.0, inner_radius, inner), (inner_radius, r_max, outer)], true)?;
            let g = radial_grid_build(&rad.prior, &lik, &rad.model.w, &grid, n_mc, derive_seed(ctx.seed, streams::GRID, 0))?;
            let prof = free_entropy_profile(&g);
            let mut buf = Vec::new();
            prof.write_csv(&mut buf)?;
            let text = String::from_utf8(buf).expect("csv is utf-8");
            ctx.write("profile.csv", &text)?;
            let (maxima, minima) = prof.local_extrema();
            let ext = maxima.iter().map(|j| (j, "max")).chain(minima.iter().map(|j| (j, "min")));
            let mut ext: Vec<(usize, &str)> = ext.map(|(j, k)| (*j, k)).collect();
            ext.sort();
            ctx.write("critical.csv", &csv_text(&["r", "F_N", "kind"], ext.iter().map(|(j, k)| vec![num(prof.r[*j]), num(prof.f_n[*j]), k.to_string()])))?;
            let svg = render(PlotKind::Profile, &text).map_err(CliError::Config)?;
            ctx.write("profile.svg", &svg)
        }
    }
}

pub fn small_ball(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    match r.choice("smallball.mode", &["scaling", "isotropic-bound"])?.as_str() {
        "scaling" => {
            let alpha = r.f64("smallball.alpha", 1.0)?;
            let d = r.usize("smallball.d", 1)?;
            let rescale = r.f64("smallball.rescale", 1.0)?;
            let kappa = r.f64("smallball.kappa", 1.0)?;
            let default_z: Vec<f64> = (0..7).map(|k| 0.5 * 2f64.powf(k as f64 / 3.0)).collect();
            let z = r.f64_list("smallball.z", &default_z)?;
            let ns = r.usize_list("smallball.n", &[64])?;
            let n_mc = r.usize("smallball.n_mc", 100_000)?;
            r.finish()?;
            let base = PriorSpec::alpha_regular(1, alpha, d)?.with_rescale(rescale)?;
            let fit = smallball_scaling_fit(&base, kappa, &z, &ns, n_mc, ctx.seed)?;
            let rows = fit.points.iter().map(|p| vec![p.n.to_string(), p.dim.to_string(), num(p.z), num(p.value), num(p.stderr), num(p.chernoff_value)]);
            ctx.write("smallball.csv", &csv_text(&["n", "dim", "z", "value", "stderr", "chernoff_value"], rows))?;
            ctx.write_json("fit.json", &fit)
        }
        _ => {
            let dim = r.usize("smallball.dim", 200)?;
            let a = r.f64("smallball.a", 0.3)?;
            let points = r.usize("smallball.points", 50)?;
            r.finish()?;
            let mut rows = Vec::new();
            let mut holds = true;
            for k in 1..=points {
                let z = (1.0 - a) * k as f64 / (points + 1) as f64;
                let exact = -isotropic_ball_prob(dim, z)?.ln_prob / dim as f64;
                let bound = isotropic_smallball_lower_bound(dim, z, a)?;
                holds &= exact >= bound;
                rows.push(vec![num(z), num(exact), num(bound), num(exact - bound)]);
            }
            ctx.write("smallball.csv", &csv_text(&["z", "exact", "bound", "margin"], rows))?;
            ctx.write_json("bound.json", &json!({ "dim": dim, "a": a, "points": points, "holds": holds }))
        }
    }
}

fn tensor(r: &mut Resolver, seed: u64) -> CliResult<TensorInstance> {
    let n = r.usize("tensor.n", 12)?;
    let p = r.usize("tensor.p", 3)?;
    let lambda = r.f64("tensor.lambda", 5.0)?;
    let tseed = r.u64("tensor.seed", seed)?;
    Ok(simulate_tensor(n, p, lambda, tseed)?)
}

fn bands(r: &mut Resolver, p: usize) -> CliResult<Bands> {
    Ok(Bands::new(r.f64("bands.s", 0.2)?, r.f64("bands.t", 0.6)?, p)?)
}

pub fn bands_cmd(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let inst = tensor(r, ctx.seed)?;
    let b = bands(r, inst.p)?;
    let n_mc = r.usize("bands.n_mc", 20_000)?;
    let save = r.bool("tensor.save", false)?;
    r.finish()?;
    let m = posterior_band_masses(&inst, &b, n_mc, derive_seed(ctx.seed, streams::IMPORTANCE, 0))?;
    let prior = band_prior_masses(inst.n, b.s, b.t, inst.p)?;
    let rows = vec![
        vec!["start".into(), num(prior.start), num(m.start), num(m.start_stderr)],
        vec!["well".into(), num(prior.well), num(m.well), num(m.well_stderr)],
        vec!["target".into(), num(prior.target), num(m.target), num(m.target_stderr)],
    ];
    ctx.write("bands.csv", &csv_text(&["region", "prior", "posterior", "stderr"], rows))?;
    ctx.write_json("bands.json", &json!({ "bands": b, "prior": { "start": prior.start, "well": prior.well, "target": prior.target }, "posterior": m }))?;
    if save {
        let p = ctx.path("tensor.bin");
        inst.write_binary(std::io::BufWriter::new(std::fs::File::create(p)?))?;
    }
    Ok(())
}

pub fn tensor_contract(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let n = r.usize("contraction.n", 12)?;
    let p = r.usize("contraction.p", 3)?;
    let lambdas = r.f64_list("contraction.lambdas", &[0.0, 2.0, 4.0, 6.0, 8.0])?;
    let s = r.f64("contraction.s", 0.5)?;
    let n_mc = r.usize("contraction.n_mc", 20_000)?;
    let seeds = r.usize("contraction.seeds", 50)?;
    r.finish()?;
    let c = contraction_curve(n, p, &lambdas, s, n_mc, seeds, ctx.seed)?;
    let rows = c.iter().map(|pt| vec![num(pt.lambda), num(pt.mean), num(pt.stderr), num(pt.prior_mass), num(pt.min_ess)]);
    ctx.write("contraction.csv", &csv_text(&["lambda", "mean", "stderr", "prior_mass", "min_ess"], rows))?;
    ctx.write_json("contraction.json", &c)
}

pub fn bottleneck(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let inst = tensor(r, ctx.seed)?;
    let b = bands(r, inst.p)?;
    let kern = KernelConfig::new(KernelKind::SphereRwmh { step: r.f64("kernel.step", 0.05)? }, ctx.seed)?;
    let ks = r.usize_list("bottleneck.k_grid", &[0, 1, 10, 100, 1000, 10_000])?;
    let replicas = r.usize("bottleneck.replicas", 200)?;
    let n_mc = r.usize("bottleneck.n_mc", 50_000)?;
    r.finish()?;
    let rep = bottleneck_bound_check(&inst, &b, &kern, &ks, replicas, n_mc, ctx.seed)?;
    ctx.write_json("report.json", &rep)?;
    let rows = (0..ks.len()).map(|i| vec![ks[i].to_string(), num(rep.empirical[i]), num(rep.stderr[i]), num(rep.bound[i]), rep.vacuous[i].to_string()]);
    let text = csv_text(&["k", "empirical", "stderr", "bound", "vacuous"], rows);
    ctx.write("bottleneck.csv", &text)?;
    let svg = render(PlotKind::BoundOverlay, &text).map_err(CliError::Config)?;
    ctx.write("bound_overlay.svg", &svg)
}

pub fn audit(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let (d, p) = design(r)?;
    let trace = r.req_str("audit.trace")?;
    let s = r.f64("audit.s", p.s)?;
    let eta = r.f64("audit.eta", p.eta)?;
    let l = r.f64("audit.l", d.plateau)?;
    r.finish()?;
    let file = std::fs::File::open(&trace).map_err(|e| CliError::Config(format!("audit.trace: cannot open {trace}: {e}")))?;
    let rows = entropic_barriers::samplers::read_trace_csv(std::io::BufReader::new(file))?;
    let rep = barrier_reduction_audit(&rows, s, eta, l);
    ctx.write_json("audit.json", &rep)
}

pub fn plot(r: &mut Resolver, ctx: &mut Ctx) -> CliResult<()> {
    let input = r.req_str("plot.input")?;
    let kind_s = r.req_str("plot.kind")?;
    let output = r.str("plot.output", "plot.svg")?;
    r.finish()?;
    let kind = PlotKind::parse(&kind_s).ok_or_else(|| domain(format!("plot.kind: '{kind_s}' is not one of profile, survival, bound-overlay")))?;
    let text = std::fs::read_to_string(&input).map_err(|e| CliError::Config(format!("plot.input: cannot read {input}: {e}")))?;
    let svg = render(kind, &text).map_err(|e| CliError::Config(format!("{input}: {e}")))?;
    ctx.write(&output, &svg)
}

/// Human-readable one-line summary of the outputs, printed after a run.
pub fn summary(ctx: &Ctx) -> String {
    let mut s = String::new();
    let _ = write!(s, "wrote {} file(s) to {}", ctx.outputs.len(), ctx.out.display());
    s
}
