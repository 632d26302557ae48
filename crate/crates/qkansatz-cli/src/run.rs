//! Subcommand pipelines.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use qkansatz::cmap::{self, Prepotential, CYCLIC};
use qkansatz::cone;
use qkansatz::cp4d::{self, CPPotential};
use qkansatz::excalc::{amax, DerivScheme, Gen};
use qkansatz::gh::{self, GHData};
use qkansatz::legendre;
use qkansatz::qk::{self, qk_structure, ReducedData};
use rand_chacha::ChaCha8Rng;

use crate::config::{CpSpec, GhSpec, Input, PrepSpec, RunConfig, Subcommand, UsageError};
use crate::report::{Accumulator, Metadata, Report};
use crate::sampling;

/// Plug-in evaluators that configs can name with `{"family": "plugin"}` or
/// `{"potential": "plugin"}`.
#[derive(Clone, Default)]
pub struct Registry {
    pub gh: BTreeMap<String, GHData>,
    pub cp: BTreeMap<String, CPPotential>,
    pub prepotentials: BTreeMap<String, Prepotential>,
}

#[derive(Debug)]
pub enum RunError {
    Usage(UsageError),
    /// Construction failed before any sample was drawn.
    Setup(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Usage(e) => write!(f, "usage: {e}"),
            RunError::Setup(e) => write!(f, "setup: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<UsageError> for RunError {
    fn from(e: UsageError) -> Self {
        RunError::Usage(e)
    }
}

fn setup<E: fmt::Debug>(e: E) -> RunError {
    RunError::Setup(format!("{e:?}"))
}

/// Named checks with their running maxima, in canonical order.
struct Suite {
    accs: Vec<Accumulator>,
}

impl Suite {
    fn new(list: &[(&str, f64)]) -> Self {
        Suite { accs: list.iter().map(|(n, t)| Accumulator::new(n, *t)).collect() }
    }

    fn get(&mut self, name: &str) -> &mut Accumulator {
        self.accs.iter_mut().find(|a| a.name() == name).unwrap_or_else(|| panic!("unknown check {name}"))
    }

    fn push(&mut self, name: &str, v: f64) {
        self.get(name).push(v);
    }

    fn push_result<E: fmt::Debug>(&mut self, name: &str, r: Result<f64, E>) {
        self.get(name).push_result(r);
    }

    fn apply(&mut self, over: &BTreeMap<String, f64>) -> Result<(), UsageError> {
        for (k, v) in over {
            match self.accs.iter_mut().find(|a| a.name() == k) {
                Some(a) => a.set_tolerance(*v),
                None => {
                    let known: Vec<&str> = self.accs.iter().map(|a| a.name()).collect();
                    return Err(UsageError(format!("unknown check {k:?}; known: {}", known.join(", "))));
                }
            }
        }
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    run_with(cfg, &Registry::default())
}

pub fn run_with(cfg: &RunConfig, reg: &Registry) -> Result<Report, RunError> {
    cfg.validate()?;
    let mut rng = sampling::rng(cfg.seed);
    let mut suite = match (cfg.subcommand, &cfg.input) {
        (Subcommand::VerifyGh, Input::Gh(g)) => verify_gh(cfg, &gh_data(g, reg, cfg)?, &mut rng),
        (Subcommand::VerifyCone, Input::Gh(g)) => verify_cone(cfg, g, &gh_data(g, reg, cfg)?, &mut rng)?,
        (Subcommand::ReduceQk, Input::Gh(g)) => reduce_qk(cfg, &gh_data(g, reg, cfg)?, &mut rng)?,
        (Subcommand::Cp4d, Input::Cp(c)) => cp4d_run(cfg, c, reg, &mut rng)?,
        (Subcommand::Cmap, Input::Special { prepotential, s }) => {
            cmap_run(cfg, &prep(prepotential, reg)?, *s, &mut rng)?
        }
        (Subcommand::Legendre, Input::Special { prepotential, s }) => {
            legendre_run(cfg, &prep(prepotential, reg)?, *s, &mut rng)?
        }
        (sub, _) => return Err(UsageError(format!("input does not fit {sub}")).into()),
    };
    suite.apply(&cfg.tolerances)?;
    let checks: Vec<_> = suite.accs.iter().map(|a| a.finish()).collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        checks,
        metadata: Metadata {
            subcommand: cfg.subcommand.name().to_string(),
            seed: cfg.seed,
            samples: cfg.samples,
            h: cfg.h,
            input: serde_json::to_value(&cfg.input).expect("input serializes"),
            wall_time_s: None,
        },
        pass,
    })
}

/// As [`run_with`], recording the wall time in the metadata.
pub fn run_timed(cfg: &RunConfig, reg: &Registry) -> Result<Report, RunError> {
    let t = Instant::now();
    let mut r = run_with(cfg, reg)?;
    r.metadata.wall_time_s = Some(t.elapsed().as_secs_f64());
    Ok(r)
}

fn gh_data(g: &GhSpec, reg: &Registry, cfg: &RunConfig) -> Result<GHData, RunError> {
    let sch = DerivScheme::Dual;
    Ok(match g {
        // the monopole family is checked with differences at step h
        GhSpec::DiracMonopole => gh::dirac_monopole().into_gh(DerivScheme::Central { h: cfg.h }),
        GhSpec::TwoCenter => gh::two_center_diag().into_gh(sch),
        GhSpec::ThreeCenter => gh::three_center().into_gh(sch),
        GhSpec::FourCenter => gh::four_center().into_gh(sch),
        GhSpec::ShiftedCenters => gh::shifted_centers().into_gh(sch),
        GhSpec::Flat { u } => {
            let m = (u.len() as f64).sqrt().round() as usize;
            if m == 0 || m * m != u.len() {
                return Err(UsageError("flat: u must have m² entries".into()).into());
            }
            gh::flat(m, u).into_gh(sch)
        }
        GhSpec::Plugin { name } => {
            reg.gh.get(name).cloned().ok_or_else(|| UsageError(format!("no plug-in GH data named {name:?}")))?
        }
    })
}

fn prep(p: &PrepSpec, reg: &Registry) -> Result<Prepotential, RunError> {
    match p.build()? {
        Some(p) => Ok(p),
        None => match p {
            PrepSpec::Plugin { name } => reg
                .prepotentials
                .get(name)
                .cloned()
                .ok_or_else(|| UsageError(format!("no plug-in prepotential named {name:?}")).into()),
            _ => unreachable!(),
        },
    }
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).fold(0.0, |r, (u, v)| u.iter().zip(v).fold(r, |r, (x, y)| r.max((x - y).abs())))
}

fn verify_gh(cfg: &RunConfig, g: &GHData, rng: &mut ChaCha8Rng) -> Suite {
    let mut s = Suite::new(&[
        ("bogomolny1", 1e-6),
        ("bogomolny2", 1e-6),
        ("closure", 1e-6),
        ("algebraic", 1e-8),
        ("quat_coframe", 1e-8),
        ("fiber_contraction", 1e-8),
    ]);
    let t = gh::hk_forms(g);
    let metric = gh::hk_metric(g);
    let fd = DerivScheme::Central { h: cfg.h };
    for _ in 0..cfg.samples {
        let p = sampling::gh_point(rng, g.m);
        s.push("bogomolny1", gh::bogomolny1_residual(g, &p[..3 * g.m]));
        s.push("bogomolny2", gh::bogomolny2_residual(g, &p));
        s.push("closure", gh::closure_check(&t, &p, fd));
        s.push_result("algebraic", gh::algebraic_check(&t, &metric, &p));
        s.push_result("quat_coframe", gh::quat_forms_check(g, &p));
        s.push("fiber_contraction", gh::fiber_contraction_residual(g, &p));
    }
    s
}

fn verify_cone(cfg: &RunConfig, spec: &GhSpec, g: &GHData, rng: &mut ChaCha8Rng) -> Result<Suite, RunError> {
    if g.m != 2 {
        return Err(UsageError("verify-cone samples m = 2 data".into()).into());
    }
    // data without the cone symmetry only has the unconstrained identities
    let cone_like = !matches!(spec, GhSpec::ShiftedCenters | GhSpec::Flat { .. });
    let three = matches!(spec, GhSpec::ThreeCenter);
    let mut list = vec![("obstruction", 1e-6)];
    if cone_like {
        list.extend([
            ("hkc_higgs", 1e-6),
            ("round_trip", 1e-6),
            ("gauge_fix", 1e-6),
            ("cone_criterion", 1e-6),
            ("generator_algebra", 1e-6),
        ]);
    }
    if three {
        list.extend([("potential_constraints", 1e-6), ("potential_higgs", 1e-6)]);
    }
    let mut s = Suite::new(&list);
    let pot = cone::three_center_potential().into_potential(DerivScheme::Dual);
    for _ in 0..cfg.samples {
        let p = sampling::cone_point(rng);
        s.push("obstruction", cone::obstruction_identities(g, &p).max());
        if cone_like {
            s.push("hkc_higgs", cone::hkc_higgs_residual(g, &p[..6]));
            s.push_result("round_trip", cone::round_trip_residual(g, &p[..6]));
            s.push("gauge_fix", cone::gauge_fix_residual(g, &p));
            let (a, b) = cone::cone_criterion_parts(g, &p);
            s.push("cone_criterion", a.max(b));
            let alg = cone::generator_algebra_check(g, &p);
            s.push("generator_algebra", alg.horizontal.max(alg.vertical));
        }
        if three {
            s.push("potential_constraints", cone::potential_constraints(&pot, &p).max());
            let h = cone::potential_to_higgs(&pot, &p);
            s.push("potential_higgs", if h.degenerate { f64::NAN } else { amax(&(h.u - g.higgs_at(&p[..6]))) });
        }
    }
    Ok(s)
}

const QK_CHECKS: [(&str, f64); 7] = [
    ("red_bogomolny1", 1e-6),
    ("red_bogomolny2", 1e-6),
    ("einstein", 1e-6),
    ("moment_map", 1e-6),
    ("killing", 1e-6),
    ("swann", 1e-6),
    ("moment_lift", 1e-6),
];

fn reduce_qk(cfg: &RunConfig, g: &GHData, rng: &mut ChaCha8Rng) -> Result<Suite, RunError> {
    let n = g.m - 1;
    if n == 0 {
        return Err(UsageError("reduce-qk needs m ≥ 2".into()).into());
    }
    let probes: Vec<Vec<f64>> = (0..3).map(|_| sampling::qk_point(rng, n)).collect();
    let rd = qk::reduce(g, 1.0, &probes).map_err(setup)?;
    let mut s = Suite::new(&QK_CHECKS);
    for _ in 0..cfg.samples {
        let p = sampling::qk_point(rng, n);
        qk_point_checks(&mut s, g, &rd, &p, rng);
    }
    Ok(s)
}

fn qk_point_checks(s: &mut Suite, g: &GHData, rd: &ReducedData, p: &[f64], rng: &mut ChaCha8Rng) {
    let st = qk_structure(rd);
    s.push_result("red_bogomolny1", qk::red_bogo1_residual(rd, &rd.rho(p)));
    s.push_result("red_bogomolny2", qk::red_bogo2_residual(rd, p));
    s.push_result("einstein", qk::einstein_residual(&st, p));
    let mm = (0..rd.m()).try_fold(0.0f64, |r, i| qk::moment_map_residual(&st, i, p).map(|v| r.max(v)));
    s.push_result("moment_map", mm);
    s.push("killing", qk::killing_residual(&st, p));
    let pt = sampling::with_fiber(rng, p);
    s.push_result("swann", qk::swann_consistency(g, rd, &pt));
    s.push_result("moment_lift", qk::moment_lift_check(g, rd, &pt));
}

fn cp4d_run(cfg: &RunConfig, c: &CpSpec, reg: &Registry, rng: &mut ChaCha8Rng) -> Result<Suite, RunError> {
    let u = match c {
        CpSpec::Rho1 => CPPotential::rho1(),
        CpSpec::Rho2sq => CPPotential::rho2sq(),
        CpSpec::One => CPPotential::one(),
        CpSpec::LinearCombo { a, b } => CPPotential::linear_combo(*a, *b),
        CpSpec::Plugin { name } => {
            reg.cp.get(name).cloned().ok_or_else(|| UsageError(format!("no plug-in potential named {name:?}")))?
        }
    };
    // 𝒰 = 1 has a degenerate metric; only the potential checks apply
    let metric = !matches!(c, CpSpec::One);
    let mut list = vec![("constraint", 1e-8), ("eigenfunction", 1e-8)];
    if metric {
        list.extend([("metric_vs_pipeline", 1e-8), ("einstein", 1e-6), ("red_bogomolny", 1e-6)]);
    }
    let mut s = Suite::new(&list);
    let rd = if metric { Some(cp4d::reduced_data(&u, 1.0).map_err(setup)?) } else { None };
    let st = rd.as_ref().map(qk_structure);
    let mut done = 0;
    while done < cfg.samples {
        let p = sampling::cp_point(rng);
        let r = [p[0], p[1]];
        if metric && u.value(r).abs() < 0.1 {
            continue;
        }
        done += 1;
        s.push("constraint", cp4d::constraint_residual(&u, r));
        s.push("eigenfunction", cp4d::eigenfunction_residual(&u, r));
        if let (Some(rd), Some(st)) = (&rd, &st) {
            let d = cp4d::cp_metric_at(&u, &p).and_then(|(_, g)| st.metric_at(&p).map(|h| amax(&(g - h))));
            s.push_result("metric_vs_pipeline", d);
            s.push_result("einstein", cp4d::cp_einstein_residual(&u, &p));
            let b = qk::red_bogo1_residual(rd, &rd.rho(&p)).and_then(|a| qk::red_bogo2_residual(rd, &p).map(|b| a.max(b)));
            s.push_result("red_bogomolny", b);
        }
    }
    Ok(s)
}

/// Tolerances of the n = 1 quadratic; `n ≥ 2` relaxes the tight ones to
/// 10⁻⁵, and plug-ins given by `F` alone lose another factor 10.
fn cmap_tol(prep: &Prepotential, tight: f64) -> f64 {
    let mut t = tight;
    if prep.n >= 2 && t < 1e-5 {
        t = 1e-5;
    }
    if prep.lower_precision() {
        t *= 10.0;
    }
    t
}

fn cmap_run(cfg: &RunConfig, prep: &Prepotential, sgn: f64, rng: &mut ChaCha8Rng) -> Result<Suite, RunError> {
    let d = DerivScheme::Dual;
    let fd = DerivScheme::Central { h: cfg.h };
    let t = |v: f64| cmap_tol(prep, v);
    let mut s = Suite::new(&[
        ("contour_vs_closed", t(1e-8)),
        ("identity_suite", t(1e-8)),
        ("bogomolny", t(1e-6)),
        ("heisenberg_algebra", t(1e-8)),
        ("heisenberg_killing", t(1e-6)),
        ("tau_modular", 1e-8),
        ("einstein", t(1e-6)),
        ("fs_vs_pipeline", t(1e-8)),
        ("moment_map", t(1e-6)),
        ("swann", t(1e-6)),
        ("moment_lift", t(1e-6)),
        ("signature", 0.0),
    ]);
    let up = cmap::gh_closed(prep, d);
    let heis = cmap::heisenberg_upstairs(prep);
    for _ in 0..cfg.samples {
        let p = sampling::cmap_upstairs(rng, prep);
        let m = prep.n + 1;
        let x = &p[..3 * m];
        s.push_result("contour_vs_closed", cmap::l_contour(prep, x).map(|c| (c - cmap::l_closed(prep, x)).abs()));
        s.push_result("identity_suite", cmap::identity_suite(prep, &p).map(|t| cmap::table_max(&t)));
        s.push("bogomolny", gh::bogomolny1_residual(&up, x).max(gh::bogomolny2_residual(&up, &p)));
        s.push("heisenberg_algebra", cmap::heisenberg_algebra_residual(&heis, &p, fd));
        s.push("heisenberg_killing", cmap::heisenberg_invariance_residual(prep, &heis, &p));
        s.push_result("tau_modular", cmap::dualization(prep, &p).map(|r| r.tau_modular));
    }

    let n = prep.n;
    let rd = cmap::reduce_cmap(prep, sgn, d).map_err(setup)?;
    let rd_inv = cmap::reduce_cmap_gauge(prep, sgn, false, d).map_err(setup)?;
    let st = qk_structure(&rd);
    let st_inv = qk_structure(&rd_inv);
    let probes: Vec<Vec<f64>> = (0..2).map(|_| sampling::cmap_downstairs(rng, prep)).collect();
    let pipeline = qk::reduce(&cmap::gh_closed_in_frame(prep, CYCLIC, d), sgn, &probes).map(|r| qk_structure(&r));
    let up_inv = gh::rotate_frame(&cmap::gh_closed_gauge(prep, false, d), CYCLIC);
    let heis_down = cmap::heisenberg_downstairs(n);
    let g = st.metric();
    for _ in 0..cfg.samples {
        let p = sampling::cmap_downstairs(rng, prep);
        s.push_result("einstein", qk::einstein_residual(&st, &p));
        let cmp = match &pipeline {
            Ok(pst) => cmap::fs_assemble(prep, sgn, &p)
                .and_then(|fs| pst.metric_at(&p).map(|gp| amax(&(gp - fs.metric * sgn)))),
            Err(e) => Err(e.clone()),
        };
        s.push_result("fs_vs_pipeline", cmp);
        let mm = (0..n + 1).try_fold(0.0f64, |r, i| qk::moment_map_residual(&st_inv, i, &p).map(|v| r.max(v)));
        s.push_result("moment_map", mm);
        // difference truncation grows with the size of the metric
        let lie = cmap::downstairs_killing_residual(&g, &heis_down, &p, fd) / (1.0 + amax(&g.at(&p)));
        let k = qk::killing_residual(&st_inv, &p).max(lie);
        s.push("heisenberg_killing", k);
        s.push("heisenberg_algebra", cmap::heisenberg_algebra_residual(&heis_down, &p, fd));
        let pt = sampling::with_fiber(rng, &p);
        s.push_result("swann", qk::swann_consistency(&up_inv, &rd_inv, &pt));
        s.push_result("moment_lift", qk::moment_lift_check(&up_inv, &rd_inv, &pt));
    }

    let mut lor = Vec::new();
    for _ in 0..cfg.samples {
        match sampling::cmap_downstairs_lorentzian(rng, prep) {
            Some(p) => lor.push(p),
            None => break,
        }
    }
    if lor.is_empty() {
        s.push_result::<&str>("signature", Err("no samples with R < 0"));
    } else {
        s.push_result("signature", cmap::signature_check(&rd, &lor).map(|r| r.violations as f64));
    }
    Ok(s)
}

fn legendre_run(cfg: &RunConfig, prep: &Prepotential, sgn: f64, rng: &mut ChaCha8Rng) -> Result<Suite, RunError> {
    let d = DerivScheme::Dual;
    let t = |v: f64| cmap_tol(prep, v);
    let mut s = Suite::new(&[
        ("constraints", t(1e-8)),
        ("hkc", t(1e-8)),
        ("transform_round_trip", t(1e-8)),
        ("kappa_potential", t(1e-8)),
        ("higgs", t(1e-8)),
        ("connection", t(1e-8)),
        ("bogomolny", t(1e-6)),
        ("gauge_kernel", t(1e-8)),
        ("end_to_end", t(1e-8)),
        ("contour_end_to_end", t(1e-8)),
    ]);
    let m = prep.n + 1;
    let l = cmap::CmapL { prep: prep.clone() };
    let closed = cmap::gh_closed(prep, d);
    let lt = cmap::gh_legendre(prep, false, d);
    let u_field = Gen(cmap::CmapU { prep: prep.clone(), zero_shift: false });
    for _ in 0..cfg.samples {
        let p = sampling::cmap_upstairs(rng, prep);
        let x = &p[..3 * m];
        s.push("constraints", legendre::constraints_residual(&l, x));
        s.push("hkc", legendre::hkc_residual(&l, x));
        let z: Vec<_> = x.chunks(3).map(|c| num_complex::Complex::new(0.5 * c[1], 0.5 * c[2])).collect();
        let lx = legendre::l_x(&l, x);
        let u: Vec<_> = lx.iter().zip(&p[3 * m..]).map(|(v, psi)| num_complex::Complex::new(*psi, 0.5 * v)).collect();
        let guess: Vec<f64> = (0..m).map(|i| x[3 * i] * 1.02).collect();
        let r = legendre::LegendreSolver::with_guess(guess).solve(&l, &z, &u);
        s.push_result(
            "transform_round_trip",
            r.as_ref().map(|r| (0..m).fold(0.0f64, |a, i| a.max((r.x[i] - x[3 * i]).abs()))).map_err(|e| e.clone()),
        );
        let uhk = cmap::hk_potential_cmap(prep, x);
        s.push_result("kappa_potential", r.map(|r| (r.kappa - uhk).abs() / (1.0 + uhk.abs())));
        s.push("higgs", amax(&(closed.higgs_at(x) - lt.higgs_at(x))));
        s.push("connection", max_diff(&closed.conn_at(&p), &lt.conn_at(&p)));
        s.push("bogomolny", gh::bogomolny1_residual(&lt, x).max(gh::bogomolny2_residual(&lt, &p)));
        s.push("gauge_kernel", legendre::gauge_kernel_residual(m, &u_field, &p, d));
    }
    let probes: Vec<Vec<f64>> = (0..2).map(|_| sampling::cmap_downstairs(rng, prep)).collect();
    let chain = |src| {
        let up = gh::rotate_frame(&cmap::gh_legendre_from(prep, src, false, d), CYCLIC);
        qk::reduce(&up, sgn, &probes).map(|r| qk_structure(&r))
    };
    let closed_chain = chain(cmap::LSource::Closed);
    let contour_chain = chain(cmap::LSource::Contour(cmap::QUAD_POINTS));
    for _ in 0..cfg.samples {
        let p = sampling::cmap_downstairs(rng, prep);
        let fs = cmap::fs_assemble(prep, sgn, &p);
        for (name, ch) in [("end_to_end", &closed_chain), ("contour_end_to_end", &contour_chain)] {
            let v = match (ch, &fs) {
                (Ok(st), Ok(fs)) => st.metric_at(&p).map(|g| amax(&(g - &fs.metric * sgn))),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            s.push_result(name, v);
        }
    }
    Ok(s)
}
