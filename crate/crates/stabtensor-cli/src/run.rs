//! Execution of parsed jobs.

use std::time::Instant;

use serde_json::json;
use stabtensor::injective::Truncation;
use stabtensor::module::{FpModule, Ring};
use stabtensor::stable::{
    connecting_omega, dimension_shift_check, inj_stabilize, second_construction_omega, tor, Resolved,
};
use thiserror::Error;

use crate::jobspec::{Command, JobSpec};
use crate::report::{add_tower, map_summary, truncation_text, truncation_value, Report};
use crate::suite::{self, Outcome, DEFAULT_TOWER_HORIZON, DEFAULT_VOGEL_HORIZON};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{context}: {message}")]
    Computation { context: String, message: String },
}

type RunResult<T> = std::result::Result<T, RunError>;

fn ctx<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> RunError + '_ {
    move |e| RunError::Computation { context: context.to_string(), message: e.to_string() }
}

/// Command-line overrides, applied on top of the job's own parameters.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub truncation: Option<u32>,
}

struct Ctx<'a> {
    job: &'a JobSpec,
    seed: u64,
    horizon: Option<usize>,
    truncation: Option<u32>,
}

impl Ctx<'_> {
    fn module(&self, name: &str) -> FpModule {
        self.job.module(name).expect("names are resolved when parsing")
    }

    fn tower_horizon(&self) -> usize {
        self.horizon.unwrap_or(DEFAULT_TOWER_HORIZON)
    }

    /// The requested truncation over ℤ; `None` over ℤ/m, where nothing is truncated.
    fn truncation(&self, a: &FpModule, b: &FpModule) -> RunResult<Option<Truncation>> {
        match (self.truncation, &self.job.ring) {
            (Some(level), Ring::Integers) => {
                Ok(Some(Truncation::for_modules(&[a, b]).map_err(ctx("truncation"))?.with_level(level)))
            }
            _ => Ok(None),
        }
    }

    fn resolved(&self, a: &FpModule, b: &FpModule) -> RunResult<Resolved> {
        Resolved::new(a, b, self.truncation(a, b)?).map_err(ctx("resolutions"))
    }
}

/// Run a job. Computation errors are returned; failed verifications give a
/// report with `passed == false`.
pub fn run(job: &JobSpec, o: &Overrides) -> RunResult<Report> {
    let t0 = Instant::now();
    let c = Ctx {
        job,
        seed: o.seed.or(job.params.seed).unwrap_or(0),
        horizon: o.horizon.or(job.params.horizon),
        truncation: o.truncation.or(job.params.truncation),
    };
    let mut r = Report::new(job.command.name(), &job.ring.to_string());
    if let Some(level) = c.truncation {
        r.set("truncation_override", json!(level));
    }
    match &job.command {
        Command::Stabilize { a, b } => stabilize(&c, &mut r, a, b)?,
        Command::Tor { a, b, n } => tor_cmd(&c, &mut r, a, b, *n)?,
        Command::Tower { a, b, n } => {
            let (ma, mb) = (c.module(a), c.module(b));
            let t = c.resolved(&ma, &mb)?.tower(*n, c.tower_horizon()).map_err(ctx("tower"))?;
            r.line(format!("  A = {a} = {ma}, B = {b} = {mb}"));
            add_tower(&mut r, "tensor_tower", &t);
            certify(&mut r, &t);
        }
        Command::Asymptotic { a, b, n } => {
            let (ma, mb) = (c.module(a), c.module(b));
            let v = c.resolved(&ma, &mb)?.asymptotic(*n, c.tower_horizon()).map_err(ctx("asymptotic"))?;
            let limit = v.limit.as_ref().map_or("uncertified".to_string(), FpModule::to_string);
            r.line(format!("  T_{n}({a}, {b}) = {limit}, {}", v.tower.certificate));
            r.set("value", json!(v.limit.as_ref().map(FpModule::to_string)));
            add_tower(&mut r, "tensor_tower", &v.tower);
            certify(&mut r, &v.tower);
        }
        Command::Intertwine { a, b, n } => {
            let (ma, mb) = (c.module(a), c.module(b));
            let i = c.resolved(&ma, &mb)?.intertwine(*n, c.tower_horizon()).map_err(ctx("intertwine"))?;
            add_tower(&mut r, "tensor_tower", &i.tensor);
            add_tower(&mut r, "tor_tower", &i.tor);
            r.set("southeast", json!(i.southeast.iter().map(map_summary).collect::<Vec<_>>()));
            r.set("northeast", json!(i.northeast.iter().map(map_summary).collect::<Vec<_>>()));
            r.check("southeast maps epic", i.report.southeast_epi);
            r.check("northeast maps monic", i.report.northeast_mono);
            r.check("squares commute", i.report.commutes);
            r.check("factorization reproduces the tensor tower", i.report.factorization);
            match i.report.limits_inverse {
                Some(ok) => r.check("limit maps mutually inverse", ok),
                None => r.line("  limit maps: towers not both stabilized within the horizon"),
            }
            certify(&mut r, &i.tensor);
        }
        Command::Satellite { a, b, n } => {
            let (ma, mb) = (c.module(a), c.module(b));
            let s = c.resolved(&ma, &mb)?.satellite_tower(*n, c.tower_horizon()).map_err(ctx("satellite"))?;
            add_tower(&mut r, "satellite_tower", &s.tower);
            add_tower(&mut r, "tensor_tower", &s.tensor);
            r.check("stagewise isomorphic", s.stagewise_iso);
            r.check("squares commute", s.commutes);
            certify(&mut r, &s.tensor);
        }
        Command::Omega { a, ses, n } => omega_cmd(&c, &mut r, a, ses, *n)?,
        Command::VogelRoundtrip { a, b, n, count } => {
            let (ma, mb) = (c.module(a), c.module(b));
            let res = c.resolved(&ma, &mb)?;
            let h = c.horizon.unwrap_or(DEFAULT_VOGEL_HORIZON);
            r.line(format!("  A = {ma}, B = {mb}, n = {n}, horizon {h}, seed {}", c.seed));
            let out = suite::vogel(&res, *n, c.seed, *count, h);
            outcome(&mut r, "vogel round trip", "round trips exact", &out);
        }
        Command::VerifyCubes { count } => {
            r.line(format!("  seed {}", c.seed));
            let out = suite::cubes(&job.ring, c.seed, *count);
            outcome(&mut r, "cubes", "anticommutation OK", &out);
        }
        Command::VerifyAll { a, b, count } => verify_all(&c, &mut r, a.as_deref().zip(b.as_deref()), *count)?,
    }
    r.elapsed = Some(t0.elapsed());
    Ok(r)
}

/// Inconclusive certificates and uncertified truncations fail the report.
fn certify(r: &mut Report, t: &stabtensor::stable::Tower) {
    r.check("certificate conclusive", !matches!(t.certificate, stabtensor::stable::Certificate::Inconclusive(_)));
    if t.truncation_certified.is_some() {
        r.check("truncation certified", t.truncation_certified == Some(true));
    }
}

fn outcome(r: &mut Report, key: &str, what: &str, o: &Outcome) {
    let skipped = if o.skipped.is_empty() { String::new() } else { format!(", {} skipped", o.skipped.len()) };
    r.line(format!("  {}/{} {what} ({} nontrivial{skipped})", o.passed, o.total, o.nontrivial));
    for f in &o.failures {
        r.line(format!("    {f}"));
    }
    r.set(
        key,
        json!({ "total": o.total, "passed": o.passed, "nontrivial": o.nontrivial, "skipped": o.skipped.len(), "failures": o.failures }),
    );
    r.check(key, o.ok());
}

fn stabilize(c: &Ctx, r: &mut Report, a: &str, b: &str) -> RunResult<()> {
    let (ma, mb) = (c.module(a), c.module(b));
    let st = inj_stabilize(&ma, &mb).map_err(ctx("stabilize"))?;
    r.line(format!("  {a} ⊗̃ {b} = {}", st.module));
    r.line(format!("  truncation {}", truncation_text(st.truncation.as_ref(), st.truncation.as_ref().map(|_| true))));
    r.set("value", json!(st.module.to_string()));
    r.set("truncation", truncation_value(st.truncation.as_ref(), st.truncation.as_ref().map(|_| true)));
    if let Some(t) = c.truncation(&ma, &mb)? {
        // the model computation at the requested level, checked one level up
        let at = Resolved::new(&ma, &mb, Some(t.clone())).and_then(|x| x.stab(0, 0)).map_err(ctx("truncated model"))?;
        let up =
            Resolved::new(&ma, &mb, Some(t.raised())).and_then(|x| x.stab(0, 0)).map_err(ctx("truncated model"))?;
        let certified = at.module.is_isomorphic(&up.module);
        r.line(format!("  truncated model: {} ({})", at.module, truncation_text(Some(&t), Some(certified))));
        r.set(
            "truncated_model",
            json!({ "value": at.module.to_string(), "truncation": truncation_value(Some(&t), Some(certified)) }),
        );
        r.check("truncation certified", certified);
        r.check("truncated model agrees", at.module.is_isomorphic(&st.module));
    }
    Ok(())
}

fn tor_cmd(c: &Ctx, r: &mut Report, a: &str, b: &str, n: usize) -> RunResult<()> {
    let t = tor(&c.module(a), &c.module(b), n).map_err(ctx("tor"))?;
    r.line(format!("  Tor_{n}({a}, {b}) = {}", t.module));
    r.set("degree", json!(n));
    r.set("value", json!(t.module.to_string()));
    r.set("truncation", truncation_value(t.truncation.as_ref(), None));
    Ok(())
}

fn omega_cmd(c: &Ctx, r: &mut Report, a: &str, ses: &str, n: i64) -> RunResult<()> {
    let ma = c.module(a);
    let s = &c.job.sequences[ses];
    let w = connecting_omega(&ma, s, n, c.tower_horizon()).map_err(ctx("omega"))?;
    r.line(format!("  ω_{n}: T_{n}(A, B'') → T_{}(A, B')", n - 1));
    add_tower(r, "source_tower", &w.source.tower);
    add_tower(r, "target_tower", &w.target.tower);
    let stages: Vec<_> = w.stages.iter().map(|(k, f)| json!({ "stage": k, "map": map_summary(f) })).collect();
    r.set("stages", json!(stages));
    match &w.limit {
        Some(l) => {
            r.line(format!(
                "  limit map (stage {} → {}): {} → {}, {}",
                l.source_stage,
                l.target_stage,
                l.map.source(),
                l.map.target(),
                if l.map.is_iso() {
                    "iso"
                } else if l.map.is_zero() {
                    "zero"
                } else {
                    "nonzero"
                }
            ));
            r.set(
                "limit",
                json!({ "source_stage": l.source_stage, "target_stage": l.target_stage, "map": map_summary(&l.map) }),
            );
        }
        None => r.line("  limit map: uncertified"),
    }
    if w.checks.by_vanishing {
        r.line("  both limits vanish; checks hold trivially");
    }
    r.check("ω commutes with Δ", w.checks.commutes_with_delta);
    r.check("T(A,α) ∘ ω = 0", w.checks.alpha_after_omega);
    r.check("ω ∘ T(A,β) = 0", w.checks.omega_after_beta);
    if matches!(c.job.ring, Ring::IntegersMod(_)) {
        let rho = second_construction_omega(&ma, s, n, c.tower_horizon().min(4)).map_err(ctx("rho"))?;
        r.check("Tor/stabilization square anticommutes", rho.checks.tor_stab_anticommutes);
        r.check("Tor/Tor square anticommutes", rho.checks.tor_tor_anticommutes);
        r.check("stabilization squares anticommute", rho.checks.stab_stab_anticommutes);
        r.check("sign offset restores commutation", rho.checks.offset_commutes);
        r.check("ρ agrees with ω through δ", rho.checks.agrees_with_omega);
    }
    Ok(())
}

fn verify_all(c: &Ctx, r: &mut Report, pair: Option<(&str, &str)>, count: usize) -> RunResult<()> {
    let ring = &c.job.ring;
    let h = c.tower_horizon();
    r.line(format!("  seed {}, count {count}", c.seed));
    if let Some((a, b)) = pair {
        let (ma, mb) = (c.module(a), c.module(b));
        let res = c.resolved(&ma, &mb)?;
        let mut towers = true;
        let mut satellites = true;
        for n in -2..=2 {
            let i = res.intertwine(n, h).map_err(ctx("intertwine"))?;
            towers &=
                i.report.passed() && !matches!(i.tensor.certificate, stabtensor::stable::Certificate::Inconclusive(_));
            let s = res.satellite_tower(n, h).map_err(ctx("satellite"))?;
            satellites &= s.stagewise_iso && s.commutes;
            let limit = i.tensor.limit.as_ref().map_or("uncertified".into(), FpModule::to_string);
            r.line(format!("  T_{n}({a}, {b}) = {limit}, {}", i.tensor.certificate));
        }
        r.check("intertwined towers, n ∈ [−2, 2]", towers);
        r.check("satellite towers, n ∈ [−2, 2]", satellites);
        let mut shifts = true;
        for k in 0..=2 {
            for j in 0..=2 {
                shifts &= dimension_shift_check(&ma, &mb, 0, k, j, h).map_err(ctx("dimension shift"))?.passed();
            }
        }
        r.check("dimension shifts, j, k ≤ 2", shifts);
    }
    outcome(r, "delta", "δ epic", &suite::delta(ring, c.seed, count));
    outcome(r, "cubes", "anticommutation OK", &suite::cubes(ring, c.seed, count.max(25)));
    outcome(r, "omega", "connected-sequence checks", &suite::omega(ring, c.seed, count, h));
    let (va, vb) = match pair {
        Some((a, b)) => (c.module(a), c.module(b)),
        None => {
            let mut g = stabtensor::gen::Gen::new(c.seed);
            let ords = suite::proper_orders(ring);
            (g.diagonal_module(ring, 2, &ords), g.diagonal_module(ring, 2, &ords))
        }
    };
    let res = Resolved::new(&va, &vb, None).map_err(ctx("resolutions"))?;
    let mut out = Outcome::default();
    for n in -1..=1 {
        let o = suite::vogel(&res, n, c.seed, count.div_ceil(3), c.horizon.unwrap_or(DEFAULT_VOGEL_HORIZON));
        out.merge(o, &format!("n={n}"));
    }
    outcome(r, "vogel", "round trips exact", &out);
    Ok(())
}
