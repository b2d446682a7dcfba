//! Seeded residual harness.
//!
//! Every catalog identity is checked by computing its two sides through
//! separate pipelines at sample points drawn from the chart box, with random
//! polynomial test fields and forms. Tier-1 ("derived-chain") identities decide
//! the overall verdict; tier-2 ("as-stated") identities are measured and
//! reported only.

mod identities;
pub mod random;

use rayon::prelude::*;
use serde::Serialize;

use crate::acs::AcsField;
use crate::calculus::{Chart, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::expr::{ComplexNum, Evaluator};

use identities::Env;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tier {
    #[serde(rename = "derived-chain")]
    DerivedChain,
    #[serde(rename = "as-stated")]
    AsStated,
}

/// One catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentitySpec {
    pub id: &'static str,
    pub statement: &'static str,
    pub tier: Tier,
}

const fn spec(id: &'static str, statement: &'static str, tier: Tier) -> IdentitySpec {
    IdentitySpec { id, statement, tier }
}

use Tier::{AsStated, DerivedChain};

/// The identity catalog, in report order. `omega` is a `(0,1)`-form, `theta`
/// a `(1,0)`-form, `zeta` a real 1-form, `f` a real function and
/// `D+-(a,b) = rhobar i(d_a) rho(dx^b + i J dx^b) +- rho i(d_a) rhobar(dx^b - i J dx^b)`.
pub const CATALOG: &[IdentitySpec] = &[
    spec(
        "bracket-projection",
        "pi01[pi10 X, pi10 Y] = -1/4 pi01 N(X,Y) and pi10[pi01 X, pi01 Y] = -1/4 pi10 N(X,Y)",
        DerivedChain,
    ),
    spec("dbar-f-pairing", "(dbar f)(N(X,Y)) = -4 (del del f)(X,Y)", DerivedChain),
    spec("d-f-pairing", "(del f)(N(X,Y)) = -4 (dbar dbar f)(X,Y)", DerivedChain),
    spec("rho-01-pairing", "omega(N(X,Y)) = 4 (rho omega)(X,Y)", DerivedChain),
    spec("rhobar-10-pairing", "theta(N(X,Y)) = 4 (rhobar theta)(X,Y)", DerivedChain),
    spec("j-eigenforms", "omega(JX) = -i omega(X) and theta(JX) = i theta(X)", DerivedChain),
    spec("nsq-bracket-01", "omega(N2(X,Z;Y)) = omega([N(X,Z),Y])", AsStated),
    spec("jnsq-bracket-01", "omega(J N2(X,Z;Y)) = -i omega([N(X,Z),Y])", AsStated),
    spec("nsq-bracket-10", "theta(N2(X,Z;Y)) = theta([N(X,Z),Y])", AsStated),
    spec("jnsq-bracket-10", "theta(J N2(X,Z;Y)) = i theta([N(X,Z),Y])", AsStated),
    spec("nsq-bracket-real", "zeta(N2(X,Z;Y)) = zeta([N(X,Z),Y])", AsStated),
    spec("jnsq-bracket-real", "zeta(J N2(X,Z;Y)) = (J zeta)([N(X,Z),Y])", AsStated),
    spec("trace-cancellation", "sum_k N_ik^k = 0 for every i", DerivedChain),
    spec("weak-square-s", "S_i = sum_k hbar(d_i,d_k) = 0 for every i, and S = 0", DerivedChain),
    spec("nsq-dual-01", "omega(N2(X,Z;Y)) = -16 (rhobar i(Y) rho omega)(X,Z)", DerivedChain),
    spec("jnsq-dual-01", "omega(J N2(X,Z;Y)) = 16 i (rhobar i(Y) rho omega)(X,Z)", DerivedChain),
    spec("nsq-dual-10", "theta(N2(X,Z;Y)) = -16 (rho i(Y) rhobar theta)(X,Z)", DerivedChain),
    spec("jnsq-dual-10", "theta(J N2(X,Z;Y)) = -16 i (rho i(Y) rhobar theta)(X,Z)", DerivedChain),
    spec(
        "nsq-dual-real",
        "zeta(N2(X,Z;Y)) = -8 {rhobar i(Y) rho(zeta + i J zeta) + rho i(Y) rhobar(zeta - i J zeta)}(X,Z)",
        DerivedChain,
    ),
    spec(
        "jnsq-dual-real",
        "zeta(J N2(X,Z;Y)) = 8 i {rhobar i(Y) rho(zeta + i J zeta) - rho i(Y) rhobar(zeta - i J zeta)}(X,Z)",
        DerivedChain,
    ),
    spec(
        "square-dual-forms",
        "K(i,k,j,l) = -2 {D+(j,l)(d_i,d_k) + D+(i,l)(d_j,d_k) + D+(j,k)(d_i,d_l) + D+(i,k)(d_j,d_l)}, \
         L likewise with 2i D-, hbar(i,k) = -8 D+(i,k)(d_i,d_k), ell(i,k) = 8i D-(i,k)(d_i,d_k), and the sums S_i, S, T",
        AsStated,
    ),
    spec(
        "dual-sum-vanishing",
        "sum_k D+(i,k)(d_i,d_k) = 0 for every i; sum_{i,k} (rhobar i(d_i) rho(dx^k + i J dx^k))(d_i,d_k) = 0; \
         sum_{i,k} (rho i(d_i) rhobar(dx^k - i J dx^k))(d_i,d_k) = 0",
        AsStated,
    ),
    spec("weak-square-t", "T = sum_{i,k} ell(d_i,d_k) = 0", AsStated),
    spec("rho-tensorial", "rho(f zeta) = f rho(zeta) and rhobar(f zeta) = f rhobar(zeta)", DerivedChain),
    spec("d-decomposition", "rhobar + dbar + del + rho = d on forms of degree 0, 1, 2", DerivedChain),
    spec("integrable-n-vanishes", "N = 0 on a structure declared integrable", DerivedChain),
];

pub fn lookup(id: &str) -> Result<&'static IdentitySpec> {
    CATALOG.iter().find(|s| s.id == id).ok_or_else(|| Error::UnknownIdentity(id.to_string()))
}

/// A chart with an almost-complex structure on it.
#[derive(Debug, Clone)]
pub struct Structure {
    pub name: String,
    pub chart: Chart,
    pub acs: AcsField,
    /// Declares `J` integrable; enables the `integrable-n-vanishes` check.
    pub integrable: bool,
}

impl Structure {
    pub fn new(name: impl Into<String>, chart: Chart, acs: AcsField, integrable: bool) -> Result<Self> {
        if chart.dim() != acs.dim() {
            return Err(Error::DimensionMismatch { expected: chart.dim(), got: acs.dim() });
        }
        Ok(Structure { name: name.into(), chart, acs, integrable })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub points: usize,
    /// Total degree of the random polynomial test objects.
    pub field_degree: u32,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 42, points: 50, field_degree: 2, tol: DEFAULT_TOLERANCE }
    }
}

impl SuiteConfig {
    pub fn check(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::Config("points must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub id: String,
    pub statement: String,
    pub tier: Tier,
    pub samples: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub structure: String,
    pub dim: usize,
    pub identities: Vec<IdentityReport>,
    /// Conjunction of the tier-1 verdicts.
    pub pass: bool,
}

impl SuiteReport {
    pub fn get(&self, id: &str) -> Option<&IdentityReport> {
        self.identities.iter().find(|r| r.id == id)
    }
}

/// `|l - r| / (1 + max(|l|, |r|))`.
pub fn relative_residual(l: ComplexNum, r: ComplexNum) -> f64 {
    (l - r).norm() / (1.0 + l.norm().max(r.norm()))
}

/// `count` points from the chart box at which `J^2 = -1` and `tr J = 0`
/// hold to within `tol`. Deterministic in `seed`.
pub fn sample_points(s: &Structure, count: usize, seed: u64, tol: f64) -> Result<Vec<Vec<f64>>> {
    let mut rng = random::rng_for(seed, random::stable_hash("sample-points"));
    let mut out = Vec::with_capacity(count);
    let max_draws = 100 * count.max(1);
    for _ in 0..max_draws {
        if out.len() == count {
            break;
        }
        let p = random::point_in_box(&mut rng, &s.chart);
        if let Ok((sq, tr)) = s.acs.point_residuals(&mut Evaluator::new(&p)) {
            if sq < tol && tr < tol {
                out.push(p);
            }
        }
    }
    if out.len() < count {
        return Err(Error::Sampling { wanted: count, got: out.len() });
    }
    Ok(out)
}

/// Checks one identity.
pub fn check_identity(id: &str, s: &Structure, cfg: &SuiteConfig) -> Result<IdentityReport> {
    let spec = lookup(id)?;
    cfg.check()?;
    let points = sample_points(s, cfg.points, cfg.seed, cfg.tol)?;
    Ok(check_with(spec, &Env::new(s, cfg.field_degree), &points, cfg))
}

/// Runs the whole catalog. Identities run in parallel; the report lists them
/// in catalog order.
pub fn run_suite(s: &Structure, cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.check()?;
    let points = sample_points(s, cfg.points, cfg.seed, cfg.tol)?;
    let env = Env::new(s, cfg.field_degree);
    let identities: Vec<IdentityReport> = CATALOG.par_iter().map(|spec| check_with(spec, &env, &points, cfg)).collect();
    let pass = identities.iter().filter(|r| r.tier == Tier::DerivedChain).all(|r| r.pass);
    Ok(SuiteReport { structure: s.name.clone(), dim: s.dim(), identities, pass })
}

fn check_with(spec: &IdentitySpec, env: &Env, points: &[Vec<f64>], cfg: &SuiteConfig) -> IdentityReport {
    let mut report = IdentityReport {
        id: spec.id.to_string(),
        statement: spec.statement.to_string(),
        tier: spec.tier,
        samples: 0,
        max_abs: 0.0,
        max_rel: 0.0,
        pass: true,
        note: None,
    };
    let check = match identities::prepare(spec.id, env) {
        Ok(Some(check)) => check,
        Ok(None) => {
            report.note = Some("not applicable: structure is not declared integrable".into());
            return report;
        }
        Err(e) => {
            report.pass = false;
            report.note = Some(e.to_string());
            return report;
        }
    };
    let stream = random::mix(cfg.seed, random::stable_hash(spec.id));
    let results: Vec<Result<Vec<(ComplexNum, ComplexNum)>>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, p)| check(p, &mut random::rng_for(stream, idx as u64)))
        .collect();
    for r in results {
        match r {
            Ok(pairs) => {
                report.samples += 1;
                for (l, rhs) in pairs {
                    let abs = (l - rhs).norm();
                    let rel = relative_residual(l, rhs);
                    if abs.is_nan() || rel.is_nan() {
                        report.max_abs = f64::NAN;
                        report.max_rel = f64::NAN;
                    } else if !report.max_abs.is_nan() {
                        report.max_abs = report.max_abs.max(abs);
                        report.max_rel = report.max_rel.max(rel);
                    }
                }
            }
            Err(e) => {
                if report.note.is_none() {
                    report.note = Some(format!("evaluation failed: {e}"));
                }
                report.pass = false;
            }
        }
    }
    report.pass = report.pass && report.max_rel < cfg.tol;
    report
}
