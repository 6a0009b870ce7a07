//! Seeded randomized verification suites.

use stabtensor::chase::{verify_cube_down_horizontal, verify_cube_horizontal_down};
use stabtensor::gen::Gen;
use stabtensor::linalg::Int;
use stabtensor::module::{FpModule, Ring};
use stabtensor::stable::{connecting_omega, second_construction_omega, Resolved, SesResolved, DEFAULT_HORIZON};
use stabtensor::vogel::{chain_module, check_cycle, first_index, lift_surjectivity, project_kappa, Tail, VogelChain};

/// Outcome of a randomized suite.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub total: usize,
    pub passed: usize,
    /// Cases that exercised a nonzero kernel or map.
    pub nontrivial: usize,
    /// Cases outside what the library supports, with the reason.
    pub skipped: Vec<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.passed == self.total
    }

    fn record(&mut self, case: Result<Option<bool>, String>) {
        match case {
            Ok(None) => self.skipped.push(format!("case {}", self.total + self.skipped.len() + 1)),
            Ok(Some(nontrivial)) => {
                self.total += 1;
                self.passed += 1;
                self.nontrivial += usize::from(nontrivial);
            }
            Err(e) => {
                self.total += 1;
                self.failures.push(format!("case {}: {e}", self.total + self.skipped.len()));
            }
        }
    }

    pub fn merge(&mut self, other: Outcome, label: &str) {
        self.total += other.total;
        self.passed += other.passed;
        self.nontrivial += other.nontrivial;
        self.failures.extend(other.failures.into_iter().map(|f| format!("{label} {f}")));
        self.skipped.extend(other.skipped.into_iter().map(|f| format!("{label} {f}")));
    }
}

/// Cyclic orders to draw summands from: the divisors of the modulus, or a few
/// small orders and ℤ itself.
pub fn orders(ring: &Ring) -> Vec<i64> {
    match ring.modulus().map(|m| m.to_string().parse::<i64>().expect("small modulus")) {
        Some(m) => (2..=m).filter(|d| m % d == 0).collect(),
        None => vec![0, 2, 3, 4],
    }
}

/// Orders of non-free cyclic modules; a free first argument has vanishing towers.
pub fn proper_orders(ring: &Ring) -> Vec<i64> {
    let free = ring.modulus().map_or(0, |m| m.to_string().parse().expect("small modulus"));
    orders(ring).into_iter().filter(|&d| d != free).collect()
}

/// Randomized cubes from a tensored pair of short exact sequences; both cube
/// lemmas are checked on each. Over ℤ, sequences whose horseshoe does not
/// exist in the truncated model are skipped.
pub fn cubes(ring: &Ring, seed: u64, count: usize) -> Outcome {
    let mut g = Gen::new(seed);
    let ords = orders(ring);
    let mut out = Outcome::default();
    for _ in 0..count {
        let case = (|| -> Result<Option<bool>, String> {
            let a = g.diagonal_module(ring, 2, &ords);
            let ses = g.ses(ring, 2, Some(&ords)).map_err(|e| e.to_string())?;
            let (j, k) = (g.below(2), g.below(2));
            let s = match SesResolved::new(&a, &ses, k + 2, None) {
                Ok(s) => s,
                Err(_) if ring.modulus().is_none() => return Ok(None),
                Err(e) => return Err(e.to_string()),
            };
            let down =
                verify_cube_down_horizontal(&s.cube(j, k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let across = verify_cube_horizontal_down(&s.cube(j, k + 1).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            if !down.passed() || !across.passed() {
                return Err(format!("anticommutation fails at (j, k) = ({j}, {k})"));
            }
            Ok(Some(!down.is_vacuous() || !across.is_vacuous()))
        })();
        out.record(case);
    }
    out
}

/// ω and ρ on random short exact sequences.
pub fn omega(ring: &Ring, seed: u64, count: usize, horizon: usize) -> Outcome {
    let mut g = Gen::new(seed);
    let ords = orders(ring);
    let mut out = Outcome::default();
    let proper = proper_orders(ring);
    for _ in 0..count {
        let case = (|| -> Result<Option<bool>, String> {
            let a = g.diagonal_module(ring, 2, &proper);
            let ses = g.ses(ring, 2, Some(&ords)).map_err(|e| e.to_string())?;
            let n = g.range(-1, 2);
            let w = connecting_omega(&a, &ses, n, horizon).map_err(|e| e.to_string())?;
            if !w.checks.passed() {
                return Err(format!("ω checks {:?}", w.checks));
            }
            if ring.modulus().is_some() {
                let rho = second_construction_omega(&a, &ses, n, horizon.min(4)).map_err(|e| e.to_string())?;
                if !rho.checks.passed() {
                    return Err(format!("ρ checks {:?}", rho.checks));
                }
            }
            Ok(Some(w.stages.iter().any(|(_, m)| !m.is_zero())))
        })();
        out.record(case);
    }
    out
}

/// Lift then project for random coherent sequences over a fixed pair, plus the
/// zero projection of finitely supported chains and additivity.
pub fn vogel(res: &Resolved, n: i64, seed: u64, count: usize, horizon: usize) -> Outcome {
    let mut g = Gen::new(seed);
    let mut out = Outcome::default();
    let e = |x: stabtensor::vogel::VogelError| x.to_string();
    for _ in 0..count {
        let case = (|| -> Result<Option<bool>, String> {
            let phi = g.coherent(res, n, horizon + 3).map_err(e)?;
            let s = lift_surjectivity(res, &phi, horizon).map_err(e)?;
            if !check_cycle(res, &s).map_err(e)?.cycle {
                return Err("lift is not a cycle".into());
            }
            let p = project_kappa(res, &s).map_err(e)?;
            if !p.snake_agrees {
                return Err("snake route differs".into());
            }
            if !p.sequence.agrees_with(res, &phi).map_err(e)? {
                return Err("round trip differs".into());
            }
            let first = first_index(n);
            let components = (first..first + 4)
                .map(|i| Ok(g.element(&chain_module(res, n, i).map_err(e)?)))
                .collect::<Result<Vec<Vec<Int>>, String>>()?;
            let finite = VogelChain { degree: n, first, components, tail: Tail::Zero };
            if !project_kappa(res, &finite).map_err(e)?.sequence.is_zero(res).map_err(e)? {
                return Err("finitely supported chain projects to nonzero".into());
            }
            let phi2 = g.coherent(res, n, horizon + 3).map_err(e)?;
            let s2 = lift_surjectivity(res, &phi2, horizon).map_err(e)?;
            let sum = project_kappa(res, &s.add(res, &s2).map_err(e)?).map_err(e)?.sequence;
            let parts = p.sequence.add(res, &project_kappa(res, &s2).map_err(e)?.sequence).map_err(e)?;
            if !sum.agrees_with(res, &parts).map_err(e)? {
                return Err("projection is not additive".into());
            }
            Ok(Some(!phi.is_zero(res).map_err(e)?))
        })();
        out.record(case);
    }
    out
}

/// δ epic (and iso over ℤ/m) on random pairs.
pub fn delta(ring: &Ring, seed: u64, count: usize) -> Outcome {
    let mut g = Gen::new(seed);
    let ords = orders(ring);
    let mut out = Outcome::default();
    for _ in 0..count {
        let (a, b): (FpModule, FpModule) = (g.diagonal_module(ring, 3, &ords), g.diagonal_module(ring, 3, &ords));
        let case = stabtensor::stable::delta_map(&a, &b).map_err(|e| e.to_string()).and_then(|d| {
            let iso_expected = ring.modulus().is_some();
            if !d.is_epi() || (iso_expected && !d.is_iso()) {
                Err(format!("δ fails for ({a}, {b})"))
            } else {
                Ok(Some(!d.source().is_zero()))
            }
        });
        out.record(case);
    }
    out
}

pub const DEFAULT_VOGEL_HORIZON: usize = 6;
pub const DEFAULT_TOWER_HORIZON: usize = DEFAULT_HORIZON;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubes_over_z4_pass() {
        let o = cubes(&Ring::integers_mod(4).unwrap(), 1, 10);
        assert!(o.ok(), "{:?}", o.failures);
        assert_eq!(o.total, 10);
    }

    #[test]
    fn suites_are_deterministic() {
        let r = Ring::integers_mod(4).unwrap();
        assert_eq!(omega(&r, 5, 3, 6), omega(&r, 5, 3, 6));
    }
}
