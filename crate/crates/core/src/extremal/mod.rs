//! Search for the Blaschke product of degree at most `N - 1` maximizing
//! `||b(E)||`.
//!
//! Each degree is searched separately: a nested polar grid over the
//! polydisk first, then Nelder-Mead refinement in the chart
//! `w = r e^{i phi}` (signed `r`, clamped to `|r| <= 1 - boundaryMargin`).
//! The phase of `b` is fixed at zero because it does not change the norm.
//! Every reported value is an actually evaluated `||b(E)||`, so the result
//! is a lower bound on the supremum.

mod grid;
mod nelder_mead;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::holo::{BlaschkeProduct, Calculus};
use crate::matrix::{derive_seed, operator_norm, rng_from_seed, ComplexMatrix, C64};

use nelder_mead::NelderMead;

/// Search effort. `degree_range` defaults to `[0, N - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SearchBudget {
    /// Radial nodes per zero; angular nodes are `ceil(4/3 * radial)`.
    pub grid_resolution: usize,
    pub multistarts: usize,
    /// Objective evaluations allowed per local refinement.
    pub local_iters: usize,
    pub degree_range: Option<(usize, usize)>,
    /// Cap on grid points per degree; the per-zero resolution shrinks to fit.
    pub max_grid_points: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            grid_resolution: 24,
            multistarts: 16,
            local_iters: 400,
            degree_range: None,
            max_grid_points: 20_000,
            seed: 0,
        }
    }
}

impl SearchBudget {
    fn validate(&self, n: usize) -> Result<(usize, usize)> {
        if self.grid_resolution == 0 || self.multistarts == 0 || self.local_iters == 0 || self.max_grid_points == 0 {
            return Err(Error::InvalidParameter("search budget counts must all be at least 1".into()));
        }
        let (lo, hi) = self.degree_range.unwrap_or((0, n.saturating_sub(1)));
        if lo > hi || hi > n.saturating_sub(1) {
            return Err(Error::InvalidParameter(format!(
                "degree range [{lo}, {hi}] must lie within [0, {}]",
                n.saturating_sub(1)
            )));
        }
        Ok((lo, hi))
    }

    /// Radial resolution used for degree `d`.
    pub fn radial_resolution(&self, d: usize) -> usize {
        let r = self.grid_resolution;
        let mut rd = match d {
            0 => 1,
            1 | 2 => r,
            3 => r.div_ceil(2),
            _ => r.div_ceil(4),
        };
        while rd > 1 && grid::multiset_count(grid::node_count(rd), d) > self.max_grid_points {
            rd -= 1;
        }
        rd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeBest {
    pub product: BlaschkeProduct,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtremalResult {
    pub best_norm: f64,
    pub best: BlaschkeProduct,
    #[serde(rename = "perDegree")]
    pub per_degree_bests: BTreeMap<usize, DegreeBest>,
    pub evaluations: u64,
    /// False only when the search stopped early on reaching its target.
    pub budget_exhausted: bool,
}

/// `||b(E)||` for the phase-zero product with the given zeros.
pub fn norm_objective(e: &ComplexMatrix, zeros: &[C64], tol: &Tolerances) -> Result<f64> {
    BlaschkeProduct::new(0.0, zeros.to_vec(), tol)?;
    let calc = Calculus::new(e, tol)?;
    evaluate(&calc, zeros)
}

fn evaluate(calc: &Calculus, zeros: &[C64]) -> Result<f64> {
    operator_norm(&calc.blaschke_zeros(zeros)?)
}

/// Keeps `|w| <= max_modulus` exactly after rounding.
fn clamp_zero(w: C64, max_modulus: f64) -> C64 {
    let mut w = w;
    while w.norm() > max_modulus {
        w *= 1.0 - f64::EPSILON;
    }
    w
}

fn chart_to_zeros(x: &[f64], max_modulus: f64) -> Vec<C64> {
    x.chunks_exact(2)
        .map(|p| clamp_zero(C64::from_polar(p[0].clamp(-max_modulus, max_modulus), p[1]), max_modulus))
        .collect()
}

/// Candidate ordering: larger value wins; ties go to the smaller key.
#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    key: (usize, usize, usize),
    zeros: Vec<C64>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.key < other.key,
        }
    }
}

fn keep_best(slot: &mut Option<Candidate>, c: Candidate) {
    if slot.as_ref().is_none_or(|s| c.beats(s)) {
        *slot = Some(c);
    }
}

struct Refined {
    best: Option<Candidate>,
    evals: usize,
}

fn refine(calc: &Calculus, start: &[C64], key: (usize, usize, usize), iters: usize, tol: &Tolerances) -> Result<Refined> {
    let max_mod = tol.max_zero_modulus();
    let mut x0 = Vec::with_capacity(2 * start.len());
    let mut steps = Vec::with_capacity(2 * start.len());
    for w in start {
        let r = w.norm();
        x0.push(r);
        x0.push(if r > 0.0 { w.arg() } else { 0.0 });
        steps.push(if r + 0.1 <= max_mod { 0.1 } else { -0.1 });
        steps.push(0.3);
    }
    let nm = NelderMead { max_evals: iters, ftol: 1e-13, xtol: 1e-8 };
    let mut best: Option<Candidate> = None;
    let outcome = nm.maximize(&x0, &steps, |x| {
        let zeros = chart_to_zeros(x, max_mod);
        let value = evaluate(calc, &zeros)?;
        keep_best(&mut best, Candidate { value, key, zeros });
        Ok(value)
    })?;
    log::trace!("refinement {key:?}: {} evaluations, converged {}", outcome.evals, outcome.converged);
    Ok(Refined { best, evals: outcome.evals })
}

fn random_start(seed: u64, d: usize, k: usize, max_mod: f64) -> Vec<C64> {
    let mut rng = rng_from_seed(derive_seed(seed, &[d as u64, k as u64]));
    (0..d)
        .map(|_| {
            let r = max_mod * rng.random::<f64>().sqrt();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            clamp_zero(C64::from_polar(r, phi), max_mod)
        })
        .collect()
}

/// Maximizes `||b(E)||` over Blaschke products by degree.
pub fn extremal_search(e: &ComplexMatrix, budget: &SearchBudget, tol: &Tolerances) -> Result<ExtremalResult> {
    search(e, budget, tol, None, Exec::default())
}

/// Like [`extremal_search`] but stops after the first stage whose best value
/// exceeds `target`.
pub fn extremal_search_until(
    e: &ComplexMatrix,
    budget: &SearchBudget,
    tol: &Tolerances,
    target: f64,
) -> Result<ExtremalResult> {
    search(e, budget, tol, Some(target), Exec::default())
}

/// Full-control entry point: optional early-exit target and execution mode.
pub fn search(
    e: &ComplexMatrix,
    budget: &SearchBudget,
    tol: &Tolerances,
    target: Option<f64>,
    exec: Exec,
) -> Result<ExtremalResult> {
    let n = e.require_square("extremal_search")?;
    let (lo, hi) = budget.validate(n)?;
    let calc = Calculus::new(e, tol)?;
    let max_mod = tol.max_zero_modulus();
    let hit = |c: &Option<Candidate>| matches!((target, c), (Some(t), Some(c)) if c.value > t);

    let mut evaluations = 0u64;
    let mut per_degree: BTreeMap<usize, Candidate> = BTreeMap::new();
    let mut stopped = false;

    'degrees: for d in lo..=hi {
        let mut degree_best: Option<Candidate> = None;
        if d == 0 {
            let value = evaluate(&calc, &[])?;
            evaluations += 1;
            keep_best(&mut degree_best, Candidate { value, key: (0, 0, 0), zeros: Vec::new() });
            stopped = hit(&degree_best);
            per_degree.insert(d, degree_best.expect("degree 0 evaluated"));
            if stopped {
                break 'degrees;
            }
            continue;
        }

        let radial = budget.radial_resolution(d);
        let nodes = grid::nodes(radial, max_mod);
        let points = grid::multisets(nodes.len(), d);
        let values = exec.map(&points, |p| {
            let zeros: Vec<C64> = p.iter().map(|&k| nodes[k as usize].w).collect();
            evaluate(&calc, &zeros)
        });
        evaluations += points.len() as u64;

        let mut shell_best: BTreeMap<usize, Candidate> = BTreeMap::new();
        for (idx, (p, v)) in points.iter().zip(values).enumerate() {
            let value = v?;
            let shell = nodes[*p.last().expect("d >= 1") as usize].level;
            let zeros: Vec<C64> = p.iter().map(|&k| nodes[k as usize].w).collect();
            let c = Candidate { value, key: (d, 0, idx), zeros };
            let slot = shell_best.entry(shell).or_insert_with(|| c.clone());
            if c.beats(slot) {
                *slot = c.clone();
            }
            keep_best(&mut degree_best, c);
        }
        if hit(&degree_best) {
            stopped = true;
            per_degree.insert(d, degree_best.expect("grid evaluated"));
            break 'degrees;
        }

        let mut starts: Vec<Vec<C64>> = shell_best.values().map(|c| c.zeros.clone()).collect();
        starts.extend((0..budget.multistarts).map(|k| random_start(budget.seed, d, k, max_mod)));
        let refined = exec.map_range(starts.len(), |k| refine(&calc, &starts[k], (d, 1, k), budget.local_iters, tol));
        for r in refined {
            let r = r?;
            evaluations += r.evals as u64;
            if let Some(c) = r.best {
                keep_best(&mut degree_best, c);
            }
        }
        stopped = hit(&degree_best);
        per_degree.insert(d, degree_best.expect("grid evaluated"));
        if stopped {
            break 'degrees;
        }
    }

    let mut overall: Option<Candidate> = None;
    for c in per_degree.values() {
        keep_best(&mut overall, c.clone());
    }
    let overall = overall.expect("at least one degree searched");
    let to_product = |c: &Candidate| BlaschkeProduct::new(0.0, c.zeros.clone(), tol);
    let per_degree_bests = per_degree
        .iter()
        .map(|(&d, c)| Ok((d, DegreeBest { product: to_product(c)?, norm: c.value })))
        .collect::<Result<BTreeMap<_, _>>>()?;

    Ok(ExtremalResult {
        best_norm: overall.value,
        best: to_product(&overall)?,
        per_degree_bests,
        evaluations,
        budget_exhausted: !stopped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    fn small_budget() -> SearchBudget {
        SearchBudget { grid_resolution: 8, multistarts: 4, local_iters: 200, ..SearchBudget::default() }
    }

    #[test]
    fn objective_trivial_cases() {
        let tol = Tolerances::default();
        let e = real(&[&[0.2, 2.0], &[0.0, 0.2]]);
        assert_eq!(norm_objective(&e, &[], &tol).unwrap(), 1.0);
        let n = operator_norm(&e).unwrap();
        assert!((norm_objective(&e, &[C64::new(0.0, 0.0)], &tol).unwrap() - n).abs() < 1e-15);
        let (w, v) = (C64::new(0.3, -0.1), C64::new(-0.5, 0.4));
        let a = norm_objective(&e, &[w, v], &tol).unwrap();
        let b = norm_objective(&e, &[v, w], &tol).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(norm_objective(&e, &[C64::new(1.0, 0.0)], &tol).is_err());
    }

    #[test]
    fn exceptional_two_by_two_attains_norm_at_identity() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let r = extremal_search(&e, &small_budget(), &tol).unwrap();
        assert!((r.best_norm - 2.0).abs() < 1e-6);
        assert!(r.best_norm <= 2.0 * (1.0 + 1e-12));
        assert_eq!(r.per_degree_bests.len(), 2);
        assert!(r.budget_exhausted);
    }

    #[test]
    fn normal_contraction_obeys_von_neumann() {
        let tol = Tolerances::default();
        let e = ComplexMatrix::from_diag(&[C64::new(0.5, 0.0), C64::new(0.2, 0.0)]);
        let r = extremal_search(&e, &small_budget(), &tol).unwrap();
        assert!(r.best_norm <= 1.0 + 1e-9);
    }

    #[test]
    fn reported_best_is_reproducible() {
        let tol = Tolerances::default();
        let e = real(&[&[0.2, 2.0], &[0.0, 0.2]]);
        let r = extremal_search(&e, &small_budget(), &tol).unwrap();
        let again = norm_objective(&e, r.best.zeros(), &tol).unwrap();
        assert!((again - r.best_norm).abs() <= 1e-12);
        for b in r.per_degree_bests.values() {
            assert_eq!(norm_objective(&e, b.product.zeros(), &tol).unwrap(), b.norm);
        }
    }

    #[test]
    fn early_exit_on_target() {
        let tol = Tolerances::default();
        let e = real(&[&[0.2, 2.0], &[0.0, 0.2]]);
        let n = operator_norm(&e).unwrap();
        let r = extremal_search_until(&e, &small_budget(), &tol, n * (1.0 + 1e-7)).unwrap();
        assert!(!r.budget_exhausted);
        assert!(r.best_norm > n * (1.0 + 1e-7));
    }

    #[test]
    fn sequential_and_default_exec_agree() {
        let tol = Tolerances::default();
        let e = real(&[&[0.1, 0.9, 0.0], &[0.0, -0.2, 0.7], &[0.3, 0.0, 0.1]]);
        let b = small_budget();
        let a = search(&e, &b, &tol, None, Exec::Sequential).unwrap();
        let c = search(&e, &b, &tol, None, Exec::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn budget_validation() {
        let tol = Tolerances::default();
        let e = real(&[&[0.0, 0.3], &[2.0, 0.0]]);
        let bad = SearchBudget { degree_range: Some((0, 2)), ..small_budget() };
        assert!(matches!(extremal_search(&e, &bad, &tol), Err(Error::InvalidParameter(_))));
        let zero = SearchBudget { multistarts: 0, ..small_budget() };
        assert!(extremal_search(&e, &zero, &tol).is_err());
        let on_circle = real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(extremal_search(&on_circle, &small_budget(), &tol), Err(Error::PreconditionViolation(_))));
    }

    #[test]
    fn default_resolutions() {
        let b = SearchBudget::default();
        assert_eq!(b.radial_resolution(1), 24);
        assert!(b.radial_resolution(2) < 24);
        assert!(grid::multiset_count(grid::node_count(b.radial_resolution(2)), 2) <= b.max_grid_points);
        assert!(b.radial_resolution(7) >= 1);
    }
}
