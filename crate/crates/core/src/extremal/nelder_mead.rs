//! Nelder-Mead simplex maximization with standard coefficients
//! (reflection 1, expansion 2, contraction 1/2, shrink 1/2).

use crate::error::Result;

pub(crate) struct NelderMead {
    pub max_evals: usize,
    /// Stop once the spread of simplex values falls below `ftol * max(1, |f|)`
    /// and the simplex diameter below `xtol`.
    pub ftol: f64,
    pub xtol: f64,
}

pub(crate) struct Outcome {
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Maximizes `f` from `x0` with initial steps `steps`. Every evaluation is
    /// reported to `f`, which is expected to keep track of the best point.
    pub fn maximize<F>(&self, x0: &[f64], steps: &[f64], mut f: F) -> Result<Outcome>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let dim = x0.len();
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
            *evals += 1;
            // minimize the negation
            Ok(-f(x)?)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(x0, &mut evals)?;
        simplex.push((x0.to_vec(), v0));
        for k in 0..dim {
            if evals >= self.max_evals {
                return Ok(Outcome { evals, converged: false });
            }
            let mut x = x0.to_vec();
            x[k] += steps[k];
            let v = eval(&x, &mut evals)?;
            simplex.push((x, v));
        }

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[dim].1);
            let spread = worst - best;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread <= self.ftol * best.abs().max(1.0) && diameter <= self.xtol {
                return Ok(Outcome { evals, converged: true });
            }
            if evals >= self.max_evals {
                return Ok(Outcome { evals, converged: false });
            }

            let mut centroid = vec![0.0; dim];
            for (x, _) in &simplex[..dim] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / dim as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[dim].0).map(|(c, w)| c + t * (w - c)).collect()
            };

            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals)?;
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals)?;
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            };
            if fc < fr.min(worst) {
                simplex[dim] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for (x, v) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&x_best) {
                    *xi = bi + 0.5 * (*xi - bi);
                }
                *v = eval(x, &mut evals)?;
                if evals >= self.max_evals {
                    return Ok(Outcome { evals, converged: false });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_maximum_of_concave_quadratic() {
        let nm = NelderMead { max_evals: 2000, ftol: 1e-14, xtol: 1e-9 };
        let mut best = f64::NEG_INFINITY;
        let out = nm
            .maximize(&[0.0, 0.0], &[0.5, 0.5], |x| {
                let v = -(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 0.5).powi(2) + 3.0;
                best = best.max(v);
                Ok(v)
            })
            .unwrap();
        assert!(out.converged);
        assert!((best - 3.0).abs() < 1e-12);
    }

    #[test]
    fn respects_evaluation_budget() {
        let nm = NelderMead { max_evals: 10, ftol: 0.0, xtol: 0.0 };
        let mut count = 0;
        let out = nm
            .maximize(&[0.0; 3], &[1.0; 3], |x| {
                count += 1;
                Ok(-x.iter().map(|v| v * v).sum::<f64>())
            })
            .unwrap();
        assert!(!out.converged);
        assert_eq!(count, out.evals);
        assert!(out.evals <= 10 + 3);
    }
}
