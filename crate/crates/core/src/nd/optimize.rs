//! Derivative-free minimization (Nelder–Mead) for the direction refinement.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 200,
            xtol: 1e-7,
            ftol: 0.0,
        }
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0` with an axis-aligned initial simplex of size
    /// `step`. Returns the best point, its value and the evaluation count.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], step: f64) -> (Vec<f64>, f64, usize) {
        let n = x0.len();
        if n == 0 {
            let v = f(x0);
            return (Vec::new(), v, 1);
        }
        let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += step;
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
        let mut evals = n + 1;
        let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };
        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
            let size = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size <= self.xtol || (values[n] - values[0]).abs() <= self.ftol && size <= step * 1e-3 {
                break;
            }
            let mut centroid = vec![0.0; n];
            for p in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x / n as f64;
                }
            }
            let worst = simplex[n].clone();
            let reflected = combine(&centroid, &worst, -1.0);
            let fr = f(&reflected);
            evals += 1;
            if fr < values[0] {
                let expanded = combine(&centroid, &worst, -2.0);
                let fe = f(&expanded);
                evals += 1;
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
            } else {
                let (target, ft) = if fr < values[n] { (&reflected, fr) } else { (&worst, values[n]) };
                let contracted = combine(&centroid, target, 0.5);
                let fc = f(&contracted);
                evals += 1;
                if fc < ft {
                    simplex[n] = contracted;
                    values[n] = fc;
                } else {
                    let best = simplex[0].clone();
                    for i in 1..=n {
                        simplex[i] = combine(&best, &simplex[i], 0.5);
                        values[i] = f(&simplex[i]);
                    }
                    evals += n;
                }
            }
        }
        let (i, _) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty simplex");
        (simplex[i].clone(), values[i], evals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic() {
        let nm = NelderMead {
            max_evals: 2000,
            xtol: 1e-10,
            ftol: 0.0,
        };
        let (x, v, _) = nm.minimize(|p| (p[0] - 1.0).powi(2) + 3.0 * (p[1] + 2.0).powi(2), &[0.0, 0.0], 0.5);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] + 2.0).abs() < 1e-6 && v < 1e-10);
    }

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_evals: 5000,
            xtol: 1e-10,
            ftol: 0.0,
        };
        let (x, _, _) = nm.minimize(
            |p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2),
            &[-1.2, 1.0],
            0.3,
        );
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }
}
