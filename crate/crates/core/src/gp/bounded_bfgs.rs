//! Small projected quasi-Newton minimizer for box-constrained problems with
//! a handful of variables (GP hyperparameters on log scale).

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
}

pub(crate) struct Settings {
    pub max_iter: usize,
    pub pgtol: f64,
    pub ftol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_iter: 100,
            pgtol: 1e-5,
            ftol: 1e-10,
        }
    }
}

/// Minimize `f` over `[lower, upper]` starting from `x0`.
///
/// `f` returns the value and gradient, or `None` where it is undefined;
/// undefined points are treated as `+inf` by the line search. Returns `None`
/// only when `f` is undefined at the (clamped) start.
pub(crate) fn minimize<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &Settings,
) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let project = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut x = x0.to_vec();
    project(&mut x);
    let (mut fx, mut g) = f(&x).filter(|(v, g)| v.is_finite() && g.iter().all(|c| c.is_finite()))?;
    let mut h = identity(n);

    for _ in 0..settings.max_iter {
        // variables pinned at a bound with the gradient pushing outward stay fixed
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let pg = (0..n)
            .map(|i| ((x[i] - g[i]).clamp(lower[i], upper[i]) - x[i]).abs())
            .fold(0.0, f64::max);
        if pg < settings.pgtol {
            break;
        }

        let mut d = vec![0.0; n];
        for i in (0..n).filter(|i| free[*i]) {
            d[i] = -(0..n).filter(|j| free[*j]).map(|j| h[i][j] * g[j]).sum::<f64>();
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(n);
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                break;
            }
        }

        // cap the first trial step so one iteration cannot jump across the box
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut step = if dmax > 5.0 { 5.0 / dmax } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            project(&mut xn);
            let decrease: f64 = g.iter().zip(xn.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if let Some((fnew, gnew)) = f(&xn) {
                if fnew.is_finite()
                    && gnew.iter().all(|c| c.is_finite())
                    && fnew <= fx + 1e-4 * decrease.min(0.0)
                {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let converged = (fx - fnew).abs() <= settings.ftol * fx.abs().max(fnew.abs()).max(1.0);
        x = xn;
        fx = fnew;
        g = gnew;
        if converged {
            break;
        }
        if sy > 1e-12 {
            bfgs_update(&mut h, &s, &yv, sy);
        }
    }
    Some(Minimum { x, f: fx })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Inverse-Hessian BFGS update.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_interior_minimum() {
        let f = |x: &[f64]| {
            let v = (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
            Some((v, vec![2.0 * (x[0] - 1.0), 6.0 * (x[1] + 0.5)]))
        };
        let m = minimize(f, &[3.0, 2.0], &[-5.0, -5.0], &[5.0, 5.0], &Settings::default()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn minimum_on_the_boundary() {
        let f = |x: &[f64]| Some((x[0] * x[0] + x[1], vec![2.0 * x[0], 1.0]));
        let m = minimize(f, &[0.7, 0.3], &[-1.0, 0.0], &[1.0, 1.0], &Settings::default()).unwrap();
        assert!(m.x[0].abs() < 1e-5);
        assert_eq!(m.x[1], 0.0);
    }

    #[test]
    fn rosenbrock_valley() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let ga = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            let gb = 200.0 * (b - a * a);
            Some((v, vec![ga, gb]))
        };
        let s = Settings {
            max_iter: 500,
            ..Settings::default()
        };
        let m = minimize(f, &[-1.2, 1.0], &[-2.0, -2.0], &[2.0, 2.0], &s).unwrap();
        assert!(m.f < 1e-6, "f = {}", m.f);
    }

    #[test]
    fn undefined_start() {
        let f = |_: &[f64]| None;
        assert!(minimize(f, &[0.0], &[-1.0], &[1.0], &Settings::default()).is_none());
    }
}
