//! Box-bounded Nelder–Mead simplex minimizer.

#[derive(Debug, Clone, Copy)]
pub(crate) struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Converged once the spread of simplex values or the simplex diameter falls below this.
    pub tolerance: f64,
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    #[allow(dead_code)]
    pub iterations: usize,
}

fn clamp(point: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((p, lo), hi) in point.iter_mut().zip(lower).zip(upper) {
        *p = p.clamp(*lo, *hi);
    }
}

/// Non-finite objective values are treated as +∞.
pub(crate) fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: NelderMeadOptions,
) -> Minimum {
    let n = start.len();
    let mut eval = |p: &[f64]| {
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0, lower, upper);
    simplex.push(x0.clone());
    for i in 0..n {
        let mut p = x0.clone();
        p[i] += opts.initial_step;
        if p[i] > upper[i] {
            p[i] = x0[i] - opts.initial_step;
        }
        clamp(&mut p, lower, upper);
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        // order best → worst; stable so ties keep insertion order
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        let diameter = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if (values[0].is_finite() && spread <= opts.tolerance * (1.0 + values[0].abs()))
            || diameter <= opts.tolerance
        {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut p, lower, upper);
            p
        };

        let reflected = along(1.0);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let p = along(0.5);
            let v = eval(&p);
            (p, v)
        } else {
            let p = along(-0.5);
            let v = eval(&p);
            (p, v)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(p, b)| b + 0.5 * (p - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        point: simplex[best].clone(),
        value: values[best],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: NelderMeadOptions = NelderMeadOptions {
        max_iterations: 2000,
        tolerance: 1e-12,
        initial_step: 0.5,
    };

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let m = minimize(rosen, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], OPTS);
        assert!((m.point[0] - 1.0).abs() < 1e-4, "{:?}", m);
        assert!((m.point[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn respects_bounds() {
        let m = minimize(
            |p| p[0] + p[1] + p[2],
            &[0.0, 0.0, 0.0],
            &[-1.0, -2.0, -3.0],
            &[1.0; 3],
            OPTS,
        );
        assert_eq!(m.point, vec![-1.0, -2.0, -3.0]);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |p: &[f64]| {
            if p[0] < 0.0 {
                f64::NAN
            } else {
                (p[0] - 0.5).powi(2)
            }
        };
        let m = minimize(f, &[2.0], &[-10.0], &[10.0], OPTS);
        assert!((m.point[0] - 0.5).abs() < 1e-5);
    }
}
