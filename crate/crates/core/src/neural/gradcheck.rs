//! Central finite-difference verification of analytic gradients.

use super::Parameters;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub checked: usize,
}

/// Relative error with a small floor on the denominator so that
/// near-zero gradients are compared absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Perturbs every scalar parameter by ±h and compares the central
/// difference of `loss` against `analytic`.
pub fn check_gradients<M, F>(model: &M, analytic: &M, loss: F, h: f64) -> GradCheckReport
where
    M: Parameters + Clone,
    F: Fn(&M) -> f64,
{
    let coords: Vec<(usize, usize)> = model
        .tensors()
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| (0..t.len()).map(move |k| (ti, k)))
        .collect();
    check_gradient_coords(model, analytic, loss, h, &coords)
}

/// Like [`check_gradients`] but only for the listed (tensor, element)
/// coordinates.
pub fn check_gradient_coords<M, F>(model: &M, analytic: &M, loss: F, h: f64, coords: &[(usize, usize)]) -> GradCheckReport
where
    M: Parameters + Clone,
    F: Fn(&M) -> f64,
{
    let names = model.param_names();
    let grads = analytic.tensors();
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        checked: 0,
    };
    for &(ti, k) in coords {
        let a = grads[ti].data()[k];
        let orig = probe.tensors()[ti].data()[k];
        probe.tensors_mut()[ti].data_mut()[k] = orig + h;
        let up = loss(&probe);
        probe.tensors_mut()[ti].data_mut()[k] = orig - h;
        let down = loss(&probe);
        probe.tensors_mut()[ti].data_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let err = relative_error(a, numeric);
        report.checked += 1;
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_param = format!("{}[{k}] analytic {a:e} numeric {numeric:e}", names[ti]);
        }
    }
    report
}

/// `per_tensor` random coordinates from every tensor (all of them when the
/// tensor is smaller).
pub fn sample_coords<M: Parameters>(model: &M, per_tensor: usize, rng: &mut impl rand::Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ti, t) in model.tensors().iter().enumerate() {
        if t.len() <= per_tensor {
            out.extend((0..t.len()).map(|k| (ti, k)));
        } else {
            out.extend((0..per_tensor).map(|_| (ti, rng.random_range(0..t.len()))));
        }
    }
    out
}
