use super::{Graph, ParamId, ParamStore, Var};

/// Outcome of comparing analytic gradients with central differences.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

/// Relative error `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps exactly
/// zero gradients from dividing round-off by zero.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares the gradient of the scalar built by `f` against central finite
/// differences with step `epsilon` for every coordinate of every
/// parameter. `f` must be deterministic (build inference graphs only).
pub fn grad_check<F>(store: &ParamStore<f64>, f: F, epsilon: f64) -> GradCheck
where
    F: Fn(&mut Graph<'_, f64>) -> Var,
{
    let mut grads = store.gradients();
    {
        let mut g = Graph::new(store);
        let loss = f(&mut g);
        g.backward(loss, &mut grads);
    }

    let eval = |s: &ParamStore<f64>| {
        let mut g = Graph::new(s);
        let loss = f(&mut g);
        g.value(loss).item()
    };

    let mut probe = store.clone();
    let mut report = GradCheck {
        max_relative_error: 0.0,
        worst: None,
        coordinates: 0,
    };
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        for k in 0..store.value(id).len() {
            let original = store.value(id).data()[k];
            probe.value_mut(id).data_mut()[k] = original + epsilon;
            let plus = eval(&probe);
            probe.value_mut(id).data_mut()[k] = original - epsilon;
            let minus = eval(&probe);
            probe.value_mut(id).data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[k]);
            let err = relative_error(analytic, numeric);
            report.coordinates += 1;
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((store.name(id).to_owned(), k));
            }
        }
    }
    report
}
