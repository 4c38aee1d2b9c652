//! Central finite-difference verification of analytic gradients.

use super::ParamStore;

/// Worst disagreement found by [`finite_diff_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_offset: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Compares analytic gradients with central differences for every scalar
/// parameter in `store`.
///
/// `loss(store, backward)` must evaluate the scalar loss at the store's
/// current values and, when `backward` is set, accumulate its gradient into
/// the store. Gradients are zeroed before the analytic pass and left zeroed
/// on return.
pub fn finite_diff_check<F>(store: &mut ParamStore, epsilon: f64, mut loss: F) -> GradCheckReport
where
    F: FnMut(&mut ParamStore, bool) -> f64,
{
    assert!(epsilon > 0.0, "epsilon must be positive");
    store.zero_grad();
    loss(store, true);
    let analytic = store.flat_grads();
    store.zero_grad();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_offset: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: analytic.len(),
    };
    for (flat, &a) in analytic.iter().enumerate() {
        let (id, offset) = store.locate(flat).expect("flat index in range");
        let original = store.value(id).data()[offset];

        store.value_mut(id).data_mut()[offset] = original + epsilon;
        let plus = loss(store, false);
        store.value_mut(id).data_mut()[offset] = original - epsilon;
        let minus = loss(store, false);
        store.value_mut(id).data_mut()[offset] = original;

        let numeric = (plus - minus) / (2.0 * epsilon);
        let err = relative_error(a, numeric);
        if err > report.max_rel_error || report.worst_param.is_empty() {
            report.max_rel_error = err;
            report.worst_param = store.name(id).to_string();
            report.worst_offset = offset;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    store.zero_grad();
    report
}
