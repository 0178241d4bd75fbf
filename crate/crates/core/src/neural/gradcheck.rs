use super::tensor::{Grads, ParamId, ParamStore};
use crate::error::{Error, Result};

/// Magnitudes below this are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    pub passed: bool,
}

/// Compare analytic gradients with central finite differences.
///
/// `loss_fn` returns the loss and its analytic gradients for the current
/// parameter values. The relative error per entry is
/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn grad_check<F>(store: &mut ParamStore, loss_fn: F, epsilon: f64, tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore) -> (f64, Grads),
{
    let (loss, analytic) = loss_fn(store);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: 0, loss });
    }
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
        passed: true,
    };
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        for k in 0..store.get(id).len() {
            let orig = store.get(id).data[k];
            store.get_mut(id).data[k] = orig + epsilon;
            let (plus, _) = loss_fn(store);
            store.get_mut(id).data[k] = orig - epsilon;
            let (minus, _) = loss_fn(store);
            store.get_mut(id).data[k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: 0,
                    loss: if plus.is_finite() { minus } else { plus },
                });
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.get(id)[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            report.checked += 1;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = Some((store.params()[id.0].name.clone(), k));
            }
        }
    }
    report.passed = report.max_relative_error < tolerance;
    Ok(report)
}
