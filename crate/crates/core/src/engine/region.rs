//! The disagreement test.

use crate::error::{Error, Result};
use crate::hypotheses::{empirical_error, within_tau, Classifier, LabeledExample, Space, Tau};

/// Whether `x` lies in the disagreement region of `V(s_hat, tau)`, by two
/// constrained ERM calls: `x` is in the region iff forcing the label
/// opposite to the unconstrained ERM's prediction at `x` costs at most
/// `tau` in empirical error. If no classifier can take the opposite label
/// at `x`, the point is reported as inside, which routes it to a query.
///
/// This is the uncached reference; learners use [`Space::build_region`].
pub fn in_disagreement_region<S: Space>(
    s_hat: &[LabeledExample<S::Point>],
    tau: Tau,
    x: &S::Point,
) -> Result<bool> {
    if s_hat.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let h = S::cons_learn(&[], s_hat)?;
    let base = empirical_error(&h, s_hat)?;
    let forced = [LabeledExample::new(*x, h.predict(x).flip())];
    match S::cons_learn(&forced, s_hat) {
        Ok(h_x) => {
            let alt = empirical_error(&h_x, s_hat)?;
            Ok(within_tau(base.errors, alt.errors, base.total, tau))
        }
        Err(Error::Infeasible) => Ok(true),
        Err(e) => Err(e),
    }
}
