use crate::error::{Error, Result};

/// `c · sqrt(ln|V| / ((|V| + d̄) · T))`, the delayed exponential-weights rate.
pub fn learning_rate(action_count: usize, delay_bound: u64, horizon: u64, scale: f64) -> Result<f64> {
    if action_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "learning rate needs at least two actions, got {action_count}"
        )));
    }
    if horizon == 0 || !(scale > 0.0) {
        return Err(Error::InvalidArgument(
            "horizon and scale must be positive".into(),
        ));
    }
    let n = action_count as f64;
    Ok(scale * ((n.ln()) / ((n + delay_bound as f64) * horizon as f64)).sqrt())
}

/// `sqrt(ln|V| / (|V| · T · (1 + M̄/4)))`, the rate tuned to a known average
/// maximum cumulative error. Only usable when `M̄` is measured after the fact.
pub fn tuned_learning_rate(action_count: usize, horizon: u64, mean_max_error: f64) -> Result<f64> {
    if action_count < 2 || horizon == 0 || !(mean_max_error >= 0.0) {
        return Err(Error::InvalidArgument(
            "tuned rate needs |V| >= 2, T > 0 and M >= 0".into(),
        ));
    }
    let n = action_count as f64;
    Ok((n.ln() / (n * horizon as f64 * (1.0 + mean_max_error / 4.0))).sqrt())
}
