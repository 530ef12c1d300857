use super::{validate_trace, Rule, Trace, TraceError};

/// Collapses every action that carries a refined instant to the degenerate
/// box `[refined, refined]`. Boxes only ever shrink.
pub fn shrink_timeboxes(tr: &Trace) -> Result<Trace, TraceError> {
    let mut out = tr.clone();
    for seq in out.threads_mut() {
        for a in seq.iter_mut() {
            if let Some(r) = a.refined_ns {
                a.start_ns = r;
                a.end_ns = r;
            }
        }
    }
    let violations = validate_trace(&out);
    if let Some(v) = violations.iter().find(|v| v.rule == Rule::OverlapsPrevious) {
        return Err(TraceError::RetimeOverlap {
            thread: v.thread,
            first: v.index - 1,
            second: v.index,
        });
    }
    if !violations.is_empty() {
        return Err(TraceError::Invalid(violations));
    }
    Ok(out)
}
