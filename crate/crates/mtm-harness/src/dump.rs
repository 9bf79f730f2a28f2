//! Raw trajectory dumps for external analysis.

use std::path::Path;

use crate::error::Result;
use crate::experiment::{run_single_trace, ExperimentSpec};

/// Renders a single chain as plain text: one line per stored state holding
/// the space-separated coordinates plus a 0/1 flag that marks whether the
/// state was entered by an accepted move. The first line is the initial
/// state and always carries flag 0, so `steps` iterations produce
/// `steps + 1` lines.
pub fn render_dump(spec: &ExperimentSpec, steps: usize) -> Result<String> {
    let trace = run_single_trace(spec, steps)?;
    let mut text = String::new();
    for (i, state) in trace.states.iter().enumerate() {
        for (c, coord) in state.coords().iter().enumerate() {
            if c > 0 {
                text.push(' ');
            }
            text.push_str(&format!("{coord}"));
        }
        let flag = if i == 0 { 0 } else { u8::from(trace.records[i - 1].accepted) };
        text.push_str(&format!(" {flag}\n"));
    }
    Ok(text)
}

/// Writes the dump for `spec` to `out`.
pub fn write_dump(spec: &ExperimentSpec, steps: usize, out: &Path) -> Result<()> {
    let text = render_dump(spec, steps)?;
    std::fs::write(out, text)?;
    Ok(())
}
