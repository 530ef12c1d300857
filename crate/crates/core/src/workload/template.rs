//! Source templates for fuzzing user implementations.

use std::fmt::Write;

use crate::model::{ArgHint, Model};

/// Renders a fuzzer skeleton for `model` with one stub per signature entry.
///
/// Each stub panics with `"<Op> is not bound"` until it is filled in.
pub fn emit_fuzzer_template<M: Model>(model: &M) -> String {
    let sig = model.signature();
    let mut out = String::new();
    let name = model.name();
    let w = &mut out;
    let _ = writeln!(w, "//! Fuzzer for an implementation of the `{name}` model.");
    let _ = writeln!(w, "//!");
    let _ = writeln!(
        w,
        "//! Bind each action to the implementation under test. Wrap only the"
    );
    let _ = writeln!(
        w,
        "//! implementation call in `ctx.timed`; build arguments and results outside."
    );
    let _ = writeln!(w);
    let _ = writeln!(w, "#![allow(unused_imports, unused_variables, dead_code)]");
    let _ = writeln!(w);
    let _ = writeln!(w, "use boxcheck::value::Value;");
    let _ = writeln!(
        w,
        "use boxcheck::workload::{{run_fuzzer, CallCtx, FuzzTarget, HarnessConfig, Recorded, WorkloadError}};"
    );
    let _ = writeln!(w, "use boxcheck::Trace;");
    let _ = writeln!(w);
    let _ = writeln!(w, "pub const MODEL: &str = \"{name}\";");
    let _ = writeln!(w);
    let _ = writeln!(w, "/// State shared by every fuzzer thread.");
    let _ = writeln!(w, "pub struct Target {{");
    let _ = writeln!(w, "    // TODO: the implementation under test.");
    let _ = writeln!(w, "}}");
    let _ = writeln!(w);
    let _ = writeln!(w, "impl FuzzTarget for Target {{");
    let _ = writeln!(w, "    fn actions(&self) -> &[&'static str] {{");
    let list: Vec<String> = sig.iter().map(|s| format!("\"{}\"", s.name)).collect();
    let _ = writeln!(w, "        &[{}]", list.join(", "));
    let _ = writeln!(w, "    }}");
    let _ = writeln!(w);
    let _ = writeln!(
        w,
        "    fn call(&self, action: &str, ctx: &mut CallCtx<'_>) -> Option<Recorded> {{"
    );
    let _ = writeln!(w, "        match action {{");
    for s in sig {
        let _ = writeln!(
            w,
            "            \"{}\" => self.{}(ctx),",
            s.name,
            snake_case(s.name)
        );
    }
    let _ = writeln!(w, "            _ => None,");
    let _ = writeln!(w, "        }}");
    let _ = writeln!(w, "    }}");
    let _ = writeln!(w, "}}");
    let _ = writeln!(w);
    let _ = writeln!(w, "impl Target {{");
    for (i, s) in sig.iter().enumerate() {
        if i > 0 {
            let _ = writeln!(w);
        }
        let args: Vec<&str> = s.args.iter().map(|a| hint_name(*a)).collect();
        let _ = writeln!(w, "    /// Records `{}({})`.", s.name, args.join(", "));
        let _ = writeln!(
            w,
            "    fn {}(&self, ctx: &mut CallCtx<'_>) -> Option<Recorded> {{",
            snake_case(s.name)
        );
        let _ = writeln!(w, "        unimplemented!(\"{} is not bound\")", s.name);
        let _ = writeln!(w, "    }}");
    }
    let _ = writeln!(w, "}}");
    let _ = writeln!(w);
    let _ = writeln!(
        w,
        "/// Runs the fuzzer against `target` and returns the recorded trace."
    );
    let _ = writeln!(w, "pub fn record(");
    for param in [
        "target: &Target",
        "threads: usize",
        "ops_per_thread: usize",
        "seed: u64",
    ] {
        let _ = writeln!(w, "    {param},");
    }
    let _ = writeln!(w, ") -> Result<Trace, WorkloadError> {{");
    let _ = writeln!(
        w,
        "    let cfg = HarnessConfig::new(MODEL, threads, ops_per_thread, seed);"
    );
    let _ = writeln!(w, "    run_fuzzer(target, &cfg)");
    let _ = writeln!(w, "}}");
    out
}

fn hint_name(h: ArgHint) -> &'static str {
    match h {
        ArgHint::Int => "Int",
        ArgHint::Bool => "Bool",
        ArgHint::Any => "Any",
        ArgHint::Tuple => "Tuple",
    }
}

fn snake_case(op: &str) -> String {
    let mut s = String::with_capacity(op.len() + 4);
    for (i, c) in op.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                s.push('_');
            }
            s.push(c.to_ascii_lowercase());
        } else {
            s.push(c);
        }
    }
    s
}
