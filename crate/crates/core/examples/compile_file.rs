use jointsmith_core::validation::{compile_source, render_compile_signals, LoopState, ValidationOptions};

fn main() {
    let path = std::env::args().nth(1).expect("usage: compile_file FILE");
    let src = std::fs::read_to_string(path).expect("readable file");
    let out = compile_source(&src, &ValidationOptions::default());
    println!("{}", render_compile_signals(&out.report, &LoopState::default()));
    for t in &out.report.tests {
        println!("{} {} {}", if t.passed { "pass" } else { "FAIL" }, t.label, t.detail);
    }
}
