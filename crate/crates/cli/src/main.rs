use std::process::ExitCode;

fn main() -> ExitCode {
    // CPV_THREADS bounds the worker pool; reports do not depend on it
    if let Some(n) = std::env::var("CPV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let code = cpv_cli::run(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    ExitCode::from(code as u8)
}
