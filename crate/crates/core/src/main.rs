use std::io::Write;

fn main() {
    let (stdin, stdout, stderr) = (std::io::stdin(), std::io::stdout(), std::io::stderr());
    let mut out = stdout.lock();
    let code = gustl::cli::run_cli(std::env::args_os(), &mut stdin.lock(), &mut out, &mut stderr.lock());
    let _ = out.flush();
    std::process::exit(code);
}
