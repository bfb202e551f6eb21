use std::io::Write;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let env = std::env::vars().collect();
    let result = wpvol::cli::run_command(&argv, &env);
    print!("{}", result.stdout);
    eprint!("{}", result.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(result.code);
}
