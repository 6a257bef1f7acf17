use clap::Parser;

fn main() {
    let cli = tdual_cli::Cli::parse();
    let code = tdual_cli::main_with(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
