use clap::Parser;

fn main() {
    let cli = snapgrip_cli::Cli::parse();
    match snapgrip_cli::run(&cli) {
        Ok(bundle) => {
            println!(
                "wrote {} file(s) to {}: {}",
                bundle.outputs.len(),
                bundle.out_dir.display(),
                bundle.outputs.join(", ")
            );
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(snapgrip_cli::exit_code_for(&err));
        }
    }
}
