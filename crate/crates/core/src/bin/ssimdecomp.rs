fn main() { std::process::exit(ssimdecomp::cli::main()) }
