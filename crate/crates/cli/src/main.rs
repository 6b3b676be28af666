fn main() {
    std::process::exit(vibro_ad_cli::main_with_args(std::env::args_os()));
}
