fn main() {
    std::process::exit(auctionlab::cli::run(std::env::args_os()));
}
