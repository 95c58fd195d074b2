fn main() {
    // die quietly when a pipe consumer like head closes stdout early
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(osys_core::cli::main_entry());
}
