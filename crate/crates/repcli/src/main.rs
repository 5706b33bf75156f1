use std::process::ExitCode;

fn main() -> ExitCode {
    match repcli::commands::run_with_args(std::env::args()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => match e.downcast_ref::<clap::Error>() {
            Some(c) => c.exit(),
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
