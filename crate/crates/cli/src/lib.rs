//! Command-line front end: subcommands, run configuration and the pipeline manifest.

pub mod config;
pub mod pipeline;
pub mod steps;

/// Why a command stopped. Validation problems exit with 2, numerical failures with 3.
#[derive(Debug)]
pub enum Failure {
    Validation(Vec<String>),
    Step { step: &'static str, error: swbi::Error },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Step { error, .. } if error.is_numerical() => 3,
            _ => 2,
        }
    }

    pub fn report(&self) {
        match self {
            Failure::Validation(errors) => {
                eprintln!("error: invalid configuration ({} problem{})", errors.len(), if errors.len() == 1 { "" } else { "s" });
                for e in errors {
                    eprintln!("  - {e}");
                }
            }
            Failure::Step { step, error } => eprintln!("error: step `{step}` failed: {error}"),
        }
    }
}
