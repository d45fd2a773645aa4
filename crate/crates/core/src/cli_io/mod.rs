//! Problem-file parsing, command dispatch, and report emission — the
//! artifact's user surface. Problem files are JSON with expression strings
//! in the engine grammar; see `docs/problem-schema.md`.

mod load;
mod run;

pub use load::{load_problem, problem_from_str, ProblemError, ProblemFile};
pub use run::{run, Command, ReportDocument, RunFlags};
