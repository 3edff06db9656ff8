use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match abcboost_cli::train::train_main(&args) {
        Ok(out) => {
            println!(
                "trained {} iterations; wrote {} and {}",
                out.iterations_run,
                out.model_path.display(),
                out.trainlog_path.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("abcboost_train: {e}");
            ExitCode::FAILURE
        }
    }
}
