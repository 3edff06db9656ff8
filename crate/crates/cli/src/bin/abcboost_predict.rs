use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match abcboost_cli::predict::predict_main(&args) {
        Ok(out) => {
            println!(
                "wrote {} and {}",
                out.prediction_path.display(),
                out.testlog_path.display()
            );
            if let Some(p) = out.probability_path {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("abcboost_predict: {e}");
            ExitCode::FAILURE
        }
    }
}
