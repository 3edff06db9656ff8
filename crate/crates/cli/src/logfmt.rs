//! Train/test log lines: `iter loss [errors] seconds`, loss in C-style
//! scientific notation, whitespace separated.

use crate::error::CliError;

/// One parsed log line.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub iteration: usize,
    pub loss: f64,
    pub errors: Option<usize>,
    pub seconds: f64,
    /// Base class column emitted by the adaptive methods; -1 during warm-up.
    pub base_class: Option<i64>,
}

/// `printf("%.*e")`-style formatting: fixed mantissa digits and a signed
/// two-digit exponent, e.g. `3.06638501851082e+04`.
pub fn c_scientific(x: f64, precision: usize) -> String {
    let formatted = format!("{x:.precision$e}");
    let (mantissa, exponent) = formatted.split_once('e').expect("exponential format");
    let exp: i32 = exponent.parse().expect("numeric exponent");
    format!(
        "{mantissa}e{}{:02}",
        if exp < 0 { '-' } else { '+' },
        exp.abs()
    )
}

/// Format one log line. `errors` adds the classification error column;
/// `base_class` appends the adaptive-base column.
pub fn format_line(
    iteration: usize,
    loss: f64,
    errors: Option<usize>,
    seconds: f64,
    base_class: Option<i64>,
) -> String {
    let mut line = format!("{iteration:4} {}", c_scientific(loss, 14));
    if let Some(e) = errors {
        line.push_str(&format!(" {e:7}"));
    }
    line.push_str(&format!(" {seconds:.5}"));
    if let Some(b) = base_class {
        line.push_str(&format!(" {b}"));
    }
    line
}

/// Reference reader for the log format. `classification` decides whether an
/// error-count column is expected between the loss and the seconds.
pub fn parse_line(line: &str, classification: bool) -> Result<LogRecord, CliError> {
    let bad = |msg: &str| CliError::ModelFormat(format!("log line {line:?}: {msg}"));
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let expected = if classification { 3 } else { 2 } + 1;
    if tokens.len() < expected {
        return Err(bad("too few columns"));
    }
    let iteration = tokens[0].parse().map_err(|_| bad("bad iteration"))?;
    let loss = tokens[1].parse().map_err(|_| bad("bad loss"))?;
    let (errors, rest) = if classification {
        (
            Some(tokens[2].parse().map_err(|_| bad("bad error count"))?),
            &tokens[3..],
        )
    } else {
        (None, &tokens[2..])
    };
    let seconds = rest[0].parse().map_err(|_| bad("bad seconds"))?;
    let base_class = match rest.get(1) {
        Some(tok) => Some(tok.parse().map_err(|_| bad("bad base class"))?),
        None => None,
    };
    Ok(LogRecord {
        iteration,
        loss,
        errors,
        seconds,
        base_class,
    })
}
