use std::io::Write;

use bgsfuse::search::{count_combinations, count_selections};
use bgsfuse::Strategy;

use crate::error::CliError;

/// Prints selection and combiner counts for `n` algorithms and sizes `1..=k_max`.
pub fn run(n: usize, k_max: usize, w: &mut impl Write) -> Result<(), CliError> {
    if n == 0 || n > 64 {
        return Err(CliError::Config(format!("cannot count for {n} algorithms")));
    }
    if k_max == 0 || k_max > n {
        return Err(CliError::Config(format!("k_max = {k_max} must lie in 1..={n}")));
    }
    let mut text = format!("n {n}\nk_max {k_max}\nselections {}\n", count_selections(n, k_max));
    for s in Strategy::ALL {
        text.push_str(&format!("{s} {}\n", count_combinations(s, n, k_max)));
    }
    w.write_all(text.as_bytes()).map_err(CliError::data)
}
