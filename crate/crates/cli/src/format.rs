//! Number formatting and range parsing shared by the subcommands.

/// `%.12g`-style formatting; infinities print as `inf`.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses `start:stop:step`. Points are `start + i step`, and `stop` is included
/// when the grid comes strictly within half a step of it. Descending grids need a negative step.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("range '{text}' is not start:stop:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("'{s}' in range '{text}' is not a finite number"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if step == 0.0 {
        return Err(format!("range '{text}' has zero step"));
    }
    if start == stop {
        return Ok(vec![start]);
    }
    if (stop - start).signum() != step.signum() {
        return Err(format!(
            "range '{text}': step {step} does not move from {start} toward {stop}"
        ));
    }
    let count = ((stop - start) / step - 0.5).ceil() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("'{s}' in list '{text}' is not valid"))
        })
        .collect()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
