/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back as the rounded value.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}")
        .parse()
        .expect("scientific notation parses");
    rounded.to_string()
}

/// Five decimal places with trailing zeros removed.
pub fn fixed5(x: f64) -> String {
    let s = format!("{x:.5}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".into(),
        s => s.to_string(),
    }
}
