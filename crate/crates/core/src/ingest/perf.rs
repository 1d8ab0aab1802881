//! `perf stat -x<sep>` output.
//!
//! Counter lines have the form `value<sep>unit<sep>event<sep>...`. User time is
//! read from a counter line whose event is `user_time` (or `seconds user`), or
//! from a human-style `<secs> seconds user` trailer line.

use super::IngestError;
use crate::types::PerfCtcFeatures;

const SEPARATORS: [char; 4] = [';', '\t', '|', ','];

/// Strips modifiers (`instructions:u`) and PMU prefixes (`cpu_core/cycles/`).
fn event_base(name: &str) -> String {
    let name = name.trim();
    let name = match (name.find('/'), name.rfind('/')) {
        (Some(a), Some(b)) if b > a => &name[a + 1..b],
        _ => name,
    };
    let name = name.split(':').next().unwrap_or(name);
    name.trim().to_ascii_lowercase()
}

fn detect_separator(text: &str) -> char {
    let counter_lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && l.contains("instructions"))
        .collect();
    SEPARATORS
        .into_iter()
        .find(|sep| counter_lines.iter().any(|l| l.contains(*sep)))
        .unwrap_or(',')
}

fn parse_count(token: &str, sep: char, line: usize) -> Result<u64, IngestError> {
    let mut cleaned: String = token.trim().chars().filter(|c| *c != '_').collect();
    if sep != ',' {
        cleaned.retain(|c| c != ',');
    }
    if let Ok(v) = cleaned.parse::<u64>() {
        return Ok(v);
    }
    // perf occasionally prints scaled counts as `123456.00`
    match cleaned.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && v.fract() == 0.0 => Ok(v as u64),
        _ => Err(IngestError::NonNumericValue {
            line,
            token: token.trim().to_owned(),
        }),
    }
}

fn parse_seconds(token: &str, line: usize) -> Result<f64, IngestError> {
    match token.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(IngestError::NonNumericValue {
            line,
            token: token.trim().to_owned(),
        }),
    }
}

/// Parses machine-readable `perf stat` output, auto-detecting the field separator.
pub fn parse_perf_stat(text: &str) -> Result<PerfCtcFeatures, IngestError> {
    parse_perf_stat_with_separator(text, detect_separator(text))
}

pub fn parse_perf_stat_with_separator(
    text: &str,
    sep: char,
) -> Result<PerfCtcFeatures, IngestError> {
    let mut instructions = None;
    let mut cycles = None;
    let mut user_time = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(secs) = line.strip_suffix("seconds user") {
            user_time = Some(parse_seconds(secs, line_no)?);
            continue;
        }
        let fields: Vec<&str> = line.split(sep).collect();
        if fields.len() < 2 {
            continue;
        }
        // value is the first field; the event is the first later field naming a known counter
        let Some(event) = fields[1..].iter().map(|f| event_base(f)).find(|e| {
            matches!(
                e.as_str(),
                "instructions" | "cycles" | "user_time" | "seconds user"
            )
        }) else {
            continue;
        };
        match event.as_str() {
            "instructions" => instructions = Some(parse_count(fields[0], sep, line_no)?),
            "cycles" => cycles = Some(parse_count(fields[0], sep, line_no)?),
            _ => user_time = Some(parse_seconds(fields[0], line_no)?),
        }
    }

    let missing = |name: &str| IngestError::MissingCounter {
        counter: name.to_owned(),
    };
    Ok(PerfCtcFeatures {
        instructions: instructions.ok_or_else(|| missing("instructions"))?,
        cycles: cycles.ok_or_else(|| missing("cycles"))?,
        user_time: user_time.ok_or_else(|| missing("user_time"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_fixture() {
        let text = "\
# started on Thu Oct  1 10:00:00 2026

123456,,instructions:u,2000000,100.00,,
98765,,cycles:u,2000000,100.00,,
1.50,,user_time,,,,
";
        let f = parse_perf_stat(text).unwrap();
        assert_eq!(f.instructions, 123456);
        assert_eq!(f.cycles, 98765);
        assert_eq!(f.user_time, 1.50);
    }

    #[test]
    fn missing_user_time() {
        let text = "123456,,instructions,,\n98765,,cycles,,\n";
        match parse_perf_stat(text) {
            Err(IngestError::MissingCounter { counter }) => assert_eq!(counter, "user_time"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn thousands_separators_with_semicolon_fields() {
        let text = "\
1,234,567;;instructions;1000;100.00
98,765;;cpu_core/cycles/;1000;100.00
       0.750000000 seconds user
";
        let f = parse_perf_stat(text).unwrap();
        assert_eq!(f.instructions, 1_234_567);
        assert_eq!(f.cycles, 98_765);
        assert_eq!(f.user_time, 0.75);
    }

    #[test]
    fn not_counted_is_rejected() {
        let text = "<not counted>,,instructions,,\n98765,,cycles,,\n1.0,,user_time\n";
        assert!(matches!(
            parse_perf_stat(text),
            Err(IngestError::NonNumericValue { line: 1, .. })
        ));
    }
}
