//! Program totals from callgrind profiles.

use std::collections::HashMap;

use super::IngestError;
use crate::types::ProcessorEventVector;

/// Older valgrind releases name the last-level cache `2` instead of `L`.
fn canonical_event(name: &str) -> &str {
    match name {
        "I2mr" => "ILmr",
        "D2mr" => "DLmr",
        "D2mw" => "DLmw",
        other => other,
    }
}

/// Parses a callgrind (or cachegrind) output document into the 13-event vector.
///
/// Counts are mapped through the `events:` header, so the column order of the
/// profile does not matter. The `totals:` line is preferred over `summary:` when
/// both are present. Missing trailing totals are zero, as in callgrind cost lines.
pub fn parse_callgrind(text: &str) -> Result<ProcessorEventVector, IngestError> {
    let mut events: Option<(usize, Vec<String>)> = None;
    let mut summary: Option<(usize, &str)> = None;
    let mut totals: Option<(usize, &str)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("events:") {
            if events.is_some() {
                return Err(IngestError::MalformedHeader {
                    line: line_no,
                    message: "duplicate `events:` line".into(),
                });
            }
            let names: Vec<String> = rest
                .split_whitespace()
                .map(|n| canonical_event(n).to_owned())
                .collect();
            if names.is_empty() {
                return Err(IngestError::MalformedHeader {
                    line: line_no,
                    message: "`events:` line names no events".into(),
                });
            }
            events = Some((line_no, names));
        } else if let Some(rest) = line.strip_prefix("summary:") {
            summary = Some((line_no, rest));
        } else if let Some(rest) = line.strip_prefix("totals:") {
            totals = Some((line_no, rest));
        }
    }

    let (events_line, names) = events.ok_or(IngestError::MalformedHeader {
        line: 0,
        message: "no `events:` line".into(),
    })?;

    let mut position = HashMap::new();
    for (i, name) in names.iter().enumerate() {
        if position.insert(name.as_str(), i).is_some() {
            return Err(IngestError::MalformedHeader {
                line: events_line,
                message: format!("event `{name}` listed twice"),
            });
        }
    }
    for name in ProcessorEventVector::EVENT_NAMES {
        if !position.contains_key(name) {
            return Err(IngestError::MissingEvent {
                event: name.to_owned(),
            });
        }
    }

    let (totals_line, totals_text) = totals.or(summary).ok_or(IngestError::MalformedHeader {
        line: 0,
        message: "no `summary:` or `totals:` line".into(),
    })?;

    let mut values = Vec::with_capacity(names.len());
    for token in totals_text.split_whitespace() {
        let value = token
            .parse::<u64>()
            .map_err(|_| IngestError::NonNumericTotal {
                line: totals_line,
                token: token.to_owned(),
            })?;
        values.push(value);
    }
    if values.len() > names.len() {
        return Err(IngestError::MalformedHeader {
            line: totals_line,
            message: format!("{} totals for {} events", values.len(), names.len()),
        });
    }
    values.resize(names.len(), 0);

    let counts = ProcessorEventVector::EVENT_NAMES.map(|name| values[position[name]]);
    let vector = ProcessorEventVector::from_array(counts);
    vector.validate().map_err(IngestError::Invariant)?;
    Ok(vector)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "\
# callgrind format
version: 1
creator: callgrind-3.22.0
cmd: ./decoder -i stream.bin
events: Ir Dr Dw I1mr D1mr D1mw ILmr DLmr DLmw Bc Bcm Bi Bim
fl=(1) decode.c
fn=(1) main
16 3 1 1 1 0 0 1 0 0
summary: 1000 300 200 10 5 4 2 1 1 150 20 30 6
totals: 1000 300 200 10 5 4 2 1 1 150 20 30 6
";

    #[test]
    fn maps_totals_by_header() {
        let v = parse_callgrind(FIXTURE).unwrap();
        assert_eq!(
            v.to_array(),
            [1000, 300, 200, 10, 5, 4, 2, 1, 1, 150, 20, 30, 6]
        );
    }

    #[test]
    fn permuted_header_gives_same_vector() {
        let text = "\
events: Bim Ir DLmw Dr Bi Dw Bcm I1mr Bc D1mr DLmr D1mw ILmr
summary: 6 1000 1 300 30 200 20 10 150 5 1 4 2
";
        let v = parse_callgrind(text).unwrap();
        assert_eq!(v, parse_callgrind(FIXTURE).unwrap());
    }

    #[test]
    fn missing_branch_event_is_reported() {
        let text = "\
events: Ir Dr Dw I1mr D1mr D1mw ILmr DLmr DLmw Bc Bcm Bi
summary: 1000 300 200 10 5 4 2 1 1 150 20 30
";
        match parse_callgrind(text) {
            Err(IngestError::MissingEvent { event }) => assert_eq!(event, "Bim"),
            other => panic!("expected MissingEvent, got {other:?}"),
        }
    }

    #[test]
    fn legacy_ll_names_are_accepted() {
        let text = "\
events: Ir Dr Dw I1mr D1mr D1mw I2mr D2mr D2mw Bc Bcm Bi Bim
summary: 1000 300 200 10 5 4 2 1 1 150 20 30 6
";
        assert_eq!(parse_callgrind(text).unwrap().ilmr, 2);
    }

    #[test]
    fn non_numeric_total() {
        let text = "\
events: Ir Dr Dw I1mr D1mr D1mw ILmr DLmr DLmw Bc Bcm Bi Bim
totals: 1000 300 2x0 10 5 4 2 1 1 150 20 30 6
";
        assert!(matches!(
            parse_callgrind(text),
            Err(IngestError::NonNumericTotal { line: 2, .. })
        ));
    }

    #[test]
    fn missing_events_line() {
        assert!(matches!(
            parse_callgrind("summary: 1 2 3\n"),
            Err(IngestError::MalformedHeader { .. })
        ));
    }

    #[test]
    fn trailing_totals_default_to_zero() {
        let text = "\
events: Ir Dr Dw I1mr D1mr D1mw ILmr DLmr DLmw Bc Bcm Bi Bim
summary: 1000 300 200 10 5 4 2 1 1 150 20
";
        let v = parse_callgrind(text).unwrap();
        assert_eq!((v.bi, v.bim), (0, 0));
    }
}
