use std::io::Read;

use serde::de::DeserializeOwned;

use crate::{Error, Result};

/// Iterates typed CSV records together with the line each record starts on.
pub(crate) fn records<R: Read, T: DeserializeOwned>(source: R) -> Result<impl Iterator<Item = Result<(u64, T)>>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers().map_err(|e| parse_error(&e))?.clone();
    let mut raw = csv::StringRecord::new();
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        if done {
            return None;
        }
        match reader.read_record(&mut raw) {
            Ok(false) => {
                done = true;
                None
            }
            Ok(true) => {
                let line = raw.position().map(|p| p.line()).unwrap_or(0);
                Some(
                    raw.deserialize::<T>(Some(&headers))
                        .map(|v| (line, v))
                        .map_err(|e| Error::Parse { line, message: e.to_string() }),
                )
            }
            Err(e) => {
                done = true;
                Some(Err(parse_error(&e)))
            }
        }
    }))
}

fn parse_error(e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse { line, message: e.to_string() }
}
