use std::collections::HashMap;
use std::fs;
use std::path::Path;

use guessworks::coding::LengthFunction;
use guessworks::guessing::GuessingFunction;
use guessworks::tasks::Partition;
use guessworks::{Alphabet, Distribution, Error};
use serde_json::{Map, Value};

use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Domain(format!("malformed JSON in {}: {e}", path.display())))
}

pub fn distribution(path: &Path) -> Result<Distribution, CliError> {
    parse_json(path)
}

/// A second distribution over the same symbols, reordered to match `like`.
pub fn distribution_like(path: &Path, like: &Alphabet) -> Result<Distribution, CliError> {
    let d = distribution(path)?;
    if d.alphabet() == like {
        return Ok(d);
    }
    let by_label: HashMap<&str, f64> = d
        .alphabet()
        .labels()
        .iter()
        .map(String::as_str)
        .zip(d.probs().iter().copied())
        .collect();
    let probs = like
        .labels()
        .iter()
        .map(|l| by_label.get(l.as_str()).copied())
        .collect::<Option<Vec<f64>>>()
        .filter(|_| d.len() == like.len())
        .ok_or(Error::AlphabetMismatch {
            expected: like.len(),
            found: d.len(),
        })?;
    Ok(Distribution::with_alphabet(like.clone(), probs)?)
}

/// `{symbol: integer}` read in alphabet order.
fn symbol_integers(path: &Path, alphabet: &Alphabet, what: &str) -> Result<Vec<u64>, CliError> {
    let map: Map<String, Value> = parse_json(path)?;
    if map.len() != alphabet.len() {
        return Err(Error::AlphabetMismatch {
            expected: alphabet.len(),
            found: map.len(),
        }
        .into());
    }
    alphabet
        .labels()
        .iter()
        .map(|label| {
            map.get(label).and_then(Value::as_u64).ok_or_else(|| {
                CliError::Domain(format!(
                    "{what} file {} needs a nonnegative integer for '{label}'",
                    path.display()
                ))
            })
        })
        .collect()
}

pub fn lengths(path: &Path, alphabet: &Alphabet) -> Result<LengthFunction, CliError> {
    let values = symbol_integers(path, alphabet, "lengths")?
        .into_iter()
        .map(|v| u32::try_from(v).map_err(|_| Error::InvalidLengths(format!("length {v} too large"))))
        .collect::<Result<Vec<u32>, Error>>()?;
    Ok(LengthFunction::new(alphabet.clone(), values)?)
}

pub fn guessing(path: &Path, alphabet: &Alphabet) -> Result<GuessingFunction, CliError> {
    let ranks = symbol_integers(path, alphabet, "guessing")?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    Ok(GuessingFunction::new(alphabet.clone(), ranks)?)
}

#[derive(serde::Deserialize)]
struct PartitionJson {
    cells: Vec<Vec<String>>,
}

pub fn partition(path: &Path, alphabet: &Alphabet) -> Result<Partition, CliError> {
    let raw: PartitionJson = parse_json(path)?;
    Ok(Partition::from_labels(alphabet.clone(), &raw.cells)?)
}

pub fn experiment_config(path: &Path) -> Result<guessworks::sequences::ExperimentConfig, CliError> {
    Ok(guessworks::sequences::ExperimentConfig::from_json(&read(path)?)?)
}
