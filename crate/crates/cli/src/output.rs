use std::path::PathBuf;

use serde_json::Value;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Where a result goes and, optionally, the format forced by the user.
#[derive(Debug, Clone)]
pub struct Destination {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Destination {
    /// `csv` and `json` select a format on stdout; anything else is a path,
    /// written as CSV when it ends in `.csv`.
    pub fn parse(arg: Option<&str>) -> Self {
        match arg {
            None | Some("-") => Self { path: None, format: None },
            Some("csv") => Self { path: None, format: Some(Format::Csv) },
            Some("json") => Self { path: None, format: Some(Format::Json) },
            Some(p) => {
                let path = PathBuf::from(p);
                let format = match path.extension().and_then(|e| e.to_str()) {
                    Some("csv") => Some(Format::Csv),
                    Some("json") => Some(Format::Json),
                    _ => None,
                };
                Self { path: Some(path), format }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    json: Value,
    csv: Option<String>,
    prefer_csv: bool,
    pub is_partial: bool,
}

impl Artifact {
    pub fn json(json: Value) -> Self {
        Self { json, csv: None, prefer_csv: false, is_partial: false }
    }

    /// JSON by default, CSV on request.
    pub fn json_with_csv(json: Value, csv: String) -> Self {
        Self { json, csv: Some(csv), prefer_csv: false, is_partial: false }
    }

    /// CSV by default, JSON on request.
    pub fn csv(json: Value, csv: String) -> Self {
        Self { json, csv: Some(csv), prefer_csv: true, is_partial: false }
    }

    pub fn partial(mut self, partial: bool) -> Self {
        self.is_partial = partial;
        self
    }

    fn render(&self, format: Option<Format>) -> Result<String, Failure> {
        let format = format.unwrap_or(if self.prefer_csv { Format::Csv } else { Format::Json });
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.json).expect("values serialize") + "\n"),
            Format::Csv => {
                self.csv.clone().ok_or_else(|| Failure::Usage("this subcommand has no CSV output".into()))
            }
        }
    }

    pub fn write(&self, dest: &Destination) -> Result<(), Failure> {
        let text = self.render(dest.format)?;
        match &dest.path {
            None => {
                print!("{text}");
                Ok(())
            }
            Some(p) => std::fs::write(p, text).map_err(|e| Failure::Other(format!("{}: {e}", p.display()))),
        }
    }
}
