mod args;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use args::{Cli, Command, Format};
use run::{Failure, Output};

const VERSION: &str = concat!("dnstat ", env!("CARGO_PKG_VERSION"));

struct FileConfig {
    command: Option<String>,
    format: Option<Format>,
    rest: Map<String, Value>,
}

fn read_config(path: &std::path::Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(mut rest) = value else {
        return Err(Failure::Config(format!("{}: expected a JSON object", path.display())));
    };
    let command = match rest.remove("command") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(other) => return Err(Failure::Config(format!("command must be a string, got {other}"))),
    };
    let format = rest
        .remove("format")
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| Failure::Config(format!("format: {e}")))?;
    Ok(FileConfig { command, format, rest })
}

fn section<T: DeserializeOwned + Default>(rest: Option<&Map<String, Value>>) -> Result<T, Failure> {
    match rest {
        None => Ok(T::default()),
        Some(m) => serde_json::from_value(Value::Object(m.clone())).map_err(|e| Failure::Config(format!("config: {e}"))),
    }
}

fn command_from_name(name: &str) -> Result<Command, Failure> {
    Ok(match name {
        "mean" => Command::Mean(Default::default()),
        "detect" => Command::Detect(Default::default()),
        "korovkin" => Command::Korovkin(Default::default()),
        "repro" => Command::Repro(Default::default()),
        other => return Err(Failure::Config(format!("unknown command {other:?}"))),
    })
}

fn render(format: Format, out: &Output) -> String {
    let header = || {
        format!(
            "# {VERSION}\n# config {}\n",
            serde_json::to_string(&out.config).expect("config serializes")
        )
    };
    match format {
        Format::Json => {
            let doc = json!({ "dnstat": env!("CARGO_PKG_VERSION"), "config": out.config, "result": out.result });
            serde_json::to_string_pretty(&doc).expect("output serializes") + "\n"
        }
        Format::Table => header() + &out.table,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &out.csv {
                w.write_record(r).expect("in-memory write");
            }
            header() + &String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
        }
    }
}

/// Drops the line carrying the version, so outputs of different builds compare.
fn without_version(s: &str) -> String {
    s.lines()
        .filter(|l| !l.starts_with(&format!("# {VERSION}")) && !l.trim_start().starts_with("\"dnstat\":"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let file = cli.config.as_deref().map(read_config).transpose()?;
    let command = match (cli.command, file.as_ref().and_then(|f| f.command.as_deref())) {
        (Some(c), Some(name)) if c.name() != name => {
            return Err(Failure::Config(format!(
                "config file is for {name:?} but the command line asks for {:?}",
                c.name()
            )))
        }
        (Some(c), _) => c,
        (None, Some(name)) => command_from_name(name)?,
        (None, None) => return Err(Failure::Config("no command given; see --help".into())),
    };
    let format = cli
        .format
        .or(file.as_ref().and_then(|f| f.format))
        .unwrap_or(Format::Table);
    let rest = file.as_ref().map(|f| &f.rest);

    let (out, expected) = match command {
        Command::Mean(a) => (run::mean(a.merge(section(rest)?))?, None),
        Command::Detect(a) => (run::detect(a.merge(section(rest)?))?, None),
        Command::Korovkin(a) => (run::korovkin(a.merge(section(rest)?))?, None),
        Command::Repro(a) => {
            let a = a.merge(section(rest)?);
            // read first so a bad path fails before the long computation
            let expected = a
                .check
                .as_ref()
                .map(|path| {
                    std::fs::read_to_string(path)
                        .map(|text| (path.clone(), text))
                        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
                })
                .transpose()?;
            (run::repro(&a)?, expected)
        }
    };
    let text = render(format, &out);
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Compute(format!("cannot write output: {e}")))?;

    if let Some((path, expected)) = expected {
        let (want, got) = (without_version(&expected), without_version(&text));
        if want != got {
            let first = want
                .lines()
                .zip(got.lines())
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| want.lines().count().min(got.lines().count()));
            return Err(Failure::Compute(format!(
                "output differs from {} at line {}",
                path.display(),
                first + 1
            )));
        }
        eprintln!("repro output matches {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
