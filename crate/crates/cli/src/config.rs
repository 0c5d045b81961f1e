//! `key = value` files that fill in flags not given on the command line.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, got `{}`", i + 1, raw.trim());
        };
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        if out.iter().any(|(seen, _)| *seen == key) {
            bail!("config line {}: key `{key}` repeated", i + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn from_command_line(matches: &ArgMatches, id: &str) -> bool {
    matches!(matches.try_get_raw(id), Ok(Some(_))) && matches.value_source(id) == Some(ValueSource::CommandLine)
}

/// Append flags from `config` to `argv` for every key the command line left unset.
///
/// Keys name long flags of the chosen subcommand or global flags; unknown keys are an error.
pub fn merge(argv: Vec<OsString>, cmd: &Command, matches: &ArgMatches, config: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading config {}", config.display()))?;
    let pairs = parse_pairs(&text)?;
    let Some((sub_name, sub_matches)) = matches.subcommand() else {
        bail!("a subcommand is required");
    };
    let sub = cmd.find_subcommand(sub_name).expect("parsed subcommand exists");
    let mut argv = argv;
    for (key, value) in pairs {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .with_context(|| format!("unknown config key `{key}` for `{sub_name}`"))?;
        let id = arg.get_id().as_str();
        if from_command_line(sub_matches, id) || from_command_line(matches, id) {
            continue;
        }
        if arg.get_action().takes_values() {
            argv.push(format!("--{key}={value}").into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => argv.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => bail!("config key `{key}` is a switch; expected true or false, got `{other}`"),
            }
        }
    }
    Ok(argv)
}
