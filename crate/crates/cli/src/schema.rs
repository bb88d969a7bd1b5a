//! JSON description of the command tree, generated from the clap definition.

use clap::{Arg, ArgAction, Command};
use serde_json::{json, Value};

fn arg_json(a: &Arg) -> Value {
    let takes_value = !matches!(
        a.get_action(),
        ArgAction::SetTrue
            | ArgAction::SetFalse
            | ArgAction::Count
            | ArgAction::Help
            | ArgAction::Version
    );
    let possible: Vec<String> = a
        .get_possible_values()
        .iter()
        .map(|v| v.get_name().to_string())
        .collect();
    json!({
        "name": a.get_id().as_str(),
        "long": a.get_long(),
        "help": a.get_help().map(|h| h.to_string()),
        "required": a.is_required_set(),
        "global": a.is_global_set(),
        "takes_value": takes_value,
        "default": a.get_default_values().iter().map(|v| v.to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "env": a.get_env().map(|e| e.to_string_lossy().into_owned()),
        "possible_values": possible,
    })
}

fn command_json(c: &Command) -> Value {
    json!({
        "name": c.get_name(),
        "about": c.get_about().map(|s| s.to_string()),
        "args": c
            .get_arguments()
            .filter(|a| !matches!(a.get_id().as_str(), "help" | "version"))
            .map(arg_json)
            .collect::<Vec<_>>(),
        "subcommands": c.get_subcommands().map(command_json).collect::<Vec<_>>(),
    })
}

pub fn command_schema(cmd: &Command) -> Value {
    json!({
        "schema_version": 1,
        "exit_codes": {
            "0": "success",
            "1": "validation or usage error",
            "2": "resource, numerical or internal error",
        },
        "command": command_json(cmd),
    })
}
