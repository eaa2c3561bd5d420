//! `gqms.toml`: scope, roles, revision intervals and the initialize checklist.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use gqms_core::text::{RoleConfig, RoleView};
use gqms_core::Id;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scope: Scope,
    pub roles: BTreeMap<String, RoleView>,
    /// Per-level settings keyed by level id.
    pub levels: BTreeMap<String, LevelConfig>,
    /// Task name to responsible person or group.
    pub responsibilities: BTreeMap<String, String>,
    pub checklist: Checklist,
    /// Existing goals, strategies and metrics for gap rule G7, relative to
    /// the workspace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inventory: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scope {
    pub description: String,
    pub environment: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelConfig {
    /// Overrides the grid's `revise_every` for this level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revise_every: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checklist {
    pub process_planned: bool,
    pub responsibilities_defined: bool,
    pub training_provided: bool,
}

impl Checklist {
    pub const ITEMS: [&'static str; 3] = ["process_planned", "responsibilities_defined", "training_provided"];

    /// Marks `item` done. Returns false for an unknown item.
    pub fn mark(&mut self, item: &str) -> bool {
        match item {
            "process_planned" => self.process_planned = true,
            "responsibilities_defined" => self.responsibilities_defined = true,
            "training_provided" => self.training_provided = true,
            _ => return false,
        }
        true
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn role_config(&self) -> RoleConfig {
        RoleConfig { roles: self.roles.clone() }
    }

    pub fn interval_overrides(&self) -> BTreeMap<Id, u32> {
        self.levels
            .iter()
            .filter_map(|(k, v)| v.revise_every.map(|m| (Id::unchecked(k.as_str()), m)))
            .collect()
    }

    /// The config file text: every section with an explanatory comment.
    pub fn render(&self) -> String {
        fn section<T: Serialize>(out: &mut String, comment: &str, name: &str, value: &T) {
            out.push_str(comment);
            let body = toml::to_string(value).expect("config serializes");
            let _ = writeln!(out, "[{name}]");
            out.push_str(&body);
            out.push('\n');
        }
        fn table<T: Serialize>(out: &mut String, comment: &str, name: &str, map: &BTreeMap<String, T>, example: &str) {
            out.push_str(comment);
            if map.is_empty() {
                out.push_str(example);
            }
            for (k, v) in map {
                let body = toml::to_string(v).expect("config serializes");
                let _ = writeln!(out, "[{name}.{}]", key(k));
                out.push_str(&body);
            }
            out.push('\n');
        }

        let mut out = String::from("# GQM+Strategies workspace configuration.\n\n");
        // Root keys must precede every table.
        out.push_str("# Asset inventory (JSON) used by gap rule G7, relative to the workspace.\n");
        match &self.inventory {
            Some(inv) => {
                let _ = writeln!(out, "inventory = {}\n", toml::Value::String(inv.clone()));
            }
            None => out.push_str("# inventory = \"inventory.json\"\n\n"),
        }
        section(
            &mut out,
            "# Parts of the organization covered by the grid and the environment\n# it operates in.\n",
            "scope",
            &self.scope,
        );
        table(
            &mut out,
            "# Role views for the viewer: each role sees levels with min_rank <= rank <= max_rank.\n",
            "roles",
            &self.roles,
            "# [roles.management]\n# max_rank = 0\n",
        );
        table(
            &mut out,
            "# Revision interval overrides in months, keyed by level id.\n",
            "levels",
            &self.levels,
            "# [levels.MGMT]\n# revise_every = 24\n",
        );
        out.push_str("# Who is responsible for which task.\n[responsibilities]\n");
        for (k, v) in &self.responsibilities {
            let _ = writeln!(out, "{} = {}", key(k), toml::Value::String(v.clone()));
        }
        out.push('\n');
        section(&mut out, "# Initialize checklist.\n", "checklist", &self.checklist);
        out
    }
}

fn key(k: &str) -> String {
    if !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        k.to_string()
    } else {
        toml::Value::String(k.to_string()).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_parses_to_default() {
        let text = Config::default().render();
        assert!(text.contains("# [levels.MGMT]"));
        assert_eq!(Config::parse(&text).unwrap(), Config::default());
    }

    #[test]
    fn values_round_trip() {
        let mut c = Config::default();
        c.scope.description = "Software division \"A\"".into();
        c.scope.environment = vec!["regulated market".into()];
        c.roles.insert("project".into(), RoleView { min_rank: Some(2), max_rank: None });
        c.levels.insert("MGMT".into(), LevelConfig { revise_every: Some(24) });
        c.responsibilities.insert("data collection".into(), "QA".into());
        c.checklist.mark("training_provided");
        c.inventory = Some("inventory.json".into());
        let text = c.render();
        assert_eq!(Config::parse(&text).unwrap(), c, "{text}");
        assert_eq!(c.interval_overrides()[&Id::unchecked("MGMT")], 24);
    }
}
