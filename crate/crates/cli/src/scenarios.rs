//! Built-in scenarios, compiled into the binary.

use crate::config::ScenarioConfig;
use crate::error::ConfigError;

pub struct BuiltIn {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! builtin {
    ($name:literal) => {
        BuiltIn {
            name: $name,
            source: include_str!(concat!("../scenarios/", $name, ".toml")),
        }
    };
}

pub const BUILT_INS: &[BuiltIn] = &[
    builtin!("fig1"),
    builtin!("fig2"),
    builtin!("fig3"),
    builtin!("fig4"),
    builtin!("fig5"),
    builtin!("fig6"),
    builtin!("fig7"),
    builtin!("fig8"),
    builtin!("fig9"),
    builtin!("fig10"),
];

pub fn find(name: &str) -> Option<&'static BuiltIn> {
    BUILT_INS.iter().find(|b| b.name == name)
}

pub fn load(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let b = find(name).ok_or_else(|| {
        let names: Vec<&str> = BUILT_INS.iter().map(|b| b.name).collect();
        ConfigError::new(format!("unknown scenario `{name}`; available: {}", names.join(", ")))
            .at(None, "--scenario")
    })?;
    ScenarioConfig::parse(b.source, &format!("scenario {name}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses_under_its_own_name() {
        for b in BUILT_INS {
            let c = load(b.name).unwrap();
            assert_eq!(c.name, b.name);
            assert!(c.warnings.is_empty(), "{}: {:?}", b.name, c.warnings);
            for m in c.members().unwrap() {
                assert_eq!(m.config.n_modes(), 2);
            }
        }
    }
}
