//! Built-in experiment presets at desk scale. They fix parameter
//! distributions and a seed; realized instances are drawn from them.

macro_rules! concat_preset {
    ($base:ident, $extra:expr) => {{
        static S: std::sync::OnceLock<String> = std::sync::OnceLock::new();
        S.get_or_init(|| format!("{}{}", $base, $extra)).as_str()
    }};
}

pub const NAMES: [&str; 9] = ["fig6", "fig7", "fig8", "fig9", "fig8-potts", "fig10", "fig11", "fig12", "fig13"];

const ISING_FIELD_30: &str = r#"
rows = 30
cols = 30
boundary = "periodic"
family = "ising"
J_A = "U[0.1, 1.0]"
H = "U[0.2, 0.8]"
domain = "dual"
algorithm = "is2"
samplers = ["dual:is2", "dual:is1"]
samples = 100000
chains = 10
seed = 2015
"#;

const ISING_NOFIELD_30: &str = r#"
rows = 30
cols = 30
boundary = "periodic"
family = "ising"
J_B = "U[1.15, 1.25]"
domain = "dual"
algorithm = "is2"
samples = 100000
seed = 2015
"#;

const SMALL_5: &str = r#"
rows = 5
cols = 5
boundary = "periodic"
family = "ising"
samples = 100000
chains = 5
seed = 2015
"#;

/// Preset text in configuration-file syntax.
pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        // Ising in a field, determined bonds moderately strong.
        "fig6" => concat_preset!(ISING_FIELD_30, "J_B = \"U[1.15, 1.25]\"\n"),
        "fig7" => concat_preset!(ISING_FIELD_30, "J_B = \"U[1.25, 1.35]\"\n"),
        // No field; importance sampling against uniform dual sampling.
        "fig8" => concat_preset!(
            ISING_NOFIELD_30,
            "J_A = \"U[1.0, 1.15]\"\nchains = 5\nsamplers = [\"dual:is2\", \"dual:uniform\"]\n"
        ),
        "fig9" => concat_preset!(ISING_NOFIELD_30, "J_A = \"U[0.5, 1.15]\"\nchains = 10\nsamplers = [\"dual:is2\"]\n"),
        "fig8-potts" => {
            r#"
rows = 30
cols = 30
boundary = "periodic"
family = "potts"
q = 4
J_A = "U[0.75, 2.25]"
J_B = "U[2.25, 3.25]"
H = "U[0.5, 1.5]"
domain = "dual"
algorithm = "potts"
samplers = ["dual:potts"]
samples = 100000
chains = 10
seed = 2015
"#
        }
        // 5x5 comparisons against the exact value.
        "fig10" => concat_preset!(
            SMALL_5,
            "J = 0.25\ndomain = \"primal\"\nalgorithm = \"sw\"\nsamplers = [\"primal:sw\", \"primal:uniform\"]\n"
        ),
        "fig11" => concat_preset!(
            SMALL_5,
            "J = 0.25\ndomain = \"dual\"\nalgorithm = \"gibbs\"\nsamplers = [\"dual:gibbs\", \"dual:uniform\"]\n"
        ),
        "fig12" => concat_preset!(
            SMALL_5,
            "J = 0.75\ndomain = \"primal\"\nalgorithm = \"sw\"\nsamplers = [\"primal:sw\", \"primal:uniform\"]\n"
        ),
        "fig13" => concat_preset!(
            SMALL_5,
            "J = 0.75\ndomain = \"dual\"\nalgorithm = \"gibbs\"\nsamplers = [\"dual:gibbs\", \"dual:uniform\"]\n"
        ),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{load, Purpose, Sources};

    #[test]
    fn every_preset_validates() {
        for name in NAMES {
            let src = Sources { preset: Some(name.into()), ..Default::default() };
            let l = load(&src).unwrap();
            l.validate(Purpose::Estimate).unwrap_or_else(|e| panic!("{name}: {e}"));
            l.validate(Purpose::Compare).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(text("fig99").is_none());
    }
}
