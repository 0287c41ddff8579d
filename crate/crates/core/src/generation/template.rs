use crate::corpus::{record_json, Dialogue, ScenarioRegistry};

use super::GenerationError;

pub const SEED_PLACEHOLDER: &str = "${SEED EXAMPLE}";
pub const SCENE_PLACEHOLDER: &str = "${SCENE}";

const DEFAULT_TEMPLATE: &str = include_str!("../../assets/self_chat_template.txt");

/// Self-chat prompt template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    body: String,
    strategy_block: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::from_text(DEFAULT_TEMPLATE).expect("bundled template is well-formed")
    }
}

impl PromptTemplate {
    /// Parses a template body. It must contain each placeholder exactly once
    /// and a numbered strategy list `1.` through `16.`.
    pub fn from_text(text: &str) -> Result<Self, GenerationError> {
        for placeholder in [SEED_PLACEHOLDER, SCENE_PLACEHOLDER] {
            let n = text.matches(placeholder).count();
            if n != 1 {
                return Err(GenerationError::Template(format!(
                    "expected exactly one {placeholder}, found {n}"
                )));
            }
        }
        let lines: Vec<&str> = text
            .lines()
            .filter(|l| numbered_line(l).is_some())
            .collect();
        let numbers: Vec<usize> = lines.iter().filter_map(|l| numbered_line(l)).collect();
        if numbers != (1..=16).collect::<Vec<_>>() {
            return Err(GenerationError::Template(format!(
                "strategy list must be numbered 1..16, found {numbers:?}"
            )));
        }
        Ok(Self {
            body: text.to_string(),
            strategy_block: lines.join("\n"),
        })
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// The sixteen numbered strategy lines.
    pub fn strategy_block(&self) -> &str {
        &self.strategy_block
    }

    /// Substitutes seeds (one exchange record per line, in order) and the
    /// scenario name.
    pub fn render(&self, seeds: &[Dialogue], scenario: &str) -> String {
        let seed_text = seeds.iter().map(record_json).collect::<Vec<_>>().join("\n");
        // Substitute the scene first so a seed containing the literal scene
        // placeholder cannot be rewritten.
        let (head, tail) = self
            .body
            .split_once(SEED_PLACEHOLDER)
            .expect("placeholder checked at construction");
        let head = head.replace(SCENE_PLACEHOLDER, scenario);
        let tail = tail.replace(SCENE_PLACEHOLDER, scenario);
        format!("{head}{seed_text}{tail}")
    }
}

fn numbered_line(line: &str) -> Option<usize> {
    let (num, rest) = line.split_once(". ")?;
    if rest.is_empty() || !num.chars().all(|c| c.is_ascii_digit()) || num.is_empty() {
        return None;
    }
    num.parse().ok()
}

/// Renders the prompt for `scenario` with the given seeds.
///
/// With `strict`, the scenario must be present in `registry`.
pub fn build_prompt(
    template: &PromptTemplate,
    seeds: &[Dialogue],
    scenario: &str,
    registry: &ScenarioRegistry,
    strict: bool,
) -> Result<String, GenerationError> {
    if seeds.is_empty() {
        return Err(GenerationError::EmptySeeds);
    }
    if strict && !registry.contains(scenario) {
        return Err(GenerationError::UnknownScenario(scenario.to_string()));
    }
    Ok(template.render(seeds, scenario))
}
