//! The sixteen response strategies an assistant turn can be labeled with.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A registered support strategy.
///
/// The enum order is the registry order used in prompts and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    ReflectiveStatements,
    Clarification,
    EmotionalValidation,
    EmpatheticStatements,
    Affirmation,
    OfferHope,
    AvoidJudgmentAndCriticism,
    SuggestOptions,
    CollaborativePlanning,
    ProvideDifferentPerspectives,
    ReframeNegativeThoughts,
    ShareInformation,
    NormalizeExperiences,
    PromoteSelfCarePractices,
    StressManagement,
    Others,
}

/// Static registry entry for a strategy.
#[derive(Debug, Clone, Copy)]
pub struct StrategyInfo {
    pub strategy: Strategy,
    pub name: &'static str,
    pub abbreviation: &'static str,
    pub definition: &'static str,
    pub example: &'static str,
    /// Label count in the released reference corpus.
    pub reference_count: u64,
}

/// Total AI strategy labels in the released reference corpus.
pub const REFERENCE_LABEL_TOTAL: u64 = 97_893;

pub const STRATEGY_COUNT: usize = 16;

static REGISTRY: [StrategyInfo; STRATEGY_COUNT] = [
    StrategyInfo {
        strategy: Strategy::ReflectiveStatements,
        name: "Reflective Statements",
        abbreviation: "RS",
        definition: "Repeat or rephrase what the User has expressed to show that you're actively listening.",
        example: "User: \"I'm feeling really overwhelmed with all the work I have to do.\" Assistant: \"It sounds like you're feeling overwhelmed with your workload.\"",
        reference_count: 14_560,
    },
    StrategyInfo {
        strategy: Strategy::Clarification,
        name: "Clarification",
        abbreviation: "Cla",
        definition: "Seek clarification to ensure a clear understanding of the User's emotions and experiences.",
        example: "User: \"I just can't shake off this feeling of sadness.\" Assistant: \"Could you help me understand what might have triggered this feeling of sadness?\"",
        reference_count: 2_898,
    },
    StrategyInfo {
        strategy: Strategy::EmotionalValidation,
        name: "Emotional Validation",
        abbreviation: "EV",
        definition: "Acknowledge and validate the User's emotions without judgment.",
        example: "User: \"I'm so frustrated with myself for making the same mistake again.\" Assistant: \"It's completely understandable to feel frustrated when you make a mistake.\"",
        reference_count: 19_367,
    },
    StrategyInfo {
        strategy: Strategy::EmpatheticStatements,
        name: "Empathetic Statements",
        abbreviation: "ES",
        definition: "Express understanding and empathy towards the User's experiences.",
        example: "User: \"I'm really struggling with my self-confidence right now.\" Assistant: \"I can imagine how challenging it must be to navigate through situations that affect your self-confidence.\"",
        reference_count: 8_482,
    },
    StrategyInfo {
        strategy: Strategy::Affirmation,
        name: "Affirmation",
        abbreviation: "Aff",
        definition: "Provide positive reinforcement and encouragement to uplift the User's spirits.",
        example: "User: \"I feel like I'm not good enough.\" Assistant: \"You've accomplished so much already, and your abilities speak for themselves. Don't underestimate your capabilities.\"",
        reference_count: 16_539,
    },
    StrategyInfo {
        strategy: Strategy::OfferHope,
        name: "Offer Hope",
        abbreviation: "OH",
        definition: "Share optimistic perspectives or possibilities to instill hope.",
        example: "User: \"I don't know if things will ever get better.\" Assistant: \"Remember that change is constant, and there are always opportunities for growth and positive change.\"",
        reference_count: 4_665,
    },
    StrategyInfo {
        strategy: Strategy::AvoidJudgmentAndCriticism,
        name: "Avoid Judgment And Criticism",
        abbreviation: "AJC",
        definition: "It's important to create a non-judgmental and safe space for the User to express their emotions without fear of criticism. Refrain from passing judgment or being overly critical of their experiences or choices.",
        example: "User: \"I'm feeling so guilty for taking time off work to focus on my mental health.\" Assistant: \"Taking care of your mental health is crucial, and it's not something to feel guilty about. Your well-being should always be a priority, and I'm glad you recognized that. Is there anything I can do to support you during this time?\"",
        reference_count: 1_767,
    },
    StrategyInfo {
        strategy: Strategy::SuggestOptions,
        name: "Suggest Options",
        abbreviation: "SO",
        definition: "Offer practical suggestions or alternative perspectives for addressing the issue at hand.",
        example: "User: \"I'm having trouble managing my stress.\" Assistant: \"Have you considered trying relaxation techniques like deep breathing or mindfulness exercises?\"",
        reference_count: 6_079,
    },
    StrategyInfo {
        strategy: Strategy::CollaborativePlanning,
        name: "Collaborative Planning",
        abbreviation: "CP",
        definition: "Work together with the User to develop an action plan.",
        example: "User: \"I want to improve my time management skills.\" Assistant: \"Let's brainstorm some strategies together. How about breaking tasks into smaller, more manageable chunks?\"",
        reference_count: 3_534,
    },
    StrategyInfo {
        strategy: Strategy::ProvideDifferentPerspectives,
        name: "Provide Different Perspectives",
        abbreviation: "PDP",
        definition: "Offer alternative ways of looking at the situation to help the User gain new insights.",
        example: "User: \"I'm devastated that my project didn't succeed.\" Assistant: \"Sometimes setbacks can lead to unexpected opportunities for learning and growth. It's a chance to reassess and try again.\"",
        reference_count: 3_322,
    },
    StrategyInfo {
        strategy: Strategy::ReframeNegativeThoughts,
        name: "Reframe Negative Thoughts",
        abbreviation: "RNT",
        definition: "Help the User reframe negative thoughts into more positive or realistic ones.",
        example: "User: \"I'm such a failure.\" Assistant: \"Instead of thinking that way, let's focus on what you've learned from this experience and how you can apply it moving forward.\"",
        reference_count: 2_050,
    },
    StrategyInfo {
        strategy: Strategy::ShareInformation,
        name: "Share Information",
        abbreviation: "SI",
        definition: "Provide educational or factual information about emotions, coping mechanisms, or self-care practices.",
        example: "User: \"I'm struggling to manage my anxiety.\" Assistant: \"Did you know that deep breathing exercises and grounding techniques can help reduce anxiety symptoms? Would you like me to explain how to practice them?\"",
        reference_count: 3_181,
    },
    StrategyInfo {
        strategy: Strategy::NormalizeExperiences,
        name: "Normalize Experiences",
        abbreviation: "NE",
        definition: "Explain that certain emotions or reactions are common and part of the human experience.",
        example: "User: \"I feel so guilty for taking time for myself.\" Assistant: \"It's common to feel guilty about self-care, but it's essential for your well-being. Remember, you deserve to prioritize your needs too.\"",
        reference_count: 2_403,
    },
    StrategyInfo {
        strategy: Strategy::PromoteSelfCarePractices,
        name: "Promote Self-Care Practices",
        abbreviation: "PSP",
        definition: "Advocate for engaging in activities that promote well-being and self-care.",
        example: "\"Make sure to take some time for yourself and do something that brings you joy and relaxation.\"",
        reference_count: 2_686,
    },
    StrategyInfo {
        strategy: Strategy::StressManagement,
        name: "Stress Management",
        abbreviation: "SM",
        definition: "Provide suggestions for stress management techniques like exercise, meditation, or spending time in nature.",
        example: "\"Engaging in regular physical activity can help reduce stress and improve mood.\"",
        reference_count: 2_474,
    },
    StrategyInfo {
        strategy: Strategy::Others,
        name: "Others",
        abbreviation: "Oth",
        definition: "Interact with friendly greetings and employ additional supportive techniques that are not covered by the previously mentioned categories.",
        example: "",
        reference_count: 3_887,
    },
];

impl Strategy {
    pub const ALL: [Strategy; STRATEGY_COUNT] = [
        Strategy::ReflectiveStatements,
        Strategy::Clarification,
        Strategy::EmotionalValidation,
        Strategy::EmpatheticStatements,
        Strategy::Affirmation,
        Strategy::OfferHope,
        Strategy::AvoidJudgmentAndCriticism,
        Strategy::SuggestOptions,
        Strategy::CollaborativePlanning,
        Strategy::ProvideDifferentPerspectives,
        Strategy::ReframeNegativeThoughts,
        Strategy::ShareInformation,
        Strategy::NormalizeExperiences,
        Strategy::PromoteSelfCarePractices,
        Strategy::StressManagement,
        Strategy::Others,
    ];

    /// Position in registry order, usable as a dense array index.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn info(self) -> &'static StrategyInfo {
        &REGISTRY[self.index()]
    }

    /// Canonical full name; this is the serialized spelling.
    pub fn name(self) -> &'static str {
        self.info().name
    }

    pub fn abbreviation(self) -> &'static str {
        self.info().abbreviation
    }

    /// Exact lookup: full name or abbreviation, byte-for-byte.
    pub fn from_label(label: &str) -> Option<Strategy> {
        REGISTRY
            .iter()
            .find(|info| info.name == label || info.abbreviation == label)
            .map(|info| info.strategy)
    }

    /// Lenient lookup: ignores case, punctuation and whitespace differences,
    /// and accepts abbreviations in any case.
    pub fn from_label_fuzzy(label: &str) -> Option<Strategy> {
        let key = fold_label(label);
        if key.is_empty() {
            return None;
        }
        REGISTRY
            .iter()
            .find(|info| fold_label(info.name) == key || fold_label(info.abbreviation) == key)
            .map(|info| info.strategy)
    }
}

fn fold_label(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// The full registry in order.
pub fn registry() -> &'static [StrategyInfo; STRATEGY_COUNT] {
    &REGISTRY
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy label {0:?}")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::from_label(s).ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

impl Serialize for Strategy {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let label = String::deserialize(deserializer)?;
        Strategy::from_label(&label).ok_or_else(|| serde::de::Error::custom(UnknownStrategy(label)))
    }
}
