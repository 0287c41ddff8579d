//! Scenario registry: the canonical situation categories plus any
//! operator-added extensions.

use serde::{Deserialize, Serialize};

/// A scenario category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub example_descriptions: Vec<String>,
    /// False for scenarios registered at runtime.
    pub canonical: bool,
    /// Dialogue count in the released reference corpus, canonical entries only.
    pub reference_count: Option<u64>,
}

struct CanonicalScenario {
    name: &'static str,
    count: u64,
    examples: &'static [&'static str],
}

static CANONICAL: [CanonicalScenario; 36] = [
    CanonicalScenario {
        name: "Breakups or Divorce",
        count: 710,
        examples: &[
            "Processing the emotions and grief following the end of a long-term relationship.",
            "Seeking guidance on how to navigate a recent breakup and move forward.",
        ],
    },
    CanonicalScenario {
        name: "Conflicts or Communication Problems",
        count: 1_109,
        examples: &[
            "Dealing with a misunderstanding or disagreement with a close friend or family member.",
            "Seeking advice on resolving conflicts with a romantic partner and improving communication.",
        ],
    },
    CanonicalScenario {
        name: "Communication Challenges",
        count: 1_008,
        examples: &["Helping a person find effective ways to express their needs and concerns to their partner, fostering open and constructive communication."],
    },
    CanonicalScenario {
        name: "Coping with the Death of a Loved One",
        count: 593,
        examples: &[
            "Navigating the stages of grief and finding ways to honor the memory of the deceased.",
            "Seeking support in managing the emotional impact of losing a close family member or friend.",
        ],
    },
    CanonicalScenario {
        name: "Dealing with the Loss of a Pet",
        count: 601,
        examples: &[
            "Processing the deep sadness and emptiness after the death of a beloved pet.",
            "Seeking understanding and comfort while grieving the loss of a long-time companion animal.",
        ],
    },
    CanonicalScenario {
        name: "Work-related Stress and Burnout",
        count: 403,
        examples: &[
            "Coping with excessive workload, pressure, and a demanding work environment.",
            "Seeking strategies to manage stress and achieve a healthier work-life balance.",
        ],
    },
    CanonicalScenario {
        name: "Financial Worries and Uncertainty",
        count: 403,
        examples: &[
            "Navigating financial challenges such as debt, job loss, or unexpected expenses.",
            "Seeking emotional support and practical advice to alleviate financial stress and regain stability.",
        ],
    },
    CanonicalScenario {
        name: "Unemployment-related Stress",
        count: 403,
        examples: &["Encouraging someone who is about to lose their job due to poor company performance, discussing the possibility of changing jobs, prioritizing self-care, and staying positive."],
    },
    CanonicalScenario {
        name: "Academic Stress",
        count: 403,
        examples: &["Offering guidance and study tips to a student feeling overwhelmed by their workload, helping them create a study plan and adopt healthy stress management techniques."],
    },
    CanonicalScenario {
        name: "Spirituality and Faith",
        count: 202,
        examples: &["Offering guidance and resources to someone who is questioning their faith or seeking spiritual fulfillment, providing support as they explore their beliefs and values."],
    },
    CanonicalScenario {
        name: "Managing Bipolar Disorder",
        count: 202,
        examples: &[
            "Finding support and strategies to navigate the highs and lows of bipolar disorder.",
            "Seeking advice on maintaining stability, managing medication, and recognizing warning signs.",
        ],
    },
    CanonicalScenario {
        name: "Anxiety and Panic",
        count: 202,
        examples: &["Providing guidance and techniques for someone who experiences social anxiety, helping them gradually face their fears and build confidence in social situations."],
    },
    CanonicalScenario {
        name: "Depression and Low Mood",
        count: 403,
        examples: &[
            "Dealing with feelings of sadness, loss of interest, and lack of motivation.",
            "Seeking guidance on coping mechanisms and professional help for managing depression symptoms.",
            "Being there for a person experiencing depression, actively listening to their struggles, and encouraging them to seek professional help and engage in self-care activities.",
        ],
    },
    CanonicalScenario {
        name: "Adjusting to a New Job or Role",
        count: 302,
        examples: &[
            "Coping with the challenges and expectations of a new job or promotion.",
            "Seeking guidance on adapting to a new work environment and building professional relationships.",
        ],
    },
    CanonicalScenario {
        name: "Chronic Illness or Pain Management",
        count: 302,
        examples: &[
            "Coping with the emotional impact of a chronic illness, including pain, limitations, and lifestyle adjustments.",
            "Seeking support in managing daily challenges, finding self-care strategies, and connecting with others facing similar health issues.",
        ],
    },
    CanonicalScenario {
        name: "Coping with a Diagnosis or Medical Treatment",
        count: 202,
        examples: &[
            "Processing the emotions surrounding a new medical diagnosis and navigating treatment options.",
            "Seeking emotional support and practical guidance to cope with medical procedures, side effects, and lifestyle changes.",
        ],
    },
    CanonicalScenario {
        name: "Caregiver Support",
        count: 202,
        examples: &["Offering guidance and resources to a caregiver of an elderly parent, discussing techniques for managing caregiver stress and suggesting respite care options."],
    },
    CanonicalScenario {
        name: "Finding Meaning and Purpose in Life",
        count: 202,
        examples: &[
            "Exploring questions related to the meaning of life, personal values, and finding purpose.",
            "Assisting someone who is questioning their life's purpose and exploring different avenues for finding meaning, discussing their values and interests, and encouraging self-reflection.",
        ],
    },
    CanonicalScenario {
        name: "Navigating Gender Identity and Transitioning",
        count: 202,
        examples: &[
            "Seeking support and resources while exploring gender identity and considering transitioning.",
            "Accessing guidance on navigating social, medical, and legal aspects of transitioning.",
        ],
    },
    CanonicalScenario {
        name: "Moving to a New City or Country",
        count: 202,
        examples: &[
            "Dealing with feelings of homesickness, cultural adjustment, and building a new social network.",
            "Seeking support in navigating the practical and emotional aspects of relocating to a different city or country.",
        ],
    },
    CanonicalScenario {
        name: "Career Transitions",
        count: 202,
        examples: &["Assisting someone who is considering a career change, helping them explore their passions, transferable skills, and develop a plan for transitioning into a new field."],
    },
    CanonicalScenario {
        name: "Parenthood and Parenting Challenges",
        count: 202,
        examples: &["Supporting a new parent who is feeling overwhelmed and sleep-deprived, offering reassurance, and sharing tips for self-care and coping strategies for the demands of parenthood."],
    },
    CanonicalScenario {
        name: "Low Self-Esteem or Lack of Confidence",
        count: 302,
        examples: &[
            "Addressing negative self-perceptions and building self-worth.",
            "Seeking techniques for cultivating self-compassion and improving self-esteem.",
        ],
    },
    CanonicalScenario {
        name: "Body Image Concerns and Eating Disorders",
        count: 101,
        examples: &[
            "Dealing with body dissatisfaction and the impact it has on self-image and overall well-being.",
            "Seeking support in recovering from an eating disorder and developing a healthy relationship with food and body.",
        ],
    },
    CanonicalScenario {
        name: "LGBTQ+ Identity",
        count: 101,
        examples: &["Assisting someone in the process of coming out as gay, offering support, connecting them with LGBTQ+ community resources, and being a source of understanding."],
    },
    CanonicalScenario {
        name: "Cultural Identity and Belonging",
        count: 101,
        examples: &["Engaging in discussions with someone who is exploring their mixed-race identity and helping them embrace and celebrate their diverse heritage."],
    },
    CanonicalScenario {
        name: "Academic Stress or Pressure",
        count: 202,
        examples: &[
            "Coping with academic expectations, exam anxiety, or perfectionism.",
            "Seeking strategies for time management, study techniques, and reducing academic stress.",
        ],
    },
    CanonicalScenario {
        name: "Job Loss or Career Setbacks",
        count: 202,
        examples: &[
            "Navigating the emotions and challenges of losing a job or facing career setbacks.",
            "Seeking guidance and encouragement for career transitions or exploring new professional opportunities.",
        ],
    },
    CanonicalScenario {
        name: "Parenting Challenges and Parental Guilt",
        count: 202,
        examples: &[
            "Managing parental responsibilities, parenting styles, and dealing with parental guilt.",
            "Seeking advice on effective communication with children and finding a balance between work and family.",
        ],
    },
    CanonicalScenario {
        name: "Sibling Rivalry or Family Conflict",
        count: 403,
        examples: &[
            "Resolving conflicts and improving relationships with siblings or other family members.",
            "Seeking guidance on navigating family dynamics, establishing healthy boundaries, and fostering understanding.",
        ],
    },
    CanonicalScenario {
        name: "Surviving and Recovering from Physical or Emotional Abuse",
        count: 101,
        examples: &[
            "Processing the trauma of past abuse and seeking support for healing and recovery.",
            "Finding resources and coping strategies for managing the emotional impact of abuse.",
        ],
    },
    CanonicalScenario {
        name: "Healing from Sexual Assault or Domestic Violence",
        count: 101,
        examples: &[
            "Navigating the complex emotions, seeking support, and developing coping mechanisms after experiencing sexual assault or domestic violence.",
            "Accessing information on trauma-informed therapy and support networks for survivors of assault or violence.",
        ],
    },
    CanonicalScenario {
        name: "Post-Traumatic Stress Disorder (PTSD)",
        count: 101,
        examples: &["Creating a safe and non-judgmental space for a military veteran with PTSD to share their experiences and providing resources for trauma-focused therapy and support groups."],
    },
    CanonicalScenario {
        name: "Healing from Abuse",
        count: 202,
        examples: &["Assisting someone who has recently left an abusive relationship, connecting them with local support services, and offering encouragement as they rebuild their life."],
    },
    CanonicalScenario {
        name: "Addiction and Recovery",
        count: 202,
        examples: &["Offering empathy and understanding to someone battling addiction, discussing treatment options, and providing emotional support during their journey to recovery."],
    },
    CanonicalScenario {
        name: "Support for Loved Ones or Friends",
        count: 202,
        examples: &["Supporting a parent who has a child dealing with addiction, offering a listening ear, and connecting them with support groups and counseling services."],
    },
];

/// Ordered scenario registry. Starts with the canonical set and accepts
/// additional names, which are flagged non-canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRegistry {
    scenarios: Vec<Scenario>,
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        Self::canonical()
    }
}

impl ScenarioRegistry {
    pub fn canonical() -> Self {
        let scenarios = CANONICAL
            .iter()
            .map(|c| Scenario {
                name: c.name.to_string(),
                example_descriptions: c.examples.iter().map(|s| s.to_string()).collect(),
                canonical: true,
                reference_count: Some(c.count),
            })
            .collect();
        Self { scenarios }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Scenario> {
        self.scenarios.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Case- and punctuation-insensitive lookup.
    pub fn find_fuzzy(&self, name: &str) -> Option<&Scenario> {
        let key = fold(name);
        self.scenarios.iter().find(|s| fold(&s.name) == key)
    }

    /// Adds a non-canonical scenario. Returns false if the name already exists.
    pub fn register(&mut self, name: impl Into<String>, examples: Vec<String>) -> bool {
        let name = name.into();
        if self.contains(&name) {
            return false;
        }
        self.scenarios.push(Scenario {
            name,
            example_descriptions: examples,
            canonical: false,
            reference_count: None,
        });
        true
    }
}

impl Scenario {
    /// True when two names differ only in case, punctuation or spacing.
    pub fn same_name(a: &str, b: &str) -> bool {
        fold(a) == fold(b)
    }
}

fn fold(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}
