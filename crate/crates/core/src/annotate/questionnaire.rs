//! The 15-question behavioral questionnaire: four categories, per-question
//! engagement polarity, and the nested ablation subsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Behavioral area a question probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    EyeGaze,
    FacialExpr,
    BodyPosture,
    Distraction,
}

/// Whether a YES answer indicates engagement or disengagement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    EngagementPositive,
    EngagementNegative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    /// "Q1" through "Q15".
    pub id: String,
    pub category: Category,
    pub text: String,
    pub polarity: Polarity,
}

impl Question {
    /// Numeric part of the id ("Q7" → 7).
    pub fn number(&self) -> Result<usize> {
        self.id
            .strip_prefix('Q')
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::invalid_input(format!("malformed question id {}", self.id)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Questionnaire {
    /// Bumped when question texts or structure change; part of the
    /// annotation cache key so stale caches are detected.
    pub version: u32,
    pub questions: Vec<Question>,
}

impl Questionnaire {
    pub fn validate(&self) -> Result<()> {
        if self.questions.is_empty() {
            return Err(Error::invalid_input("questionnaire has no questions"));
        }
        let mut seen = std::collections::HashSet::new();
        for q in &self.questions {
            q.number()?;
            if !seen.insert(q.id.as_str()) {
                return Err(Error::invalid_input(format!(
                    "duplicate question id {}",
                    q.id
                )));
            }
        }
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        self.questions.iter().map(|q| q.id.clone()).collect()
    }

    /// Stable content hash over version, ids, and texts (FNV-1a); part of
    /// the annotation cache key.
    pub fn content_hash(&self) -> u64 {
        let mut repr = format!("v{}", self.version);
        for q in &self.questions {
            repr.push('|');
            repr.push_str(&q.id);
            repr.push(':');
            repr.push_str(&q.text);
        }
        crate::rng::id_salt(&repr)
    }

    pub fn counts_by_category(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for q in &self.questions {
            let slot = match q.category {
                Category::EyeGaze => 0,
                Category::FacialExpr => 1,
                Category::BodyPosture => 2,
                Category::Distraction => 3,
            };
            counts[slot] += 1;
        }
        counts
    }
}

const QUESTION_DATA: [(usize, Category, Polarity, &str); 15] = [
    (
        1,
        Category::EyeGaze,
        Polarity::EngagementNegative,
        "Does the student frequently shift their gaze significantly away from the screen or primary point of focus?",
    ),
    (
        2,
        Category::EyeGaze,
        Polarity::EngagementPositive,
        "Does the student's eye gaze remain concentrated in one consistent direction while watching the video?",
    ),
    (
        3,
        Category::EyeGaze,
        Polarity::EngagementPositive,
        "Does the student keep their attention directed at a single point during most of the video?",
    ),
    (
        4,
        Category::EyeGaze,
        Polarity::EngagementPositive,
        "Does the student's eye movement stay within a limited area, suggesting focused attention on the content?",
    ),
    (
        5,
        Category::EyeGaze,
        Polarity::EngagementNegative,
        "Does the student frequently glance away from the screen?",
    ),
    (
        6,
        Category::FacialExpr,
        Polarity::EngagementNegative,
        "Does the student appear uninterested or bored based on their facial expressions?",
    ),
    (
        7,
        Category::FacialExpr,
        Polarity::EngagementNegative,
        "Does the student show signs of fatigue or sleepiness, such as yawning or nodding off?",
    ),
    (
        8,
        Category::FacialExpr,
        Polarity::EngagementNegative,
        "Does the student barely open their eyes, appearing tired?",
    ),
    (
        9,
        Category::FacialExpr,
        Polarity::EngagementPositive,
        "Does the student appear to like or enjoy the content being presented?",
    ),
    (
        10,
        Category::BodyPosture,
        Polarity::EngagementNegative,
        "Is the student fidgeting restlessly in their chair?",
    ),
    (
        11,
        Category::BodyPosture,
        Polarity::EngagementNegative,
        "Does the student exhibit a passive posture with minimal movement?",
    ),
    (
        12,
        Category::BodyPosture,
        Polarity::EngagementPositive,
        "Does the student lean forward, appearing highly engaged with the content?",
    ),
    (
        13,
        Category::Distraction,
        Polarity::EngagementNegative,
        "Is the student using a phone or other device during the lecture?",
    ),
    (
        14,
        Category::Distraction,
        Polarity::EngagementNegative,
        "Does the student talk to others or engage in activities unrelated to the lecture?",
    ),
    (
        15,
        Category::Distraction,
        Polarity::EngagementNegative,
        "Are there any signs of the student being distracted from the lecture?",
    ),
];

/// The built-in 15-question schema (5 eye-gaze, 4 facial-expression,
/// 3 body-posture, 3 distraction questions).
pub fn default_questionnaire() -> Questionnaire {
    Questionnaire {
        version: 1,
        questions: QUESTION_DATA
            .iter()
            .map(|&(n, category, polarity, text)| Question {
                id: format!("Q{n}"),
                category,
                text: text.to_string(),
                polarity,
            })
            .collect(),
    }
}

/// Question numbers retained at each supported subset size. Subsets are
/// nested: each smaller set is contained in every larger one.
const SUBSETS: [(usize, &[usize]); 5] = [
    (15, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]),
    (12, &[1, 2, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]),
    (9, &[1, 2, 6, 7, 9, 10, 12, 13, 14]),
    (6, &[1, 2, 9, 10, 12, 13]),
    (3, &[1, 12, 13]),
];

/// Restrict a questionnaire to one of the supported ablation subsets
/// (3, 6, 9, 12, or 15 questions), preserving question order.
pub fn question_subset(q: &Questionnaire, count: usize) -> Result<Questionnaire> {
    q.validate()?;
    let keep = SUBSETS
        .iter()
        .find(|(size, _)| *size == count)
        .map(|(_, numbers)| *numbers)
        .ok_or_else(|| {
            Error::invalid_config(format!(
                "unsupported question count {count} (supported: 3, 6, 9, 12, 15)"
            ))
        })?;
    let questions: Vec<Question> = q
        .questions
        .iter()
        .filter(|question| {
            question
                .number()
                .map(|n| keep.contains(&n))
                .unwrap_or(false)
        })
        .cloned()
        .collect();
    if questions.len() != keep.len() {
        return Err(Error::invalid_config(format!(
            "questionnaire is missing questions required by the {count}-question subset"
        )));
    }
    Ok(Questionnaire {
        version: q.version,
        questions,
    })
}
