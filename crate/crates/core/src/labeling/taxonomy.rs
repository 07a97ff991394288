use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LabelError;

/// The closed ten-way event taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    PersonalBehavior,
    EquityChange,
    AssetChange,
    Dividend,
    RiskWarning,
    Financing,
    FinancialStatus,
    Violation,
    Industry,
    RatingAdjustment,
}

impl EventType {
    pub const COUNT: usize = 10;

    pub const ALL: [EventType; Self::COUNT] = [
        EventType::PersonalBehavior,
        EventType::EquityChange,
        EventType::AssetChange,
        EventType::Dividend,
        EventType::RiskWarning,
        EventType::Financing,
        EventType::FinancialStatus,
        EventType::Violation,
        EventType::Industry,
        EventType::RatingAdjustment,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<EventType> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::PersonalBehavior => "personal_behavior",
            EventType::EquityChange => "equity_change",
            EventType::AssetChange => "asset_change",
            EventType::Dividend => "dividend",
            EventType::RiskWarning => "risk_warning",
            EventType::Financing => "financing",
            EventType::FinancialStatus => "financial_status",
            EventType::Violation => "violation",
            EventType::Industry => "industry",
            EventType::RatingAdjustment => "rating_adjustment",
        }
    }

    /// Parses an optional label: empty strings mean "absent".
    pub fn parse_optional(s: &str) -> Result<Option<EventType>, LabelError> {
        let s = s.trim();
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some)
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| LabelError::UnknownEventType(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Positive,
    Negative,
    Neutral,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Positive, Direction::Negative, Direction::Neutral];

    /// Sign of `value` with a symmetric dead band.
    pub fn from_value(value: f64, band: f64) -> Direction {
        if value > band {
            Direction::Positive
        } else if value < -band {
            Direction::Negative
        } else {
            Direction::Neutral
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Positive => Direction::Negative,
            Direction::Negative => Direction::Positive,
            Direction::Neutral => Direction::Neutral,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
            Direction::Neutral => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Positive => "positive",
            Direction::Negative => "negative",
            Direction::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Direction::Positive),
            "negative" => Ok(Direction::Negative),
            "neutral" => Ok(Direction::Neutral),
            _ => Err(LabelError::UnknownLabel { kind: "direction", label: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Strong,
    Weak,
}

impl Strength {
    pub fn from_magnitude(value: f64, tau: f64) -> Strength {
        if value.abs() > tau {
            Strength::Strong
        } else {
            Strength::Weak
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Strong => "strong",
            Strength::Weak => "weak",
        }
    }
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strength {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strong" => Ok(Strength::Strong),
            "weak" => Ok(Strength::Weak),
            _ => Err(LabelError::UnknownLabel { kind: "strength", label: s.to_string() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taxonomy_is_closed() {
        for t in EventType::ALL {
            assert_eq!(t.as_str().parse::<EventType>().unwrap(), t);
            assert_eq!(EventType::from_index(t.index()), Some(t));
        }
        assert!(matches!("earnings".parse::<EventType>(), Err(LabelError::UnknownEventType(l)) if l == "earnings"));
        assert_eq!(EventType::parse_optional("").unwrap(), None);
        let json = serde_json::to_string(&EventType::RiskWarning).unwrap();
        assert_eq!(json, "\"risk_warning\"");
    }
}
