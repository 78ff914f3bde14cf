use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PromptError;
use crate::textmetrics::AttributeKind;

/// How control-token values are rounded before rendering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRounding {
    /// One fractional digit, e.g. `<FKGL=4.0>`.
    #[default]
    OneDecimal,
    /// Whole numbers, e.g. `<FKGL=5>`.
    Integer,
}

impl TokenRounding {
    fn decimals(self) -> u8 {
        match self {
            TokenRounding::OneDecimal => 1,
            TokenRounding::Integer => 0,
        }
    }
}

impl FromStr for TokenRounding {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "one_decimal" | "decimal" | "1" => Ok(TokenRounding::OneDecimal),
            "integer" | "int" | "0" => Ok(TokenRounding::Integer),
            _ => Err(PromptError::UnknownRounding(s.to_string())),
        }
    }
}

/// `<NAME=VALUE>` with an already rounded value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlToken {
    pub kind: AttributeKind,
    pub value: f64,
    /// Fractional digits shown when rendered.
    pub decimals: u8,
}

impl ControlToken {
    /// The value as it appears inside the token.
    pub fn value_text(&self) -> String {
        format!("{:.*}", self.decimals as usize, self.value)
    }
}

impl fmt::Display for ControlToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}={}>", self.kind.name(), self.value_text())
    }
}

impl Serialize for ControlToken {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ControlToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match parse_token(&s) {
            (Some(t), "") => Ok(t),
            _ => Err(serde::de::Error::custom(format!("invalid control token {s:?}"))),
        }
    }
}

fn round_half_away(x: f64, decimals: u8) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    // adding 0.0 turns -0.0 into 0.0
    (x * scale).round() / scale + 0.0
}

/// Rounds half away from zero to one decimal and builds the token.
pub fn render_token(kind: AttributeKind, raw_value: f64) -> Result<ControlToken, PromptError> {
    render_token_with(kind, raw_value, TokenRounding::OneDecimal)
}

pub fn render_token_with(kind: AttributeKind, raw_value: f64, rounding: TokenRounding) -> Result<ControlToken, PromptError> {
    if !raw_value.is_finite() {
        return Err(PromptError::NonFinite(kind));
    }
    let decimals = rounding.decimals();
    Ok(ControlToken {
        kind,
        value: round_half_away(raw_value, decimals),
        decimals,
    })
}

fn take_number(s: &str) -> Option<(&str, u8, &str)> {
    let b = s.as_bytes();
    let mut i = usize::from(b.first() == Some(&b'-'));
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i == int_start {
        return None;
    }
    let mut decimals = 0u8;
    if i < b.len() && b[i] == b'.' {
        let frac_start = i + 1;
        let mut j = frac_start;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j == frac_start {
            return None;
        }
        decimals = u8::try_from(j - frac_start).ok()?;
        i = j;
    }
    Some((&s[..i], decimals, &s[i..]))
}

/// Splits a leading control token off `text`.
///
/// Leading whitespace before the token is ignored and whitespace after it
/// is dropped from the remainder. When `text` does not start with a token
/// the whole input comes back as the remainder.
pub fn parse_token(text: &str) -> (Option<ControlToken>, &str) {
    let fail = (None, text);
    let Some(s) = text.trim_start().strip_prefix('<') else {
        return fail;
    };
    let Some(eq) = s.find('=') else { return fail };
    let Ok(kind) = AttributeKind::from_name(&s[..eq]) else {
        return fail;
    };
    let Some((num, decimals, rest)) = take_number(&s[eq + 1..]) else {
        return fail;
    };
    let Some(rest) = rest.strip_prefix('>') else {
        return fail;
    };
    let Ok(value) = num.parse::<f64>() else { return fail };
    (
        Some(ControlToken {
            kind,
            value: value + 0.0,
            decimals,
        }),
        rest.trim_start(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        assert_eq!(render_token(AttributeKind::Fkgl, 4.03).unwrap().to_string(), "<FKGL=4.0>");
        assert_eq!(
            render_token(AttributeKind::WordCompression, 0.5).unwrap().to_string(),
            "<WORD_COMPRESSION=0.5>"
        );
        assert_eq!(render_token(AttributeKind::Ari, -0.04).unwrap().to_string(), "<ARI=0.0>");
        assert_eq!(render_token(AttributeKind::Ari, -0.06).unwrap().to_string(), "<ARI=-0.1>");
        assert_eq!(render_token(AttributeKind::DaleChall, 0.25).unwrap().to_string(), "<DALE-CHALL=0.3>");
        assert_eq!(render_token(AttributeKind::DaleChall, -0.25).unwrap().to_string(), "<DALE-CHALL=-0.3>");
        assert_eq!(render_token(AttributeKind::Fkgl, 12.0).unwrap().to_string(), "<FKGL=12.0>");
        assert!(render_token(AttributeKind::Fkgl, f64::NAN).is_err());
    }

    #[test]
    fn integer_rounding() {
        let t = render_token_with(AttributeKind::Fkgl, 4.5, TokenRounding::Integer).unwrap();
        assert_eq!(t.to_string(), "<FKGL=5>");
        assert_eq!(parse_token("<FKGL=5>").0, Some(t));
    }

    #[test]
    fn parsing() {
        let (t, rest) = parse_token("<FKGL=4.0> The cat.");
        assert_eq!(t.unwrap().to_string(), "<FKGL=4.0>");
        assert_eq!(rest, "The cat.");
        let (t, rest) = parse_token("  <DALE-CHALL=8.21>x");
        let t = t.unwrap();
        assert_eq!((t.kind, t.value, t.decimals), (AttributeKind::DaleChall, 8.21, 2));
        assert_eq!(rest, "x");
        for bad in ["No token here", "<FKGL=>", "<FKGL=4.>", "<FOO=1.0>", "<FKGL=4.0", "FKGL=4.0>", "<FKGL=.5>", ""] {
            let (t, rest) = parse_token(bad);
            assert!(t.is_none(), "{bad}");
            assert_eq!(rest, bad);
        }
        assert_eq!(parse_token("<ARI=-0.0>").0.unwrap().to_string(), "<ARI=0.0>");
    }

    #[test]
    fn serde_as_string() {
        let t = render_token(AttributeKind::CharCompression, 0.84).unwrap();
        let j = serde_json::to_string(&t).unwrap();
        assert_eq!(j, "\"<CHAR_COMPRESSION=0.8>\"");
        assert_eq!(serde_json::from_str::<ControlToken>(&j).unwrap(), t);
        assert!(serde_json::from_str::<ControlToken>("\"<CHAR_COMPRESSION=0.8> x\"").is_err());
    }
}
