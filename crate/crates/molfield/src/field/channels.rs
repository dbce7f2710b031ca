//! Channel specifications: which atoms feed each field dimension and what
//! scales them.

use std::collections::BTreeSet;

use crate::elements::PropertyKind;
use crate::molecule::Atom;

use super::FieldError;

/// Default scaling factor: contribution is 1.0 on the atom's radius surface
/// and e^2 at its center.
pub const DEFAULT_BETA: f64 = 2.0;

/// How the per-atom radius parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// r_a is the van der Waals radius.
    RadiusAsRa,
    /// r_a is the channel's property value (property-as-radius mode).
    PropertyAsRa,
}

/// One field dimension: a named atom predicate plus scaling source.
#[derive(Debug, Clone)]
pub struct Channel {
    pub name: String,
    /// Element symbols this channel accepts; `None` is a wildcard.
    pub elements: Option<BTreeSet<String>>,
    /// Entity tag filter; `None` accepts any atom.
    pub entity: Option<String>,
    pub source: PropertyKind,
    pub mode: WeightMode,
}

impl Channel {
    pub fn wildcard(name: impl Into<String>) -> Self {
        Channel {
            name: name.into(),
            elements: None,
            entity: None,
            source: PropertyKind::VdwRadius,
            mode: WeightMode::RadiusAsRa,
        }
    }

    pub fn elements<I, S>(name: impl Into<String>, symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Channel {
            name: name.into(),
            elements: Some(symbols.into_iter().map(Into::into).collect()),
            entity: None,
            source: PropertyKind::VdwRadius,
            mode: WeightMode::RadiusAsRa,
        }
    }

    pub fn with_entity(mut self, tag: impl Into<String>) -> Self {
        self.entity = Some(tag.into());
        self
    }

    pub fn with_property(mut self, property: PropertyKind) -> Self {
        self.source = property;
        self.mode = if property == PropertyKind::VdwRadius {
            WeightMode::RadiusAsRa
        } else {
            WeightMode::PropertyAsRa
        };
        self
    }

    pub fn matches(&self, atom: &Atom) -> bool {
        if let Some(elements) = &self.elements {
            if !elements.contains(&atom.element) {
                return false;
            }
        }
        if let Some(entity) = &self.entity {
            if atom.entity_tag.as_deref() != Some(entity.as_str()) {
                return false;
            }
        }
        true
    }

    /// Which table column supplies r_a for this channel.
    pub fn radius_source(&self) -> PropertyKind {
        match self.mode {
            WeightMode::RadiusAsRa => PropertyKind::VdwRadius,
            WeightMode::PropertyAsRa => self.source,
        }
    }
}

/// Ordered channels plus the shared scaling factor beta.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub channels: Vec<Channel>,
    pub beta: f64,
}

impl ChannelSpec {
    pub fn new(channels: Vec<Channel>, beta: f64) -> Self {
        ChannelSpec { channels, beta }
    }

    /// Single wildcard channel with the default beta.
    pub fn default_single() -> Self {
        ChannelSpec::new(vec![Channel::wildcard("all")], DEFAULT_BETA)
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.channels.is_empty() {
            return Err("channel spec needs at least one channel".into());
        }
        if !(self.beta > 0.0) {
            return Err(format!("beta must be positive, got {}", self.beta));
        }
        let mut names = BTreeSet::new();
        for c in &self.channels {
            if !names.insert(c.name.as_str()) {
                return Err(format!("duplicate channel name {:?}", c.name));
            }
        }
        Ok(())
    }

    /// Parse the declarative channel config.
    ///
    /// One channel per line: `name elements [entity=TAG] [property]` where
    /// `elements` is a comma-separated symbol list or `*`, and `property` is
    /// `vdw_radius` (default), `electronegativity` or `ws_density`. A line
    /// `beta VALUE` sets the scaling factor. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, FieldError> {
        let mut channels = Vec::new();
        let mut beta = DEFAULT_BETA;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let first = tokens.next().unwrap();
            if first == "beta" {
                let value = tokens.next().ok_or(FieldError::BadChannelConfig {
                    line,
                    message: "beta needs a value".into(),
                })?;
                beta = value.parse().map_err(|_| FieldError::BadChannelConfig {
                    line,
                    message: format!("beta value {value:?} is not a number"),
                })?;
                continue;
            }
            let elements = tokens.next().ok_or(FieldError::BadChannelConfig {
                line,
                message: "channel line needs an element list or '*'".into(),
            })?;
            let mut channel = if elements == "*" {
                Channel::wildcard(first)
            } else {
                Channel::elements(first, elements.split(','))
            };
            for token in tokens {
                if let Some(tag) = token.strip_prefix("entity=") {
                    channel = channel.with_entity(tag);
                } else if let Some(kind) = PropertyKind::parse(token) {
                    channel = channel.with_property(kind);
                } else {
                    return Err(FieldError::BadChannelConfig {
                        line,
                        message: format!("unrecognized token {token:?}"),
                    });
                }
            }
            channels.push(channel);
        }
        let spec = ChannelSpec::new(channels, beta);
        spec.validate()
            .map_err(|message| FieldError::BadChannelConfig { line: 0, message })?;
        Ok(spec)
    }

    /// Serialize back to the config text form (used by run manifests).
    pub fn to_config_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "beta {}", self.beta);
        for c in &self.channels {
            let elements = match &c.elements {
                None => "*".to_string(),
                Some(set) => set.iter().cloned().collect::<Vec<_>>().join(","),
            };
            let _ = write!(out, "{} {}", c.name, elements);
            if let Some(entity) = &c.entity {
                let _ = write!(out, " entity={entity}");
            }
            let _ = writeln!(out, " {}", c.radius_source().name());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_full_config() {
        let text = "\
# protein-ligand channels
beta 3.5
lig_h H entity=ligand
prot_heavy C,N,O,S entity=protein
density * ws_density
";
        let spec = ChannelSpec::parse(text).unwrap();
        assert_eq!(spec.beta, 3.5);
        assert_eq!(spec.channels.len(), 3);
        assert_eq!(spec.channels[0].entity.as_deref(), Some("ligand"));
        assert_eq!(spec.channels[1].elements.as_ref().unwrap().len(), 4);
        assert!(spec.channels[2].elements.is_none());
        assert_eq!(spec.channels[2].mode, WeightMode::PropertyAsRa);
        assert_eq!(spec.channels[2].radius_source(), PropertyKind::WsDensity);
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(ChannelSpec::parse("a *\na *\n").is_err());
    }

    #[test]
    fn empty_config_rejected() {
        assert!(ChannelSpec::parse("# nothing\n").is_err());
        assert!(ChannelSpec::parse("beta 0\nall *\n").is_err());
    }

    #[test]
    fn bad_token_rejected() {
        assert!(ChannelSpec::parse("a * frobnicate\n").is_err());
    }

    #[test]
    fn config_roundtrip() {
        let text = "beta 2\nall * vdw_radius\nen H,C electronegativity\n";
        let spec = ChannelSpec::parse(text).unwrap();
        let spec2 = ChannelSpec::parse(&spec.to_config_text()).unwrap();
        assert_eq!(spec2.channels.len(), spec.channels.len());
        assert_eq!(spec2.beta, spec.beta);
        assert_eq!(spec2.channels[1].radius_source(), PropertyKind::Electronegativity);
    }
}
