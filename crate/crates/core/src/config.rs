//! INI-style configuration files: `[section]` headers, `key = value` lines
//! and `#` comments. Parsing either yields a fully validated scenario or a
//! diagnostic naming the line, section, key and reason. Unknown sections
//! and keys are rejected.

use crate::fv::VelocityField;
use crate::harness::{InitialProfile, Scenario};
use crate::model::{Reaction, ReactionNetwork, SorptionModel, SpeciesSystem, TriangularStructure};
use crate::stepper::StepperConfig;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: [{section}] {key}: {message}")]
    BadValue {
        line: usize,
        section: String,
        key: String,
        message: String,
    },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: [{section}] unknown key `{key}`")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("[{section}] missing required key `{key}`")]
    MissingKey { section: String, key: String },
}

/// Output sinks for the `run` subcommand.
#[derive(Debug, Clone, Default)]
pub struct OutputConfig {
    pub csv: Option<String>,
    pub snapshot_dir: Option<String>,
    pub snapshot_every: usize,
}

/// A parsed configuration: the simulation scenario plus output sinks.
#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: Scenario,
    pub output: OutputConfig,
    /// When set, `run` first requires the local well-posedness exponent
    /// predicate to hold at this integrability exponent (degrees (1,1),
    /// which cover all built-in sorption laws).
    pub lwp_gate_p: Option<String>,
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    used: bool,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    entries: Vec<Entry>,
}

fn tokenize(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Syntax {
                line: line_no,
                message: "section header must look like [name]".into(),
            })?;
            sections.push(Section {
                name: name.trim().to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let section = sections.last_mut().ok_or(ConfigError::Syntax {
            line: line_no,
            message: "key/value line before any [section] header".into(),
        })?;
        section.entries.push(Entry {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line: line_no,
            used: false,
        });
    }
    Ok(sections)
}

struct SectionView<'a> {
    name: &'a str,
    entries: &'a mut [Entry],
}

impl<'a> SectionView<'a> {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        for e in self.entries.iter_mut() {
            if e.key == key && !e.used {
                e.used = true;
                return Some((e.value.clone(), e.line));
            }
        }
        None
    }

    fn take_all(&mut self, key: &str) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        for e in self.entries.iter_mut() {
            if e.key == key && !e.used {
                e.used = true;
                out.push((e.value.clone(), e.line));
            }
        }
        out
    }

    fn bad(&self, key: &str, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::BadValue {
            line,
            section: self.name.to_string(),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn parse_f64(&mut self, key: &str) -> Result<Option<(f64, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| self.bad(key, line, format!("`{v}` is not a number")))?;
                Ok(Some((x, line)))
            }
        }
    }

    fn parse_usize(&mut self, key: &str) -> Result<Option<(usize, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => {
                let x: usize = v
                    .parse()
                    .map_err(|_| self.bad(key, line, format!("`{v}` is not a nonnegative integer")))?;
                Ok(Some((x, line)))
            }
        }
    }

    fn parse_f64_list(&mut self, key: &str, n: usize) -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => {
                let parts: Vec<&str> = v
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .collect();
                let mut values = Vec::with_capacity(parts.len());
                for p in &parts {
                    let x: f64 = p
                        .parse()
                        .map_err(|_| self.bad(key, line, format!("`{p}` is not a number")))?;
                    values.push(x);
                }
                // a single value broadcasts over all species
                if values.len() == 1 && n > 1 {
                    values = vec![values[0]; n];
                }
                if values.len() != n {
                    return Err(self.bad(
                        key,
                        line,
                        format!("expected {n} values (one per species), got {}", values.len()),
                    ));
                }
                Ok(Some((values, line)))
            }
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        for e in self.entries.iter() {
            if !e.used {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    section: self.name.to_string(),
                    key: e.key.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Parses `A + 2 B -> C @ 1.0` into a mass-action reaction: the reactant
/// multiplicities are the kinetic orders and the stoichiometry is products
/// minus reactants.
pub fn parse_reaction(
    spec: &str,
    species: &SpeciesSystem,
) -> Result<Reaction, String> {
    let (sides, rate) = spec
        .rsplit_once('@')
        .ok_or("missing `@ rate` suffix".to_string())?;
    let rate: f64 = rate
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a rate constant", rate.trim()))?;
    let (lhs, rhs) = sides
        .split_once("->")
        .ok_or("missing `->` between reactants and products".to_string())?;

    let n = species.n_species();
    let mut orders = vec![0u32; n];
    let mut stoich = vec![0i32; n];

    let mut parse_side = |side: &str, sign: i32, orders: Option<&mut Vec<u32>>| -> Result<(), String> {
        let mut order_slot = orders;
        for term in side.split('+') {
            let term = term.trim();
            if term.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = term.split_whitespace().collect();
            let (mult, name) = match tokens.as_slice() {
                [name] => (1u32, *name),
                [mult, name] => {
                    let m: u32 = mult
                        .parse()
                        .map_err(|_| format!("`{mult}` is not an integer multiplicity"))?;
                    if m == 0 {
                        return Err("multiplicity must be at least 1".into());
                    }
                    (m, *name)
                }
                _ => return Err(format!("cannot parse term `{term}`")),
            };
            let i = species
                .index_of(name)
                .ok_or(format!("unknown species `{name}`"))?;
            stoich[i] += sign * mult as i32;
            if let Some(orders) = order_slot.as_deref_mut() {
                orders[i] += mult;
            }
        }
        Ok(())
    };

    parse_side(lhs, -1, Some(&mut orders))?;
    parse_side(rhs, 1, None)?;
    Ok(Reaction {
        stoich,
        orders,
        rate,
    })
}

impl Config {
    pub fn from_text(text: &str) -> Result<Config, ConfigError> {
        let mut sections = tokenize(text)?;

        let known: BTreeSet<&str> = [
            "grid",
            "species",
            "sorption",
            "reactions_bulk",
            "reactions_surface",
            "velocity",
            "stepper",
            "initial",
            "output",
            "triangular_bulk",
            "triangular_surface",
        ]
        .into();
        for (idx, s) in sections.iter().enumerate() {
            if !known.contains(s.name.as_str()) {
                let line = s.entries.first().map(|e| e.line.saturating_sub(1)).unwrap_or(idx + 1);
                return Err(ConfigError::UnknownSection {
                    line,
                    section: s.name.clone(),
                });
            }
        }

        fn view<'a>(sections: &'a mut [Section], name: &'static str) -> Option<SectionView<'a>> {
            sections
                .iter_mut()
                .find(|s| s.name == name)
                .map(move |s| SectionView {
                    name,
                    entries: &mut s.entries,
                })
        }

        // [grid]
        let (dim, counts, extents) = match view(&mut sections, "grid") {
            None => (1usize, (32usize, 1usize), (1.0, 1.0)),
            Some(mut g) => {
                let dim = g.parse_usize("dim")?.map(|(v, _)| v).unwrap_or(1);
                let nx = g.parse_usize("nx")?.map(|(v, _)| v).unwrap_or(32);
                let ny = g.parse_usize("ny")?.map(|(v, _)| v).unwrap_or(nx);
                let lx = g.parse_f64("lx")?.map(|(v, _)| v).unwrap_or(1.0);
                let ly = g.parse_f64("ly")?.map(|(v, _)| v).unwrap_or(lx);
                g.finish()?;
                (dim, (nx, ny), (lx, ly))
            }
        };

        // [species]
        let species = match view(&mut sections, "species") {
            None => SpeciesSystem::new(vec!["A".into()], vec![1.0], vec![1.0]).map_err(|e| {
                ConfigError::MissingKey {
                    section: "species".into(),
                    key: e.to_string(),
                }
            })?,
            Some(mut s) => {
                let (names_raw, names_line) =
                    s.take("names").ok_or(ConfigError::MissingKey {
                        section: "species".into(),
                        key: "names".into(),
                    })?;
                let names: Vec<String> = names_raw
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.to_string())
                    .collect();
                let n = names.len();
                let d_bulk = s
                    .parse_f64_list("d_bulk", n)?
                    .map(|(v, _)| v)
                    .unwrap_or(vec![1.0; n]);
                let d_surf = s
                    .parse_f64_list("d_surf", n)?
                    .map(|(v, _)| v)
                    .unwrap_or(vec![1.0; n]);
                let sys = SpeciesSystem::new(names, d_bulk, d_surf).map_err(|e| {
                    s.bad("names", names_line, e.to_string())
                })?;
                s.finish()?;
                sys
            }
        };
        let n = species.n_species();

        // [sorption]
        let sorption = match view(&mut sections, "sorption") {
            None => None,
            Some(mut s) => {
                let (variant, vline) = s.take("variant").ok_or(ConfigError::MissingKey {
                    section: "sorption".into(),
                    key: "variant".into(),
                })?;
                let variant = variant.to_lowercase();
                if variant == "none" {
                    s.finish()?;
                    None
                } else {
                    // remember where each parameter came from so invariant
                    // violations point at the offending line
                    let mut lines: Vec<(&str, usize)> = vec![("variant", vline)];
                    let mut list = |s: &mut SectionView<'_>,
                                    key: &'static str|
                     -> Result<Vec<f64>, ConfigError> {
                        Ok(match s.parse_f64_list(key, n)? {
                            Some((v, line)) => {
                                lines.push((key, line));
                                v
                            }
                            None => vec![1.0; n],
                        })
                    };
                    let k_ad = list(&mut s, "k_ad")?;
                    let k_de = list(&mut s, "k_de")?;
                    let sigma = list(&mut s, "sigma")?;
                    let capacity = match s.parse_f64("c_s_sigma")? {
                        Some((v, line)) => {
                            lines.push(("c_s_sigma", line));
                            v
                        }
                        None => 1.0,
                    };
                    let beta = match s.parse_f64("beta")? {
                        Some((v, line)) => {
                            lines.push(("beta", line));
                            v
                        }
                        None => 1.0,
                    };
                    let model = match variant.as_str() {
                        "henry" => SorptionModel::henry(k_ad, k_de),
                        "langmuir" => SorptionModel::langmuir(k_ad, k_de, sigma, capacity),
                        "volmer" => SorptionModel::volmer(k_ad, k_de, sigma, capacity, beta),
                        "frumkin" => SorptionModel::frumkin(k_ad, k_de, sigma, capacity, beta),
                        "van_der_waals" | "vdw" => {
                            SorptionModel::van_der_waals(k_ad, k_de, sigma, capacity, beta)
                        }
                        other => {
                            return Err(s.bad(
                                "variant",
                                vline,
                                format!(
                                    "unknown sorption variant `{other}` (expected henry, langmuir, \
                                     volmer, frumkin, van_der_waals or none)"
                                ),
                            ))
                        }
                    }
                    .map_err(|e| {
                        let message = e.to_string();
                        let (key, line) = lines
                            .iter()
                            .find(|(key, _)| message.starts_with(key))
                            .copied()
                            .unwrap_or(("variant", vline));
                        s.bad(key, line, message)
                    })?;
                    s.finish()?;
                    Some(model)
                }
            }
        };

        // [reactions_bulk] / [reactions_surface]
        let mut parse_network = |section: &'static str| -> Result<ReactionNetwork, ConfigError> {
            match view(&mut sections, section) {
                None => Ok(ReactionNetwork::empty(n)),
                Some(mut s) => {
                    let mut reactions = Vec::new();
                    for (value, line) in s.take_all("reaction") {
                        let r = parse_reaction(&value, &species)
                            .map_err(|e| s.bad("reaction", line, e))?;
                        reactions.push((r, line));
                    }
                    s.finish()?;
                    let first_line = reactions.first().map(|(_, l)| *l).unwrap_or(0);
                    ReactionNetwork::new(n, reactions.into_iter().map(|(r, _)| r).collect())
                        .map_err(|e| ConfigError::BadValue {
                            line: first_line,
                            section: section.to_string(),
                            key: "reaction".into(),
                            message: e.to_string(),
                        })
                }
            }
        };
        let bulk_network = parse_network("reactions_bulk")?;
        let surface_network = parse_network("reactions_surface")?;

        // [velocity]
        let velocity = match view(&mut sections, "velocity") {
            None => VelocityField::Zero,
            Some(mut s) => {
                let variant = s
                    .take("variant")
                    .map(|(v, l)| (v.to_lowercase(), l))
                    .unwrap_or(("zero".into(), 0));
                let amplitude = s.parse_f64("amplitude")?.map(|(v, _)| v).unwrap_or(1.0);
                let field = match variant.0.as_str() {
                    "zero" => VelocityField::Zero,
                    "stream_function" | "streamfunction" => {
                        VelocityField::StreamFunction { amplitude }
                    }
                    other => {
                        return Err(s.bad(
                            "variant",
                            variant.1,
                            format!("unknown velocity variant `{other}` (zero or stream_function)"),
                        ))
                    }
                };
                s.finish()?;
                field
            }
        };

        // [stepper]
        let mut stepper = StepperConfig::default();
        let mut t_end = 1.0;
        let mut lwp_gate_p = None;
        if let Some(mut s) = view(&mut sections, "stepper") {
            if let Some((v, _)) = s.parse_f64("dt_init")? {
                stepper.dt_init = v;
            }
            if let Some((v, _)) = s.parse_f64("dt_min")? {
                stepper.dt_min = v;
            }
            if let Some((v, _)) = s.parse_f64("dt_max")? {
                stepper.dt_max = v;
            }
            if let Some((v, _)) = s.parse_f64("cfl")? {
                stepper.cfl = v;
            }
            if let Some((v, _)) = s.parse_f64("lin_tol")? {
                stepper.lin_tol = v;
            }
            if let Some((v, _)) = s.parse_usize("max_lin_iter")? {
                stepper.max_lin_iter = v;
            }
            if let Some((v, _)) = s.parse_f64("blowup_threshold")? {
                stepper.blowup_threshold = v;
            }
            if let Some((v, _)) = s.parse_f64("t_end")? {
                t_end = v;
            }
            if let Some((v, _)) = s.parse_usize("output_every")? {
                stepper.output_every = v;
            }
            if let Some((v, _)) = s.parse_f64("positivity_tol")? {
                stepper.positivity_tol = v;
            }
            if let Some((v, _)) = s.take("lwp_p") {
                lwp_gate_p = Some(v);
            }
            s.finish()?;
        }

        // [initial]
        let mut initial_bulk = vec![InitialProfile::Const(1.0); n];
        let mut initial_surf = vec![0.0; n];
        if let Some(mut s) = view(&mut sections, "initial") {
            for i in 0..n {
                let name = species.names()[i].clone();
                if let Some((v, line)) = s.take(&name) {
                    initial_bulk[i] = parse_profile(&v).map_err(|e| s.bad(&name, line, e))?;
                }
                let surf_key = format!("{name}_surf");
                if let Some((v, line)) = s.take(&surf_key) {
                    let x: f64 = v
                        .parse()
                        .map_err(|_| s.bad(&surf_key, line, format!("`{v}` is not a number")))?;
                    initial_surf[i] = x;
                }
            }
            s.finish()?;
        }

        // [output]
        let mut output = OutputConfig {
            snapshot_every: 10,
            ..OutputConfig::default()
        };
        if let Some(mut s) = view(&mut sections, "output") {
            if let Some((v, _)) = s.take("csv") {
                output.csv = Some(v);
            }
            if let Some((v, _)) = s.take("snapshot_dir") {
                output.snapshot_dir = Some(v);
            }
            if let Some((v, _)) = s.parse_usize("snapshot_every")? {
                output.snapshot_every = v.max(1);
            }
            s.finish()?;
        }

        // [triangular_bulk] / [triangular_surface]
        let mut parse_triangular =
            |section: &'static str| -> Result<Option<TriangularStructure>, ConfigError> {
                match view(&mut sections, section) {
                    None => Ok(None),
                    Some(mut s) => {
                        let mut rows = Vec::new();
                        let mut first_line = 0;
                        for (value, line) in s.take_all("row") {
                            if first_line == 0 {
                                first_line = line;
                            }
                            let row: Result<Vec<f64>, _> = value
                                .split_whitespace()
                                .map(|t| t.parse::<f64>())
                                .collect();
                            let row = row
                                .map_err(|_| s.bad("row", line, "rows must be numbers"))?;
                            rows.push(row);
                        }
                        let c_tr = s.parse_f64("c_tr")?.map(|(v, _)| v).unwrap_or(1.0);
                        let mu = s.parse_f64("mu")?.map(|(v, _)| v).unwrap_or(0.0);
                        let tri = TriangularStructure::new(rows, c_tr, mu).map_err(|e| {
                            ConfigError::BadValue {
                                line: first_line,
                                section: section.to_string(),
                                key: "row".into(),
                                message: e.to_string(),
                            }
                        })?;
                        s.finish()?;
                        Ok(Some(tri))
                    }
                }
            };
        let tri_bulk = parse_triangular("triangular_bulk")?;
        let tri_surf = parse_triangular("triangular_surface")?;

        // downstream invariants: validate now so diagnostics stay near the file
        stepper.validate().map_err(|e| ConfigError::BadValue {
            line: 0,
            section: "stepper".into(),
            key: "dt".into(),
            message: e.to_string(),
        })?;
        if initial_bulk.len() != n || initial_surf.len() != n {
            return Err(ConfigError::MissingKey {
                section: "initial".into(),
                key: "per-species values".into(),
            });
        }

        let scenario = Scenario {
            name: "config".into(),
            dim,
            counts,
            extents,
            species,
            sorption,
            bulk_network,
            surface_network,
            velocity,
            initial_bulk,
            initial_surf,
            config: stepper,
            t_end,
            tri_bulk,
            tri_surf,
            advisory_envelope: false,
        };
        // grid invariants (counts >= 2, dim in {1,2}, extents > 0)
        scenario.grid().map_err(|e| ConfigError::BadValue {
            line: 0,
            section: "grid".into(),
            key: "dim/nx/ny".into(),
            message: e.to_string(),
        })?;

        Ok(Config {
            scenario,
            output,
            lwp_gate_p,
        })
    }
}

fn parse_profile(value: &str) -> Result<InitialProfile, String> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    match tokens.as_slice() {
        [x] => Ok(InitialProfile::Const(
            x.parse().map_err(|_| format!("`{x}` is not a number"))?,
        )),
        ["const", x] => Ok(InitialProfile::Const(
            x.parse().map_err(|_| format!("`{x}` is not a number"))?,
        )),
        ["cosine", base, amplitude] => Ok(InitialProfile::Cosine {
            base: base
                .parse()
                .map_err(|_| format!("`{base}` is not a number"))?,
            amplitude: amplitude
                .parse()
                .map_err(|_| format!("`{amplitude}` is not a number"))?,
        }),
        _ => Err(format!(
            "`{value}` is not an initial profile (use `<value>` or `cosine <base> <amplitude>`)"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[species]
names = A

[sorption]
variant = henry
";

    #[test]
    fn minimal_config_fills_defaults() {
        let config = Config::from_text(MINIMAL).unwrap();
        let s = &config.scenario;
        assert_eq!(s.dim, 1);
        assert_eq!(s.counts.0, 32);
        assert_eq!(s.species.n_species(), 1);
        assert!(s.sorption.is_some());
        assert!(s.bulk_network.is_empty());
        assert!((s.t_end - 1.0).abs() < 1e-15);
        assert!(matches!(s.initial_bulk[0], InitialProfile::Const(v) if v == 1.0));
        assert_eq!(s.initial_surf[0], 0.0);
    }

    #[test]
    fn sorption_variant_none_decouples_the_phases() {
        let config =
            Config::from_text("[species]\nnames = A\n\n[sorption]\nvariant = none\n").unwrap();
        assert!(config.scenario.sorption.is_none());
    }

    #[test]
    fn negative_adsorption_coefficient_is_rejected_with_reason() {
        let text = "\
[species]
names = A

[sorption]
variant = henry
k_ad = -1
";
        let err = Config::from_text(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sorption"), "{msg}");
        assert!(msg.contains("positive"), "{msg}");
        assert!(msg.contains("line 6") || msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn reaction_grammar_matches_hand_built_matrix() {
        let species = SpeciesSystem::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![1.0; 3],
            vec![1.0; 3],
        )
        .unwrap();
        let r = parse_reaction("A + B -> C @ 1.0", &species).unwrap();
        assert_eq!(r.stoich, vec![-1, -1, 1]);
        assert_eq!(r.orders, vec![1, 1, 0]);
        assert_eq!(r.rate, 1.0);

        let r = parse_reaction("A + 2 B -> C @ 0.5", &species).unwrap();
        assert_eq!(r.stoich, vec![-1, -2, 1]);
        assert_eq!(r.orders, vec![1, 2, 0]);

        // autocatalytic and degradation forms
        let r = parse_reaction("2 A -> 3 A @ 1.0", &species).unwrap();
        assert_eq!(r.stoich, vec![1, 0, 0]);
        assert_eq!(r.orders, vec![2, 0, 0]);
        let r = parse_reaction("A -> @ 2.0", &species).unwrap();
        assert_eq!(r.stoich, vec![-1, 0, 0]);

        assert!(parse_reaction("A -> B", &species).is_err());
        assert!(parse_reaction("A -> D @ 1.0", &species).is_err());
        assert!(parse_reaction("A + -> B @ 1.0", &species).is_ok()); // empty term tolerated
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let text = "[species]\nnames = A\nnonsense = 3\n";
        let err = Config::from_text(text).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 3, .. }), "{err}");

        let text = "[specis]\nnames = A\n";
        let err = Config::from_text(text).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownSection { .. }), "{err}");
    }

    #[test]
    fn full_config_round_trip() {
        let text = "\
# a 2D reactor with a stirring vortex
[grid]
dim = 2
nx = 8
ny = 8
lx = 1.0
ly = 1.0

[species]
names = A B
d_bulk = 0.5 0.7
d_surf = 0.4 0.3

[sorption]
variant = langmuir
k_ad = 1.0 0.6
k_de = 0.5 0.8
sigma = 1.0
c_s_sigma = 2.0

[reactions_bulk]
reaction = A + B -> A + A @ 0.3
reaction = 2 A -> B @ 0.2

[velocity]
variant = stream_function
amplitude = 0.5

[stepper]
dt_init = 1e-3
dt_max = 0.05
t_end = 0.25
output_every = 5

[initial]
A = cosine 1.0 0.5
B = 0.3
A_surf = 0.2
B_surf = 0.1

[output]
csv = out.csv
snapshot_every = 50
";
        let config = Config::from_text(text).unwrap();
        let s = &config.scenario;
        assert_eq!(s.dim, 2);
        assert_eq!(s.bulk_network.n_reactions(), 2);
        assert!(matches!(
            s.velocity,
            VelocityField::StreamFunction { amplitude } if amplitude == 0.5
        ));
        assert_eq!(config.output.csv.as_deref(), Some("out.csv"));
        assert_eq!(config.output.snapshot_every, 50);
        // the scenario builds into a runnable system
        let (system, state) = s.build().unwrap();
        assert_eq!(system.n_species(), 2);
        assert_eq!(state.c[0].len(), 64);
    }

    #[test]
    fn dt_window_invariant_checked() {
        let text = "\
[species]
names = A

[stepper]
dt_init = 1.0
dt_max = 0.1
";
        let err = Config::from_text(text).unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
    }
}
