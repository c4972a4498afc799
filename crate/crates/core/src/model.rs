//! Species systems, sorption rate laws, mass-action reaction networks, and
//! sample-based checkers for the structural assumptions the solver relies
//! on (quasi-positivity, sorption monotonicity and linear bounds, polynomial
//! growth of reaction rates, triangular structure).
//!
//! All checks are decidable by construction: they evaluate the inequality in
//! question on a deterministic low-discrepancy sample set and report the
//! worst violation together with a witness point, so every verdict can be
//! reproduced independently.

use thiserror::Error;

/// Errors raised by model construction and evaluation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what}: expected a strictly positive value, got {value}")]
    NonPositive { what: String, value: f64 },
    #[error("{what}: expected a finite value, got {value}")]
    NonFinite { what: String, value: f64 },
    #[error("species names must be unique: `{0}` appears twice")]
    DuplicateName(String),
    #[error("need at least one species")]
    NoSpecies,
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("negative concentration {value} at component {index}")]
    NegativeConcentration { index: usize, value: f64 },
    #[error("Frumkin site weights must satisfy sigma >= 1, got sigma[{index}] = {value}")]
    FrumkinExponent { index: usize, value: f64 },
    #[error("reaction {reaction}: species {species} is consumed but has reactant order 0")]
    MissingReactantOrder { reaction: usize, species: usize },
    #[error("triangular matrix must be lower triangular with positive diagonal: {0}")]
    BadTriangular(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

fn ensure_positive(what: &str, v: f64) -> Result<(), ModelError> {
    if !v.is_finite() {
        return Err(ModelError::NonFinite {
            what: what.to_string(),
            value: v,
        });
    }
    if v <= 0.0 {
        return Err(ModelError::NonPositive {
            what: what.to_string(),
            value: v,
        });
    }
    Ok(())
}

fn ensure_nonneg_vec(c: &[f64]) -> Result<(), ModelError> {
    for (i, &v) in c.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(ModelError::NegativeConcentration { index: i, value: v });
        }
    }
    Ok(())
}

/// A system of chemical species with bulk and surface diffusivities.
#[derive(Debug, Clone)]
pub struct SpeciesSystem {
    names: Vec<String>,
    d_bulk: Vec<f64>,
    d_surf: Vec<f64>,
}

impl SpeciesSystem {
    pub fn new(
        names: Vec<String>,
        d_bulk: Vec<f64>,
        d_surf: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if names.is_empty() {
            return Err(ModelError::NoSpecies);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ModelError::DuplicateName(n.clone()));
            }
        }
        for (label, v) in [("d_bulk", &d_bulk), ("d_surf", &d_surf)] {
            if v.len() != names.len() {
                return Err(ModelError::LengthMismatch {
                    what: label.to_string(),
                    expected: names.len(),
                    got: v.len(),
                });
            }
            for (i, &d) in v.iter().enumerate() {
                ensure_positive(&format!("{label}[{i}]"), d)?;
            }
        }
        Ok(Self {
            names,
            d_bulk,
            d_surf,
        })
    }

    pub fn n_species(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn d_bulk(&self) -> &[f64] {
        &self.d_bulk
    }

    pub fn d_surf(&self) -> &[f64] {
        &self.d_surf
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// The five supported closed-form sorption rate laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SorptionVariant {
    Henry,
    Langmuir,
    Volmer,
    Frumkin,
    VanDerWaals,
}

impl SorptionVariant {
    pub fn label(&self) -> &'static str {
        match self {
            SorptionVariant::Henry => "henry",
            SorptionVariant::Langmuir => "langmuir",
            SorptionVariant::Volmer => "volmer",
            SorptionVariant::Frumkin => "frumkin",
            SorptionVariant::VanDerWaals => "van_der_waals",
        }
    }

    /// Whether the adsorption factor depends on the occupancy number.
    pub fn uses_occupancy(&self) -> bool {
        !matches!(self, SorptionVariant::Henry)
    }
}

/// Minimal interface the structural checker needs from a sorption law.
///
/// Implemented by [`SorptionModel`]; tests implement it for deliberately
/// broken laws to exercise the failure path of the checker.
pub trait SorptionRates {
    fn n_species(&self) -> usize;
    /// Net per-species sorption rates; inputs are assumed componentwise >= 0.
    fn rates_unchecked(&self, c_trace: &[f64], c_surf: &[f64]) -> Vec<f64>;
    fn k_ad(&self) -> &[f64];
    fn k_de(&self) -> &[f64];
}

/// A sorption rate law `s_i = k_ad[i] * c_i * phi_i(theta) - k_de[i] * c^S_i`
/// where `phi_i` is the variant-specific adsorption factor and `theta` the
/// occupancy number of the surface.
#[derive(Debug, Clone)]
pub struct SorptionModel {
    variant: SorptionVariant,
    k_ad: Vec<f64>,
    k_de: Vec<f64>,
    /// Site weights sigma_i in the occupancy number (and the Frumkin exponent).
    sigma: Vec<f64>,
    /// Surface site capacity c_S per unit area.
    capacity: f64,
    /// Model constant beta (Volmer, Frumkin, Van der Waals).
    beta: f64,
}

impl SorptionModel {
    fn validated(self) -> Result<Self, ModelError> {
        let n = self.k_ad.len();
        if n == 0 {
            return Err(ModelError::NoSpecies);
        }
        for (label, v) in [("k_ad", &self.k_ad), ("k_de", &self.k_de), ("sigma", &self.sigma)] {
            if v.len() != n {
                return Err(ModelError::LengthMismatch {
                    what: label.to_string(),
                    expected: n,
                    got: v.len(),
                });
            }
            for (i, &x) in v.iter().enumerate() {
                ensure_positive(&format!("{label}[{i}]"), x)?;
            }
        }
        ensure_positive("c_s_sigma", self.capacity)?;
        if matches!(
            self.variant,
            SorptionVariant::Volmer | SorptionVariant::Frumkin | SorptionVariant::VanDerWaals
        ) {
            ensure_positive("beta", self.beta)?;
        }
        if self.variant == SorptionVariant::Frumkin {
            for (i, &s) in self.sigma.iter().enumerate() {
                if s < 1.0 {
                    return Err(ModelError::FrumkinExponent { index: i, value: s });
                }
            }
        }
        Ok(self)
    }

    pub fn henry(k_ad: Vec<f64>, k_de: Vec<f64>) -> Result<Self, ModelError> {
        let n = k_ad.len();
        Self {
            variant: SorptionVariant::Henry,
            k_ad,
            k_de,
            sigma: vec![1.0; n],
            capacity: 1.0,
            beta: 1.0,
        }
        .validated()
    }

    pub fn langmuir(
        k_ad: Vec<f64>,
        k_de: Vec<f64>,
        sigma: Vec<f64>,
        capacity: f64,
    ) -> Result<Self, ModelError> {
        Self {
            variant: SorptionVariant::Langmuir,
            k_ad,
            k_de,
            sigma,
            capacity,
            beta: 1.0,
        }
        .validated()
    }

    pub fn volmer(
        k_ad: Vec<f64>,
        k_de: Vec<f64>,
        sigma: Vec<f64>,
        capacity: f64,
        beta: f64,
    ) -> Result<Self, ModelError> {
        Self {
            variant: SorptionVariant::Volmer,
            k_ad,
            k_de,
            sigma,
            capacity,
            beta,
        }
        .validated()
    }

    pub fn frumkin(
        k_ad: Vec<f64>,
        k_de: Vec<f64>,
        sigma: Vec<f64>,
        capacity: f64,
        beta: f64,
    ) -> Result<Self, ModelError> {
        Self {
            variant: SorptionVariant::Frumkin,
            k_ad,
            k_de,
            sigma,
            capacity,
            beta,
        }
        .validated()
    }

    pub fn van_der_waals(
        k_ad: Vec<f64>,
        k_de: Vec<f64>,
        sigma: Vec<f64>,
        capacity: f64,
        beta: f64,
    ) -> Result<Self, ModelError> {
        Self {
            variant: SorptionVariant::VanDerWaals,
            k_ad,
            k_de,
            sigma,
            capacity,
            beta,
        }
        .validated()
    }

    pub fn variant(&self) -> SorptionVariant {
        self.variant
    }

    pub fn n_species(&self) -> usize {
        self.k_ad.len()
    }

    pub fn k_ad(&self) -> &[f64] {
        &self.k_ad
    }

    pub fn k_de(&self) -> &[f64] {
        &self.k_de
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Occupancy number of the surface, `theta = (1/c_S) sum_j sigma_j c^S_j`.
    pub fn occupancy(&self, c_surf: &[f64]) -> Result<f64, ModelError> {
        ensure_nonneg_vec(c_surf)?;
        if c_surf.len() != self.n_species() {
            return Err(ModelError::LengthMismatch {
                what: "c_surf".to_string(),
                expected: self.n_species(),
                got: c_surf.len(),
            });
        }
        Ok(self.occupancy_unchecked(c_surf))
    }

    fn occupancy_unchecked(&self, c_surf: &[f64]) -> f64 {
        let weighted: f64 = self
            .sigma
            .iter()
            .zip(c_surf.iter())
            .map(|(s, c)| s * c)
            .sum();
        weighted / self.capacity
    }

    /// Variant-specific adsorption factor `phi_i(theta)` so that the
    /// adsorption rate is `k_ad[i] * c_i * phi_i(theta)`.
    ///
    /// For Langmuir the factor is the free-site fraction `(1 - theta)^+`;
    /// Volmer and Van der Waals are continuously extended by 0 for
    /// `theta >= 1` (their theta -> 1 limits vanish).
    pub fn adsorption_factor(&self, species: usize, theta: f64) -> f64 {
        match self.variant {
            SorptionVariant::Henry => 1.0,
            SorptionVariant::Langmuir => (1.0 - theta).max(0.0),
            SorptionVariant::Volmer => {
                if theta >= 1.0 {
                    0.0
                } else {
                    (1.0 - theta) * (-self.beta * theta / (1.0 - theta)).exp()
                }
            }
            SorptionVariant::Frumkin => {
                let s = self.sigma[species];
                theta.powf(s) * (-s * self.beta * theta).exp()
            }
            SorptionVariant::VanDerWaals => {
                if theta >= 1.0 {
                    0.0
                } else {
                    let s = self.sigma[species];
                    (-self.beta * theta).exp() * (-s * theta / (1.0 - theta)).exp()
                }
            }
        }
    }

    /// Net sorption rates `s_i(c_trace, c_surf)` for all species.
    pub fn rates(&self, c_trace: &[f64], c_surf: &[f64]) -> Result<Vec<f64>, ModelError> {
        ensure_nonneg_vec(c_trace)?;
        ensure_nonneg_vec(c_surf)?;
        for (label, v) in [("c_trace", c_trace), ("c_surf", c_surf)] {
            if v.len() != self.n_species() {
                return Err(ModelError::LengthMismatch {
                    what: label.to_string(),
                    expected: self.n_species(),
                    got: v.len(),
                });
            }
        }
        Ok(self.rates_unchecked(c_trace, c_surf))
    }
}

impl SorptionRates for SorptionModel {
    fn n_species(&self) -> usize {
        self.k_ad.len()
    }

    fn rates_unchecked(&self, c_trace: &[f64], c_surf: &[f64]) -> Vec<f64> {
        let theta = self.occupancy_unchecked(c_surf);
        (0..self.n_species())
            .map(|i| {
                self.k_ad[i] * c_trace[i] * self.adsorption_factor(i, theta)
                    - self.k_de[i] * c_surf[i]
            })
            .collect()
    }

    fn k_ad(&self) -> &[f64] {
        &self.k_ad
    }

    fn k_de(&self) -> &[f64] {
        &self.k_de
    }
}

/// One mass-action reaction: signed stoichiometry, reactant orders and a
/// positive rate constant.
#[derive(Debug, Clone)]
pub struct Reaction {
    pub stoich: Vec<i32>,
    pub orders: Vec<u32>,
    pub rate: f64,
}

/// A stoichiometric mass-action reaction network.
///
/// The rate of species `i` is `r_i(c) = sum_r nu[i][r] * k_r * prod_j
/// c_j^alpha[j][r]`. Quasi-positivity is guaranteed structurally: any
/// species that is consumed must appear as a reactant, so its loss terms
/// vanish with its concentration.
#[derive(Debug, Clone)]
pub struct ReactionNetwork {
    n_species: usize,
    reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new(n_species: usize, reactions: Vec<Reaction>) -> Result<Self, ModelError> {
        if n_species == 0 {
            return Err(ModelError::NoSpecies);
        }
        for (r, reaction) in reactions.iter().enumerate() {
            for (label, len) in [
                ("stoich", reaction.stoich.len()),
                ("orders", reaction.orders.len()),
            ] {
                if len != n_species {
                    return Err(ModelError::LengthMismatch {
                        what: format!("reaction {r} {label}"),
                        expected: n_species,
                        got: len,
                    });
                }
            }
            ensure_positive(&format!("reaction {r} rate"), reaction.rate)?;
            for i in 0..n_species {
                if reaction.stoich[i] < 0 && reaction.orders[i] == 0 {
                    return Err(ModelError::MissingReactantOrder {
                        reaction: r,
                        species: i,
                    });
                }
            }
        }
        Ok(Self {
            n_species,
            reactions,
        })
    }

    pub fn empty(n_species: usize) -> Self {
        Self {
            n_species,
            reactions: Vec::new(),
        }
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    fn monomial(reaction: &Reaction, c: &[f64]) -> f64 {
        reaction.rate
            * reaction
                .orders
                .iter()
                .zip(c.iter())
                .map(|(&a, &x)| x.powi(a as i32))
                .product::<f64>()
    }

    /// Mass-action rates `r_i(c)` for all species.
    pub fn rates(&self, c: &[f64]) -> Result<Vec<f64>, ModelError> {
        ensure_nonneg_vec(c)?;
        if c.len() != self.n_species {
            return Err(ModelError::LengthMismatch {
                what: "c".to_string(),
                expected: self.n_species,
                got: c.len(),
            });
        }
        Ok(self.rates_unchecked(c))
    }

    pub(crate) fn rates_unchecked(&self, c: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n_species];
        for reaction in &self.reactions {
            let m = Self::monomial(reaction, c);
            for i in 0..self.n_species {
                r[i] += reaction.stoich[i] as f64 * m;
            }
        }
        r
    }

    /// Splits the rates into nonnegative production and destruction parts,
    /// `r_i = P_i - D_i`, with `D_i` proportional to `c_i` (each destruction
    /// monomial contains a positive power of the species it consumes).
    pub(crate) fn production_destruction(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![0.0; self.n_species];
        let mut d = vec![0.0; self.n_species];
        for reaction in &self.reactions {
            let m = Self::monomial(reaction, c);
            for i in 0..self.n_species {
                let nu = reaction.stoich[i];
                if nu > 0 {
                    p[i] += nu as f64 * m;
                } else if nu < 0 {
                    d[i] += (-nu) as f64 * m;
                }
            }
        }
        (p, d)
    }

    /// Certified polynomial growth pair `(gamma, M)` such that the Jacobian
    /// satisfies `|r'(y)| <= M (1 + |y|^(gamma - 1))` on the nonnegative
    /// orthant. `gamma` is the maximal total reaction order (at least 1);
    /// `M` is a conservative closed-form constant, not the optimal one.
    pub fn growth_exponent(&self) -> (u32, f64) {
        let gamma = self
            .reactions
            .iter()
            .map(|r| r.orders.iter().sum::<u32>())
            .max()
            .unwrap_or(1)
            .max(1);
        let mut m = 0.0;
        for r in &self.reactions {
            let total_nu: f64 = r.stoich.iter().map(|&v| v.abs() as f64).sum();
            let total_order: f64 = r.orders.iter().sum::<u32>() as f64;
            m += r.rate * total_nu * total_order;
        }
        (gamma, m)
    }

    /// Analytic Jacobian `dr_i/dc_j`, used by the growth-bound checker.
    pub fn jacobian(&self, c: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n_species;
        let mut jac = vec![vec![0.0; n]; n];
        for reaction in &self.reactions {
            for j in 0..n {
                let a = reaction.orders[j];
                if a == 0 {
                    continue;
                }
                // d/dc_j of k * prod c^alpha
                let mut dm = reaction.rate * a as f64 * c[j].powi(a as i32 - 1);
                for (l, &al) in reaction.orders.iter().enumerate() {
                    if l != j {
                        dm *= c[l].powi(al as i32);
                    }
                }
                for i in 0..n {
                    jac[i][j] += reaction.stoich[i] as f64 * dm;
                }
            }
        }
        jac
    }
}

/// Lower-triangular intermediate-sum structure: a matrix `Q` with positive
/// diagonal such that `Q r(y) <= C (1 + sum_j y_j)^mu` componentwise on the
/// nonnegative orthant.
#[derive(Debug, Clone)]
pub struct TriangularStructure {
    pub q: Vec<Vec<f64>>,
    pub c_tr: f64,
    pub mu: f64,
}

impl TriangularStructure {
    pub fn new(q: Vec<Vec<f64>>, c_tr: f64, mu: f64) -> Result<Self, ModelError> {
        let n = q.len();
        if n == 0 {
            return Err(ModelError::NoSpecies);
        }
        for (i, row) in q.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::BadTriangular(format!(
                    "row {i} has length {} in an {n}x{n} matrix",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if j > i && v != 0.0 {
                    return Err(ModelError::BadTriangular(format!(
                        "entry ({i},{j}) above the diagonal is {v}"
                    )));
                }
                if v < 0.0 {
                    return Err(ModelError::BadTriangular(format!(
                        "entry ({i},{j}) is negative"
                    )));
                }
            }
            if row[i] <= 0.0 {
                return Err(ModelError::BadTriangular(format!(
                    "diagonal entry ({i},{i}) = {} is not positive",
                    row[i]
                )));
            }
        }
        ensure_positive("C_tr", c_tr)?;
        if mu < 0.0 {
            return Err(ModelError::NonPositive {
                what: "mu".to_string(),
                value: mu,
            });
        }
        Ok(Self { q, c_tr, mu })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// Outcome of a sample-based structural check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Witness of a violated inequality: the sampled concentration pair and the
/// rule it violated.
#[derive(Debug, Clone)]
pub struct Witness {
    pub primary: Vec<f64>,
    pub secondary: Vec<f64>,
    pub rule: String,
}

/// Report of one structural check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub property: String,
    pub verdict: Verdict,
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub samples_used: usize,
}

impl CheckReport {
    fn collect(property: &str, tol: f64, samples_used: usize, worst: WorstTracker) -> Self {
        let verdict = if !worst.violation.is_finite() {
            Verdict::Inconclusive
        } else if worst.violation > tol {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        CheckReport {
            property: property.to_string(),
            verdict,
            worst_violation: worst.violation.max(0.0),
            witness: if verdict == Verdict::Pass {
                None
            } else {
                worst.witness
            },
            samples_used,
        }
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "CHECK {} {} worst={:.3e} samples={}",
            self.property,
            self.verdict.label(),
            self.worst_violation,
            self.samples_used
        )?;
        if let Some(w) = &self.witness {
            write!(f, " rule=\"{}\" at {:?} / {:?}", w.rule, w.primary, w.secondary)?;
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
struct WorstTracker {
    violation: f64,
    witness: Option<Witness>,
}

impl WorstTracker {
    fn update(&mut self, violation: f64, witness: impl FnOnce() -> Witness) {
        if violation.is_nan() {
            self.violation = f64::NAN;
            self.witness = Some(witness());
        } else if violation > self.violation {
            self.violation = violation;
            self.witness = Some(witness());
        }
    }
}

/// Deterministic sampling plan for the checkers: a Halton low-discrepancy
/// sequence scaled to the box `[0, radius]^m`.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub n_points: usize,
    pub radius: f64,
    pub tol: f64,
}

impl SamplePlan {
    pub fn new(radius: f64) -> Self {
        Self {
            n_points: 4096,
            radius,
            tol: 1e-8,
        }
    }

    pub fn with_points(mut self, n: usize) -> Self {
        self.n_points = n;
        self
    }
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while out.len() < count {
        if out.iter().all(|&p| candidate % p != 0) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

fn radical_inverse(base: u64, mut index: u64) -> f64 {
    let mut inv = 0.0;
    let mut frac = 1.0 / base as f64;
    while index > 0 {
        inv += (index % base) as f64 * frac;
        index /= base;
        frac /= base as f64;
    }
    inv
}

/// Points of the Halton sequence in `[0, radius]^dim`, skipping index 0.
fn halton_points(dim: usize, plan: &SamplePlan) -> impl Iterator<Item = Vec<f64>> + '_ {
    let bases = primes(dim);
    (1..=plan.n_points as u64).map(move |k| {
        bases
            .iter()
            .map(|&b| plan.radius * radical_inverse(b, k))
            .collect()
    })
}

/// Checks quasi-positivity of a rate function: `f_i(z) >= 0` whenever
/// `z_i = 0`. Samples every face of the nonnegative orthant.
pub fn check_quasi_positivity<F>(f: F, n: usize, plan: &SamplePlan) -> CheckReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut worst = WorstTracker::default();
    let mut used = 0;
    for i in 0..n {
        for mut z in halton_points(n, plan) {
            z[i] = 0.0;
            let r = f(&z);
            used += 1;
            let violation = -r[i];
            if violation > 0.0 || violation.is_nan() {
                let zc = z.clone();
                let rc = r.clone();
                worst.update(violation, move || Witness {
                    primary: zc,
                    secondary: rc,
                    rule: format!("r[{i}](z) >= 0 on the face z[{i}] = 0"),
                });
            }
        }
    }
    CheckReport::collect("quasi_positivity", plan.tol, used, worst)
}

/// Checks the structural sorption assumptions on a sample of `[0,R]^(2N)`:
/// linear bounds `-k_de (1 + |c^S|) <= s_i <= k_ad (1 + |c|)`, monotonicity
/// (nondecreasing in `c_i`, nonincreasing in `c^S_i`, by central finite
/// differences), and the sign conditions `s_i(c with c_i = 0, .) <= 0` and
/// `s_i(., c^S with c^S_i = 0) >= 0`.
pub fn check_sorption_structure<S: SorptionRates>(model: &S, plan: &SamplePlan) -> CheckReport {
    let n = model.n_species();
    let h = 1e-6 * plan.radius.max(1.0);
    let mut worst = WorstTracker::default();
    let mut used = 0;

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    for point in halton_points(2 * n, plan) {
        used += 1;
        let c = &point[..n];
        let cs = &point[n..];
        let s = model.rates_unchecked(c, cs);
        let witness_at = |rule: String, c: &[f64], cs: &[f64]| {
            let (c, cs) = (c.to_vec(), cs.to_vec());
            move || Witness {
                primary: c,
                secondary: cs,
                rule,
            }
        };
        for i in 0..n {
            // (i) two-sided linear bounds
            let lower = -model.k_de()[i] * (1.0 + norm(cs));
            let upper = model.k_ad()[i] * (1.0 + norm(c));
            worst.update(
                lower - s[i],
                witness_at(format!("s[{i}] >= -k_de (1 + |c_surf|)"), c, cs),
            );
            worst.update(
                s[i] - upper,
                witness_at(format!("s[{i}] <= k_ad (1 + |c|)"), c, cs),
            );

            // (ii) monotonicity by finite differences; shifted to a one-sided
            // stencil when the central one would leave the orthant
            let diff = |bump_trace: bool| -> f64 {
                let mut hi_c = c.to_vec();
                let mut hi_s = cs.to_vec();
                let mut lo_c = c.to_vec();
                let mut lo_s = cs.to_vec();
                let base = if bump_trace { c[i] } else { cs[i] };
                let (lo_val, width) = if base >= h {
                    (base - h, 2.0 * h)
                } else {
                    (base, h)
                };
                if bump_trace {
                    hi_c[i] = base + h;
                    lo_c[i] = lo_val;
                } else {
                    hi_s[i] = base + h;
                    lo_s[i] = lo_val;
                }
                let hi = model.rates_unchecked(&hi_c, &hi_s)[i];
                let lo = model.rates_unchecked(&lo_c, &lo_s)[i];
                (hi - lo) / width
            };
            let ds_dc = diff(true);
            let ds_dcs = diff(false);
            worst.update(
                -ds_dc,
                witness_at(format!("ds[{i}]/dc[{i}] >= 0"), c, cs),
            );
            worst.update(
                ds_dcs,
                witness_at(format!("ds[{i}]/dc_surf[{i}] <= 0"), c, cs),
            );

            // (iii) sign conditions with the i-th component zeroed
            let mut c0 = c.to_vec();
            c0[i] = 0.0;
            let s_no_trace = model.rates_unchecked(&c0, cs)[i];
            worst.update(
                s_no_trace,
                witness_at(format!("s[{i}](c with c[{i}]=0, c_surf) <= 0"), &c0, cs),
            );
            let mut cs0 = cs.to_vec();
            cs0[i] = 0.0;
            let s_no_surf = model.rates_unchecked(c, &cs0)[i];
            worst.update(
                -s_no_surf,
                witness_at(format!("s[{i}](c, c_surf with c_surf[{i}]=0) >= 0"), c, &cs0),
            );
        }
    }
    CheckReport::collect("sorption_structure", plan.tol, used, worst)
}

/// Checks the triangular intermediate-sum bound `Q r(y) <= C_tr
/// (1 + sum_j y_j)^mu` componentwise on samples of `[0,R]^N`, including the
/// axis rays and the far corner.
pub fn check_triangular(
    net: &ReactionNetwork,
    tri: &TriangularStructure,
    plan: &SamplePlan,
) -> Result<CheckReport, ModelError> {
    let n = net.n_species();
    if tri.dim() != n {
        return Err(ModelError::Dimension(format!(
            "triangular matrix is {}x{} but the network has {} species",
            tri.dim(),
            tri.dim(),
            n
        )));
    }
    let mut worst = WorstTracker::default();
    let mut used = 0;

    let mut extra: Vec<Vec<f64>> = vec![vec![plan.radius; n]];
    for i in 0..n {
        for frac in [0.25, 0.5, 1.0] {
            let mut y = vec![0.0; n];
            y[i] = frac * plan.radius;
            extra.push(y);
        }
    }

    for y in halton_points(n, plan).chain(extra) {
        used += 1;
        let r = net.rates_unchecked(&y);
        let bound = tri.c_tr * (1.0 + y.iter().sum::<f64>()).powf(tri.mu);
        for i in 0..n {
            let qr: f64 = (0..=i).map(|j| tri.q[i][j] * r[j]).sum();
            let violation = qr - bound;
            if violation > 0.0 || violation.is_nan() {
                let yc = y.clone();
                worst.update(violation, move || Witness {
                    primary: yc,
                    secondary: vec![],
                    rule: format!("(Q r(y))[{i}] <= C_tr (1 + sum y)^mu"),
                });
            }
        }
    }
    Ok(CheckReport::collect("triangular_structure", plan.tol, used, worst))
}
