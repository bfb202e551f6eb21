//! Lower/upper bounds for `V_{g,n}` with replayable certificates, and the volume
//! tables built by chaining them.
//!
//! A certificate's value is a linear combination `Σ coeff · Π inputs`; each
//! trace step is one such monomial. Replaying the trace must reproduce the value
//! exactly, and every input must point in the right direction: in a lower bound,
//! positively weighted inputs are exact or lower bounds and negatively weighted
//! ones are exact or upper bounds (and dually for upper bounds).

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intersect::Engine;
use crate::moduli::ModuliPoint;
use crate::rational::{self, int, psi_top, BigRational};

fn ser_rat<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational::format(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// A volume value used as input to a bound, with what is known about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VolumeInput {
    pub point: ModuliPoint,
    #[serde(serialize_with = "ser_rat")]
    pub value: BigRational,
    pub provenance: Provenance,
}

impl VolumeInput {
    pub fn new(point: ModuliPoint, value: BigRational, provenance: Provenance) -> Self {
        Self { point, value, provenance }
    }

    pub fn exact(point: ModuliPoint, value: BigRational) -> Self {
        Self::new(point, value, Provenance::Exact)
    }

    pub fn lower(point: ModuliPoint, value: BigRational) -> Self {
        Self::new(point, value, Provenance::Lower)
    }

    pub fn upper(point: ModuliPoint, value: BigRational) -> Self {
        Self::new(point, value, Provenance::Upper)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: String,
    #[serde(serialize_with = "ser_rat")]
    pub coeff: BigRational,
    pub inputs: Vec<VolumeInput>,
}

impl TraceStep {
    fn new(rule: &str, coeff: BigRational, inputs: Vec<VolumeInput>) -> Self {
        Self { rule: rule.to_string(), coeff, inputs }
    }

    fn constant(rule: &str, value: BigRational) -> Self {
        Self::new(rule, value, Vec::new())
    }

    pub fn evaluate(&self) -> BigRational {
        self.inputs.iter().fold(self.coeff.clone(), |acc, i| acc * &i.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundCertificate {
    pub target: ModuliPoint,
    pub kind: BoundKind,
    #[serde(serialize_with = "ser_rat")]
    pub value: BigRational,
    pub strict: bool,
    pub trace: Vec<TraceStep>,
    pub notes: Vec<String>,
}

impl BoundCertificate {
    /// Builds a certificate from its trace, checking provenance first.
    pub fn from_trace(
        target: ModuliPoint,
        kind: BoundKind,
        strict: bool,
        trace: Vec<TraceStep>,
        notes: Vec<String>,
    ) -> Result<Self> {
        let mut cert = Self { target, kind, value: BigRational::zero(), strict, trace, notes };
        cert.check_provenance()?;
        cert.value = cert.replay();
        Ok(cert)
    }

    pub fn replay(&self) -> BigRational {
        self.trace.iter().map(TraceStep::evaluate).fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn check_provenance(&self) -> Result<()> {
        for step in &self.trace {
            if step.coeff.is_zero() {
                continue;
            }
            let pushes_up = step.coeff.is_positive() == (self.kind == BoundKind::Lower);
            let allowed = if pushes_up { Provenance::Lower } else { Provenance::Upper };
            for input in &step.inputs {
                if input.provenance != Provenance::Exact && input.provenance != allowed {
                    return Err(Error::Provenance(format!(
                        "step '{}' of a {:?} bound for V_{} uses a {:?} bound for V_{} with coefficient {}",
                        step.rule,
                        self.kind,
                        self.target,
                        input.provenance,
                        input.point,
                        rational::format(&step.coeff)
                    )));
                }
                if step.inputs.len() > 1 && input.value.is_negative() {
                    return Err(Error::Provenance(format!(
                        "step '{}' multiplies bounds but V_{} = {} is negative",
                        step.rule,
                        input.point,
                        rational::format(&input.value)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn as_input(&self) -> VolumeInput {
        let provenance = match self.kind {
            BoundKind::Lower => Provenance::Lower,
            BoundKind::Upper => Provenance::Upper,
        };
        VolumeInput::new(self.target, self.value.clone(), provenance)
    }
}

fn is_excluded(g: u32, n: u32) -> bool {
    matches!((g, n), (0, 4) | (1, 1))
}

fn thm1_domain(g: u32, n: u32, allow_excluded: bool) -> Result<ModuliPoint> {
    let point = ModuliPoint::new(g, n).require_stable()?;
    if is_excluded(g, n) && !allow_excluded {
        return Err(Error::ExcludedPair { g, n });
    }
    Ok(point)
}

/// `(3g−2+n)(7g−7+3n)`.
fn thm1_factor(g: u32, n: u32) -> BigRational {
    let (g, n) = (g as i64, n as i64);
    int((3 * g - 2 + n) * (7 * g - 7 + 3 * n))
}

fn expect_point(input: &VolumeInput, point: ModuliPoint) -> Result<()> {
    if input.point != point {
        return Err(Error::Domain(format!(
            "input is for V_{} but V_{} was expected",
            input.point, point
        )));
    }
    Ok(())
}

/// Lower bound `V_{g,n+1} ≥ ½(3g−2+n)(7g−7+3n)·V_{g,n} + 1/(24^g g!)`.
pub fn thm1_step(
    g: u32,
    n: u32,
    v: &VolumeInput,
    allow_excluded: bool,
) -> Result<BoundCertificate> {
    let point = thm1_domain(g, n, allow_excluded)?;
    expect_point(v, point)?;
    let mut notes = Vec::new();
    if is_excluded(g, n) {
        notes.push(format!("evaluated at excluded pair {point} by override"));
    }
    let trace = vec![
        TraceStep::new("thm1.scale", thm1_factor(g, n) / int(2), vec![v.clone()]),
        TraceStep::constant("thm1.psi_top", psi_top(g)),
    ];
    BoundCertificate::from_trace(ModuliPoint::new(g, n + 1), BoundKind::Lower, false, trace, notes)
}

/// Upper bound for `V_{g,n}` from `V_{g,n+1}` by rearranging the `thm1`
/// inequality: `V_{g,n} ≤ 2(V_{g,n+1} − 1/(24^g g!)) / ((3g−2+n)(7g−7+3n))`.
///
/// This tight form can hold with equality, so the certificate is not strict;
/// the looser printed form `2·V_{g,n+1}/(…)` is recorded in the notes.
pub fn thm1_upper_prev(
    g: u32,
    n: u32,
    v_next: &VolumeInput,
    allow_excluded: bool,
) -> Result<BoundCertificate> {
    let point = thm1_domain(g, n, allow_excluded)?;
    expect_point(v_next, ModuliPoint::new(g, n + 1))?;
    let factor = thm1_factor(g, n);
    if !factor.is_positive() {
        return Err(Error::Domain(format!(
            "(3g-2+n)(7g-7+3n) = {} is not positive at (g,n)=({g},{n})",
            rational::format(&factor)
        )));
    }
    let scale = int(2) / &factor;
    let loose = &scale * &v_next.value;
    let trace = vec![
        TraceStep::new("thm1_upper.scale", scale.clone(), vec![v_next.clone()]),
        TraceStep::constant("thm1_upper.psi_top", -(scale * psi_top(g))),
    ];
    let notes = vec![format!("printed (looser, strict) form: {}", rational::format(&loose))];
    BoundCertificate::from_trace(point, BoundKind::Upper, false, trace, notes)
}

/// Coefficients of an effective divisor `p·λ − Σ_j q_j·δ_j`, `j = 0..=⌊g/2⌋`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorSpec {
    pub p: BigRational,
    pub q: Vec<BigRational>,
}

impl DivisorSpec {
    pub fn new(p: BigRational, q: Vec<BigRational>) -> Result<Self> {
        if !p.is_positive() {
            return Err(Error::Hypothesis(format!("p = {} must be positive", rational::format(&p))));
        }
        if q.is_empty() {
            return Err(Error::Hypothesis("q must have at least one entry".into()));
        }
        if let Some((j, qj)) = q.iter().enumerate().find(|(_, qj)| !qj.is_positive()) {
            return Err(Error::Hypothesis(format!("q_{j} = {} must be positive", rational::format(qj))));
        }
        Ok(Self { p, q })
    }

    /// `(11.2 + ε)λ − δ` in the limit ε → 0.
    pub fn all_ones(g: u32) -> Self {
        Self { p: rational::ratio(56, 5), q: vec![int(1); (g / 2 + 1) as usize] }
    }

    /// The canonical class `13λ − 2δ₀ − 3δ₁ − 2Σ_{j≥2} δ_j`.
    pub fn kodaira(g: u32) -> Self {
        let q = (0..=g / 2).map(|j| if j == 1 { int(3) } else { int(2) }).collect();
        Self { p: int(13), q }
    }

    /// `α = p/12`, `β_j = q_j − p/12`, rewriting the divisor as `ακ₁ − Σβ_jδ_j`.
    pub fn kappa_form(&self) -> KappaForm {
        let alpha = &self.p / int(12);
        let beta = self.q.iter().map(|qj| qj - &alpha).collect();
        KappaForm { alpha, beta }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KappaForm {
    pub alpha: BigRational,
    pub beta: Vec<BigRational>,
}

/// `μ_j = (12 q_j − p)/p`, all strictly positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuVector(Vec<BigRational>);

impl MuVector {
    pub fn as_slice(&self) -> &[BigRational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Coefficient of `V_{g−1,2}`.
    pub fn coeff_nonseparating(&self) -> BigRational {
        &self.0[0] / int(2)
    }

    /// Coefficient of `V_{g−1,1}`; needs μ₁.
    pub fn coeff_elliptic_tail(&self) -> Option<BigRational> {
        self.0.get(1).map(|m| m / int(48))
    }
}

pub fn divisor_mu(spec: &DivisorSpec) -> Result<MuVector> {
    let twelve = int(12);
    let mu: Vec<BigRational> = spec.q.iter().map(|qj| (&twelve * qj - &spec.p) / &spec.p).collect();
    if let Some((j, m)) = mu.iter().enumerate().find(|(_, m)| !m.is_positive()) {
        return Err(Error::Hypothesis(format!(
            "mu_{j} = (12 q_{j} - p)/p = {} must be > 0",
            rational::format(m)
        )));
    }
    Ok(MuVector(mu))
}

/// How the `(V_{g/2,1})²` correction is weighted for even genus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiddleMode {
    /// `− μ_{g/2} (V_{g/2,1})²`
    AsPrinted,
    /// `− (μ_{g/2}/2) (V_{g/2,1})²`, which gives the `−1/28` term at `g = 2`.
    #[default]
    Thm2Consistent,
}

impl MiddleMode {
    fn weight(self) -> BigRational {
        match self {
            MiddleMode::AsPrinted => int(1),
            MiddleMode::Thm2Consistent => rational::ratio(1, 2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MiddleMode::AsPrinted => "as-printed",
            MiddleMode::Thm2Consistent => "thm2-consistent",
        }
    }
}

impl std::str::FromStr for MiddleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(MiddleMode::AsPrinted),
            "thm2-consistent" => Ok(MiddleMode::Thm2Consistent),
            other => Err(Error::Domain(format!("unknown middle-correction mode '{other}'"))),
        }
    }
}

fn lower_input(table: &VolumeTable, g: u32, n: u32) -> Result<VolumeInput> {
    table.best_lower(ModuliPoint::new(g, n)).ok_or(Error::MissingEntry { g, n, need: "exact or lower" })
}

fn upper_input(table: &VolumeTable, g: u32, n: u32) -> Result<VolumeInput> {
    table.best_upper(ModuliPoint::new(g, n)).ok_or(Error::MissingEntry { g, n, need: "exact or upper" })
}

/// Effective-divisor lower bound for `V_{g,0}`:
///
/// ```text
/// (μ₀/2)V_{g−1,2} + (μ₁/48)V_{g−1,1} + Σ_{j=2}^{⌊g/2⌋} μ_j V_{j,1}V_{g−j,1} − C_mid
/// ```
///
/// For even `g ≥ 4` the `j = g/2` summand and the correction share the input
/// `V_{g/2,1}`; they are recorded as one step with the net (non-negative)
/// coefficient, which is monotone in `V_{g/2,1}` and so accepts a lower bound.
pub fn thm3_bound(
    g: u32,
    mu: &MuVector,
    table: &VolumeTable,
    mode: MiddleMode,
) -> Result<BoundCertificate> {
    bound_from_mu(g, mu, table, mode, "thm3", true, Vec::new())
}

fn bound_from_mu(
    g: u32,
    mu: &MuVector,
    table: &VolumeTable,
    mode: MiddleMode,
    rule: &str,
    strict: bool,
    mut notes: Vec<String>,
) -> Result<BoundCertificate> {
    if g < 2 {
        return Err(Error::Hypothesis(format!("requires g > 1, got g = {g}")));
    }
    let half = g / 2;
    if mu.len() != half as usize + 1 {
        return Err(Error::Hypothesis(format!(
            "need {} coefficients mu_0..mu_{half} for g = {g}, got {}",
            half + 1,
            mu.len()
        )));
    }
    let mu = mu.as_slice();
    notes.push(format!("middle-correction mode: {}", mode.name()));

    let mut trace = vec![
        TraceStep::new(
            &format!("{rule}.delta0"),
            &mu[0] / int(2),
            vec![lower_input(table, g - 1, 2)?],
        ),
        TraceStep::new(
            &format!("{rule}.delta1"),
            &mu[1] / int(48),
            vec![lower_input(table, g - 1, 1)?],
        ),
    ];
    for j in 2..=half {
        if g.is_multiple_of(2) && j == half {
            continue;
        }
        trace.push(TraceStep::new(
            &format!("{rule}.delta{j}"),
            mu[j as usize].clone(),
            vec![lower_input(table, j, 1)?, lower_input(table, g - j, 1)?],
        ));
    }
    if g.is_multiple_of(2) {
        let mu_mid = &mu[half as usize];
        let correction = mu_mid * mode.weight();
        if half == 1 {
            notes.push(
                "g = 2: the middle divisor is delta_1, already weighted by mu_1/48; correction applied as printed".into(),
            );
            let v11 = upper_input(table, 1, 1)?;
            trace.push(TraceStep::new(&format!("{rule}.middle"), -correction, vec![v11.clone(), v11]));
        } else {
            let net = mu_mid - correction;
            notes.push(format!(
                "delta{half} summand and middle correction merged: net coefficient {}",
                rational::format(&net)
            ));
            if !net.is_zero() {
                let v = lower_input(table, half, 1)?;
                trace.push(TraceStep::new(&format!("{rule}.middle_net"), net, vec![v.clone(), v]));
            }
        }
    }
    BoundCertificate::from_trace(ModuliPoint::new(g, 0), BoundKind::Lower, strict, trace, notes)
}

/// `μ_j ≡ 1/14`: `V_{g,0} ≥ (1/28)V_{g−1,2} + (1/672)V_{g−1,1} + …`.
pub fn thm2_bound(g: u32, table: &VolumeTable, mode: MiddleMode) -> Result<BoundCertificate> {
    if g < 2 {
        return Err(Error::Hypothesis(format!("the all-ones divisor bound requires g > 1, got g = {g}")));
    }
    let mu = divisor_mu(&DivisorSpec::all_ones(g))?;
    bound_from_mu(g, &mu, table, mode, "thm2", false, Vec::new())
}

/// Bound from the canonical divisor, valid for `g ≥ 23`.
pub fn kodaira_bound(
    g: u32,
    table: &VolumeTable,
    mode: MiddleMode,
    allow_small_genus: bool,
) -> Result<BoundCertificate> {
    let mut notes = Vec::new();
    if g < 23 {
        if !allow_small_genus {
            return Err(Error::Hypothesis(format!(
                "the canonical-divisor bound requires g >= 23, got g = {g}"
            )));
        }
        notes.push(format!("WARNING: g = {g} < 23; evaluated by override, not a proven bound"));
    }
    if g < 2 {
        return Err(Error::Hypothesis(format!("requires g > 1, got g = {g}")));
    }
    let mu = divisor_mu(&DivisorSpec::kodaira(g))?;
    bound_from_mu(g, &mu, table, mode, "kodaira", true, notes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactSource {
    Engine,
    Convention,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VolumeCell {
    pub exact: Option<(BigRational, ExactSource)>,
    pub lower: Option<BoundCertificate>,
    pub upper: Option<BoundCertificate>,
}

/// `(g,n)`-indexed exact values and best known bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeTable {
    cells: BTreeMap<ModuliPoint, VolumeCell>,
    gaps: Vec<String>,
}

impl Default for VolumeTable {
    fn default() -> Self {
        Self::new()
    }
}

impl VolumeTable {
    /// An empty table holding only the `V_{0,3} = 0` convention.
    pub fn new() -> Self {
        let mut table = Self { cells: BTreeMap::new(), gaps: Vec::new() };
        table.cells.entry(ModuliPoint::new(0, 3)).or_default().exact =
            Some((BigRational::zero(), ExactSource::Convention));
        table
    }

    pub fn cells(&self) -> &BTreeMap<ModuliPoint, VolumeCell> {
        &self.cells
    }

    pub fn cell(&self, point: ModuliPoint) -> Option<&VolumeCell> {
        self.cells.get(&point)
    }

    pub fn gaps(&self) -> &[String] {
        &self.gaps
    }

    pub fn exact(&self, point: ModuliPoint) -> Option<&BigRational> {
        self.cells.get(&point).and_then(|c| c.exact.as_ref().map(|(v, _)| v))
    }

    /// Sets an engine-computed value. The `(0,3)` convention is never replaced.
    pub fn set_exact(&mut self, point: ModuliPoint, value: BigRational) {
        let cell = self.cells.entry(point).or_default();
        if cell.exact.is_none() {
            cell.exact = Some((value, ExactSource::Engine));
        }
    }

    /// Keeps the larger of the stored and offered lower bounds.
    pub fn offer_lower(&mut self, cert: BoundCertificate) {
        debug_assert_eq!(cert.kind, BoundKind::Lower);
        let cell = self.cells.entry(cert.target).or_default();
        if cell.lower.as_ref().is_none_or(|c| cert.value > c.value) {
            cell.lower = Some(cert);
        }
    }

    /// Keeps the smaller of the stored and offered upper bounds.
    pub fn offer_upper(&mut self, cert: BoundCertificate) {
        debug_assert_eq!(cert.kind, BoundKind::Upper);
        let cell = self.cells.entry(cert.target).or_default();
        if cell.upper.as_ref().is_none_or(|c| cert.value < c.value) {
            cell.upper = Some(cert);
        }
    }

    pub fn record_gap(&mut self, msg: String) {
        self.gaps.push(msg);
    }

    /// Exact value if known, else the best lower bound.
    pub fn best_lower(&self, point: ModuliPoint) -> Option<VolumeInput> {
        let cell = self.cells.get(&point)?;
        match (&cell.exact, &cell.lower) {
            (Some((v, _)), _) => Some(VolumeInput::exact(point, v.clone())),
            (None, Some(c)) => Some(c.as_input()),
            (None, None) => None,
        }
    }

    /// Exact value if known, else the best upper bound.
    pub fn best_upper(&self, point: ModuliPoint) -> Option<VolumeInput> {
        let cell = self.cells.get(&point)?;
        match (&cell.exact, &cell.upper) {
            (Some((v, _)), _) => Some(VolumeInput::exact(point, v.clone())),
            (None, Some(c)) => Some(c.as_input()),
            (None, None) => None,
        }
    }

    /// Checks `lower ≤ exact ≤ upper`, `lower ≤ upper`, certificate replay and
    /// provenance for every cell.
    pub fn check(&self) -> Result<()> {
        for (point, cell) in &self.cells {
            for cert in cell.lower.iter().chain(cell.upper.iter()) {
                cert.check_provenance()?;
                if cert.replay() != cert.value {
                    return Err(Error::Domain(format!("certificate for V_{point} does not replay")));
                }
            }
            let exact = cell.exact.as_ref().map(|(v, _)| v);
            let lower = cell.lower.as_ref().map(|c| &c.value);
            let upper = cell.upper.as_ref().map(|c| &c.value);
            let violated = |a: Option<&BigRational>, b: Option<&BigRational>| matches!((a, b), (Some(a), Some(b)) if a > b);
            if violated(lower, exact) || violated(exact, upper) || violated(lower, upper) {
                return Err(Error::Domain(format!("bounds out of order at V_{point}")));
            }
        }
        Ok(())
    }
}

/// Builds a certified table for `g ≤ g_max`.
///
/// Exact values are seeded for every stable point with `3g−3+n ≤ exact_dim_budget`
/// (with `(0,3)` held at the convention 0). Per genus, `V_{g,0}` gets the `thm2`
/// bound (and the canonical-divisor bound once `g ≥ 23`), then `thm1` pushes
/// lower bounds up in `n` and its rearrangement pulls upper bounds down. Columns
/// `n = 1, 2` are always filled since higher genera need them.
pub fn build_chain(engine: &Engine, g_max: u32, n_max: u32, exact_dim_budget: u32) -> VolumeTable {
    let mut table = VolumeTable::new();
    let budget = exact_dim_budget as i64;
    for g in 0..=g_max {
        let mut n_top = n_max.max(2);
        let mut n = 0;
        loop {
            let point = ModuliPoint::new(g, n);
            if point.dim() > budget {
                break;
            }
            if point.is_stable() && point != ModuliPoint::new(0, 3) {
                match engine.wp_volume(point) {
                    Ok(v) => table.set_exact(point, v),
                    Err(e) => table.record_gap(format!("V_{point}: {e}")),
                }
                n_top = n_top.max(n);
            }
            n += 1;
        }

        if g >= 2 {
            match thm2_bound(g, &table, MiddleMode::default()) {
                Ok(cert) => table.offer_lower(cert),
                Err(e) => table.record_gap(format!("thm2 at g={g}: {e}")),
            }
            if g >= 23 {
                match kodaira_bound(g, &table, MiddleMode::default(), false) {
                    Ok(cert) => table.offer_lower(cert),
                    Err(e) => table.record_gap(format!("kodaira at g={g}: {e}")),
                }
            }
        }

        for n in 0..n_top {
            if !ModuliPoint::new(g, n).is_stable() || is_excluded(g, n) {
                continue;
            }
            let Some(input) = table.best_lower(ModuliPoint::new(g, n)) else {
                table.record_gap(format!("no lower bound for V_({g},{n}); thm1 chain stops"));
                continue;
            };
            match thm1_step(g, n, &input, false) {
                Ok(cert) => table.offer_lower(cert),
                Err(e) => table.record_gap(format!("thm1 at ({g},{n}): {e}")),
            }
        }

        for n in (0..n_top).rev() {
            if !ModuliPoint::new(g, n).is_stable() || is_excluded(g, n) {
                continue;
            }
            let Some(input) = table.best_upper(ModuliPoint::new(g, n + 1)) else {
                continue;
            };
            match thm1_upper_prev(g, n, &input, false) {
                Ok(cert) => table.offer_upper(cert),
                Err(e) => table.record_gap(format!("thm1 upper at ({g},{n}): {e}")),
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn exact(g: u32, n: u32, v: BigRational) -> VolumeInput {
        VolumeInput::exact(ModuliPoint::new(g, n), v)
    }

    fn base_table() -> VolumeTable {
        let mut t = VolumeTable::new();
        t.set_exact(ModuliPoint::new(1, 1), ratio(1, 24));
        t.set_exact(ModuliPoint::new(1, 2), ratio(1, 8));
        t
    }

    #[test]
    fn thm1_examples() {
        assert_eq!(thm1_step(0, 3, &exact(0, 3, int(0)), false).unwrap().value, int(1));
        assert_eq!(thm1_step(0, 5, &exact(0, 5, int(5)), false).unwrap().value, int(61));
        assert_eq!(thm1_step(1, 2, &exact(1, 2, ratio(1, 8)), false).unwrap().value, ratio(7, 6));
        assert_eq!(
            thm1_step(1, 1, &exact(1, 1, ratio(1, 24)), false),
            Err(Error::ExcludedPair { g: 1, n: 1 })
        );
        assert!(thm1_step(1, 1, &exact(1, 1, ratio(1, 24)), true).is_ok());
        assert_eq!(thm1_step(0, 2, &exact(0, 2, int(0)), false), Err(Error::Unstable { g: 0, n: 2 }));
        assert!(!thm1_step(0, 3, &exact(0, 3, int(0)), false).unwrap().strict);
    }

    #[test]
    fn thm1_rejects_wrong_direction_inputs() {
        let up = VolumeInput::upper(ModuliPoint::new(1, 2), ratio(1, 8));
        assert!(matches!(thm1_step(1, 2, &up, false), Err(Error::Provenance(_))));
        let low = VolumeInput::lower(ModuliPoint::new(0, 6), int(61));
        assert!(matches!(thm1_upper_prev(0, 5, &low, false), Err(Error::Provenance(_))));
        assert!(thm1_step(1, 3, &exact(1, 2, ratio(1, 8)), false).is_err());
    }

    #[test]
    fn thm1_upper_examples() {
        assert!(thm1_upper_prev(1, 0, &exact(1, 1, ratio(1, 24)), false).is_err());
        let cert = thm1_upper_prev(0, 5, &exact(0, 6, int(61)), false).unwrap();
        assert_eq!(cert.value, int(5));
        assert_eq!(cert.kind, BoundKind::Upper);
        assert!(cert.notes[0].contains("61/12"));
    }

    #[test]
    fn mu_presets() {
        let mu = divisor_mu(&DivisorSpec::new(ratio(56, 5), vec![int(1); 3]).unwrap()).unwrap();
        assert_eq!(mu.as_slice(), &[ratio(1, 14), ratio(1, 14), ratio(1, 14)]);
        assert_eq!(mu.coeff_nonseparating(), ratio(1, 28));
        assert_eq!(mu.coeff_elliptic_tail().unwrap(), ratio(1, 672));

        let spec = DivisorSpec::new(int(13), vec![int(2), int(3), int(2)]).unwrap();
        let mu = divisor_mu(&spec).unwrap();
        assert_eq!(mu.as_slice(), &[ratio(11, 13), ratio(23, 13), ratio(11, 13)]);
        assert_eq!(mu.coeff_nonseparating(), ratio(11, 26));
        assert_eq!(mu.coeff_elliptic_tail().unwrap(), ratio(23, 624));
        assert_eq!(DivisorSpec::kodaira(4), spec);

        let form = spec.kappa_form();
        assert_eq!(form.alpha, ratio(13, 12));
        for (b, m) in form.beta.iter().zip(mu.as_slice()) {
            assert_eq!(b / &form.alpha, *m);
        }

        let err = divisor_mu(&DivisorSpec::new(int(12), vec![int(1), int(1)]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("mu_0"));
        assert!(DivisorSpec::new(int(0), vec![int(1)]).is_err());
        assert!(DivisorSpec::new(int(1), vec![int(1), int(-1)]).is_err());
    }

    #[test]
    fn thm2_at_genus_two() {
        let t = base_table();
        let c = thm2_bound(2, &t, MiddleMode::Thm2Consistent).unwrap();
        assert_eq!(c.value, ratio(1, 224));
        assert!(!c.strict);
        let c = thm2_bound(2, &t, MiddleMode::AsPrinted).unwrap();
        assert_eq!(c.value, ratio(71, 16128));
        assert!(c.notes.iter().any(|n| n.contains("as-printed")));
        assert!(thm2_bound(1, &t, MiddleMode::default()).is_err());
        let mu = divisor_mu(&DivisorSpec::all_ones(2)).unwrap();
        let c3 = thm3_bound(2, &mu, &t, MiddleMode::Thm2Consistent).unwrap();
        assert_eq!(c3.value, ratio(1, 224));
        assert!(c3.strict);
    }

    #[test]
    fn missing_inputs_are_reported() {
        let t = VolumeTable::new();
        assert!(matches!(
            thm2_bound(3, &t, MiddleMode::default()),
            Err(Error::MissingEntry { g: 2, n: 2, .. })
        ));
    }

    #[test]
    fn kodaira_genus_gate() {
        let t = base_table();
        assert!(matches!(kodaira_bound(22, &t, MiddleMode::default(), false), Err(Error::Hypothesis(_))));
        let c = kodaira_bound(2, &t, MiddleMode::default(), true).unwrap();
        assert!(c.notes.iter().any(|n| n.starts_with("WARNING")));
    }

    #[test]
    fn middle_uses_upper_for_genus_two() {
        let mut t = VolumeTable::new();
        t.set_exact(ModuliPoint::new(1, 2), ratio(1, 8));
        let low = BoundCertificate::from_trace(
            ModuliPoint::new(1, 1),
            BoundKind::Lower,
            false,
            vec![TraceStep::constant("test", ratio(1, 48))],
            vec![],
        )
        .unwrap();
        t.offer_lower(low);
        // only a lower bound for V_{1,1}: cannot be subtracted
        assert!(matches!(
            thm2_bound(2, &t, MiddleMode::default()),
            Err(Error::MissingEntry { g: 1, n: 1, .. })
        ));
    }

    #[test]
    fn table_keeps_best_bounds() {
        let mut t = VolumeTable::new();
        let p = ModuliPoint::new(0, 4);
        let mk = |v: BigRational, kind| {
            BoundCertificate::from_trace(p, kind, false, vec![TraceStep::constant("c", v)], vec![]).unwrap()
        };
        t.offer_lower(mk(ratio(1, 2), BoundKind::Lower));
        t.offer_lower(mk(ratio(1, 3), BoundKind::Lower));
        t.offer_upper(mk(int(3), BoundKind::Upper));
        t.offer_upper(mk(int(2), BoundKind::Upper));
        let cell = t.cell(p).unwrap();
        assert_eq!(cell.lower.as_ref().unwrap().value, ratio(1, 2));
        assert_eq!(cell.upper.as_ref().unwrap().value, int(2));
        assert_eq!(t.exact(ModuliPoint::new(0, 3)), Some(&int(0)));
        t.set_exact(ModuliPoint::new(0, 3), int(1));
        assert_eq!(t.exact(ModuliPoint::new(0, 3)), Some(&int(0)));
        t.check().unwrap();
        t.set_exact(p, ratio(1, 4));
        assert!(t.check().is_err());
    }

    #[test]
    fn small_chains() {
        let e = Engine::new();
        let t = build_chain(&e, 1, 2, 2);
        let exact: Vec<_> = t.cells().iter().filter(|(_, c)| c.exact.is_some()).map(|(p, _)| *p).collect();
        let want: Vec<_> = [(0, 3), (0, 4), (0, 5), (1, 1), (1, 2)].map(|(g, n)| ModuliPoint::new(g, n)).to_vec();
        assert_eq!(exact, want);
        t.check().unwrap();

        let t = build_chain(&e, 5, 0, 3);
        for g in 2..=5 {
            let cell = t.cell(ModuliPoint::new(g, 0)).unwrap();
            assert!(cell.lower.as_ref().unwrap().trace[0].rule.starts_with("thm2"), "g={g}");
        }
        t.check().unwrap();
    }
}
