//! Line-oriented bench-program language: parser, canonical serializer, and
//! the bridge to `run_elements`. Numeric literals keep their unit as written
//! so a parsed program serializes back to bit-identical values.
//!
//! Grammar ('#' starts a comment, one directive per line, in order
//! dim / params / state / steps):
//!
//! ```text
//! dim <int>
//! params k4=<freq> k6=<freq> chi=<freq> ke=<freq> [kappa=<float 1/us>]
//! state coherent alpha=<f> | gaussian center=<f> sigma=<f>
//!       | dg n1=<int> n2=<int> r1=<f> r2=<f> theta=<f> sigma=<f>
//!       | fock n=<int>
//!       | slingshot n1=<int> n2=<int> r1=<f> r2=<f> theta=<f> sigma=<f> [cutoff=<int>]
//! prism phase=<f>
//! wait t=<time> delta=<freq>
//! pump eps=<freq> phase=<f> delta=<freq> t=<time>
//! displace re=<f> im=<f>
//! profile phases=<f,f,...>
//! qphase phi0=<f> center=<f>            # sugar: quadratic profile
//! lens center=<f> tphi=<time>           # sugar: wait at the lens detuning
//! image tu=<time> tf=<time> center=<f> [eps=<freq>] [delta=<freq>]
//!                                       # sugar: pump, lens wait, pump
//! measure pn label=<id> | measure moments label=<id>
//! output label=<id> path=<path>
//! ```
//!
//! Frequencies are written as f = omega/2pi with suffix Hz, kHz, or MHz;
//! times take ns or us; kappa is a bare rate in 1/us.

use num_complex::Complex64;

use crate::dynamics::PropagatorConfig;
use crate::elements::{
    self, design_lens, run_elements, Element, MeasureKind, MeasurementRecord,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    self, coherent_state, dg_state, fock_state, gaussian_state, StateVector, SystemParams, TAU,
};
use crate::states::{slingshot_prepare, SlingshotSpec};
use crate::analytic;

pub const MAX_DIM: usize = 16384;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreqUnit {
    Hz,
    KHz,
    MHz,
}

/// A frequency literal as written in a program (f = omega/2pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Freq {
    pub value: f64,
    pub unit: FreqUnit,
}

impl Freq {
    pub fn rad_per_us(&self) -> f64 {
        match self.unit {
            FreqUnit::Hz => hilbert::hz(self.value),
            FreqUnit::KHz => hilbert::khz(self.value),
            FreqUnit::MHz => hilbert::mhz(self.value),
        }
    }

    fn from_rad(omega: f64) -> Self {
        Freq { value: omega / TAU, unit: FreqUnit::MHz }
    }

    fn render(&self) -> String {
        let suffix = match self.unit {
            FreqUnit::Hz => "Hz",
            FreqUnit::KHz => "kHz",
            FreqUnit::MHz => "MHz",
        };
        format!("{:?}{suffix}", self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeUnit {
    Ns,
    Us,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeVal {
    pub value: f64,
    pub unit: TimeUnit,
}

impl TimeVal {
    pub fn us(&self) -> f64 {
        match self.unit {
            TimeUnit::Ns => hilbert::ns(self.value),
            TimeUnit::Us => self.value,
        }
    }

    fn from_us(t: f64) -> Self {
        TimeVal { value: t, unit: TimeUnit::Us }
    }

    fn render(&self) -> String {
        match self.unit {
            TimeUnit::Ns => format!("{:?}ns", self.value),
            TimeUnit::Us => format!("{:?}us", self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsSpec {
    pub k4: Freq,
    pub k6: Freq,
    pub chi: Freq,
    pub ke: Freq,
    /// Decay rate in 1/us; carried into run metadata, not applied by the
    /// unitary runner.
    pub kappa: Option<f64>,
}

impl ParamsSpec {
    pub fn to_system_params(&self) -> SystemParams {
        SystemParams {
            delta: 0.0,
            k4: self.k4.rad_per_us(),
            k6: self.k6.rad_per_us(),
            chi: self.chi.rad_per_us(),
            ke: self.ke.rad_per_us(),
            eps_p: Complex64::new(0.0, 0.0),
            kappa: self.kappa.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Coherent { alpha: f64 },
    Gaussian { center: f64, sigma: f64 },
    Dg { n1: u32, n2: u32, r1: f64, r2: f64, theta: f64, sigma: f64 },
    Fock { n: u32 },
    Slingshot {
        n1: u32,
        n2: u32,
        r1: f64,
        r2: f64,
        theta: f64,
        sigma: f64,
        cutoff: Option<u32>,
    },
}

/// One executable step with literals preserved.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Prism { phase: f64 },
    Wait { t: TimeVal, delta: Freq },
    Pump { eps: Freq, phase: f64, delta: Freq, t: TimeVal },
    Displace { re: f64, im: f64 },
    Profile { phases: Vec<f64> },
    Measure { kind: MeasureKind, label: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchProgram {
    pub dim: usize,
    pub params: ParamsSpec,
    pub initial: StateSpec,
    pub steps: Vec<Step>,
    /// (measure label, output path) pairs.
    pub outputs: Vec<(String, String)>,
}

fn perr(line: usize, col: usize, expected: impl Into<String>) -> Error {
    Error::Parse { line, col, expected: expected.into() }
}

fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

struct KeyValues<'a> {
    line: usize,
    keyword_col: usize,
    pairs: Vec<(usize, &'a str, &'a str)>,
    taken: Vec<bool>,
}

impl<'a> KeyValues<'a> {
    fn new(line: usize, keyword_col: usize, toks: &[(usize, &'a str)]) -> Result<Self> {
        let mut pairs = Vec::new();
        for &(col, tok) in toks {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| perr(line, col, format!("<key>=<value>, found '{tok}'")))?;
            if v.is_empty() {
                return Err(perr(line, col, format!("a value after '{k}='")));
            }
            if pairs.iter().any(|&(_, pk, _)| pk == k) {
                return Err(perr(line, col, format!("'{k}' given once")));
            }
            pairs.push((col, k, v));
        }
        let taken = vec![false; pairs.len()];
        Ok(KeyValues { line, keyword_col, pairs, taken })
    }

    fn get(&mut self, key: &str) -> Result<(usize, &'a str)> {
        self.opt(key)?
            .ok_or_else(|| perr(self.line, self.keyword_col, format!("key '{key}='")))
    }

    fn opt(&mut self, key: &str) -> Result<Option<(usize, &'a str)>> {
        for (i, &(col, k, v)) in self.pairs.iter().enumerate() {
            if k == key {
                self.taken[i] = true;
                return Ok(Some((col, v)));
            }
        }
        Ok(None)
    }

    fn finish(&self) -> Result<()> {
        for (i, &(col, k, _)) in self.pairs.iter().enumerate() {
            if !self.taken[i] {
                return Err(perr(self.line, col, format!("no key '{k}=' here")));
            }
        }
        Ok(())
    }
}

fn parse_float(line: usize, col: usize, v: &str, what: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| perr(line, col, format!("<float> for {what}, found '{v}'")))
}

fn parse_int(line: usize, col: usize, v: &str, what: &str) -> Result<u32> {
    v.parse::<u32>()
        .map_err(|_| perr(line, col, format!("<int> for {what}, found '{v}'")))
}

/// Splits "1e-3MHz" into ("1e-3", "MHz"): the number is the longest prefix
/// of float-ish characters, the unit is whatever follows.
fn split_unit(v: &str) -> (&str, &str) {
    let pos = v
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '+' | '-' | 'e' | 'E')))
        .unwrap_or(v.len());
    v.split_at(pos)
}

fn parse_freq(line: usize, col: usize, v: &str) -> Result<Freq> {
    let (num, suffix) = split_unit(v);
    let unit = match suffix {
        "Hz" => FreqUnit::Hz,
        "kHz" => FreqUnit::KHz,
        "MHz" => FreqUnit::MHz,
        "" => return Err(Error::UnknownUnit(v.to_string())),
        other => return Err(Error::UnknownUnit(other.to_string())),
    };
    let value = parse_float(line, col, num, "the frequency")?;
    Ok(Freq { value, unit })
}

fn parse_time(line: usize, col: usize, v: &str) -> Result<TimeVal> {
    let (num, suffix) = split_unit(v);
    let unit = match suffix {
        "ns" => TimeUnit::Ns,
        "us" => TimeUnit::Us,
        "" => return Err(Error::UnknownUnit(v.to_string())),
        other => return Err(Error::UnknownUnit(other.to_string())),
    };
    let value = parse_float(line, col, num, "the duration")?;
    Ok(TimeVal { value, unit })
}

fn valid_label(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().unwrap().is_ascii_alphabetic()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub fn parse_bench(text: &str) -> Result<BenchProgram> {
    let mut dim: Option<usize> = None;
    let mut params: Option<ParamsSpec> = None;
    let mut initial: Option<StateSpec> = None;
    let mut steps: Vec<Step> = Vec::new();
    let mut outputs: Vec<(usize, usize, String, String)> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let toks = tokens(body);
        let Some(&(kcol, keyword)) = toks.first() else {
            continue;
        };
        let rest = &toks[1..];

        if dim.is_none() {
            if keyword != "dim" {
                return Err(perr(line, kcol, format!("dim, found '{keyword}'")));
            }
            let &(vcol, v) = rest
                .first()
                .ok_or_else(|| perr(line, kcol, "dim <int>"))?;
            if rest.len() > 1 {
                return Err(perr(line, rest[1].0, "end of line after dim"));
            }
            let d = v
                .parse::<usize>()
                .map_err(|_| perr(line, vcol, format!("<int> for dim, found '{v}'")))?;
            if d == 0 || d > MAX_DIM {
                return Err(perr(line, vcol, format!("dim in 1..={MAX_DIM}")));
            }
            dim = Some(d);
            continue;
        }
        if params.is_none() {
            if keyword != "params" {
                return Err(perr(line, kcol, format!("params, found '{keyword}'")));
            }
            let mut kv = KeyValues::new(line, kcol, rest)?;
            let p = ParamsSpec {
                k4: { let (c, v) = kv.get("k4")?; parse_freq(line, c, v)? },
                k6: { let (c, v) = kv.get("k6")?; parse_freq(line, c, v)? },
                chi: { let (c, v) = kv.get("chi")?; parse_freq(line, c, v)? },
                ke: { let (c, v) = kv.get("ke")?; parse_freq(line, c, v)? },
                kappa: match kv.opt("kappa")? {
                    Some((c, v)) => Some(parse_float(line, c, v, "kappa")?),
                    None => None,
                },
            };
            kv.finish()?;
            params = Some(p);
            continue;
        }
        if initial.is_none() {
            if keyword != "state" {
                return Err(perr(line, kcol, format!("state, found '{keyword}'")));
            }
            let &(vcol, kind) = rest
                .first()
                .ok_or_else(|| perr(line, kcol, "a state kind"))?;
            let mut kv = KeyValues::new(line, vcol, &rest[1..])?;
            let spec = match kind {
                "coherent" => StateSpec::Coherent {
                    alpha: { let (c, v) = kv.get("alpha")?; parse_float(line, c, v, "alpha")? },
                },
                "gaussian" => StateSpec::Gaussian {
                    center: { let (c, v) = kv.get("center")?; parse_float(line, c, v, "center")? },
                    sigma: { let (c, v) = kv.get("sigma")?; parse_float(line, c, v, "sigma")? },
                },
                "dg" => StateSpec::Dg {
                    n1: { let (c, v) = kv.get("n1")?; parse_int(line, c, v, "n1")? },
                    n2: { let (c, v) = kv.get("n2")?; parse_int(line, c, v, "n2")? },
                    r1: { let (c, v) = kv.get("r1")?; parse_float(line, c, v, "r1")? },
                    r2: { let (c, v) = kv.get("r2")?; parse_float(line, c, v, "r2")? },
                    theta: { let (c, v) = kv.get("theta")?; parse_float(line, c, v, "theta")? },
                    sigma: { let (c, v) = kv.get("sigma")?; parse_float(line, c, v, "sigma")? },
                },
                "fock" => StateSpec::Fock {
                    n: { let (c, v) = kv.get("n")?; parse_int(line, c, v, "n")? },
                },
                "slingshot" => StateSpec::Slingshot {
                    n1: { let (c, v) = kv.get("n1")?; parse_int(line, c, v, "n1")? },
                    n2: { let (c, v) = kv.get("n2")?; parse_int(line, c, v, "n2")? },
                    r1: { let (c, v) = kv.get("r1")?; parse_float(line, c, v, "r1")? },
                    r2: { let (c, v) = kv.get("r2")?; parse_float(line, c, v, "r2")? },
                    theta: { let (c, v) = kv.get("theta")?; parse_float(line, c, v, "theta")? },
                    sigma: { let (c, v) = kv.get("sigma")?; parse_float(line, c, v, "sigma")? },
                    cutoff: match kv.opt("cutoff")? {
                        Some((c, v)) => Some(parse_int(line, c, v, "cutoff")?),
                        None => None,
                    },
                },
                other => {
                    return Err(perr(
                        line,
                        vcol,
                        format!("coherent|gaussian|dg|fock|slingshot, found '{other}'"),
                    ))
                }
            };
            kv.finish()?;
            initial = Some(spec);
            continue;
        }

        let d = dim.unwrap();
        let pr = params.as_ref().unwrap();
        match keyword {
            "prism" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let phase = { let (c, v) = kv.get("phase")?; parse_float(line, c, v, "phase")? };
                kv.finish()?;
                steps.push(Step::Prism { phase });
            }
            "wait" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let t = { let (c, v) = kv.get("t")?; parse_time(line, c, v)? };
                let delta = { let (c, v) = kv.get("delta")?; parse_freq(line, c, v)? };
                kv.finish()?;
                steps.push(Step::Wait { t, delta });
            }
            "pump" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let eps = { let (c, v) = kv.get("eps")?; parse_freq(line, c, v)? };
                let phase = { let (c, v) = kv.get("phase")?; parse_float(line, c, v, "phase")? };
                let delta = { let (c, v) = kv.get("delta")?; parse_freq(line, c, v)? };
                let t = { let (c, v) = kv.get("t")?; parse_time(line, c, v)? };
                kv.finish()?;
                steps.push(Step::Pump { eps, phase, delta, t });
            }
            "displace" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let re = { let (c, v) = kv.get("re")?; parse_float(line, c, v, "re")? };
                let im = { let (c, v) = kv.get("im")?; parse_float(line, c, v, "im")? };
                kv.finish()?;
                steps.push(Step::Displace { re, im });
            }
            "profile" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let (c, v) = kv.get("phases")?;
                let mut phases = Vec::new();
                for part in v.split(',') {
                    phases.push(parse_float(line, c, part, "a phase entry")?);
                }
                kv.finish()?;
                steps.push(Step::Profile { phases });
            }
            "qphase" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let phi0 = { let (c, v) = kv.get("phi0")?; parse_float(line, c, v, "phi0")? };
                let center = { let (c, v) = kv.get("center")?; parse_float(line, c, v, "center")? };
                kv.finish()?;
                let phases = (0..d)
                    .map(|n| {
                        let u = n as f64 - center;
                        phi0 * u * u
                    })
                    .collect();
                steps.push(Step::Profile { phases });
            }
            "lens" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let center = { let (c, v) = kv.get("center")?; parse_float(line, c, v, "center")? };
                let tphi = { let (c, v) = kv.get("tphi")?; parse_time(line, c, v)? };
                kv.finish()?;
                let sp = pr.to_system_params();
                let lens = design_lens(center, tphi.us(), &sp)
                    .map_err(|e| perr(line, kcol, format!("a feasible lens ({e})")))?;
                steps.push(Step::Wait { t: tphi, delta: Freq::from_rad(lens.delta_l) });
            }
            "image" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let tu = { let (c, v) = kv.get("tu")?; parse_time(line, c, v)? };
                let tf = { let (c, v) = kv.get("tf")?; parse_time(line, c, v)? };
                let center = { let (c, v) = kv.get("center")?; parse_float(line, c, v, "center")? };
                let eps = match kv.opt("eps")? {
                    Some((c, v)) => parse_freq(line, c, v)?,
                    None => Freq { value: 0.88, unit: FreqUnit::MHz },
                };
                let delta = match kv.opt("delta")? {
                    Some((c, v)) => Some(parse_freq(line, c, v)?),
                    None => None,
                };
                kv.finish()?;
                let sp = pr.to_system_params();
                let plan = elements::imaging_plan(tu.us(), tf.us(), center)
                    .map_err(|e| perr(line, kcol, format!("a real imaging plan ({e})")))?;
                let phi0 = analytic::phi0_for_focal_time(center, eps.rad_per_us(), tf.us())
                    .map_err(|e| perr(line, kcol, format!("a usable focal time ({e})")))?;
                let lens = design_lens(center, 1.0, &sp)
                    .map_err(|e| perr(line, kcol, format!("a feasible lens ({e})")))?;
                let t_phi = phi0 / lens.phi0; // phi0 is linear in t_phi
                let free_delta = delta.unwrap_or_else(|| {
                    Freq::from_rad(elements::drift_free_delta(center, eps.rad_per_us(), &sp))
                });
                steps.push(Step::Pump { eps, phase: 0.0, delta: free_delta, t: tu });
                steps.push(Step::Wait {
                    t: TimeVal::from_us(t_phi),
                    delta: Freq::from_rad(lens.delta_l),
                });
                steps.push(Step::Pump {
                    eps,
                    phase: 0.0,
                    delta: free_delta,
                    t: TimeVal::from_us(plan.t_v),
                });
            }
            "measure" => {
                let &(vcol, kindtok) = rest
                    .first()
                    .ok_or_else(|| perr(line, kcol, "pn or moments"))?;
                let kind = match kindtok {
                    "pn" => MeasureKind::Populations,
                    "moments" => MeasureKind::Moments,
                    other => {
                        return Err(perr(line, vcol, format!("pn or moments, found '{other}'")))
                    }
                };
                let mut kv = KeyValues::new(line, kcol, &rest[1..])?;
                let (c, label) = kv.get("label")?;
                kv.finish()?;
                if !valid_label(label) {
                    return Err(perr(line, c, format!("a label ([A-Za-z][A-Za-z0-9_-]*), found '{label}'")));
                }
                if labels.iter().any(|l| l == label) {
                    return Err(Error::DuplicateLabel(label.to_string()));
                }
                labels.push(label.to_string());
                steps.push(Step::Measure { kind, label: label.to_string() });
            }
            "output" => {
                let mut kv = KeyValues::new(line, kcol, rest)?;
                let (c, label) = kv.get("label")?;
                let (_, path) = kv.get("path")?;
                kv.finish()?;
                outputs.push((line, c, label.to_string(), path.to_string()));
            }
            other => {
                return Err(perr(
                    line,
                    kcol,
                    format!("a step (prism|wait|pump|displace|profile|qphase|lens|image|measure|output), found '{other}'"),
                ));
            }
        }
    }

    let dim = dim.ok_or_else(|| perr(last_line.max(1), 1, "dim"))?;
    let params = params.ok_or_else(|| perr(last_line, 1, "params"))?;
    let initial = initial.ok_or_else(|| perr(last_line, 1, "state"))?;
    let mut outs = Vec::new();
    for (line, col, label, path) in outputs {
        if !labels.iter().any(|l| *l == label) {
            return Err(perr(line, col, format!("a measure label, '{label}' is not one")));
        }
        outs.push((label, path));
    }
    Ok(BenchProgram { dim, params, initial, steps, outputs: outs })
}

impl BenchProgram {
    /// Canonical text form; parsing it reproduces this program exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("dim {}\n", self.dim));
        s.push_str(&format!(
            "params k4={} k6={} chi={} ke={}",
            self.params.k4.render(),
            self.params.k6.render(),
            self.params.chi.render(),
            self.params.ke.render()
        ));
        if let Some(k) = self.params.kappa {
            s.push_str(&format!(" kappa={k:?}"));
        }
        s.push('\n');
        match &self.initial {
            StateSpec::Coherent { alpha } => {
                s.push_str(&format!("state coherent alpha={alpha:?}\n"));
            }
            StateSpec::Gaussian { center, sigma } => {
                s.push_str(&format!("state gaussian center={center:?} sigma={sigma:?}\n"));
            }
            StateSpec::Dg { n1, n2, r1, r2, theta, sigma } => {
                s.push_str(&format!(
                    "state dg n1={n1} n2={n2} r1={r1:?} r2={r2:?} theta={theta:?} sigma={sigma:?}\n"
                ));
            }
            StateSpec::Fock { n } => {
                s.push_str(&format!("state fock n={n}\n"));
            }
            StateSpec::Slingshot { n1, n2, r1, r2, theta, sigma, cutoff } => {
                s.push_str(&format!(
                    "state slingshot n1={n1} n2={n2} r1={r1:?} r2={r2:?} theta={theta:?} sigma={sigma:?}"
                ));
                if let Some(c) = cutoff {
                    s.push_str(&format!(" cutoff={c}"));
                }
                s.push('\n');
            }
        }
        for step in &self.steps {
            match step {
                Step::Prism { phase } => s.push_str(&format!("prism phase={phase:?}\n")),
                Step::Wait { t, delta } => {
                    s.push_str(&format!("wait t={} delta={}\n", t.render(), delta.render()))
                }
                Step::Pump { eps, phase, delta, t } => s.push_str(&format!(
                    "pump eps={} phase={phase:?} delta={} t={}\n",
                    eps.render(),
                    delta.render(),
                    t.render()
                )),
                Step::Displace { re, im } => {
                    s.push_str(&format!("displace re={re:?} im={im:?}\n"))
                }
                Step::Profile { phases } => {
                    let joined: Vec<String> = phases.iter().map(|p| format!("{p:?}")).collect();
                    s.push_str(&format!("profile phases={}\n", joined.join(",")));
                }
                Step::Measure { kind, label } => {
                    let k = match kind {
                        MeasureKind::Populations => "pn",
                        MeasureKind::Moments => "moments",
                    };
                    s.push_str(&format!("measure {k} label={label}\n"));
                }
            }
        }
        for (label, path) in &self.outputs {
            s.push_str(&format!("output label={label} path={path}\n"));
        }
        s
    }

    pub fn build_initial_state(&self) -> Result<StateVector> {
        match &self.initial {
            StateSpec::Coherent { alpha } => {
                coherent_state(Complex64::new(*alpha, 0.0), self.dim)
            }
            StateSpec::Gaussian { center, sigma } => gaussian_state(*center, *sigma, self.dim),
            StateSpec::Dg { n1, n2, r1, r2, theta, sigma } => dg_state(
                *n1 as f64, *n2 as f64, *r1, *r2, *theta, *sigma, self.dim,
            ),
            StateSpec::Fock { n } => fock_state(*n as usize, self.dim),
            StateSpec::Slingshot { n1, n2, r1, r2, theta, sigma, cutoff } => {
                let mut spec =
                    SlingshotSpec::new(*n1 as f64, *n2 as f64, *r1, *r2, *theta, *sigma);
                if let Some(c) = cutoff {
                    spec.cutoff = *c as usize;
                }
                let (_, state, _) = slingshot_prepare(&spec, self.dim)?;
                Ok(state)
            }
        }
    }

    pub fn to_elements(&self) -> Vec<Element> {
        self.steps
            .iter()
            .map(|step| match step {
                Step::Prism { phase } => Element::Prism { phi_p: *phase },
                Step::Wait { t, delta } => Element::KerrWait {
                    t: t.us(),
                    delta: delta.rad_per_us(),
                },
                Step::Pump { eps, phase, delta, t } => Element::Pump {
                    eps_p: Complex64::from_polar(eps.rad_per_us(), *phase),
                    delta: delta.rad_per_us(),
                    t: t.us(),
                },
                Step::Displace { re, im } => Element::Displace {
                    beta: Complex64::new(*re, *im),
                },
                Step::Profile { phases } => Element::PhaseProfile { phases: phases.clone() },
                Step::Measure { kind, label } => Element::Measure {
                    kind: *kind,
                    label: label.clone(),
                },
            })
            .collect()
    }

    pub fn run(&self, cfg: &PropagatorConfig) -> Result<(StateVector, Vec<MeasurementRecord>)> {
        let state = self.build_initial_state()?;
        let params = self.params.to_system_params();
        run_elements(&state, &self.to_elements(), &params, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "dim 512\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate coherent alpha=12.2474\nlens center=150 tphi=4684ns\npump eps=0.88MHz phase=0 delta=0.33MHz t=144ns\nmeasure pn label=focus";

    #[test]
    fn reference_program_parses() {
        let p = parse_bench(REFERENCE).unwrap();
        assert_eq!(p.dim, 512);
        assert_eq!(p.params.k4, Freq { value: 2.18, unit: FreqUnit::KHz });
        assert_eq!(p.params.kappa, None);
        assert_eq!(p.initial, StateSpec::Coherent { alpha: 12.2474 });
        assert_eq!(p.steps.len(), 3);
        match &p.steps[0] {
            Step::Wait { t, delta } => {
                assert!((t.us() - 4.684).abs() < 1e-15);
                let expect = design_lens(150.0, 4.684, &p.params.to_system_params())
                    .unwrap()
                    .delta_l;
                assert!((delta.rad_per_us() - expect).abs() < 1e-12);
            }
            other => panic!("lens expanded to {other:?}"),
        }
        match &p.steps[1] {
            Step::Pump { eps, phase, t, .. } => {
                assert_eq!(eps, &Freq { value: 0.88, unit: FreqUnit::MHz });
                assert_eq!(*phase, 0.0);
                assert!((t.us() - 0.144).abs() < 1e-15);
            }
            other => panic!("pump parsed as {other:?}"),
        }
        assert_eq!(
            p.steps[2],
            Step::Measure { kind: MeasureKind::Populations, label: "focus".into() }
        );
    }

    #[test]
    fn empty_input_wants_dim() {
        match parse_bench("") {
            Err(Error::Parse { expected, .. }) => assert!(expected.contains("dim")),
            other => panic!("{other:?}"),
        }
        match parse_bench("# only a comment\n\n") {
            Err(Error::Parse { expected, .. }) => assert!(expected.contains("dim")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_fixed_program() {
        let text = "dim 256\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz kappa=0.000625\nstate dg n1=130 n2=170 r1=1.0 r2=0.5 theta=0.7 sigma=3.5355339059327378\nprism phase=0.25\nwait t=4684ns delta=0.337MHz\npump eps=0.88MHz phase=1.5707963267948966 delta=-23.0kHz t=100ns\ndisplace re=-3.2 im=0.125\nprofile phases=0.0,0.001,0.004,0.009\nmeasure moments label=mid\nmeasure pn label=end\noutput label=end path=out.csv\n";
        let p1 = parse_bench(text).unwrap();
        let s = p1.serialize();
        let p2 = parse_bench(&s).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(s, p2.serialize());
    }

    #[test]
    fn unit_suffixes_and_errors() {
        assert_eq!(
            parse_freq(1, 1, "0.88MHz").unwrap().rad_per_us(),
            hilbert::mhz(0.88)
        );
        assert_eq!(parse_freq(1, 1, "-23kHz").unwrap().value, -23.0);
        assert_eq!(parse_freq(1, 1, "1Hz").unwrap().unit, FreqUnit::Hz);
        assert!(matches!(parse_freq(1, 1, "5GHz"), Err(Error::UnknownUnit(u)) if u == "GHz"));
        assert!(matches!(parse_freq(1, 1, "5"), Err(Error::UnknownUnit(_))));
        assert!(matches!(parse_freq(1, 1, "xMHz"), Err(Error::UnknownUnit(_))));
        assert!(matches!(parse_freq(1, 1, "1.2.3MHz"), Err(Error::Parse { .. })));
        assert!((parse_time(1, 1, "144ns").unwrap().us() - 0.144).abs() < 1e-15);
        assert_eq!(parse_time(1, 1, "4.684us").unwrap().us(), 4.684);
        assert!(matches!(parse_time(1, 1, "3s"), Err(Error::UnknownUnit(_))));
    }

    #[test]
    fn duplicate_measure_label_rejected() {
        let text = "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=3\nmeasure pn label=a\nmeasure moments label=a\n";
        assert!(matches!(parse_bench(text), Err(Error::DuplicateLabel(l)) if l == "a"));
    }

    #[test]
    fn error_positions_are_reported() {
        let text = "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=3\nwait t=10ns delta=1kHz bogus=2\n";
        match parse_bench(text) {
            Err(Error::Parse { line, col, expected }) => {
                assert_eq!(line, 4);
                assert_eq!(col, 24);
                assert!(expected.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
        let missing = "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=3\npump eps=0.88MHz phase=0 t=10ns\n";
        match parse_bench(missing) {
            Err(Error::Parse { line, expected, .. }) => {
                assert_eq!(line, 4);
                assert!(expected.contains("delta"));
            }
            other => panic!("{other:?}"),
        }
        let order = "params k4=1Hz\n";
        assert!(matches!(parse_bench(order), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn image_sugar_expands_to_pump_lens_pump() {
        let text = "dim 512\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate coherent alpha=12.2474\nimage tu=250ns tf=144ns center=150\n";
        let p = parse_bench(text).unwrap();
        assert_eq!(p.steps.len(), 3);
        let (t_lens, delta_lens) = match &p.steps[1] {
            Step::Wait { t, delta } => (t.us(), delta.rad_per_us()),
            other => panic!("middle step {other:?}"),
        };
        let sp = p.params.to_system_params();
        let lens = design_lens(150.0, t_lens, &sp).unwrap();
        assert!((delta_lens - lens.delta_l).abs() < 1e-12);
        let want_phi0 =
            analytic::phi0_for_focal_time(150.0, hilbert::mhz(0.88), 0.144).unwrap();
        assert!((lens.phi0 - want_phi0).abs() < 1e-12, "phi0 {}", lens.phi0);
        match (&p.steps[0], &p.steps[2]) {
            (Step::Pump { t: t1, delta: d1, .. }, Step::Pump { t: t2, delta: d2, .. }) => {
                assert!((t1.us() - 0.25).abs() < 1e-15);
                assert!((t2.us() - 0.33962264150943394).abs() < 1e-12);
                assert_eq!(d1, d2);
                let drift = elements::drift_free_delta(150.0, hilbert::mhz(0.88), &sp);
                assert!((d1.rad_per_us() - drift).abs() < 1e-12);
            }
            other => panic!("pumps {other:?}"),
        }

        let bad = "dim 512\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate coherent alpha=12.2474\nimage tu=100ns tf=144ns center=150\n";
        assert!(matches!(parse_bench(bad), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn qphase_sugar_builds_quadratic_profile() {
        let text = "dim 8\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=2\nqphase phi0=0.03 center=3\n";
        let p = parse_bench(text).unwrap();
        match &p.steps[0] {
            Step::Profile { phases } => {
                assert_eq!(phases.len(), 8);
                assert_eq!(phases[3], 0.0);
                assert!((phases[5] - 0.03 * 4.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parser_survives_junk() {
        for junk in [
            "dim",
            "dim x",
            "dim 0",
            "dim 99999999",
            "dim 64\nparams k4=2.18kHz",
            "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate coherent alpha=oops",
            "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate unicorn a=1",
            "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=3\nwait t delta=1Hz",
            "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=3\noutput label=nope path=x.csv",
            "\u{0}\u{1}\u{2}",
            "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate fock n=3\nmeasure pn label==",
        ] {
            match parse_bench(junk) {
                Err(Error::Parse { .. }) | Err(Error::UnknownUnit(_)) | Err(Error::DuplicateLabel(_)) => {}
                other => panic!("junk {junk:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# header\ndim 32 # trailing\n\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\n   # indented comment\nstate fock n=1\n";
        let p = parse_bench(text).unwrap();
        assert_eq!(p.dim, 32);
        assert_eq!(p.initial, StateSpec::Fock { n: 1 });
    }

    #[test]
    fn program_runs_end_to_end() {
        let text = "dim 64\nparams k4=2.18kHz k6=1Hz chi=0.596MHz ke=0.52kHz\nstate coherent alpha=3\nmeasure moments label=start\npump eps=0.88MHz phase=0 delta=0MHz t=50ns\nmeasure moments label=after\n";
        let p = parse_bench(text).unwrap();
        let (state, records) = p.run(&PropagatorConfig::default()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].time_us, 0.0);
        assert!((records[1].time_us - 0.05).abs() < 1e-15);
        assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
        match (&records[0].data, &records[1].data) {
            (
                crate::elements::MeasureData::Moments { mean: m0, .. },
                crate::elements::MeasureData::Moments { mean: m1, .. },
            ) => {
                assert!((m0 - 9.0).abs() < 1e-6);
                assert!(*m1 > m0 - 1.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
