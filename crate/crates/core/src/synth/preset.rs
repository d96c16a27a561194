//! Default generator: seven planted segments over party makeup of the
//! household, attendance, household rank and household head, with segment
//! logits over voting history and a quadratic in age.

use super::{GenConfig, Predicate, SegmentSpec, VarDist, VarSpec};
use crate::data::{ColumnKind, DerivationOp, DerivationRule, Role, SetTag};

pub const HISTORY: [&str; 5] = ["gen00", "gen01", "gen02", "gen03", "ppp04"];
pub const REGRESSORS: [&str; 7] = ["gen00", "gen01", "gen02", "gen03", "ppp04", "age", "age2"];

const PARTY_MIX: [&str; 8] = ["unknown", "allD", "allR", "onlyRorD", "noneRorD", "noneD", "noneR", "legal"];
const HISTORY_RATES: [f64; 5] = [0.70, 0.35, 0.55, 0.40, 0.30];

fn levels(l: &[&str]) -> Vec<String> {
    l.iter().map(|s| s.to_string()).collect()
}

fn cat(name: &str, l: &[&str], probs: &[f64]) -> VarSpec {
    VarSpec::new(
        name,
        ColumnKind::Categorical(levels(l)),
        Role::Regressor,
        SetTag::Extended,
        VarDist::Categorical(probs.to_vec()),
    )
}

/// Covariates shared by the planted and the null generator.
fn covariates() -> (Vec<VarSpec>, Vec<DerivationRule>) {
    let mut vars = vec![
        cat("partyMix", &PARTY_MIX, &[0.08, 0.14, 0.14, 0.10, 0.20, 0.12, 0.12, 0.10]),
        VarSpec::new(
            "attendance",
            ColumnKind::Numeric,
            Role::Regressor,
            SetTag::Extended,
            VarDist::Beta { a: 2.0, b: 2.0 },
        ),
        VarSpec::new(
            "hhRank",
            ColumnKind::Ordinal(levels(&["1", "2", "3+"])),
            Role::Regressor,
            SetTag::Extended,
            VarDist::Categorical(vec![0.5, 0.3, 0.2]),
        ),
        cat("hhHead", &["H", "M"], &[0.55, 0.45]),
        cat("gender", &["F", "M"], &[0.52, 0.48]),
        cat("party", &["D", "R", "U"], &[0.35, 0.35, 0.30]),
        cat("education", &["primary", "secondary", "postsec"], &[0.2, 0.5, 0.3]),
        cat("income", &["<35k", "35k-75k", ">75k"], &[0.35, 0.40, 0.25]),
        VarSpec::new(
            "noise1",
            ColumnKind::Numeric,
            Role::Regressor,
            SetTag::Extended,
            VarDist::Normal {
                mean: 0.0,
                sd: 1.0,
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
        ),
        VarSpec::new(
            "noise2",
            ColumnKind::Numeric,
            Role::Regressor,
            SetTag::Extended,
            VarDist::Uniform { lo: 0.0, hi: 1.0 },
        ),
        cat("noise3", &["a", "b", "c", "d"], &[0.25; 4]),
    ];
    for (h, &rate) in HISTORY.iter().zip(&HISTORY_RATES) {
        vars.push(VarSpec::new(
            h,
            ColumnKind::Binary,
            Role::Regressor,
            SetTag::Standard,
            VarDist::Bernoulli(rate),
        ));
    }
    vars.push(
        // Household members ranked third or later are mostly young adults.
        VarSpec::new(
            "age",
            ColumnKind::Numeric,
            Role::Regressor,
            SetTag::Standard,
            VarDist::Normal {
                mean: 48.0,
                sd: 17.0,
                lo: 18.0,
                hi: 95.0,
            },
        )
        .when(
            Predicate::is_in("hhRank", &["3+"]),
            VarDist::Mixture(vec![
                (0.91, VarDist::Uniform { lo: 19.0, hi: 26.0 }),
                (0.09, VarDist::Uniform { lo: 27.0, hi: 90.0 }),
            ]),
        ),
    );
    let derived = vec![
        DerivationRule {
            target: "votes".into(),
            role: Role::Ignored,
            set_tag: SetTag::None,
            op: DerivationOp::CountTrue {
                sources: HISTORY.iter().map(|s| s.to_string()).collect(),
            },
        },
        DerivationRule {
            target: "age2".into(),
            role: Role::Regressor,
            set_tag: SetTag::Standard,
            op: DerivationOp::Square { source: "age".into() },
        },
    ];
    (vars, derived)
}

/// Coefficients per segment for (intercept, gen00..gen03, ppp04, age, age^2).
const SEGMENTS: [(usize, [f64; 8]); 6] = [
    (6, [0.508, 0.840, -1.474, 0.287, -0.750, 0.442, 0.054, -0.038]),
    (7, [0.427, 0.740, -0.465, 0.756, -0.075, 0.708, 0.011, -0.004]),
    (8, [2.760, 0.277, -1.164, 0.352, -1.890, -0.952, 0.035, -0.017]),
    (10, [4.057, 0.781, 0.591, 1.249, 1.520, 0.677, -0.250, 0.272]),
    (12, [-3.630, 1.415, -0.010, 1.521, 2.218, 1.694, 0.116, -0.108]),
    (13, [-1.868, 1.217, 0.086, 1.081, 1.700, 1.603, 0.079, -0.078]),
];

/// The planted seven-segment world with `n` rows.
///
/// Segment 2 (`partyMix = unknown`) never votes. The rest split into
/// party-identified households ({allD, allR, onlyRorD}), divided at
/// attendance 0.48 and below that by allD versus the others, and the
/// remaining households, divided by household rank 3+ and then by
/// household head. The squared-age coefficients are listed per 100 and
/// rescaled here.
pub fn table4_config(n: usize, seed: u64) -> GenConfig {
    let (vars, derived) = covariates();
    let party = ["allD", "allR", "onlyRorD"];
    let other = ["noneRorD", "noneD", "noneR", "legal"];
    let att_le = || Predicate::Le {
        var: "attendance".into(),
        value: 0.48,
    };
    let predicate = |id: usize| match id {
        6 => Predicate::And(vec![Predicate::is_in("partyMix", &["allD"]), att_le()]),
        7 => Predicate::And(vec![Predicate::is_in("partyMix", &["allR", "onlyRorD"]), att_le()]),
        8 => Predicate::And(vec![
            Predicate::is_in("partyMix", &party),
            Predicate::Gt {
                var: "attendance".into(),
                value: 0.48,
            },
        ]),
        10 => Predicate::And(vec![Predicate::is_in("partyMix", &other), Predicate::is_in("hhRank", &["3+"])]),
        12 => Predicate::And(vec![
            Predicate::is_in("partyMix", &other),
            Predicate::is_in("hhRank", &["1", "2"]),
            Predicate::is_in("hhHead", &["H"]),
        ]),
        13 => Predicate::And(vec![
            Predicate::is_in("partyMix", &other),
            Predicate::is_in("hhRank", &["1", "2"]),
            Predicate::is_in("hhHead", &["M"]),
        ]),
        _ => unreachable!(),
    };
    let mut segments = vec![SegmentSpec {
        id: 2,
        predicate: Predicate::is_in("partyMix", &["unknown"]),
        beta: Vec::new(),
        fixed_probability: Some(0.0),
    }];
    for (id, b) in SEGMENTS {
        let mut beta = b.to_vec();
        beta[7] /= 100.0;
        segments.push(SegmentSpec {
            id,
            predicate: predicate(id),
            beta,
            fixed_probability: None,
        });
    }
    GenConfig {
        n,
        seed,
        response: "y".into(),
        vars,
        derived,
        regressors: REGRESSORS.iter().map(|s| s.to_string()).collect(),
        segments,
    }
}

/// Same covariates, one global logit with coefficients `beta`
/// (intercept, gen00..gen03, ppp04, age, age^2).
pub fn null_config(n: usize, seed: u64, beta: &[f64; 8]) -> GenConfig {
    let mut cfg = table4_config(n, seed);
    cfg.segments = vec![SegmentSpec {
        id: 1,
        predicate: Predicate::Always,
        beta: beta.to_vec(),
        fixed_probability: None,
    }];
    cfg
}
