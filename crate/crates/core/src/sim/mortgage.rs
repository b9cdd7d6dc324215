//! Small synthetic mortgage panel with the usual loan-level columns.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::panel::{build_panel, ColumnKind, CovValue, Panel, RawRecord, StateSpace};
use crate::rng::{stream, Stream};

const DTI_BUCKETS: [&str; 4] = ["dti_00_20", "dti_20_30", "dti_30_40", "dti_40_plus"];
const STATES: [&str; 8] = ["AZ", "CA", "FL", "GA", "IL", "NY", "OH", "TX"];
/// Calendar months (relative to the earliest origination) flagged as the pandemic window.
const COVID_MONTHS: std::ops::Range<i64> = 30..38;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MortgageSpec {
    pub n_loans: usize,
    pub horizon: u32,
    pub seed: u64,
}

impl Default for MortgageSpec {
    fn default() -> Self {
        Self { n_loans: 200, horizon: 36, seed: 2020 }
    }
}

pub fn mortgage_columns() -> Vec<(String, ColumnKind)> {
    [
        ("credit_score", ColumnKind::Numeric),
        ("interest_rate", ColumnKind::Numeric),
        ("ltv", ColumnKind::Numeric),
        ("dti", ColumnKind::Categorical),
        ("seller", ColumnKind::Categorical),
        ("property_state", ColumnKind::Categorical),
        ("covid", ColumnKind::TimeVarying),
    ]
    .into_iter()
    .map(|(n, k)| (n.to_string(), k))
    .collect()
}

struct Loan {
    credit_score: f64,
    interest_rate: f64,
    ltv: f64,
    dti: usize,
    seller: usize,
    state: usize,
    origin: i64,
    observed: u32,
}

/// Predictors of the six delinquency edges for one loan-month.
fn edge_etas(loan: &Loan, covid: f64) -> [f64; 6] {
    let risk = -0.012 * (loan.credit_score - 740.0)
        + 0.35 * (loan.interest_rate - 4.2)
        + 0.025 * (loan.ltv - 80.0)
        + 0.25 * loan.dti as f64
        + 0.15 * (loan.seller % 3) as f64
        - 0.1 * (loan.state % 2) as f64;
    [
        -3.6 + risk + 1.0 * covid,
        -0.7 - 0.6 * risk - 0.4 * covid,
        -1.3 + 0.6 * risk + 0.3 * covid,
        -1.8 - 0.5 * risk,
        -1.3 - 0.3 * risk,
        -0.9 + 0.5 * risk + 0.4 * covid,
    ]
}

/// Panel of `n_loans` loans observed for 12 to `horizon` months each.
pub fn synthetic_mortgage_panel(spec: &MortgageSpec) -> Result<Panel> {
    let space = StateSpace::delinquency();
    let score = Normal::new(740.0f64, 45.0).expect("valid");
    let rate = Normal::new(4.2f64, 0.8).expect("valid");
    let mut records = Vec::new();
    for i in 0..spec.n_loans {
        let mut rng = stream(spec.seed, Stream::Subject(i as u64));
        let loan = Loan {
            credit_score: score.sample(&mut rng).clamp(580.0, 850.0).round(),
            interest_rate: (rate.sample(&mut rng).clamp(2.0, 8.0) * 1000.0).round() / 1000.0,
            ltv: rng.random_range(55.0f64..97.0).round(),
            dti: rng.random_range(0..DTI_BUCKETS.len()),
            seller: rng.random_range(0..8),
            state: rng.random_range(0..STATES.len()),
            origin: rng.random_range(0..=24),
            observed: rng.random_range(12.min(spec.horizon)..=spec.horizon),
        };
        let id = format!("loan{i:04}");
        let mut state = 0usize;
        for t in 0..=loan.observed {
            let covid = if COVID_MONTHS.contains(&(loan.origin + i64::from(t))) { 1.0 } else { 0.0 };
            if t > 0 && !space.is_absorbing(state) {
                let etas = edge_etas(&loan, covid);
                let exits: Vec<(usize, f64)> =
                    space.edges().iter().zip(etas).filter(|(e, _)| e.0 == state).map(|(e, v)| (e.1, v.exp())).collect();
                let total = 1.0 + exits.iter().map(|x| x.1).sum::<f64>();
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 1.0;
                for (to, w) in exits {
                    acc += w;
                    if u >= 1.0 && u < acc {
                        state = to;
                        break;
                    }
                }
            }
            records.push(RawRecord {
                id: id.clone(),
                t,
                state,
                origin_offset: loan.origin,
                values: vec![
                    CovValue::Num(loan.credit_score),
                    CovValue::Num(loan.interest_rate),
                    CovValue::Num(loan.ltv),
                    CovValue::Cat(DTI_BUCKETS[loan.dti].to_string()),
                    CovValue::Cat(format!("seller_{:02}", loan.seller)),
                    CovValue::Cat(STATES[loan.state].to_string()),
                    CovValue::Num(covid),
                ],
            });
            if space.is_absorbing(state) {
                break;
            }
        }
    }
    build_panel(records, &mortgage_columns(), space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{transition_counts, Edge};

    #[test]
    fn every_edge_is_observed() {
        let panel = synthetic_mortgage_panel(&MortgageSpec::default()).unwrap();
        assert_eq!(panel.len(), 200);
        let counts = transition_counts(&panel, false);
        for &Edge(k, l) in panel.space().edges() {
            assert!(counts.get(k, l) >= 3, "edge {k}->{l}: {}", counts.get(k, l));
        }
        assert_eq!(panel, synthetic_mortgage_panel(&MortgageSpec::default()).unwrap());
    }
}
