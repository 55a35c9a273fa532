//! CSV tables with fixed column order and 17 significant digits.

use std::io::Write;

use crate::consistency::metric::N_TERMS;
use crate::consistency::sweep::ConsistencyReport;
use crate::regularizer::RateReport;
use crate::scheme::EnergyLedger;

/// Locale-independent scientific notation with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    fmt_real(v.unwrap_or(f64::NAN))
}

pub const LEDGER_HEADER: &str = "n,t,E_half,E_full,D,res_eq1,res_eq2,min_det,min_gap_R,verdict";
pub const RATE_HEADER: &str = "delta,h1_error,grad_max_error,fitted_order_h1,fitted_order_grad";

pub fn sweep_header() -> String {
    let terms: Vec<String> = (1..=N_TERMS).map(|i| format!("term_{i:02}")).collect();
    format!(
        "delta,max_E,{},fitted_order,floor_estimate,bootstrap_min_det,bootstrap_grad_gap",
        terms.join(",")
    )
}

pub fn write_ledger(w: &mut impl Write, ledger: &EnergyLedger) -> std::io::Result<()> {
    writeln!(w, "{LEDGER_HEADER}")?;
    for r in &ledger.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            fmt_real(r.t),
            fmt_real(r.e_half),
            fmt_real(r.e_full),
            fmt_real(r.d),
            fmt_real(r.res_eq1),
            fmt_real(r.res_eq2),
            fmt_real(r.min_det),
            fmt_real(r.min_gap_r),
            r.verdict
        )?;
    }
    Ok(())
}

/// One row per width; the fit and floor columns repeat on every row.
pub fn write_sweep(w: &mut impl Write, rep: &ConsistencyReport) -> std::io::Result<()> {
    writeln!(w, "{}", sweep_header())?;
    for r in &rep.rows {
        let terms: Vec<String> = r.terms.iter().map(|v| fmt_real(*v)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_real(r.delta),
            fmt_real(r.max_e),
            terms.join(","),
            fmt_opt(rep.fitted_order),
            fmt_real(rep.floor_estimate),
            fmt_real(r.bootstrap_min_det),
            fmt_real(r.bootstrap_grad_gap)
        )?;
    }
    Ok(())
}

/// Time series of the energy difference for every width.
pub fn write_sweep_series(w: &mut impl Write, rep: &ConsistencyReport) -> std::io::Result<()> {
    let terms: Vec<String> = (1..=N_TERMS).map(|i| format!("term_{i:02}")).collect();
    writeln!(w, "delta,t,E,{}", terms.join(","))?;
    for run in &rep.runs {
        for e in &run.series {
            let t: Vec<String> = e.terms.iter().map(|v| fmt_real(*v)).collect();
            writeln!(w, "{},{},{},{}", fmt_real(run.delta), fmt_real(e.t), fmt_real(e.total()), t.join(","))?;
        }
    }
    Ok(())
}

pub fn write_rates(w: &mut impl Write, rep: &RateReport) -> std::io::Result<()> {
    writeln!(w, "{RATE_HEADER}")?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_real(r.delta),
            fmt_real(r.h1_error),
            fmt_real(r.grad_max_error),
            fmt_opt(rep.order_h1),
            fmt_opt(rep.order_grad)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Verdict;
    use crate::scheme::LedgerRow;
    use proptest::prelude::*;

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_real(f64::NAN), "NaN");
    }

    #[test]
    fn headers() {
        assert!(sweep_header().starts_with("delta,max_E,term_01,term_02,"));
        assert!(sweep_header().contains("term_11,fitted_order,floor_estimate,bootstrap_min_det,bootstrap_grad_gap"));
        assert_eq!(sweep_header().split(',').count(), 2 + N_TERMS + 4);
    }

    #[test]
    fn ledger_rows() {
        let row = LedgerRow {
            n: 3,
            t: 0.03,
            e_prev: 1.0,
            e_half: 1.0,
            e_full: 0.5,
            d: 0.25,
            num_diss_1: 0.0,
            num_diss_2: 0.0,
            work_1: 0.0,
            work_2: 0.0,
            res_eq1: 0.0,
            res_eq2: 1e-12,
            min_det: 0.9,
            min_gap_r: 0.8,
            verdict: Verdict::Ok,
        };
        let ledger = EnergyLedger { e0: 1.0, rows: vec![row] };
        let mut out = Vec::new();
        write_ledger(&mut out, &ledger).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], LEDGER_HEADER);
        assert!(lines[1].starts_with("3,2.9999999999999999e-2,"));
        assert!(lines[1].ends_with(",ok"));
        assert_eq!(lines[1].split(',').count(), 10);
    }

    proptest! {
        #[test]
        fn formatting_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = fmt_real(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
