//! CSV outputs. Columns are stable; floats use the shortest exact
//! representation and undefined values are written as `nan`.

use crate::amr::{ConvergenceRecord, EstimateRow, GradingReport};
use crate::error::{Error, Result};
use crate::multigrid::TelemetryRow;
use std::fmt::Write as _;
use std::path::Path;

pub const RECORDS_HEADER: &str = "nu,phase,k,level,macros,elements,dofs,hbar,error,eta,rbar";
pub const ESTIMATES_HEADER: &str = "nu,k,j,kind,theta,eta,exact,gamma,dgamma,c1,c2,within";
pub const GRADING_HEADER: &str = "level,element,h,r,h0,r0,exempt,upper_ok,lower_ok,kl_ok";
pub const TELEMETRY_HEADER: &str = "level,cycle,residual,work_units";
pub const TIMING_HEADER: &str = "step,seconds,share";

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), num)
}

pub fn records_csv(rows: &[(usize, &ConvergenceRecord)]) -> String {
    let mut s = format!("{RECORDS_HEADER}\n");
    for (nu, r) in rows {
        let _ = writeln!(
            s,
            "{nu},{},{},{},{},{},{},{},{},{},{}",
            r.phase.as_str(),
            r.k,
            r.level,
            r.macros,
            r.elements,
            r.dofs,
            num(r.hbar),
            num(r.error),
            opt(r.eta),
            num(r.rbar)
        );
    }
    s
}

pub fn estimates_csv(rows: &[(usize, &EstimateRow)]) -> String {
    let mut s = format!("{ESTIMATES_HEADER}\n");
    for (nu, e) in rows {
        let _ = writeln!(
            s,
            "{nu},{},{},{},{},{},{},{},{},{},{},{}",
            e.k,
            e.j,
            e.kind.as_str(),
            num(e.theta),
            num(e.eta),
            num(e.exact),
            num(e.gamma),
            num(e.dgamma),
            num(e.c1),
            num(e.c2),
            e.within()
        );
    }
    s
}

pub fn grading_csv(reports: &[GradingReport]) -> String {
    let mut s = format!("{GRADING_HEADER}\n");
    for rep in reports {
        for g in &rep.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                rep.level,
                g.element,
                num(g.h),
                num(g.r),
                num(g.h0),
                num(g.r0),
                g.exempt,
                g.upper_ok,
                g.lower_ok,
                g.kl_ok
            );
        }
    }
    s
}

pub fn telemetry_csv(rows: &[TelemetryRow]) -> String {
    let mut s = format!("{TELEMETRY_HEADER}\n");
    for t in rows {
        let _ = writeln!(s, "{},{},{},{}", t.level, t.cycle, num(t.residual), num(t.work_units));
    }
    s
}

pub fn timing_csv(steps: &[(&str, f64)]) -> String {
    let total: f64 = steps.iter().map(|s| s.1).sum();
    let mut s = format!("{TIMING_HEADER}\n");
    for (name, t) in steps {
        let share = if total > 0.0 { t / total } else { 0.0 };
        let _ = writeln!(s, "{name},{},{}", num(*t), num(share));
    }
    s
}

pub fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
