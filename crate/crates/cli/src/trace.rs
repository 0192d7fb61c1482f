//! CSV trajectory traces with a fixed column set. Optional functionals
//! render as empty cells when not monitored, so the header never varies.

use crate::report::write_atomic;
use platelab::functionals::EnergySample;
use std::io;
use std::path::Path;

pub const HEADER: &str = "t,dt,E,H,Psi,F,Upsilon,R,norm_u_2,norm_grad_u_2,norm_lap_u_2,norm_u_px,modular_u_p,modular_v_m,diss_residual";

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

pub fn render(trace: &[EnergySample]) -> String {
    let mut s = String::with_capacity(64 * (trace.len() + 1));
    s.push_str(HEADER);
    s.push('\n');
    for row in trace {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.t,
            row.dt,
            row.e,
            cell(row.h),
            cell(row.psi),
            cell(row.f),
            cell(row.upsilon),
            row.r,
            row.norm_u_2,
            row.norm_grad_u_2,
            row.norm_lap_u_2,
            row.norm_u_px,
            row.modular_u_p,
            row.modular_v_m,
            row.diss_residual,
        ));
    }
    s
}

pub fn write(path: &Path, trace: &[EnergySample]) -> io::Result<()> {
    write_atomic(path, render(trace).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> EnergySample {
        EnergySample {
            t,
            dt: 0.5,
            e: 1.25,
            h: None,
            psi: Some(2.0),
            f: None,
            upsilon: None,
            r: 1.5,
            norm_u_2: 0.1,
            norm_grad_u_2: 0.2,
            norm_lap_u_2: 0.3,
            norm_u_px: 0.4,
            modular_u_p: 0.5,
            modular_v_m: 0.6,
            diss_residual: 1e-9,
        }
    }

    #[test]
    fn header_is_fixed_and_absent_monitors_render_empty() {
        let text = render(&[sample(0.0)]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), HEADER);
        let row = lines.next().unwrap();
        assert_eq!(row, "0,0.5,1.25,,2,,,1.5,0.1,0.2,0.3,0.4,0.5,0.6,0.000000001");
        assert_eq!(row.split(',').count(), HEADER.split(',').count());
    }
}
