//! Plain-text CSV writers. Floats use 17 significant digits so identical
//! runs give byte-identical files and values round-trip exactly.

use std::fmt::Write;

use crate::bistability::BistabilityCurve;
use crate::params::HZ_TO_CANONICAL;
use crate::spectra::SpectrumPoint;

pub const SPECTRUM_HEADER: &str = "delta,delta_over_omega_b,mu_p,nu_p,G_s,G_as,re_eps_T,im_eps_T";
pub const CURVE_HEADER: &str = "x,omega_abs,branch_id,z0,defect";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Quotes a field when it contains a separator, quote or newline.
pub fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn spectrum_csv(points: &[SpectrumPoint], omega_b: f64) -> String {
    let mut out = String::with_capacity(points.len() * 200);
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for p in points {
        let cols = [p.delta, p.delta / omega_b, p.mu_p, p.nu_p, p.g_s, p.g_as, p.eps_t.re, p.eps_t.im];
        push_row(&mut out, &cols);
    }
    out
}

/// `omega_abs` is written in rad/µs like every other frequency column.
pub fn curve_csv(curve: &BistabilityCurve) -> String {
    let mut out = String::with_capacity(curve.points.len() * 120);
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.omega_abs),
            p.branch_id,
            fmt_f64(p.z0),
            fmt_f64(p.defect)
        );
    }
    out
}

/// Branch count against drive strength; `drive_hz` is |Ω|/2π.
pub fn counts_csv(omega: &[f64], counts: &[usize]) -> String {
    let mut out = String::from("drive_hz,omega_abs,count\n");
    for (w, c) in omega.iter().zip(counts) {
        let _ = writeln!(out, "{},{},{}", fmt_f64(w / HZ_TO_CANONICAL), fmt_f64(*w), c);
    }
    out
}

fn push_row(out: &mut String, cols: &[f64]) {
    for (i, v) in cols.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}
