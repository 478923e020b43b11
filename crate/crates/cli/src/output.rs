//! CSV rendering. Every float is written with 17 significant digits in
//! scientific notation, so values survive a text round trip bit for bit and the
//! bytes never depend on locale.

use std::fmt::Write;

use uowsn_core::experiments::{BoundRecord, SceneSnapshot};
use uowsn_core::{SweepResult, Vec3};

use crate::config::{RunConfig, FORMAT_VERSION};

pub const CRLB_HEADER: &str = "num_anchors,crlb_x_m2,crlb_y_m2,crlb_z_m2,crlb_total_m2,mode";
pub const SWEEP_HEADER: &str =
    "param,value,rmse_lls_m,rmse_wlls_m,rmse_lls_apu_m,rmse_wlls_apu_m,sqrt_crlb_m,sqrt_crlb_apu_m,stderr_m,trials";
pub const SCENE_HEADER: &str = "role,x,y,z";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `#`-prefixed lines identifying the run.
fn metadata(cfg: &RunConfig) -> String {
    let d = &cfg.document;
    let sweep = match &d.sweep {
        Some(_) => {
            let values: Vec<String> = cfg.spec.values.iter().map(|v| num(*v)).collect();
            format!("{}={}", cfg.spec.swept_parameter.name(), values.join(";"))
        }
        None => "none".to_string(),
    };
    let mut s = String::new();
    writeln!(s, "# format: {FORMAT_VERSION}").unwrap();
    writeln!(s, "# seed: {}", d.seed).unwrap();
    writeln!(s, "# wavelength_nm: {}", num(d.wavelength_nm)).unwrap();
    writeln!(s, "# extinction_coeff_per_m: {}", num(cfg.channel().extinction_coeff)).unwrap();
    writeln!(s, "# trials: {}", d.trials).unwrap();
    writeln!(s, "# sweep: {sweep}").unwrap();
    s
}

pub fn crlb_csv(cfg: &RunConfig, bounds: &[BoundRecord]) -> String {
    let mut s = metadata(cfg);
    writeln!(s, "{CRLB_HEADER}").unwrap();
    for b in bounds {
        for (mode, c) in [("known", &b.known), ("apu", &b.apu)] {
            writeln!(s, "{},{},{},{},{},{mode}", b.num_anchors, num(c.var_x), num(c.var_y), num(c.var_z), num(c.total))
                .unwrap();
        }
    }
    s
}

pub fn sweep_csv(cfg: &RunConfig, result: &SweepResult) -> String {
    let mut s = metadata(cfg);
    writeln!(s, "{SWEEP_HEADER}").unwrap();
    let param = result.parameter.name();
    for r in &result.records {
        writeln!(
            s,
            "{param},{},{},{},{},{},{},{},{},{}",
            num(r.value),
            num(r.rmse_lls),
            num(r.rmse_wlls),
            num(r.rmse_lls_apu),
            num(r.rmse_wlls_apu),
            num(r.sqrt_crlb_known),
            num(r.sqrt_crlb_apu),
            num(r.rmse_stderr),
            r.trials
        )
        .unwrap();
    }
    s
}

pub fn scene_csv(cfg: &RunConfig, scene: &SceneSnapshot) -> String {
    let mut s = metadata(cfg);
    writeln!(s, "{SCENE_HEADER}").unwrap();
    let mut row = |role: &str, p: Vec3| writeln!(s, "{role},{},{},{}", num(p.x), num(p.y), num(p.z)).unwrap();
    for &a in &scene.scenario.anchors_true {
        row("anchor_true", a);
    }
    for &a in &scene.scenario.anchors_drifted {
        row("anchor_drifted", a);
    }
    row("source_true", scene.scenario.source);
    row("estimate_true_anchors", scene.estimate_true_anchors);
    row("estimate_drifted_anchors", scene.estimate_drifted_anchors);
    s
}
