//! CSV artifacts. Every table starts with a header row and floats carry 17
//! significant digits, so identical runs give identical bytes.

use std::io::Write;

use crate::billiard::TrajectoryRecord;
use crate::fronts::Front;
use crate::scalar::{to_f64, Real};
use crate::spectra::{ConjugacyReport, GradCheck, Spectrum, SpectrumRecord, UniquenessRow};

pub const SPECTRUM_HEADER: [&str; 8] = ["x_param", "theta", "y_param", "exit_theta", "time", "n_reflections", "itinerary", "status"];
pub const FRONT_HEADER: [&str; 6] = ["u", "x", "y", "omega1", "omega2", "f"];

pub fn float<T: Real>(v: T) -> String {
    format!("{:.16e}", to_f64(v))
}

fn opt<T: Real>(v: Option<T>) -> String {
    v.map(float).unwrap_or_default()
}

/// Obstacle indices joined by `-`.
pub fn itinerary_field(it: &[usize]) -> String {
    it.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn spectrum_row<T: Real>(r: &SpectrumRecord<T>) -> [String; 8] {
    [
        float(r.x),
        float(r.theta),
        opt(r.y),
        opt(r.exit_theta),
        float(r.time),
        r.reflections.to_string(),
        itinerary_field(&r.itinerary),
        r.status_label(),
    ]
}

pub fn write_spectrum<T: Real, W: Write>(w: W, s: &Spectrum<T>) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(SPECTRUM_HEADER)?;
    for r in &s.records {
        out.write_record(spectrum_row(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_front<T: Real, W: Write>(w: W, f: &Front<T>) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(FRONT_HEADER)?;
    for s in &f.samples {
        out.write_record([float(s.u), float(s.point.x), float(s.point.y), float(s.normal.x), float(s.normal.y), float(s.f)])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per spectrum record that was checked; `error` is empty when the
/// record could not be re-shot.
pub fn write_gradcheck<T: Real, W: Write>(w: W, rows: &[(&SpectrumRecord<T>, Option<GradCheck<T>>)]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["x_param", "theta", "n_reflections", "numeric", "analytic", "error", "y_drift"])?;
    for (r, g) in rows {
        out.write_record([
            float(r.x),
            float(r.theta),
            r.reflections.to_string(),
            opt(g.map(|g| g.numeric)),
            opt(g.map(|g| g.analytic)),
            opt(g.map(|g| g.error())),
            opt(g.map(|g| g.y_drift)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_conjugacy<T: Real, W: Write>(w: W, rep: &ConjugacyReport<T>) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["x", "y", "omega1", "omega2", "t", "residual"])?;
    for s in &rep.samples {
        out.write_record([
            float(s.p.position.x),
            float(s.p.position.y),
            float(s.p.direction.x),
            float(s.p.direction.y),
            float(s.t),
            float(s.residual),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_uniqueness<T: Real, W: Write>(w: W, rows: &[UniquenessRow<T>]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["eps", "hausdorff", "sup_dev", "mean_dev", "unmatched", "skipped"])?;
    for r in rows {
        let skipped = r.skipped.is_some();
        let num = |v: T| if skipped { String::new() } else { float(v) };
        out.write_record([float(r.eps), float(r.hausdorff), num(r.sup_dev), num(r.mean_dev), num(r.unmatched), r.skipped.clone().unwrap_or_default()])?;
    }
    out.flush()?;
    Ok(())
}

/// Event table of a set of trajectories: launch, then one row per hit.
pub fn write_trajectories<T: Real, W: Write>(w: W, recs: &[(usize, &TrajectoryRecord<T>)]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["trajectory", "event", "curve", "time", "x", "y", "omega1", "omega2", "tangent"])?;
    for (id, r) in recs {
        let p = r.initial;
        out.write_record([id.to_string(), "launch".into(), String::new(), float(T::zero()), float(p.position.x), float(p.position.y), float(p.direction.x), float(p.direction.y), "false".into()])?;
        for h in &r.hits {
            out.write_record([
                id.to_string(),
                "hit".into(),
                h.curve.to_string(),
                float(h.time),
                float(h.point.x),
                float(h.point.y),
                float(h.velocity.x),
                float(h.velocity.y),
                h.tangent.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Per-trajectory summary with the itinerary and its symbolic distance to
/// the previous trajectory.
pub fn write_itineraries<T: Real, W: Write>(w: W, recs: &[(T, T, &TrajectoryRecord<T>)], length: usize) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["trajectory", "x_param", "theta", "time", "n_reflections", "itinerary", "status", "rho_prev"])?;
    let mut prev: Option<Vec<usize>> = None;
    for (k, (x, th, r)) in recs.iter().enumerate() {
        let it = crate::billiard::itinerary(r, length);
        let rho = prev.as_ref().map(|p| format!("{:.16e}", crate::billiard::itinerary_metric(p, &it))).unwrap_or_default();
        out.write_record([k.to_string(), float(*x), float(*th), float(r.time), r.reflections().to_string(), itinerary_field(&it), r.status_label(), rho])?;
        prev = Some(it);
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{Caps, Status};
    use crate::spectra::SpectrumGrid;

    #[test]
    fn spectrum_csv_layout() {
        let rec = SpectrumRecord {
            x: 0.25f64,
            theta: 0.0,
            y: Some(0.75),
            exit_theta: Some(0.0),
            time: 2.0,
            reflections: 2,
            itinerary: vec![0, 1],
            status: Status::Exited,
            tangent: false,
        };
        let bad = SpectrumRecord { y: None, exit_theta: None, status: Status::TrappedTime, tangent: true, ..rec.clone() };
        let s = Spectrum { scene_id: "t".into(), grid: SpectrumGrid::new(1, 2), records: vec![rec, bad], caps: Caps::default() };
        let mut buf = Vec::new();
        write_spectrum(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x_param,theta,y_param,exit_theta,time,n_reflections,itinerary,status");
        assert_eq!(lines[1], "2.5000000000000000e-1,0.0000000000000000e0,7.5000000000000000e-1,0.0000000000000000e0,2.0000000000000000e0,2,0-1,exited");
        assert_eq!(lines[2], "2.5000000000000000e-1,0.0000000000000000e0,,,2.0000000000000000e0,2,0-1,trapped_time+tangent");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1f64, 1.0 / 3.0, -2.718281828459045, 1e-300, 6.02214076e23] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }
}
