//! Plant and closed-loop transfer functions against finite differences of
//! the averaged boost equations, solved pointwise in complex arithmetic.

use dcform_core::analysis::closed_loop_zout;
use dcform_core::control::{ControllerKind, DutyTfs};
use dcform_core::plant::{boost_tfs, operating_point, BoostParams, OperatingPoint};
use dcform_core::reference as refcase;
use dcform_core::tf::Complex64;
use proptest::prelude::*;

/// `x = [i_f, v_cap]`, `u = [d, i_o]`; returns `(dx, [i_f, v_dc])`.
fn averaged(p: &BoostParams, v_in: f64, x: [f64; 2], u: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let [i, vc] = x;
    let [d, io] = u;
    let v = vc + p.r_dc * (d * i - io);
    ([(v_in - d * v) / p.l_f, (d * i - io) / p.c_dc], [i, v])
}

struct Lin {
    a: [[f64; 2]; 2],
    b: [[f64; 2]; 2],
    c: [[f64; 2]; 2],
    d: [[f64; 2]; 2],
}

fn linearize(p: &BoostParams, op: &OperatingPoint) -> Lin {
    let x0 = [op.i_f, op.v_o];
    let u0 = [op.d, op.i_o];
    let mut lin = Lin {
        a: [[0.0; 2]; 2],
        b: [[0.0; 2]; 2],
        c: [[0.0; 2]; 2],
        d: [[0.0; 2]; 2],
    };
    // The model is at most cubic, so a wide step costs little truncation
    // error while keeping the `v_in - d v` cancellation out of the result.
    for k in 0..2 {
        let h = 1e-4 * x0[k].abs().max(1.0);
        let (mut xp, mut xm) = (x0, x0);
        xp[k] += h;
        xm[k] -= h;
        let (fp, yp) = averaged(p, op.v_in, xp, u0);
        let (fm, ym) = averaged(p, op.v_in, xm, u0);
        for r in 0..2 {
            lin.a[r][k] = (fp[r] - fm[r]) / (2.0 * h);
            lin.c[r][k] = (yp[r] - ym[r]) / (2.0 * h);
        }
        let h = 1e-4 * u0[k].abs().max(1.0);
        let (mut up, mut um) = (u0, u0);
        up[k] += h;
        um[k] -= h;
        let (fp, yp) = averaged(p, op.v_in, x0, up);
        let (fm, ym) = averaged(p, op.v_in, x0, um);
        for r in 0..2 {
            lin.b[r][k] = (fp[r] - fm[r]) / (2.0 * h);
            lin.d[r][k] = (yp[r] - ym[r]) / (2.0 * h);
        }
    }
    lin
}

/// `H[r][k]`: output `r` (`i_f`, `v_dc`) per input `k` (`d`, `i_o`).
fn response(l: &Lin, w: f64) -> [[Complex64; 2]; 2] {
    let s = Complex64::new(0.0, w);
    let m = [
        [s - l.a[0][0], Complex64::from(-l.a[0][1])],
        [Complex64::from(-l.a[1][0]), s - l.a[1][1]],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let mut h = [[Complex64::from(0.0); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            let mut acc = Complex64::from(l.d[r][k]);
            for i in 0..2 {
                for j in 0..2 {
                    acc += l.c[r][i] * inv[i][j] * l.b[j][k];
                }
            }
            h[r][k] = acc;
        }
    }
    h
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn plant_matches_averaged_model(
        v_in in 50.0f64..600.0,
        ratio in 1.1f64..4.0,
        i_o in 0.5f64..40.0,
        l_f in 1e-4f64..5e-3,
        c_dc in 1e-4f64..5e-3,
        r_dc in 0.0f64..0.2,
        w in 1.0f64..6e4,
    ) {
        let p = BoostParams { l_f, c_dc, r_dc, f_s: 20e3, t_d: 75e-6 };
        let op = operating_point(v_in, v_in * ratio, i_o).unwrap();
        let tfs = boost_tfs(&p, &op).unwrap();
        let h = response(&linearize(&p, &op), w);
        prop_assert!(rel(tfs.g_di.eval_jw(w).unwrap(), h[0][0]) < 1e-6);
        prop_assert!(rel(tfs.g_dv.eval_jw(w).unwrap(), h[1][0]) < 1e-6);
        prop_assert!(rel(tfs.g_oi.eval_jw(w).unwrap(), h[0][1]) < 1e-6);
        prop_assert!(rel(tfs.z_o.eval_jw(w).unwrap(), -h[1][1]) < 1e-6);
    }
}

/// Closes `d = G_id i_f + G_od i_o + G_vd v` around the plant at one frequency.
fn closed_loop_pointwise(h: &[[Complex64; 2]; 2], g: [Complex64; 3]) -> Complex64 {
    // i = H00 d + H01 io, v = H10 d + H11 io, d = g0 i + g1 io + g2 v; io = 1.
    let denom = Complex64::from(1.0) - g[0] * h[0][0] - g[2] * h[1][0];
    let d = (g[0] * h[0][1] + g[1] + g[2] * h[1][1]) / denom;
    -(h[1][0] * d + h[1][1])
}

#[test]
fn closed_loop_matches_pointwise_solve() {
    let p = refcase::params();
    for kind in ControllerKind::ALL {
        let m = refcase::converter(kind).unwrap();
        let duty: DutyTfs = m.duty().unwrap();
        let z = closed_loop_zout(&m.plant().unwrap(), &duty).unwrap();
        let lin = linearize(&p, &m.op);
        for w in dcform_core::tf::log_space(1.0, 6e4, 40) {
            let h = response(&lin, w);
            let g = [&duty.g_id, &duty.g_od, &duty.g_vd].map(|t| t.eval_jw(w).unwrap());
            let e = rel(z.eval_jw(w).unwrap(), closed_loop_pointwise(&h, g));
            assert!(e < 1e-6, "{kind} at {w}: {e:e}");
        }
    }
}

