use groundlab::soliton::{pohozaev_residuals, soliton_constants, solve_soliton};

/// Second-order radial finite differences on `[0, r_end]` solved by Newton
/// from `amp·exp(-r²/4)`, with `w(r_end) = 0` and the symmetric ghost point
/// at the origin.
fn collocation_w0(d: usize, p: f64, amp: f64, r_end: f64, n: usize) -> f64 {
    let h = r_end / n as f64;
    let mut w: Vec<f64> = (0..n).map(|j| amp * (-(j as f64 * h).powi(2) / 4.0).exp()).collect();
    let dm1 = (d - 1) as f64;
    for _ in 0..50 {
        // tridiagonal residual F and Jacobian (sub, diag, sup)
        let mut f = vec![0.0; n];
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for j in 0..n {
            let wj = w[j];
            let right = if j + 1 < n { w[j + 1] } else { 0.0 };
            let nl = wj.abs().powf(p - 1.0) * wj;
            let dnl = p * wj.abs().powf(p - 1.0);
            if j == 0 {
                let lap_coef = 2.0 * d as f64 / (h * h);
                f[0] = lap_coef * (right - wj) - wj + nl;
                diag[0] = -lap_coef - 1.0 + dnl;
                sup[0] = lap_coef;
            } else {
                let r = j as f64 * h;
                let cm = 1.0 / (h * h) - dm1 / (2.0 * r * h);
                let cp = 1.0 / (h * h) + dm1 / (2.0 * r * h);
                f[j] = cm * w[j - 1] - 2.0 / (h * h) * wj + cp * right - wj + nl;
                sub[j] = cm;
                diag[j] = -2.0 / (h * h) - 1.0 + dnl;
                sup[j] = cp;
            }
        }
        // Thomas solve of J δ = f
        let mut cprime = vec![0.0; n];
        let mut dprime = vec![0.0; n];
        cprime[0] = sup[0] / diag[0];
        dprime[0] = f[0] / diag[0];
        for j in 1..n {
            let m = diag[j] - sub[j] * cprime[j - 1];
            cprime[j] = sup[j] / m;
            dprime[j] = (f[j] - sub[j] * dprime[j - 1]) / m;
        }
        let mut delta = vec![0.0; n];
        delta[n - 1] = dprime[n - 1];
        for j in (0..n - 1).rev() {
            delta[j] = dprime[j] - cprime[j] * delta[j + 1];
        }
        let step = delta.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        for j in 0..n {
            w[j] -= delta[j];
        }
        if step < 1e-14 {
            break;
        }
    }
    w[0]
}

fn richardson_w0(d: usize, p: f64, amp: f64) -> f64 {
    let a = collocation_w0(d, p, amp, 30.0, 3000);
    let b = collocation_w0(d, p, amp, 30.0, 6000);
    let c = collocation_w0(d, p, amp, 30.0, 12000);
    let ab = (4.0 * b - a) / 3.0;
    let bc = (4.0 * c - b) / 3.0;
    (16.0 * bc - ab) / 15.0
}

#[test]
fn collocation_oracle_reproduces_the_closed_form() {
    assert!((richardson_w0(1, 2.0, 1.5) - 1.5).abs() < 1e-8);
    let w3 = richardson_w0(1, 3.0, 1.4);
    assert!((w3 - 2f64.sqrt()).abs() < 1e-8, "{w3}");
}

#[test]
fn planar_quadratic_soliton() {
    let prof = solve_soliton(2, 2.0f64, 1e-8).unwrap();
    assert!(prof.residual() < 1e-8);
    let oracle = richardson_w0(2, 2.0, 2.4);
    eprintln!("shooting {:.12} collocation {:.12}", prof.w0(), oracle);
    assert!((prof.w0() - oracle).abs() < 1e-7, "w0 {} vs {}", prof.w0(), oracle);
    let res = pohozaev_residuals(&prof);
    eprintln!("{res:?}");
    assert!(res.pohozaev < 1e-6 && res.chain < 1e-6, "{res:?}");
    let k = soliton_constants(&prof).unwrap();
    assert!((prof.tail_rate() - 1.0).abs() < 0.1);
    assert!(k.identity_defect() < 1e-6);
}
