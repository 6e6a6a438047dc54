use friabilis::dickman::{int_exp, RhoGrid};
use friabilis::primes::PrimeTable;
use friabilis::psi_exact::{EnumerateOptions, XValue};
use friabilis::saddle::{solve_alpha, zeta_partial};
use friabilis::EULER_GAMMA;
use friabilis::theorem::*;

const LN10: f64 = std::f64::consts::LN_10;

fn ctx<'a>(table: &'a PrimeTable, grid: &'a RhoGrid) -> RegimeContext<'a> {
    RegimeContext {
        table,
        grid,
        enumerate: EnumerateOptions { max_count: 1e9, ..Default::default() },
    }
}

fn x(s: &str) -> XValue {
    s.parse().unwrap()
}

#[test]
fn predicted_gap_c_in_1_2_composes_with_alpha() {
    let table = PrimeTable::sieve(1000).unwrap();
    let log_x = 8.0 * LN10;
    let y = y_of(log_x, 1.5);
    let state = solve_alpha(log_x, &table, y).unwrap();
    let e = 1.0 - 2.0 * state.alpha;
    let want = 0.5 * y.powf(e) / (e * y.ln());
    assert!((predicted_gap(log_x, 1.5, &state).unwrap() - want).abs() < 1e-12 * want.abs());
    assert!(predicted_gap(log_x, 2.0, &state).is_err());
    assert!(predicted_gap(log_x, -0.5, &state).is_err());
}

/// Error of the three-term expansion of log(x·ρ(u)) in units of
/// `log x·(log_3 x)^2/(log_2 x)^3`.
fn normalized_expansion_error(grid: &RhoGrid, c: f64, k: f64) -> f64 {
    let log_x: f64 = k * LN10;
    let (exact, expansion) = log_x_rho(log_x, c, grid).unwrap();
    let l2 = log_x.ln();
    (exact - expansion).abs() / (log_x * l2.ln().powi(2) / l2.powi(3))
}

#[test]
fn rho_expansion_error_is_within_fitted_scale() {
    let grid = RhoGrid::build(200.0, 1e-3).unwrap();
    for (c, k) in [(0.7, 12.0), (0.5, 20.0), (0.8, 14.0), (1.0, 18.0)] {
        let e = normalized_expansion_error(&grid, c, k);
        assert!(e <= 4.0 / c, "c={c} x=1e{k}: normalized error {e}");
    }
    // At c = 1 the error changes sign near x = 1e40, so only c < 1 is monotone.
    for c in [0.5, 0.7] {
        let errs: Vec<f64> = [20.0, 40.0, 80.0].iter().map(|&k| normalized_expansion_error(&grid, c, k)).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "c={c}: {errs:?}");
    }
    assert!(log_x_rho(30.0, 1.5, &grid).is_err());
}

#[test]
fn rho_expansion_range_error_beyond_grid() {
    let grid = RhoGrid::build(5.0, 1e-2).unwrap();
    assert!(matches!(log_x_rho(100.0, 0.5, &grid), Err(friabilis::Error::Range(_))));
}

#[test]
fn z_forms_agree_to_first_omitted_term() {
    for c in [0.3, 0.5, 0.7, 0.9, 1.0, 1.1, 1.3, 1.5, 1.7, 1.9] {
        for k in [10.0, 20.0, 40.0, 80.0] {
            let log_x: f64 = k * LN10;
            let y = y_of(log_x, c);
            if y < 3.0 {
                continue;
            }
            let zb = z_bruijn(log_x, y).unwrap();
            let zc = z_cases(log_x, c).unwrap();
            // Leading coefficient of the dropped term is 1/(2c) for c < 1.
            let scale = z_omitted_scale(log_x, c).unwrap() / c;
            assert!(
                (zb - zc).abs() <= scale + 1e-9 * zb,
                "c={c} x=1e{k}: Z = {zb}, cases = {zc}, scale = {scale}"
            );
        }
    }
}

#[test]
fn z_leading_terms_match_case_displays() {
    let log_x: f64 = 12.0 * LN10;
    let l2 = log_x.ln();
    let rel = 1.0 / y_of(log_x, 0.7).ln() + 1.0 / l2;
    let zb = z_bruijn(log_x, y_of(log_x, 0.7)).unwrap();
    let lead = 0.3 * log_x.powf(0.7) / 0.7;
    assert!((zb / lead - 1.0).abs() <= 2.0 * rel, "{zb} vs {lead}");
    let zb = z_bruijn(log_x, y_of(log_x, 1.5)).unwrap();
    let lead = 0.5 / 1.5 * log_x;
    let rel = 1.0 / y_of(log_x, 1.5).ln() + 1.0 / l2;
    assert!((zb / lead - 1.0).abs() <= 2.0 * rel, "{zb} vs {lead}");
    assert!(z_bruijn(10.0, 2.5).is_err());
    assert!(z_bruijn(1.0, 10.0).is_err());
}

#[test]
fn regime_c_below_one_exponent() {
    let table = PrimeTable::sieve(1000).unwrap();
    let grid = RhoGrid::build(20.0, 1e-3).unwrap();
    for (c, s) in [(0.7, "1e12"), (0.8, "1e14")] {
        let r = regime_record(&x(s), c, &ctx(&table, &grid)).unwrap();
        assert_eq!(r.regime, Regime::CLt1);
        let exponent = r.measured_gap / r.log_x;
        assert!((exponent - (1.0 / c - 1.0)).abs() <= 0.12, "c={c}: {exponent}");
    }
}

#[test]
fn regime_c_one_band_and_trend() {
    let table = PrimeTable::sieve(1000).unwrap();
    let grid = RhoGrid::build(20.0, 1e-3).unwrap();
    let xs = [x("1e9"), x("1e13"), x("1e18")];
    let rows = regime_scan(&xs, 1.0, &ctx(&table, &grid)).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.measured_gap / r.predicted_gap).collect();
    assert!(ratios.iter().all(|r| (0.3..=3.0).contains(r)), "{ratios:?}");
    assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs()), "{ratios:?}");
}

#[test]
fn regime_c_in_1_2_respects_lower_bound() {
    let table = PrimeTable::sieve(10_000).unwrap();
    let grid = RhoGrid::build(20.0, 1e-3).unwrap();
    let mut checked = 0;
    for c in [1.2, 1.5, 1.8] {
        let ladder = feasible_x_ladder(c, &table, 1e7, 30).unwrap();
        assert!(!ladder.is_empty());
        for xv in ladder.iter().rev().take(3) {
            let r = regime_record(xv, c, &ctx(&table, &grid)).unwrap();
            assert_eq!(r.regime, Regime::CIn12);
            if !r.alpha_below_half() {
                continue;
            }
            let state = solve_alpha(r.log_x, &table, r.y).unwrap();
            // f(α) >= f(β) turns the saddle-point estimate into
            // Ψ/xρ(u) >~ e^{log ζ(α,y) − I((1−α) log y) − γ}/(α log y).
            let zeta = zeta_partial(state.alpha, &table, r.y).unwrap();
            let i = int_exp((1.0 - state.alpha) * r.y.ln()).unwrap();
            let bound = zeta - i - EULER_GAMMA - (state.alpha * r.y.ln()).ln();
            assert!(r.measured_gap >= bound - 1.0, "c={c} log x={}: {} < {bound} - 1", r.log_x, r.measured_gap);
            // The displayed constant c e^{−γ}/(c − 1) lacks the 1/log y of the
            // saddle factor; it only holds after that correction here.
            let display = gap_lower_bound(&state, c, &table).unwrap();
            assert!(r.measured_gap >= display - r.y.ln().ln() - 1.0);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn predicted_gap_ignores_guard_width() {
    let table = PrimeTable::sieve(1000).unwrap();
    let grid = RhoGrid::build(20.0, 1e-3).unwrap();
    let base = regime_record(&x("1e12"), 1.0, &ctx(&table, &grid)).unwrap();
    let wide = RegimeContext {
        table: &table,
        grid: &grid,
        enumerate: EnumerateOptions { guard: Some(1e-6), max_count: 1e9, ..Default::default() },
    };
    let other = regime_record(&x("1e12"), 1.0, &wide).unwrap();
    assert_eq!(base.predicted_gap, other.predicted_gap);
    assert_eq!(base.log_psi_exact, other.log_psi_exact);
}

#[test]
fn parallel_and_serial_scans_match() {
    let table = PrimeTable::sieve(100_000).unwrap();
    let grid = RhoGrid::build(20.0, 1e-3).unwrap();
    let xs = [x("1e8"), x("1e10"), x("1e12")];
    let mut serial = ctx(&table, &grid);
    serial.enumerate.parallel = false;
    assert_eq!(
        regime_scan(&xs, 0.8, &ctx(&table, &grid)).unwrap(),
        regime_scan(&xs, 0.8, &serial).unwrap()
    );
    let ys = geometric_grid(100.0, 1e5, 7).unwrap();
    assert_eq!(
        oscillation_scan(1.5, &ys, &table, true).unwrap(),
        oscillation_scan(1.5, &ys, &table, false).unwrap()
    );
}

#[test]
fn regime_rows_round_trip_through_csv_and_json() {
    let table = PrimeTable::sieve(1000).unwrap();
    let grid = RhoGrid::build(20.0, 1e-3).unwrap();
    let rows = regime_scan(&[x("1e9"), x("1e12")], 1.0, &ctx(&table, &grid)).unwrap();
    let mut buf = Vec::new();
    write_regime_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("log_x,c,y,u,alpha,log_psi_exact,log_x_rho,measured_gap,predicted_gap,regime\n"));
    assert_eq!(read_regime_csv(buf.as_slice()).unwrap(), rows);
    let json = serde_json::to_string(&rows).unwrap();
    let back: Vec<RegimeRecord> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rows);
}

#[test]
fn oscillation_records() {
    let table = PrimeTable::sieve(10_000_000).unwrap();
    let y = 1e4;
    let half = oscillation_at(y, 0.5, &table).unwrap();
    assert!((half.normalizer - y.ln().ln().ln() / y.ln()).abs() < 1e-15);
    assert!(half.diff.is_finite());
    let rows = oscillation_scan(1.5, &[y], &table, false).unwrap();
    assert!(rows[0].normalized_diff.is_finite());
    assert!(rows[0].normalized_diff.abs() <= 20.0, "{:?}", rows[0]);

    let ys = geometric_grid(1e3, 1e7, 5).unwrap();
    let rows = oscillation_scan(1.5, &ys, &table, true).unwrap();
    assert!(rows.windows(2).all(|w| w[0].y < w[1].y));
    for r in &rows {
        assert!(r.normalizer > 0.0);
        assert_eq!(r.diff, r.s_sum - r.i_term);
        assert_eq!(r.normalized_diff, r.diff / r.normalizer);
        assert_eq!(r.i_term, int_exp((1.0 - r.alpha) * r.y.ln()).unwrap());
    }
    let mut buf = Vec::new();
    write_oscillation_csv(&rows, &mut buf).unwrap();
    assert!(buf.starts_with(b"y,alpha,S,I,diff,normalizer,normalized_diff\n"));
    assert_eq!(read_oscillation_csv(buf.as_slice()).unwrap(), rows);

    assert!(oscillation_scan(1.5, &[10.0], &table, false).is_err());
    assert!(oscillation_scan(0.8, &[100.0], &table, false).is_err());
}

#[test]
fn q_integral_hand_check_and_refinement() {
    let table = PrimeTable::sieve(1_000_000).unwrap();
    // Smooth part on [2, 3] by an independent composite Simpson rule.
    let alpha: f64 = 0.4;
    let n = 2000;
    let h = 1.0 / n as f64;
    let g = |t: f64| t.powf(-alpha) / t.ln();
    let mut simpson = g(2.0) + g(3.0);
    for i in 1..n {
        let t = 2.0 + i as f64 * h;
        simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * g(t);
    }
    simpson *= h / 3.0;
    let (q, p) = q_integral(3.0, alpha, &table).unwrap();
    let want = 2f64.powf(-alpha) + 3f64.powf(-alpha) - simpson;
    assert!((q - want).abs() < 1e-12, "{q} vs {want}");
    assert_eq!(q, p);

    let (q1, p1) = q_integral_with_ratio(1e6, 0.3, &table, 2.0).unwrap();
    let (q2, p2) = q_integral_with_ratio(1e6, 0.3, &table, std::f64::consts::SQRT_2).unwrap();
    assert!(q1.is_finite() && p1.is_finite());
    assert!((q1 - q2).abs() <= 1e-6 * q1.abs());
    assert!((p1 - p2).abs() <= 1e-6 * p1.abs());
    assert!(matches!(q_integral(2e6, 0.3, &table), Err(friabilis::Error::Range(_))));
}

#[test]
fn feasible_ladder_respects_cap() {
    let table = PrimeTable::sieve(10_000).unwrap();
    let ladder = feasible_x_ladder(1.5, &table, 1e6, 30).unwrap();
    assert!(!ladder.is_empty());
    for xv in &ladder {
        let y = y_of(xv.log_x(), 1.5);
        assert!(friabilis::psi_exact::preflight_estimate(xv.log_x(), &table, y).unwrap() <= 1e6);
    }
}
