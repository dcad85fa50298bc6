use wg_maxwell::condense::SolvePath;
use wg_maxwell::verify::{convergence_study, CaseName};
use wg_maxwell::weakcalc::{ScalarVariant, Scheme};

fn full() -> Scheme {
    Scheme::new(1, ScalarVariant::Full).unwrap()
}

#[test]
fn doubling_quadrature_leaves_norms_unchanged() {
    let base = full();
    let fine = full().with_quad(2 * base.quad).unwrap();
    let a = convergence_study(CaseName::S3, &[3], &base, SolvePath::Condensed, 1.0).unwrap();
    let b = convergence_study(CaseName::S3, &[3], &fine, SolvePath::Condensed, 1.0).unwrap();
    for (x, y) in a.rows[0]
        .norms
        .values()
        .iter()
        .zip(b.rows[0].norms.values())
    {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn both_paths_give_the_same_tables() {
    for variant in [ScalarVariant::Full, ScalarVariant::Lowest] {
        let scheme = Scheme::new(1, variant).unwrap();
        for case in [CaseName::S2, CaseName::S3, CaseName::S4] {
            let full = convergence_study(case, &[1, 2, 3], &scheme, SolvePath::Full, 1.0).unwrap();
            let cond =
                convergence_study(case, &[1, 2, 3], &scheme, SolvePath::Condensed, 1.0).unwrap();
            for (r, s) in full.rows.iter().zip(&cond.rows) {
                assert_eq!(r.unknowns, s.unknowns);
                for (x, y) in r.norms.values().iter().zip(s.norms.values()) {
                    assert!(
                        (x - y).abs() <= 1e-9 * (1.0 + x.abs()),
                        "{case} L{}: {x} vs {y}",
                        r.level
                    );
                }
            }
        }
    }
}

#[test]
fn rates_are_first_order_in_energy_for_s3() {
    let r =
        convergence_study(CaseName::S3, &[2, 3, 4], &full(), SolvePath::Condensed, 1.0).unwrap();
    let rates = r.rows[2].rates.unwrap();
    assert!((rates[0] - 1.0).abs() < 0.15, "{rates:?}");
    assert!((rates[1] - 2.0).abs() < 0.15, "{rates:?}");
}

#[test]
fn unordered_levels_are_rejected() {
    assert!(convergence_study(CaseName::S1, &[2, 1], &full(), SolvePath::Full, 1.0).is_err());
    assert!(convergence_study(CaseName::S1, &[], &full(), SolvePath::Full, 1.0).is_err());
}
