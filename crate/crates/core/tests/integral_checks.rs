use bulksurf::constitutive::{Eos, Phase};
use bulksurf::fixtures::{self, ChartName, ConservationFixture, FieldRng};
use bulksurf::geometry::{QuadratureRule, Slip};
use bulksurf::residuals;
use bulksurf::verify_integral::{conservation_audit, first_law_check, AuditSettings, FirstLawForm, IntegralError, Law};

#[test]
fn conservative_and_primitive_forms_agree() {
    let rule = QuadratureRule::new(8);
    for (i, chart) in ChartName::ALL.into_iter().enumerate() {
        for slip in [Slip::NoSlip, Slip::Slip] {
            let mut rng = FieldRng::for_item(11, i as u64);
            let sys = fixtures::random_transported_state(&mut rng, chart, slip, Eos::Explicit);
            for phase in Phase::ALL {
                let gap = residuals::form_equivalence_gap(&sys, phase, &rule, 0.35).unwrap();
                assert!(gap <= 1e-9, "{chart:?} {slip:?} {phase}: {gap:e}");
            }
        }
    }
}

#[test]
fn audits_close_on_expanding_bubble() {
    let settings = AuditSettings::default();
    for slip in [Slip::NoSlip, Slip::Slip] {
        let sys = ConservationFixture::new(slip).system();
        for law in Law::ALL {
            if law == Law::Momentum && slip == Slip::NoSlip {
                continue;
            }
            let rep = conservation_audit(&sys, law, 0.0, 0.5, &settings).unwrap();
            assert!(rep.relative_gap() <= 1e-7, "{slip:?} {law}: {rep:?}");
            if law != Law::Mass {
                assert!(rep.sources.iter().any(|s| s.abs() > 1e-6), "{slip:?} {law}: {rep:?}");
            }
        }
    }
}

#[test]
fn momentum_audit_requires_slip() {
    let sys = ConservationFixture::new(Slip::NoSlip).system();
    let err = conservation_audit(&sys, Law::Momentum, 0.0, 0.5, &AuditSettings::default()).unwrap_err();
    assert!(matches!(err, IntegralError::Precondition(_)), "{err}");
}

#[test]
fn first_law_both_forms() {
    let sys = fixtures::first_law_expanding([0.5, 0.3], [0.2, 0.4]);
    for rule in [QuadratureRule::new(16), QuadratureRule::with_cap(16, 0.7)] {
        for phase in [Phase::A, Phase::S] {
            for form in [FirstLawForm::Internal, FirstLawForm::Barotropic] {
                let g = first_law_check(&sys, phase, form, &rule, 0.4, 1e-3).unwrap();
                assert!(g.gap <= 1e-7, "{phase} {form:?} {g:?}");
            }
        }
    }
    let shell = fixtures::first_law_conducting_shell(0.7);
    for form in [FirstLawForm::Internal, FirstLawForm::Barotropic] {
        let g = first_law_check(&shell, Phase::B, form, &QuadratureRule::new(16), 0.4, 1e-3).unwrap();
        assert!(g.gap <= 1e-7, "{form:?} {g:?}");
    }
}
