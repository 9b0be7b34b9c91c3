//! Runs the cheaper examples so they stay working.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main();
            }
        }
    };
}

example!(chain_models);
example!(return_series);
example!(lattice_z3);
example!(critical_alpha);
example!(offspring_law);
example!(phase_diagram);
example!(survival_simulation);
