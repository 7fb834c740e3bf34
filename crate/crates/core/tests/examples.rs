// Runs every example end to end.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(generate_hba);
example!(cascade_oracle);
example!(baselines);
example!(train_agent);
example!(fairness_sweep);
example!(generalization);
example!(phi_ablation);
example!(load_edge_list);
