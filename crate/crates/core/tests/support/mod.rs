pub mod ts_primal;
