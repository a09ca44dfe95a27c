const FROZEN_ORACLE: f64 = 7.9821446904255189e-2;
