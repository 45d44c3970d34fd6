"""Motion predictors: Kalman-type filters, learned networks and their training."""
