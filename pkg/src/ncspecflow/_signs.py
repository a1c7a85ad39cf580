# Generated by ncspecflow.oracle.freeze_sign_constants; do not edit by hand.
SIGMA_E = 1
SIGMA_D = 1
SIGMA_M = 1
SIGMA_S = 1
SIGMA_C = -1
