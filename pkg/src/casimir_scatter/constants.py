"""Physical constants. ħc is the only one; every energy derives from it."""

HBAR_C_EV_NM = 197.327
