#pragma once

#include "phi4/phi4.h"

// process exit codes: 2 schema, 3 numerical guard, 4 golden mismatch
inline int exit_code_for(int status) {
  switch (status) {
    case PHI4_OK: return 0;
    case PHI4_E_SCHEMA:
    case PHI4_E_INVALID_ARGUMENT: return 2;
    case PHI4_E_DIMENSION:
    case PHI4_E_NOT_NORMALIZED:
    case PHI4_E_NOT_HERMITIAN:
    case PHI4_E_GUARD:
    case PHI4_E_NUMERICAL: return 3;
    case PHI4_E_GOLDEN: return 4;
    default: return 1;
  }
}
