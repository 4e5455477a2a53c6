#pragma once

namespace fiberlab {

// Selects the OpenMP kernel or its serial reference implementation.  Both
// produce bit-identical results; the serial variants exist for testing and
// benchmark comparison.
enum class Exec { Serial, Parallel };

}  // namespace fiberlab
