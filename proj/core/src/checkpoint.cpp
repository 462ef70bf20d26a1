#include "ordisco/checkpoint.hpp"

// The checkpoint primitives are header-inline; this TU pins the header into
// the library build so interface changes are compile-checked.
