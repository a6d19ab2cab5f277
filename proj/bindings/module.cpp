// placeholder
#include <pybind11/pybind11.h>
PYBIND11_MODULE(_cfl, m) { m.doc() = "coin-flipping lab core"; }
