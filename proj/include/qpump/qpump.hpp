#pragma once

#include "qpump/version.hpp"

#include "qpump/numerics/eigensolve.hpp"
#include "qpump/numerics/fft.hpp"
#include "qpump/numerics/grid.hpp"
#include "qpump/numerics/roots.hpp"
#include "qpump/numerics/spectral.hpp"

#include "qpump/lattice/alpha.hpp"
#include "qpump/lattice/potential.hpp"

#include "qpump/spectrum/bloch.hpp"
#include "qpump/spectrum/chern.hpp"
#include "qpump/spectrum/wannier.hpp"

#include "qpump/soliton/io.hpp"
#include "qpump/soliton/newton.hpp"

#include "qpump/dynamics/observables.hpp"
#include "qpump/dynamics/propagate.hpp"

#include "qpump/variational/effective.hpp"
#include "qpump/dnls/waveguide.hpp"
#include "qpump/units/units.hpp"

#include "qpump/io/json_convert.hpp"
#include "qpump/experiments/config.hpp"
#include "qpump/experiments/csv.hpp"
#include "qpump/experiments/presets.hpp"
#include "qpump/experiments/pumping.hpp"
#include "qpump/experiments/runner.hpp"
