#pragma once

#include "cqnls/errors.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/fft.hpp"
#include "cqnls/field.hpp"
#include "cqnls/field_io.hpp"
#include "cqnls/ode.hpp"
#include "cqnls/quadrature.hpp"
#include "cqnls/groundstate.hpp"
#include "cqnls/profile_io.hpp"
#include "cqnls/evolve.hpp"
#include "cqnls/diagnostics.hpp"
#include "cqnls/minimizer.hpp"
#include "cqnls/mass_curve.hpp"
#include "cqnls/spectral.hpp"
#include "cqnls/svg.hpp"
#include "cqnls/experiments.hpp"
#include "cqnls/config.hpp"
#include "cqnls/cli.hpp"
