#pragma once

#include "geoequiv/errors.hpp"
#include "geoequiv/expr.hpp"
#include "geoequiv/geometry.hpp"
#include "geoequiv/manifest.hpp"
#include "geoequiv/ode.hpp"
#include "geoequiv/hamiltonian.hpp"
#include "geoequiv/polynomial.hpp"
#include "geoequiv/pair_analysis.hpp"
#include "geoequiv/constructors.hpp"
#include "geoequiv/params.hpp"
#include "geoequiv/verifier.hpp"
#include "geoequiv/report.hpp"
