#pragma once

#include "ml2bf/errors.hpp"
#include "ml2bf/random.hpp"
#include "ml2bf/regression.hpp"
#include "ml2bf/quadrature.hpp"
#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/modelspace.hpp"
#include "ml2bf/estimation.hpp"
#include "ml2bf/anova.hpp"
#include "ml2bf/shibata.hpp"
#include "ml2bf/parallel.hpp"
#include "ml2bf/harness/config.hpp"
#include "ml2bf/harness/io.hpp"
#include "ml2bf/harness/experiments.hpp"
#include "ml2bf/harness/runner.hpp"
