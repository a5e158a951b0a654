#pragma once

#include "hcea/diagnostics.hpp"
#include "hcea/dic.hpp"
#include "hcea/econ.hpp"
#include "hcea/error.hpp"
#include "hcea/imputation.hpp"
#include "hcea/io.hpp"
#include "hcea/likelihood.hpp"
#include "hcea/math.hpp"
#include "hcea/mnar.hpp"
#include "hcea/model.hpp"
#include "hcea/model_spec.hpp"
#include "hcea/rng.hpp"
#include "hcea/sampler.hpp"
#include "hcea/synthetic.hpp"
#include "hcea/trial_csv.hpp"
#include "hcea/trial_data.hpp"
