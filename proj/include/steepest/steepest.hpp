#pragma once

#include "steepest/error.hpp"
#include "steepest/param_vector.hpp"
#include "steepest/linalg.hpp"
#include "steepest/norms.hpp"
#include "steepest/rng.hpp"
#include "steepest/dataset.hpp"
#include "steepest/models.hpp"
#include "steepest/losses.hpp"
#include "steepest/optimizers.hpp"
#include "steepest/diagnostics.hpp"
#include "steepest/oracle.hpp"
#include "steepest/data.hpp"
#include "steepest/checkpoint.hpp"
#include "steepest/config.hpp"
#include "steepest/training.hpp"
#include "steepest/report.hpp"
