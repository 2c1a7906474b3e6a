#pragma once

#include "onestep/analysis.hpp"
#include "onestep/eigen.hpp"
#include "onestep/error.hpp"
#include "onestep/io.hpp"
#include "onestep/kinetics.hpp"
#include "onestep/linalg.hpp"
#include "onestep/model_file.hpp"
#include "onestep/models.hpp"
#include "onestep/random.hpp"
#include "onestep/scheme.hpp"
#include "onestep/simulate.hpp"
